#include "qst/dualrail.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qst/fidelity.hpp"

namespace qst {

namespace {

cplx end_amplitude(const VectorXcd& w, const VectorXd& energies, double tau) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < w.size(); ++k) s += w(k) * std::polar(1.0, -energies(k) * tau);
  return s;
}

void check_schedule(const MeasurementSchedule& sched) {
  if (sched.intervals.empty()) throw std::invalid_argument("dual rail: empty schedule");
  for (double t : sched.intervals) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("dual rail: intervals must be finite and >= 0");
  }
}

double wrap_phase(double x) { return std::arg(std::polar(1.0, x)); }

}  // namespace

DualRailSystem::DualRailSystem(Eigensystem a, Eigensystem b) : chain1(std::move(a)), chain2(std::move(b)) {
  if (chain1.dim() != chain2.dim()) throw std::invalid_argument("DualRailSystem: chains differ in length");
  if (chain1.dim() < 2) throw std::invalid_argument("DualRailSystem: need at least two sites");
}

double MeasurementSchedule::total() const {
  double s = 0.0;
  for (double t : intervals) s += t;
  return s;
}

DualRailState::DualRailState(const DualRailSystem& sys) : sys_(&sys) {
  if (sys.chain1.dim() != sys.chain2.dim()) throw std::invalid_argument("DualRailState: dimension mismatch");
  ca_ = sys.chain1.vectors.row(0).transpose().cast<cplx>();
  cb_ = sys.chain2.vectors.row(0).transpose().cast<cplx>();
  refresh_weights();
}

void DualRailState::refresh_weights() {
  const int n = sys_->n();
  wa_ = sys_->chain1.vectors.row(n - 1).transpose().cast<cplx>().cwiseProduct(ca_);
  wb_ = sys_->chain2.vectors.row(n - 1).transpose().cast<cplx>().cwiseProduct(cb_);
}

void DualRailState::evolve(double t) {
  ca_ = evolve_coefficients(sys_->chain1, ca_, t);
  cb_ = evolve_coefficients(sys_->chain2, cb_, t);
  refresh_weights();
}

cplx DualRailState::f_end(double tau) const { return end_amplitude(wa_, sys_->chain1.energies, tau); }
cplx DualRailState::g_end(double tau) const { return end_amplitude(wb_, sys_->chain2.energies, tau); }

std::pair<cplx, cplx> DualRailState::measure() {
  const int n = sys_->n();
  const cplx f = wa_.sum();
  const cplx g = wb_.sum();
  ca_ -= f * sys_->chain1.vectors.row(n - 1).transpose().cast<cplx>();
  cb_ -= g * sys_->chain2.vectors.row(n - 1).transpose().cast<cplx>();
  refresh_weights();
  return {f, g};
}

VectorXcd DualRailState::branch_a() const { return from_eigenbasis(sys_->chain1, ca_); }
VectorXcd DualRailState::branch_b() const { return from_eigenbasis(sys_->chain2, cb_); }

ProtocolTrace simulate_dual_rail(const DualRailSystem& sys, const MeasurementSchedule& sched) {
  check_schedule(sched);
  DualRailState state(sys);
  ProtocolTrace trace;
  double prev = 1.0;
  for (std::size_t l = 0; l < sched.intervals.size(); ++l) {
    state.evolve(sched.intervals[l]);
    const auto [f, g] = state.measure();
    DualRailStep s;
    s.step = static_cast<int>(l + 1);
    s.interval = sched.intervals[l];
    s.t_cum = trace.total_time + s.interval;
    s.failure = std::min(prev, state.norm_a() * state.norm_a());
    s.p_cond = prev > 0.0 ? 1.0 - s.failure / prev : 0.0;
    s.bias = std::abs(state.norm_a() - state.norm_b());
    s.phase = wrap_phase(std::arg(g) - std::arg(f));
    trace.total_time = s.t_cum;
    prev = s.failure;
    trace.steps.push_back(s);
  }
  trace.final_failure = prev;
  return trace;
}

std::vector<double> unbiased_times(const DualRailState& state, double t_lo, double t_hi, const UnbiasedOptions& opt) {
  if (!(t_lo >= 0.0) || !(t_hi > t_lo)) throw std::invalid_argument("unbiased_times: invalid window");
  const double dt = opt.dt > 0.0 ? opt.dt : 0.02;
  const double thresh = opt.tol * state.norm_a();
  auto h = [&](double tau) { return std::abs(state.f_end(tau)) - std::abs(state.g_end(tau)); };
  auto slope_ok = [&](double tau) {
    if (!opt.match_slope) return true;
    constexpr double eps = 1e-6;
    const double lo = std::max(0.0, tau - eps);
    return std::abs((h(tau + eps) - h(lo)) / (tau + eps - lo)) <= opt.tol;
  };

  std::vector<double> out;
  const auto n_steps = static_cast<long>(std::ceil((t_hi - t_lo) / dt - 1e-9));
  double prev_t = t_lo;
  double prev_h = h(t_lo);
  if (std::abs(prev_h) <= thresh && slope_ok(t_lo)) out.push_back(t_lo);
  for (long i = 1; i <= n_steps; ++i) {
    const double t = std::min(t_hi, t_lo + i * dt);
    const double ht = h(t);
    if (std::abs(ht) <= thresh) {
      if (slope_ok(t)) out.push_back(t);
    } else if (std::abs(prev_h) > thresh && (prev_h < 0.0) != (ht < 0.0)) {
      double a = prev_t, b = t, ha = prev_h;
      for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
        const double m = 0.5 * (a + b);
        const double hm = h(m);
        if ((hm < 0.0) == (ha < 0.0)) {
          a = m;
          ha = hm;
        } else {
          b = m;
        }
      }
      const double root = 0.5 * (a + b);
      if (std::abs(h(root)) <= thresh && slope_ok(root)) out.push_back(root);
    }
    prev_t = t;
    prev_h = ht;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> unbiased_times(const DualRailSystem& sys, double t_lo, double t_hi, const UnbiasedOptions& opt) {
  DualRailState state(sys);
  return unbiased_times(state, t_lo, t_hi, opt);
}

OptimizedSchedule optimize_schedule(const DualRailSystem& sys, const OptimizeOptions& opt) {
  if (!(opt.target_failure > 0.0 && opt.target_failure < 1.0)) {
    throw std::invalid_argument("optimize_schedule: target failure must lie in (0,1)");
  }
  if (opt.max_steps < 1) throw std::invalid_argument("optimize_schedule: max_steps must be >= 1");
  const int n = sys.n();
  const double window = opt.window > 0.0 ? opt.window : 2.0 * n;
  UnbiasedOptions uopt;
  uopt.dt = opt.dt > 0.0 ? opt.dt : std::min(default_dt(sys.chain1), default_dt(sys.chain2));
  uopt.tol = opt.tol;
  uopt.match_slope = opt.match_slope;

  DualRailState state(sys);
  OptimizedSchedule result;
  double failure = 1.0;
  double elapsed = 0.0;
  double deferred = 0.0;  // free evolution carried over when a window had no usable time

  while (failure > opt.target_failure && static_cast<int>(result.schedule.intervals.size()) < opt.max_steps) {
    const double norm2 = state.norm_a() * state.norm_a();
    auto success = [&](double tau) { return std::norm(state.f_end(tau)); };
    const auto cands = unbiased_times(state, uopt.dt, window, uopt);

    double best_t = -1.0, best_s = 1e-14 * norm2;
    for (double t : cands) {
      const double s = success(t);
      if (s > best_s) {
        best_s = s;
        best_t = t;
      }
    }
    if (best_t < 0.0) {
      // Nothing worth measuring in this window; let the excitation move on.
      state.evolve(window);
      deferred += window;
      if (deferred > 16.0 * window) break;
      continue;
    }
    // Inside a run of admissible grid points, polish the maximum.
    const double lo = std::max(uopt.dt, best_t - uopt.dt);
    const double hi = std::min(window, best_t + uopt.dt);
    const double thresh = uopt.tol * state.norm_a();
    const double refined = golden_section_max(success, lo, hi, 1e-9);
    if (success(refined) > best_s &&
        std::abs(std::abs(state.f_end(refined)) - std::abs(state.g_end(refined))) <= thresh) {
      best_t = refined;
    }

    state.evolve(best_t);
    const auto [f, g] = state.measure();
    const double interval = best_t + deferred;
    deferred = 0.0;
    elapsed += interval;
    DualRailStep s;
    s.step = static_cast<int>(result.schedule.intervals.size() + 1);
    s.interval = interval;
    s.t_cum = elapsed;
    s.failure = std::min(failure, state.norm_a() * state.norm_a());
    s.p_cond = failure > 0.0 ? 1.0 - s.failure / failure : 0.0;
    s.bias = std::abs(state.norm_a() - state.norm_b());
    s.phase = wrap_phase(std::arg(g) - std::arg(f));
    failure = s.failure;
    result.schedule.intervals.push_back(interval);
    result.trace.steps.push_back(s);
  }
  result.trace.total_time = elapsed;
  result.trace.final_failure = failure;
  result.trace.reached_target = failure <= opt.target_failure;
  return result;
}

Tomography tomography(const DualRailSystem& sys) {
  const int n = sys.n();
  // Copies keep the evaluators valid independently of sys.
  auto make = [n](const Eigensystem& eig, int m) {
    return [eig, n, m](double t) { return transfer_amplitude(eig, n, m, t); };
  };
  return {make(sys.chain1, 1), make(sys.chain1, n), make(sys.chain2, 1), make(sys.chain2, n)};
}

ProtocolTrace simulate_from_tomography(const Tomography& tomo, const MeasurementSchedule& sched) {
  check_schedule(sched);
  std::vector<double> times;
  std::vector<cplx> cf, cg;
  ProtocolTrace trace;
  double removed = 0.0, removed_b = 0.0;
  double t = 0.0;
  double prev = 1.0;
  for (std::size_t l = 0; l < sched.intervals.size(); ++l) {
    t += sched.intervals[l];
    cplx f = tomo.f_n1(t), g = tomo.g_n1(t);
    for (std::size_t j = 0; j < times.size(); ++j) {
      f -= cf[j] * tomo.f_nn(t - times[j]);
      g -= cg[j] * tomo.g_nn(t - times[j]);
    }
    times.push_back(t);
    cf.push_back(f);
    cg.push_back(g);
    removed += std::norm(f);
    removed_b += std::norm(g);

    DualRailStep s;
    s.step = static_cast<int>(l + 1);
    s.interval = sched.intervals[l];
    s.t_cum = t;
    s.failure = std::clamp(1.0 - removed, 0.0, prev);
    s.p_cond = prev > 0.0 ? 1.0 - s.failure / prev : 0.0;
    s.bias = std::abs(std::sqrt(std::max(0.0, 1.0 - removed)) - std::sqrt(std::max(0.0, 1.0 - removed_b)));
    s.phase = wrap_phase(std::arg(g) - std::arg(f));
    prev = s.failure;
    trace.steps.push_back(s);
  }
  trace.total_time = t;
  trace.final_failure = prev;
  return trace;
}

ProtocolTrace damping_trace(const DualRailSystem& sys, const MeasurementSchedule& sched, double gamma,
                            std::optional<double> gamma2) {
  check_schedule(sched);
  const double g1 = gamma;
  const double g2 = gamma2.value_or(gamma);
  if (!(g1 >= 0.0) || !(g2 >= 0.0)) throw std::invalid_argument("damping_trace: negative rate");

  DualRailState state(sys);
  ProtocolTrace trace;
  double t = 0.0;
  double succeeded = 0.0;
  double prev = 1.0;
  for (std::size_t l = 0; l < sched.intervals.size(); ++l) {
    t += sched.intervals[l];
    state.evolve(sched.intervals[l]);
    const auto [f, g] = state.measure();
    const double d1 = std::exp(-g1 * t), d2 = std::exp(-g2 * t);
    succeeded += 0.5 * (std::norm(f) * d1 * d1 + std::norm(g) * d2 * d2);

    DualRailStep s;
    s.step = static_cast<int>(l + 1);
    s.interval = sched.intervals[l];
    s.t_cum = t;
    s.failure = std::clamp(1.0 - succeeded, 0.0, prev);
    s.p_cond = prev > 0.0 ? 1.0 - s.failure / prev : 0.0;
    s.bias = std::abs(state.norm_a() * d1 - state.norm_b() * d2);
    s.phase = wrap_phase(std::arg(g) - std::arg(f));
    prev = s.failure;
    trace.steps.push_back(s);
  }
  trace.total_time = t;
  trace.final_failure = prev;
  return trace;
}

BlackboxResult blackbox_feasible(cplx f, cplx f_tilde, cplx g, cplx g_tilde, double tol) {
  BlackboxResult r;
  const double p = std::norm(f) + std::norm(f_tilde);
  const double q = std::norm(g_tilde) + std::norm(g);
  const cplx cross = std::conj(f) * g_tilde + g * std::conj(f_tilde);
  if (std::abs(p - q) > tol || std::abs(cross) > tol) return r;
  r.feasible = true;
  if (p <= tol) return r;  // nothing arrived, no recovery needed
  Eigen::Matrix2cd u;
  u << f, f_tilde, g_tilde, g;
  u /= std::sqrt(p);
  const double err = (u.adjoint() * u - Eigen::Matrix2cd::Identity()).norm();
  if (err > std::sqrt(tol)) {
    r.feasible = false;
    return r;
  }
  r.recovery = u;
  return r;
}

std::vector<double> sample_disorder(double j, double delta_max, double c, int n, Rng& rng) {
  if (!(delta_max >= 0.0)) throw std::invalid_argument("sample_disorder: delta must be >= 0");
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("sample_disorder: c must lie in [0,1]");
  if (n < 0) throw std::invalid_argument("sample_disorder: negative count");
  std::vector<double> hops;
  hops.reserve(n);
  bool positive = true;
  for (int i = 0; i < n; ++i) {
    const double mag = rng.uniform(0.0, delta_max);
    if (i == 0) {
      positive = rng.bernoulli(0.5);
    } else if (!rng.bernoulli(c)) {
      positive = !positive;
    }
    hops.push_back(j * (1.0 + (positive ? mag : -mag)));
  }
  return hops;
}

std::vector<double> sample_disorder(double j, double delta_max, double c, int n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_disorder(j, delta_max, c, n, rng);
}

std::vector<double> cooling_protocol(const Eigensystem& eig, double t, int steps, const VectorXcd& init) {
  if (steps < 1) throw std::invalid_argument("cooling_protocol: steps must be >= 1");
  if (init.size() != eig.dim()) throw std::invalid_argument("cooling_protocol: dimension mismatch");
  const int n = eig.dim();
  VectorXcd c = to_eigenbasis(eig, init);
  const VectorXcd end_row = eig.vectors.row(n - 1).transpose().cast<cplx>();
  // Theta acts first: the end amplitude present initially is removed too.
  c -= end_row.dot(c) * end_row;
  std::vector<double> out;
  out.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    c = evolve_coefficients(eig, c, t);
    c -= end_row.dot(c) * end_row;
    out.push_back(c.squaredNorm());
  }
  return out;
}

}  // namespace qst
