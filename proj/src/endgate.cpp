#include "qst/endgate.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qst/fidelity.hpp"

namespace qst {

namespace {

cplx site_amplitude(const VectorXcd& w, const VectorXd& energies, double tau) {
  cplx s{0.0, 0.0};
  for (Eigen::Index k = 0; k < w.size(); ++k) s += w(k) * std::polar(1.0, -energies(k) * tau);
  return s;
}

// First local maximum of g on (0, limit], refined by golden section; nullopt if none.
template <class G>
std::optional<double> next_local_max(G&& g, double dt, double limit) {
  if (limit < dt) return std::nullopt;
  double prev = g(0.0);
  double cur = g(dt);
  for (double t = dt; t + dt <= limit + 1e-12; t += dt) {
    const double next = g(t + dt);
    if (cur > prev && cur >= next) {
      const double lo = t - dt;
      const double hi = std::min(limit, t + dt);
      const double r = golden_section_max(g, lo, hi, 1e-9);
      return g(r) >= cur ? r : t;
    }
    prev = cur;
    cur = next;
  }
  return std::nullopt;
}

void swap_entries(VectorXcd& v, Eigen::Index i, Eigen::Index j) { std::swap(v(i), v(j)); }

MatrixXd extended_matrix(const ChainSpec& spec, SwitchMode mode, double b_field, bool delta) {
  const MatrixXd h = build_sector(spec).matrix;
  const int n = static_cast<int>(h.rows());
  MatrixXd x = MatrixXd::Zero(n + 1, n + 1);
  x.topLeftCorner(n, n) = h;
  const double hop = h(n - 2, n - 1);
  const bool hop_on = mode == SwitchMode::field || delta;
  if (hop_on) {
    x(n - 1, n) = hop;
    x(n, n - 1) = hop;
  }
  if (mode == SwitchMode::field && delta) x(n, n) = 2.0 * b_field;
  return x;
}

}  // namespace

Eigen::Matrix2cd ValveGate::matrix() const {
  Eigen::Matrix2cd v;
  v << d, -c, std::conj(c), std::conj(d);
  return v;
}

ValveGate valve_gate(cplx state_n, cplx state_target) {
  const double nrm = std::sqrt(std::norm(state_n) + std::norm(state_target));
  if (nrm <= 0.0) throw std::invalid_argument("valve_gate: zero input");
  return {state_n / nrm, state_target / nrm};
}

namespace {

// Applies the valve to (a_N, target); returns false when nothing is there to move.
bool apply_valve(VectorXcd& chain, cplx& target, double& c_abs) {
  const Eigen::Index last = chain.size() - 1;
  if (std::norm(chain(last)) < 1e-30) {
    c_abs = 0.0;
    return false;
  }
  const ValveGate g = valve_gate(chain(last), target);
  const Eigen::Vector2cd out = g.matrix() * Eigen::Vector2cd(chain(last), target);
  chain(last) = out(0);
  target = out(1);
  c_abs = std::abs(g.c);
  return true;
}

}  // namespace

ValveTrace valve_protocol(const Eigensystem& eig, const std::vector<double>& intervals) {
  if (intervals.empty()) throw std::invalid_argument("valve_protocol: empty schedule");
  ValveTrace tr;
  tr.chain = basis_state(eig.dim(), 1);
  double t = 0.0;
  for (std::size_t l = 0; l < intervals.size(); ++l) {
    if (!(intervals[l] >= 0.0)) throw std::invalid_argument("valve_protocol: negative interval");
    tr.chain = propagate(eig, tr.chain, intervals[l]);
    t += intervals[l];
    EndStep s;
    s.step = static_cast<int>(l + 1);
    s.interval = intervals[l];
    s.t_cum = t;
    s.skipped = !apply_valve(tr.chain, tr.target, s.c_abs);
    s.p_success = std::norm(tr.target);
    s.eta = s.p_success;
    tr.steps.push_back(s);
  }
  return tr;
}

ValveTrace valve_optimize(const Eigensystem& eig, double horizon, double dt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("valve_optimize: horizon must be > 0");
  const double step = dt > 0.0 ? dt : default_dt(eig);
  const int n = eig.dim();
  const VectorXcd end_row = eig.vectors.row(n - 1).transpose().cast<cplx>();
  ValveTrace tr;
  tr.chain = basis_state(n, 1);
  double elapsed = 0.0;
  double deferred = 0.0;
  while (elapsed < horizon) {
    const VectorXcd w = end_row.cwiseProduct(to_eigenbasis(eig, tr.chain));
    auto g = [&](double tau) { return std::norm(site_amplitude(w, eig.energies, tau)); };
    const auto tau = next_local_max(g, step, horizon - elapsed);
    if (!tau) break;
    tr.chain = propagate(eig, tr.chain, *tau);
    elapsed += *tau;
    // Maxima in the precursor tail carry nothing worth a gate.
    if (g(*tau) < 1e-16 * tr.chain.squaredNorm()) {
      deferred += *tau;
      continue;
    }
    EndStep s;
    s.step = static_cast<int>(tr.steps.size() + 1);
    s.interval = *tau + deferred;
    deferred = 0.0;
    s.t_cum = elapsed;
    s.skipped = !apply_valve(tr.chain, tr.target, s.c_abs);
    s.p_success = std::norm(tr.target);
    s.eta = s.p_success;
    tr.steps.push_back(s);
  }
  return tr;
}

SwitchedResult switched_sim(const ChainSpec& spec, SwitchMode mode, double b_field,
                            const std::vector<SwitchSegment>& sched) {
  SwitchedResult res;
  if (mode == SwitchMode::field && std::abs(b_field) < 5.0 * std::abs(spec.j)) {
    res.warning = "field mode with B/J < 5: the closed valve leaks noticeably";
  }
  const Eigensystem e_off = eigensystem(extended_matrix(spec, mode, b_field, false));
  const Eigensystem e_on = eigensystem(extended_matrix(spec, mode, b_field, true));
  const int dim = e_off.dim();
  VectorXcd psi = basis_state(dim, 1);
  double t = 0.0;
  res.trajectory.push_back({0.0, 0.0, 1.0});
  for (const auto& seg : sched) {
    if (!(seg.duration > 0.0)) throw std::invalid_argument("switched_sim: durations must be > 0");
    psi = propagate(seg.delta ? e_on : e_off, psi, seg.duration);
    t += seg.duration;
    res.trajectory.push_back({t, std::norm(psi(dim - 1)), psi.head(dim - 1).squaredNorm()});
  }
  res.schedule = sched;
  return res;
}

SwitchedResult switched_optimize(const ChainSpec& spec, SwitchMode mode, double b_field, double horizon, double dt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("switched_optimize: horizon must be > 0");
  SwitchedResult res;
  if (mode == SwitchMode::field && std::abs(b_field) < 5.0 * std::abs(spec.j)) {
    res.warning = "field mode with B/J < 5: the closed valve leaks noticeably";
  }
  const bool closed_delta = mode == SwitchMode::field;
  const Eigensystem e_closed = eigensystem(extended_matrix(spec, mode, b_field, closed_delta));
  const Eigensystem e_open = eigensystem(extended_matrix(spec, mode, b_field, !closed_delta));
  const int dim = e_closed.dim();
  const double step = dt > 0.0 ? dt : std::min(default_dt(e_closed), default_dt(e_open));
  const double hop = std::abs(build_sector(spec).matrix(dim - 3, dim - 2));
  const double open_max = std::numbers::pi / std::max(hop, 1e-12);

  VectorXcd psi = basis_state(dim, 1);
  double t = 0.0;
  res.trajectory.push_back({0.0, 0.0, 1.0});
  auto record = [&](double duration, bool delta) {
    res.schedule.push_back({duration, delta});
    t += duration;
    res.trajectory.push_back({t, std::norm(psi(dim - 1)), psi.head(dim - 1).squaredNorm()});
  };

  double pending_closed = 0.0;
  while (t + pending_closed < horizon) {
    // Closed evolution to the next maximum of |a_N|.
    const VectorXcd c_closed = to_eigenbasis(e_closed, psi);
    const VectorXcd w_n = e_closed.vectors.row(dim - 2).transpose().cast<cplx>().cwiseProduct(c_closed);
    auto g = [&](double tau) { return std::norm(site_amplitude(w_n, e_closed.energies, pending_closed + tau)); };
    const auto tau = next_local_max(g, step, horizon - t - pending_closed);
    if (!tau) break;
    pending_closed += *tau;
    const VectorXcd at_max = from_eigenbasis(e_closed, evolve_coefficients(e_closed, c_closed, pending_closed));

    // Open duration maximizing the target occupation.
    const VectorXcd c_open = to_eigenbasis(e_open, at_max);
    const VectorXcd w_t = e_open.vectors.row(dim - 1).transpose().cast<cplx>().cwiseProduct(c_open);
    auto target = [&](double s) { return std::norm(site_amplitude(w_t, e_open.energies, s)); };
    const double limit = std::min(open_max, horizon - t - pending_closed);
    double best_s = 0.0, best_v = std::norm(at_max(dim - 1));
    for (double s = step; s <= limit + 1e-12; s += step) {
      const double v = target(s);
      if (v > best_v) {
        best_v = v;
        best_s = s;
      }
    }
    if (best_s > 0.0) {
      const double r = golden_section_max(target, std::max(step * 1e-3, best_s - step), std::min(limit, best_s + step), 1e-9);
      if (target(r) > best_v) best_s = r;
    }
    if (best_s <= 0.0 || target(best_s) <= std::norm(at_max(dim - 1)) + 1e-12) continue;  // wrong phase, wait

    psi = at_max;
    record(pending_closed, closed_delta);
    pending_closed = 0.0;
    psi = from_eigenbasis(e_open, evolve_coefficients(e_open, c_open, best_s));
    record(best_s, !closed_delta);
  }
  const double rest = horizon - t;
  if (rest > 0.0) {
    psi = propagate(e_closed, psi, rest);
    record(rest, closed_delta);
  }
  return res;
}

MemoryState MemoryState::chain_state(int l_slots, const VectorXcd& vacuum_and_chain) {
  if (l_slots < 1) throw std::invalid_argument("MemoryState: need at least one slot");
  if (vacuum_and_chain.size() < 3) throw std::invalid_argument("MemoryState: need vacuum plus >= 2 chain sites");
  MemoryState s;
  s.n = static_cast<int>(vacuum_and_chain.size()) - 1;
  s.l = l_slots;
  s.amp = VectorXcd::Zero(1 + s.n + s.l);
  s.amp.head(1 + s.n) = vacuum_and_chain;
  return s;
}

VectorXcd MemoryState::memory() const {
  VectorXcd m(1 + l);
  m(0) = amp(0);
  m.tail(l) = slots();
  return m;
}

MemoryState apply_read(const Eigensystem& eig, double t, MemoryState s) {
  if (eig.dim() != s.n) throw std::invalid_argument("apply_read: dimension mismatch");
  for (int l = 1; l <= s.l; ++l) {
    s.amp.segment(1, s.n) = propagate(eig, s.amp.segment(1, s.n), t);
    swap_entries(s.amp, s.n, s.n + l);
  }
  return s;
}

MemoryState apply_write(const Eigensystem& eig, double t, MemoryState s) {
  if (eig.dim() != s.n) throw std::invalid_argument("apply_write: dimension mismatch");
  for (int l = s.l; l >= 1; --l) {
    swap_entries(s.amp, s.n, s.n + l);
    s.amp.segment(1, s.n) = propagate(eig, s.amp.segment(1, s.n), -t);
  }
  return s;
}

MemoryReadResult memory_read(const Eigensystem& eig, int l_slots, double t) {
  VectorXcd init = VectorXcd::Zero(eig.dim() + 1);
  init(1) = 1.0;
  return memory_read(eig, l_slots, t, init);
}

MemoryReadResult memory_read(const Eigensystem& eig, int l_slots, double t, const VectorXcd& init) {
  if (!(t > 0.0)) throw std::invalid_argument("memory_read: t must be > 0");
  if (init.size() != eig.dim() + 1) throw std::invalid_argument("memory_read: state must be [vacuum, chain]");
  MemoryReadResult r;
  r.state = MemoryState::chain_state(l_slots, init);
  const int n = r.state.n;
  for (int l = 1; l <= l_slots; ++l) {
    r.state.amp.segment(1, n) = propagate(eig, r.state.amp.segment(1, n), t);
    EndStep s;
    s.step = l;
    s.interval = t;
    s.t_cum = l * t;
    s.c_abs = std::abs(r.state.amp(n));
    swap_entries(r.state.amp, n, n + l);
    s.eta = r.state.slots().head(l).squaredNorm();
    s.p_success = s.eta;
    r.steps.push_back(s);
  }
  r.eta = r.state.slots().squaredNorm();
  return r;
}

MemoryWriteResult memory_write(const Eigensystem& eig, int l_slots, double t, const VectorXcd& target) {
  if (target.size() != eig.dim() + 1) throw std::invalid_argument("memory_write: target must be [vacuum, chain]");
  const double tn = target.norm();
  if (std::abs(tn - 1.0) > 1e-9) throw std::invalid_argument("memory_write: target must be normalized");
  const MemoryReadResult img = memory_read(eig, l_slots, t, target);
  VectorXcd phi = img.state.memory();
  const double pn = phi.norm();
  MemoryWriteResult w;
  if (pn <= 0.0) {
    w.written = VectorXcd::Zero(target.size());
    return w;
  }
  phi /= pn;
  MemoryState s = MemoryState::chain_state(l_slots, VectorXcd::Zero(target.size()));
  s.amp(0) = phi(0);
  s.amp.tail(l_slots) = phi.tail(l_slots);
  s = apply_write(eig, t, s);
  w.written = s.amp.head(1 + s.n);
  w.fidelity = std::norm(target.dot(w.written));
  return w;
}

double read_fidelity(const Eigensystem& eig, int l_slots, double t, const MatrixXcd& v, const VectorXcd& psi) {
  const MemoryState out = apply_read(eig, t, MemoryState::chain_state(l_slots, psi));
  const VectorXcd vpsi = v * psi;
  const double chi2 = out.chain().squaredNorm();
  return std::norm(out.memory().dot(vpsi)) + chi2 * std::norm(vpsi(0));
}

double write_fidelity(const Eigensystem& eig, int l_slots, double t, const MatrixXcd& v, const VectorXcd& psi) {
  const VectorXcd vpsi = v * psi;
  MemoryState s = MemoryState::chain_state(l_slots, VectorXcd::Zero(psi.size()));
  s.amp(0) = vpsi(0);
  s.amp.tail(l_slots) = vpsi.tail(l_slots);
  s = apply_write(eig, t, s);
  const VectorXcd x = s.amp.head(1 + s.n);
  return std::norm(psi.dot(x)) + s.slots().squaredNorm() * std::norm(psi(0));
}

CodingReport coding_transform(const Eigensystem& eig, int l_slots, double t) {
  const int n = eig.dim();
  if (l_slots < n) throw std::invalid_argument("coding_transform: need at least N slots");
  const int d = n + 1;
  CodingReport rep;
  rep.d = MatrixXcd::Zero(l_slots + 1, d);
  rep.d(0, 0) = 1.0;
  rep.eta.assign(d, 1.0);
  for (int k = 1; k <= n; ++k) {
    VectorXcd init = VectorXcd::Zero(d);
    init(k) = 1.0;
    const MemoryReadResult r = memory_read(eig, l_slots, t, init);
    rep.eta[k] = r.eta;
    if (r.eta > 0.0) rep.d.col(k) = r.state.memory() / std::sqrt(r.eta);
  }
  rep.eta0 = *std::min_element(rep.eta.begin(), rep.eta.end());

  Eigen::JacobiSVD<MatrixXcd> svd(rep.d, Eigen::ComputeThinU | Eigen::ComputeThinV);
  rep.v = svd.matrixU() * svd.matrixV().adjoint();
  rep.dv_norm = (rep.d - rep.v).norm();
  const double q = std::pow(std::max(0.0, 1.0 - rep.eta0), 0.25);
  rep.dv_bound = std::sqrt(3.0) * d * q;
  rep.dv_within = rep.dv_norm <= rep.dv_bound + 1e-9;

  const MatrixXcd gram = rep.d.adjoint() * rep.d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) rep.gram_offdiag = std::max(rep.gram_offdiag, std::abs(gram(i, j)));
  rep.gram_bound = 3.0 * std::sqrt(std::max(0.0, 1.0 - rep.eta0));

  rep.read_fidelity = 1.0;
  rep.write_fidelity = 1.0;
  for (int k = 0; k < d; ++k) {
    VectorXcd psi = VectorXcd::Zero(d);
    psi(k) = 1.0;
    rep.read_fidelity = std::min(rep.read_fidelity, read_fidelity(eig, l_slots, t, rep.v, psi));
    rep.write_fidelity = std::min(rep.write_fidelity, write_fidelity(eig, l_slots, t, rep.v, psi));
  }
  rep.fidelity_bound = rep.eta0 - 10.0 * d * q;
  rep.bound_vacuous = rep.fidelity_bound <= 0.0;
  return rep;
}

}  // namespace qst
