#include "qst/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qst/multirail.hpp"

namespace qst {

namespace {

// Weights w_k = a_{k,N} a_{k,1} so that f_{N,1}(t) = sum_k w_k exp(-i E_k t).
VectorXd end_to_end_weights(const Eigensystem& eig) {
  const int n = eig.dim();
  return eig.vectors.row(n - 1).transpose().cwiseProduct(eig.vectors.row(0).transpose());
}

double p_of_t(const Eigensystem& eig, const VectorXd& w, double t) {
  cplx f{0.0, 0.0};
  for (Eigen::Index k = 0; k < w.size(); ++k) f += std::polar(w(k), -eig.energies(k) * t);
  return std::norm(f);
}

double log2_binomial(int m, int k) {
  return (std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0)) / std::numbers::ln2;
}

}  // namespace

double min_fidelity(const Eigensystem& eig, double t) {
  return std::norm(transfer_amplitude(eig, eig.dim(), 1, t));
}

double averaged_fidelity(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("averaged_fidelity: p outside [0,1]");
  return std::sqrt(p) / 3.0 + p / 6.0 + 0.5;
}

ThresholdReport thresholds(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("thresholds: p outside [0,1]");
  ThresholdReport r;
  r.eof = std::sqrt(p);
  r.beats_classical = p > 3.0 - 2.0 * std::numbers::sqrt2;
  r.capacity_positive = p > 0.5;
  if (p >= 1.0) {
    // R(M) -> 1 with no finite maximizer.
    r.eod_lower = 1.0;
    r.eod_best_m = 0;
    return r;
  }
  r.eod_best_m = 2;
  r.eod_lower = 0.5 * p;
  const double logp = std::log(p);
  for (int m = 3; m < 1 << 20; ++m) {
    const double power = std::exp(std::floor(m / 2) * logp);
    if (power <= r.eod_lower) break;  // R(M) <= 1, no later M can win
    const double v = log2_binomial(m, optimal_k(m)) / m * power;
    if (v > r.eod_lower) {
      r.eod_lower = v;
      r.eod_best_m = m;
    }
  }
  return r;
}

PeakReport max_peak(const Eigensystem& eig, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max > 0.0) || t_max < dt) throw std::invalid_argument("max_peak: degenerate window");
  const VectorXd w = end_to_end_weights(eig);
  auto p = [&](double t) { return p_of_t(eig, w, t); };

  const auto n_steps = static_cast<long>(std::floor(t_max / dt));
  std::vector<double> grid(n_steps + 1);
  double grid_max = -1.0;
  for (long i = 0; i <= n_steps; ++i) {
    grid[i] = p(i * dt);
    grid_max = std::max(grid_max, grid[i]);
  }
  // Refine every grid maximum; ties go to the earliest time.
  long best_i = 0;
  double t_star = 0.0, p_star = -1.0;
  for (long i = 0; i <= n_steps; ++i) {
    if ((i > 0 && grid[i - 1] > grid[i]) || (i < n_steps && grid[i + 1] > grid[i])) continue;
    const double lo = std::max(0.0, (i - 1) * dt);
    const double hi = std::min(t_max, (i + 1) * dt);
    double t = golden_section_max(p, lo, hi, 1e-6);
    double v = p(t);
    if (v < grid[i]) {
      t = i * dt;
      v = grid[i];
    }
    if (v > p_star + 1e-12) {
      p_star = v;
      t_star = t;
      best_i = i;
    }
  }

  PeakReport r;
  r.t_star = t_star;
  r.p_star = std::clamp(p_star, 0.0, 1.0);
  r.grid_dt = dt;

  const double half = 0.5 * p_star;
  auto crossing = [&](double inside, double outside) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (inside + outside);
      (p(mid) >= half ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  double left = -1.0, right = -1.0;
  for (long i = best_i; i >= 0; --i) {
    if (p(i * dt) < half) {
      left = crossing(std::min(t_star, (i + 1) * dt), i * dt);
      break;
    }
  }
  for (long i = best_i; i <= n_steps; ++i) {
    if (p(i * dt) < half) {
      right = crossing(std::max(t_star, (i - 1) * dt), i * dt);
      break;
    }
  }
  r.width = (left >= 0.0 && right >= 0.0) ? right - left : 0.0;
  return r;
}

double airy_ai(double x) {
  constexpr double pi = std::numbers::pi;
  constexpr double c1 = 0.355028053887817239;  // Ai(0)
  constexpr double c2 = 0.258819403792806798;  // -Ai'(0)
  if (std::abs(x) <= 5.0) {
    // Ai = c1 f - c2 g with f = sum 3^k (1/3)_k x^{3k}/(3k)!, g = sum 3^k (2/3)_k x^{3k+1}/(3k+1)!
    double f = 1.0, g = x;
    double tf = 1.0, tg = x;
    const double x3 = x * x * x;
    for (int k = 1; k < 200; ++k) {
      tf *= x3 / ((3.0 * k - 1.0) * (3.0 * k));
      tg *= x3 / ((3.0 * k) * (3.0 * k + 1.0));
      f += tf;
      g += tg;
      if (std::abs(tf) < 1e-18 * std::abs(f) && std::abs(tg) < 1e-18 * (std::abs(g) + 1e-300)) break;
    }
    return c1 * f - c2 * g;
  }
  // Asymptotic coefficients u_k = (6k-5)(6k-3)(6k-1) / ((2k-1) 216 k) u_{k-1}.
  constexpr int terms = 12;
  double u[terms];
  u[0] = 1.0;
  for (int k = 1; k < terms; ++k) {
    u[k] = u[k - 1] * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
  }
  if (x > 0.0) {
    const double zeta = 2.0 / 3.0 * std::pow(x, 1.5);
    double s = 0.0, zp = 1.0;
    for (int k = 0; k < terms; ++k) {
      s += (k % 2 == 0 ? 1.0 : -1.0) * u[k] / zp;
      zp *= zeta;
    }
    return std::exp(-zeta) / (2.0 * std::sqrt(pi) * std::pow(x, 0.25)) * s;
  }
  const double z = -x;
  const double zeta = 2.0 / 3.0 * std::pow(z, 1.5);
  double even = 0.0, odd = 0.0;
  for (int k = 0; 2 * k + 1 < terms; ++k) {
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    even += sgn * u[2 * k] / std::pow(zeta, 2 * k);
    odd += sgn * u[2 * k + 1] / std::pow(zeta, 2 * k + 1);
  }
  const double phase = zeta + pi / 4.0;
  return (std::sin(phase) * even - std::cos(phase) * odd) / (std::sqrt(pi) * std::pow(z, 0.25));
}

double airy_estimate(int n, double j, double t) {
  if (n < 2) throw std::invalid_argument("airy_estimate: n must be >= 2");
  const double nn = n;
  const double amp = std::cbrt(16.0 / nn) * airy_ai(std::cbrt(2.0 / nn) * (nn - 2.0 * j * t));
  return amp * amp;
}

PeakSummary peak_summary(int n, double j) {
  if (n < 2) throw std::invalid_argument("peak_summary: n must be >= 2");
  const double scale = std::pow(double(n), -2.0 / 3.0);
  return {n / (2.0 * j), 1.82 * scale, 1.44 * scale, (n - 1) * std::numbers::pi / (2.0 * j)};
}

std::vector<EnvelopePoint> long_time_recurrence_scan(const Eigensystem& eig, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max > 0.0) || t_max < dt) throw std::invalid_argument("recurrence scan: degenerate window");
  const VectorXd w = end_to_end_weights(eig);
  const Eigen::Index n = w.size();
  VectorXcd step(n), phase(n);
  for (Eigen::Index k = 0; k < n; ++k) step(k) = std::polar(1.0, -eig.energies(k) * dt);

  std::vector<EnvelopePoint> env;
  double running = -1.0;
  const auto n_steps = static_cast<long>(std::floor(t_max / dt));
  for (long i = 0; i <= n_steps; ++i) {
    // Re-anchor the phase recurrence periodically to bound round-off drift.
    if (i % 4096 == 0) {
      for (Eigen::Index k = 0; k < n; ++k) phase(k) = std::polar(w(k), -eig.energies(k) * (i * dt));
    }
    const double p = std::norm(phase.sum());
    if (p > running) {
      running = p;
      env.push_back({i * dt, p});
    }
    phase = phase.cwiseProduct(step);
  }
  env.push_back({n_steps * dt, running});
  return env;
}

}  // namespace qst
