#pragma once

// Transfer fidelity functionals, thresholds and peak analysis for the basic
// single-chain protocol.

#include <vector>

#include "qst/xsector.hpp"

namespace qst {

/// p(t) = |f_{N,1}(t)|^2.
double min_fidelity(const Eigensystem& eig, double t);

/// Fidelity averaged over the Bloch sphere: sqrt(p)/3 + p/6 + 1/2.
double averaged_fidelity(double p);

struct ThresholdReport {
  double eof = 0.0;               // entanglement of formation, sqrt(p)
  bool beats_classical = false;   // p > 3 - 2 sqrt(2), i.e. averaged fidelity > 2/3
  bool capacity_positive = false; // p > 1/2
  double eod_lower = 0.0;         // max_M R(M) p^floor(M/2)
  int eod_best_m = 0;             // maximizer; 0 when p == 1 (supremum approached as M grows)
};

ThresholdReport thresholds(double p);

struct PeakReport {
  double t_star = 0.0;
  double p_star = 0.0;
  double width = 0.0;  // full width at half height; 0 if a crossing lies outside the window
  double grid_dt = 0.0;
};

/// Global maximum of p(t) on [0, t_max], refined by golden-section search
/// on the bracketing grid interval (tolerance 1e-6 in t).
PeakReport max_peak(const Eigensystem& eig, double t_max, double dt);

/// Airy function Ai(x): Maclaurin series for |x| <= 5, asymptotic forms beyond.
double airy_ai(double x);

/// Airy approximation of |f_{N,1}(t)|^2 around the first arrival.
double airy_estimate(int n, double j, double t);

struct PeakSummary {
  double t_peak = 0.0;     // N/(2J)
  double p_peak = 0.0;     // 1.82 N^{-2/3}
  double rel_width = 0.0;  // 1.44 N^{-2/3}
  double t_swap = 0.0;     // (N-1) pi / (2J)
};

PeakSummary peak_summary(int n, double j);

struct EnvelopePoint {
  double t = 0.0;
  double p_max = 0.0;
};

/// Running maximum p_M(T) = max_{0<t<T} p(t). Only the points where the
/// running maximum increases are returned, followed by the final (t_max,
/// p_M(t_max)) sample.
std::vector<EnvelopePoint> long_time_recurrence_scan(const Eigensystem& eig, double t_max, double dt);

/// Golden-section maximization of f on [a, b].
template <class F>
double golden_section_max(F&& f, double a, double b, double tol = 1e-6) {
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace qst
