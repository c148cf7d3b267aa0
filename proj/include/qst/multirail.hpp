#pragma once

// Multi-rail encoding: K excitations distributed over M identical chains,
// collective end measurements, and the convergence certificates that make
// the transfer arbitrarily perfect.

#include <cstddef>
#include <vector>

#include "qst/xsector.hpp"

namespace qst {

/// R(M, K) = log2 C(M, K) / M.
double efficiency(int m, int k);
/// K maximizing R(M, K): floor(M/2).
int optimal_k(int m);
double efficiency_opt(int m);

struct MultiRailConfig {
  int m_chains = 2;
  int k_excitations = 1;
  Eigensystem chain;
};

/// Sum of K-fold product vectors, sum_j coeff_j * (v_j1 x v_j2 x ... x v_jK).
///
/// Evolution acts factor-wise; the rank-one projection onto |N,...,N> adds
/// one term, so after q measurements there are at most q+1 terms.
class ProductTermState {
 public:
  struct Term {
    cplx coeff;
    std::vector<VectorXcd> factors;
  };

  ProductTermState() = default;
  ProductTermState(int n, int k);

  static ProductTermState first_sites(int n, int k);

  int n() const { return n_; }
  int k() const { return k_; }
  const std::vector<Term>& terms() const { return terms_; }

  void add_term(cplx coeff, std::vector<VectorXcd> factors);
  void evolve(const Eigensystem& eig, double t);
  /// <N,...,N|psi>.
  cplx end_amplitude() const;
  /// psi -> (1 - |N..N><N..N|) psi; returns the removed amplitude.
  cplx project_out_end();
  double squared_norm() const;
  /// Drop terms with |coeff| below the threshold.
  void prune(double threshold = 1e-14);
  /// Dense N^K vector, index = sum_i (n_i - 1) N^(K-1-i).
  VectorXcd to_dense() const;
  std::size_t memory_bytes() const;

 private:
  int n_ = 0;
  int k_ = 0;
  std::vector<Term> terms_;
};

struct MultiRailStep {
  int q = 0;
  double interval = 0.0;
  double p_cond = 0.0;    // conditional success |gamma_q|^2
  double p_cum = 0.0;     // P_q, cumulative success
  double failure = 1.0;   // 1 - P_q
  double rho_bound = 0.0; // ((1+rho)/2)^(2q) envelope for equal intervals; 0 when not computed
};

struct MultiRailTrace {
  std::vector<MultiRailStep> steps;
  std::size_t max_terms = 0;
};

/// Product-term simulation of repeated collective measurements.
/// Throws std::length_error when the term list would exceed `memory_budget` bytes.
MultiRailTrace simulate_multirail(const MultiRailConfig& cfg, const std::vector<double>& intervals,
                                  std::size_t memory_budget = std::size_t(1) << 30);

/// Conditional amplitudes gamma_q from the normalized recursion over the
/// dense N^K amplitude table (independent of the product-term path).
std::vector<cplx> gamma_recursion(const MultiRailConfig& cfg, const std::vector<double>& intervals);

struct ConvergenceReport {
  bool converges = false;
  double min_overlap = 0.0;  // min_k |<N|E_k>|
};

/// Arbitrarily perfect transfer is possible iff no eigenvector is orthogonal
/// to the receiver site.
ConvergenceReport convergence_check(const Eigensystem& eig, double tol = 1e-10);

/// Spectral radius of U(t) * Theta, Theta zeroing site N.
double spectral_radius_T(const Eigensystem& eig, double t);

/// True when rho(U(t) Theta) is within 1e-9 of one (a degenerate time).
bool degenerate_time(const Eigensystem& eig, double t);

struct RatePoint {
  int m = 0;
  double efficiency = 0.0;
  double steps = 0.0;
  double rate = 0.0;
};

struct RateReport {
  int optimal_m = 0;
  double steps = 0.0;
  double rate = 0.0;
  std::vector<RatePoint> table;  // M = 2..max_m
};

/// Measurements l(P, M) = max(ln P / ln(1 - p^floor(M/2)), 1) and rate
/// v = R(M)/l(P, M), scanned over M in [2, max_m].
RateReport rate_analysis(double p, double target_failure, int max_m = 64);

}  // namespace qst
