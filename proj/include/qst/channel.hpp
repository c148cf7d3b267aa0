#pragma once

// Finite-dimensional CPT maps: superoperator spectrum, ergodicity and
// mixing, orbit diagnostics, Stinespring reductions.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qst/rng.hpp"
#include "qst/xsector.hpp"

namespace qst {

using DensityMatrix = MatrixXcd;

/// Hermitian, unit trace and PSD within tolerance.
bool is_density_matrix(const MatrixXcd& rho, double tol = 1e-9);

double trace_norm(const MatrixXcd& x);
/// d1 = ||rho - sigma||_1 / 2.
double trace_distance(const MatrixXcd& rho, const MatrixXcd& sigma);
/// H(rho, sigma) = Tr rho (log rho - log sigma); +inf when supp rho is not inside supp sigma.
double relative_entropy(const MatrixXcd& rho, const MatrixXcd& sigma, double tol = 1e-12);

class QuantumChannel {
 public:
  /// Validates trace preservation and Choi positivity to `tol`.
  explicit QuantumChannel(std::vector<MatrixXcd> kraus, double tol = 1e-9);

  int dim() const { return dim_; }
  const std::vector<MatrixXcd>& kraus() const { return kraus_; }
  /// Column-stacking superoperator, vec(K rho K^dag) = (conj(K) x K) vec(rho).
  const MatrixXcd& superoperator() const { return super_; }
  MatrixXcd choi() const;

  DensityMatrix apply(const DensityMatrix& rho) const;

 private:
  int dim_ = 0;
  std::vector<MatrixXcd> kraus_;
  MatrixXcd super_;
};

struct SpectralReport {
  VectorXcd eigenvalues;              // sorted by decreasing modulus
  std::vector<cplx> peripheral;       // |lambda| >= 1 - tol, with multiplicity
  double kappa = 0.0;                 // second-largest modulus
  int fixed_space_dim = 0;            // nullity of S - I
  std::optional<DensityMatrix> fixed_point;
  std::string fixed_point_error;      // set when the eigenvector is not a valid state
  MatrixXcd raw_fixed_operator;       // unnormalized eigenvalue-1 operator
};

SpectralReport spectral_report(const QuantumChannel& ch, double tol = 1e-9);

struct Classification {
  bool ergodic = false;
  bool mixing = false;
  double kappa = 0.0;
};

Classification classify(const QuantumChannel& ch, double tol = 1e-9);

/// Trace distances d1(tau^n rho0, rho*) for n = 0, 1, ... until <= eps or n_max.
std::vector<double> iterate(const QuantumChannel& ch, const DensityMatrix& rho0, int n_max, double eps = 0.0);

struct EnvelopeFit {
  double c = 0.0;
  bool holds = false;
  int first_violation = -1;
};

/// Fits C on [burn_in, 2 burn_in] so that ||tau^n rho - rho*||_1 <= C n^d kappa^n,
/// then checks the bound on the rest of the trajectory (d1 values as from iterate).
EnvelopeFit speed_envelope(const std::vector<double>& d1, double kappa, int d, int burn_in);

/// (1/(n+1)) sum_{l=0}^{n} tau^l(rho0).
DensityMatrix birkhoff_average(const QuantumChannel& ch, const DensityMatrix& rho0, int n);

struct LyapunovReport {
  std::vector<std::vector<double>> distance;  // per sample, per step
  std::vector<std::vector<double>> entropy;   // empty when skipped
  bool distance_to_zero = false;
  bool entropy_nonincreasing = false;
  bool entropy_skipped = false;
  std::string notice;
};

LyapunovReport lyapunov_diagnostics(const QuantumChannel& ch, const std::vector<DensityMatrix>& samples,
                                    int steps = 100, double tol = 1e-9);

struct ContractionReport {
  int nonexpansive_violations = 0;
  bool weak_contraction = false;          // strict decrease on every pair
  std::optional<std::size_t> witness;     // a pair with preserved distance
  double max_ratio = 0.0;                 // max d1(tau rho, tau sigma) / d1(rho, sigma)
};

ContractionReport contraction_check(const QuantumChannel& ch,
                                    const std::vector<std::pair<DensityMatrix, DensityMatrix>>& pairs,
                                    double tol = 1e-9);

struct FactorizingReport {
  int count = 0;
  MatrixXcd eigenvectors;  // columns: eigenvectors of U of the form |nu> x |phi>
  VectorXcd eigenvalues;
};

/// Eigenvectors of U on A x B (index a * dB + b) of product form |nu> x |phi>.
FactorizingReport factorizing_eigenstates(const MatrixXcd& u, int d_a, const VectorXcd& phi, double tol = 1e-9);

/// tau(rho) = Tr_B[U (rho x |phi><phi|) U^dag], Kraus K_j = (I x <j|) U (I x |phi>).
QuantumChannel stinespring_channel(const MatrixXcd& u, int d_a, const VectorXcd& phi);

namespace fixtures {
/// Complete dephasing followed by a NOT gate.
QuantumChannel ergodic_example();
/// Three levels: |2> -> |1>, |1>,|0> -> |0>, coherences erased.
QuantumChannel mixing_example();
QuantumChannel identity(int d);
QuantumChannel depolarizing(int d, double lambda);
QuantumChannel unitary(const MatrixXcd& u);
}  // namespace fixtures

/// Haar-like random state / unitary (QR of a complex Ginibre matrix).
MatrixXcd random_unitary(int d, Rng& rng);
DensityMatrix random_density_matrix(int d, Rng& rng, int rank = 0);
/// Random channel with the pure fixed point |0><0|: random isometry whose
/// first column is forced to |0> x |e0>.
QuantumChannel random_channel_pure_fixed_point(int d, int n_kraus, Rng& rng);
QuantumChannel random_channel(int d, int n_kraus, Rng& rng);

}  // namespace qst
