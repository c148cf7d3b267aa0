#pragma once

// Single-excitation sector of excitation-conserving spin chains.
//
// Sites are 1-based in every public signature (site 1 is the sender end,
// site N the receiver end). Units: hbar = 1, energies in units of J, times
// in units of 1/J.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qst {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Preset { heisenberg_uniform, xy_uniform, engineered, custom };

/// Physical description of one chain.
///
/// For the uniform presets only n_sites, j and b are used; `hops` and
/// `onsite` are filled in by build_sector. For `custom` the two lists are
/// copied verbatim into the sector matrix (diagonal = onsite, off-diagonal
/// = hops).
struct ChainSpec {
  int n_sites = 2;
  Preset preset = Preset::xy_uniform;
  double j = 1.0;
  double b = 0.0;
  std::vector<double> hops;
  std::vector<double> onsite;

  static ChainSpec heisenberg(int n, double j = 1.0, double b = 0.0);
  static ChainSpec xy(int n, double j = 1.0);
  static ChainSpec engineered_chain(int n, double j = 1.0);
  static ChainSpec custom(std::vector<double> hops, std::vector<double> onsite);

  /// Heisenberg chain with per-bond couplings; the ZZ part lands on the
  /// diagonal (each site collects the couplings of the bonds touching it).
  static ChainSpec heisenberg_bonds(const std::vector<double>& couplings, double b = 0.0);
  /// XX+YY chain with per-bond couplings and no diagonal.
  static ChainSpec xy_bonds(const std::vector<double>& couplings);
};

struct SectorHamiltonian {
  MatrixXd matrix;
  int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Eigen-decomposition of a sector Hamiltonian. `vectors(l, k)` is the
/// amplitude of eigenvector k on site l+1; energies ascending.
struct Eigensystem {
  VectorXd energies;
  MatrixXd vectors;
  int dim() const { return static_cast<int>(energies.size()); }
};

SectorHamiltonian build_sector(const ChainSpec& spec);

/// Dense symmetric diagonalization. Each eigenvector is sign-fixed so that
/// its largest-magnitude component (first one on ties) is positive.
Eigensystem eigensystem(const SectorHamiltonian& h);
Eigensystem eigensystem(const MatrixXd& symmetric);

/// Closed-form spectrum of the uniform Heisenberg chain (cosine modes).
Eigensystem analytic_heisenberg(int n, double j, double b);

/// f_{n,m}(t) = <n| exp(-iHt) |m>.
cplx transfer_amplitude(const Eigensystem& eig, int n, int m, double t);

/// exp(-iHt) v through the spectral form.
VectorXcd propagate(const Eigensystem& eig, const VectorXcd& v, double t);

/// Coefficients in the eigenbasis and back; used by the protocol loops to
/// avoid repeated basis changes.
VectorXcd to_eigenbasis(const Eigensystem& eig, const VectorXcd& v);
VectorXcd from_eigenbasis(const Eigensystem& eig, const VectorXcd& c);
VectorXcd evolve_coefficients(const Eigensystem& eig, const VectorXcd& c, double t);

/// Localized state |site> (1-based).
VectorXcd basis_state(int dim, int site);

struct OccupationStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the site index under the distribution |v_n|^2/|v|^2.
OccupationStats occupation_stats(const VectorXcd& v);

/// Default scan step: min(0.02/J, pi/(10 E_max)).
double default_dt(const Eigensystem& eig, double j = 1.0);

/// Eigensystem of -H (energies negated and re-sorted).
Eigensystem negated(const Eigensystem& eig);

}  // namespace qst
