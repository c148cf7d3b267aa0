#pragma once

// Chain coupled to per-site spin baths, reduced to one effective bath spin
// per site (2N-dimensional sector).

#include <vector>

#include "qst/xsector.hpp"

namespace qst {

/// Root-sum-square of the raw bath couplings of one site.
double effective_g(const std::vector<double>& raw);

struct BathSpec {
  std::vector<double> g_per_site;

  static BathSpec uniform(int n, double g);
  static BathSpec from_raw(const std::vector<std::vector<double>>& raw_per_site);
};

/// Basis: chain sites |l,0> (indices 0..N-1), then bath sites |0,l> (N..2N-1).
/// Chain block from build_sector; -G_l couples |l,0> and |0,l>.
SectorHamiltonian build_effective(const ChainSpec& spec, const BathSpec& bath);

/// Closed-form 2N eigensystem for uniform G, energies (eps_k +- Delta_k)/2.
Eigensystem exact_eigensystem_uniform(const Eigensystem& eig0, double g);

/// f_{n,m}(t) restricted to chain sites, for uniform G (defaults n = N, m = 1).
cplx noisy_transfer(const Eigensystem& eig0, double g, double t, int n = 0, int m = 1);

/// cos(G t) f0(t/2).
cplx strong_coupling_approx(const Eigensystem& eig0, double g, double t, int n = 0, int m = 1);

/// Second-order correction in G; requires all bare energies nonzero.
cplx weak_correction(const Eigensystem& eig0, double g, double t, int n = 0, int m = 1);

}  // namespace qst
