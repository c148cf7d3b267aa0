#include "qst/xsector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qst {

namespace {

void require_finite(const std::vector<double>& xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite entry in ") + what);
  }
}

void require_site(int dim, int site) {
  if (site < 1 || site > dim) {
    throw std::out_of_range("site " + std::to_string(site) + " outside 1.." + std::to_string(dim));
  }
}

}  // namespace

ChainSpec ChainSpec::heisenberg(int n, double j, double b) {
  ChainSpec s;
  s.n_sites = n;
  s.preset = Preset::heisenberg_uniform;
  s.j = j;
  s.b = b;
  return s;
}

ChainSpec ChainSpec::xy(int n, double j) {
  ChainSpec s;
  s.n_sites = n;
  s.preset = Preset::xy_uniform;
  s.j = j;
  return s;
}

ChainSpec ChainSpec::engineered_chain(int n, double j) {
  ChainSpec s;
  s.n_sites = n;
  s.preset = Preset::engineered;
  s.j = j;
  return s;
}

ChainSpec ChainSpec::custom(std::vector<double> hops, std::vector<double> onsite) {
  ChainSpec s;
  s.n_sites = static_cast<int>(onsite.size());
  s.preset = Preset::custom;
  s.hops = std::move(hops);
  s.onsite = std::move(onsite);
  return s;
}

ChainSpec ChainSpec::heisenberg_bonds(const std::vector<double>& couplings, double b) {
  const std::size_t n = couplings.size() + 1;
  std::vector<double> hops(couplings.size());
  std::vector<double> diag(n, 2.0 * b);
  for (std::size_t i = 0; i < couplings.size(); ++i) {
    hops[i] = -couplings[i];
    diag[i] += couplings[i];
    diag[i + 1] += couplings[i];
  }
  return custom(std::move(hops), std::move(diag));
}

ChainSpec ChainSpec::xy_bonds(const std::vector<double>& couplings) {
  std::vector<double> hops(couplings.size());
  for (std::size_t i = 0; i < couplings.size(); ++i) hops[i] = -couplings[i];
  return custom(std::move(hops), std::vector<double>(couplings.size() + 1, 0.0));
}

SectorHamiltonian build_sector(const ChainSpec& spec) {
  const int n = spec.n_sites;
  if (n < 2) throw std::invalid_argument("chain needs at least 2 sites");
  if (!std::isfinite(spec.j) || !std::isfinite(spec.b)) {
    throw std::invalid_argument("non-finite chain parameter");
  }

  std::vector<double> diag(n, 0.0);
  std::vector<double> off(n - 1, 0.0);
  switch (spec.preset) {
    case Preset::heisenberg_uniform:
      for (int i = 0; i < n; ++i) {
        const int bonds = (i > 0 ? 1 : 0) + (i < n - 1 ? 1 : 0);
        diag[i] = 2.0 * spec.b + spec.j * bonds;
      }
      std::fill(off.begin(), off.end(), -spec.j);
      break;
    case Preset::xy_uniform:
      std::fill(off.begin(), off.end(), -spec.j);
      break;
    case Preset::engineered:
      // XX+YY without the 1/2 gives twice the hop of the XY preset.
      for (int i = 1; i < n; ++i) off[i - 1] = -2.0 * spec.j * std::sqrt(double(i) * (n - i));
      break;
    case Preset::custom:
      if (static_cast<int>(spec.onsite.size()) != n || static_cast<int>(spec.hops.size()) != n - 1) {
        throw std::invalid_argument("custom chain needs n onsite terms and n-1 hops");
      }
      require_finite(spec.hops, "hops");
      require_finite(spec.onsite, "onsite");
      diag = spec.onsite;
      off = spec.hops;
      break;
  }

  SectorHamiltonian h;
  h.matrix = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) h.matrix(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    h.matrix(i, i + 1) = off[i];
    h.matrix(i + 1, i) = off[i];
  }
  return h;
}

Eigensystem eigensystem(const MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("eigensystem: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("eigensystem: non-finite matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("eigensystem: matrix not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensystem: diagonalization did not converge");

  Eigensystem e;
  e.energies = solver.eigenvalues();
  e.vectors = solver.eigenvectors();
  for (int k = 0; k < e.vectors.cols(); ++k) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index l = 0; l < e.vectors.rows(); ++l) {
      const double a = std::abs(e.vectors(l, k));
      if (a > best + 1e-12) {
        best = a;
        imax = l;
      }
    }
    if (e.vectors(imax, k) < 0) e.vectors.col(k) *= -1.0;
  }
  return e;
}

Eigensystem eigensystem(const SectorHamiltonian& h) { return eigensystem(h.matrix); }

Eigensystem analytic_heisenberg(int n, double j, double b) {
  if (n < 2) throw std::invalid_argument("analytic_heisenberg: n must be >= 2");
  if (!std::isfinite(j) || !std::isfinite(b)) throw std::invalid_argument("analytic_heisenberg: non-finite parameter");
  constexpr double pi = std::numbers::pi;
  Eigensystem e;
  e.energies.resize(n);
  e.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    e.energies(k) = 2.0 * b + 2.0 * j * (1.0 - std::cos(pi * k / n));
    const double norm = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int l = 1; l <= n; ++l) e.vectors(l - 1, k) = norm * std::cos(pi * k * (2.0 * l - 1.0) / (2.0 * n));
  }
  // Energies are ascending in k for j > 0; keep the ordering contract otherwise.
  if (j < 0) {
    e.energies.reverseInPlace();
    e.vectors.rowwise().reverseInPlace();
  }
  return e;
}

cplx transfer_amplitude(const Eigensystem& eig, int n, int m, double t) {
  const int dim = eig.dim();
  require_site(dim, n);
  require_site(dim, m);
  cplx f{0.0, 0.0};
  for (int k = 0; k < dim; ++k) {
    f += std::polar(eig.vectors(n - 1, k) * eig.vectors(m - 1, k), -eig.energies(k) * t);
  }
  return f;
}

VectorXcd to_eigenbasis(const Eigensystem& eig, const VectorXcd& v) {
  if (v.size() != eig.dim()) throw std::invalid_argument("dimension mismatch");
  return eig.vectors.transpose().cast<cplx>() * v;
}

VectorXcd from_eigenbasis(const Eigensystem& eig, const VectorXcd& c) {
  if (c.size() != eig.dim()) throw std::invalid_argument("dimension mismatch");
  return eig.vectors.cast<cplx>() * c;
}

VectorXcd evolve_coefficients(const Eigensystem& eig, const VectorXcd& c, double t) {
  VectorXcd out(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) out(k) = c(k) * std::polar(1.0, -eig.energies(k) * t);
  return out;
}

VectorXcd propagate(const Eigensystem& eig, const VectorXcd& v, double t) {
  return from_eigenbasis(eig, evolve_coefficients(eig, to_eigenbasis(eig, v), t));
}

VectorXcd basis_state(int dim, int site) {
  require_site(dim, site);
  VectorXcd v = VectorXcd::Zero(dim);
  v(site - 1) = 1.0;
  return v;
}

OccupationStats occupation_stats(const VectorXcd& v) {
  const double norm = v.squaredNorm();
  if (norm <= 0.0) throw std::invalid_argument("occupation_stats: zero vector");
  double mean = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) mean += (i + 1) * std::norm(v(i));
  mean /= norm;
  double var = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double d = (i + 1) - mean;
    var += d * d * std::norm(v(i));
  }
  return {mean, var / norm};
}

double default_dt(const Eigensystem& eig, double j) {
  const double emax = eig.energies.cwiseAbs().maxCoeff();
  double dt = 0.02 / std::abs(j);
  if (emax > 0) dt = std::min(dt, std::numbers::pi / (10.0 * emax));
  return dt;
}

Eigensystem negated(const Eigensystem& eig) {
  Eigensystem out;
  out.energies = -eig.energies.reverse();
  out.vectors = eig.vectors.rowwise().reverse();
  return out;
}

}  // namespace qst
