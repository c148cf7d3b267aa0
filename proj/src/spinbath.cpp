#include "qst/spinbath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qst {

namespace {

int resolve_site(const Eigensystem& eig, int site) {
  const int s = site == 0 ? eig.dim() : site;
  if (s < 1 || s > eig.dim()) throw std::out_of_range("spin bath: site outside the chain");
  return s;
}

// u = eps / (Delta + 2G); both branches have amplitude weights (1 +- u)^2 / (1 + u^2).
double mixing_u(double eps, double g) {
  const double delta = std::hypot(eps, 2.0 * g);
  const double den = delta + 2.0 * std::abs(g);
  return den > 0.0 ? eps / den : 0.0;
}

}  // namespace

double effective_g(const std::vector<double>& raw) {
  double s = 0.0;
  for (double g : raw) {
    if (!std::isfinite(g)) throw std::invalid_argument("effective_g: non-finite coupling");
    s += g * g;
  }
  return std::sqrt(s);
}

BathSpec BathSpec::uniform(int n, double g) {
  if (n < 1) throw std::invalid_argument("BathSpec: n must be >= 1");
  if (!(g >= 0.0)) throw std::invalid_argument("BathSpec: G must be >= 0");
  return {std::vector<double>(n, g)};
}

BathSpec BathSpec::from_raw(const std::vector<std::vector<double>>& raw_per_site) {
  BathSpec b;
  for (const auto& r : raw_per_site) b.g_per_site.push_back(effective_g(r));
  return b;
}

SectorHamiltonian build_effective(const ChainSpec& spec, const BathSpec& bath) {
  const MatrixXd h0 = build_sector(spec).matrix;
  const int n = static_cast<int>(h0.rows());
  if (static_cast<int>(bath.g_per_site.size()) != n) throw std::invalid_argument("build_effective: bath length mismatch");
  SectorHamiltonian h;
  h.matrix = MatrixXd::Zero(2 * n, 2 * n);
  h.matrix.topLeftCorner(n, n) = h0;
  for (int l = 0; l < n; ++l) {
    const double g = bath.g_per_site[l];
    if (!(g >= 0.0)) throw std::invalid_argument("build_effective: G must be >= 0");
    h.matrix(l, n + l) = -g;
    h.matrix(n + l, l) = -g;
  }
  return h;
}

Eigensystem exact_eigensystem_uniform(const Eigensystem& eig0, double g) {
  if (!(g >= 0.0)) throw std::invalid_argument("exact_eigensystem_uniform: G must be >= 0");
  const int n = eig0.dim();
  VectorXd energies(2 * n);
  MatrixXd vectors = MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    const double eps = eig0.energies(k);
    const double delta = std::hypot(eps, 2.0 * g);
    const double u = mixing_u(eps, g);
    const double c = 1.0 / std::sqrt(2.0 * (1.0 + u * u));
    const auto a = eig0.vectors.col(k);
    energies(2 * k) = 0.5 * (eps + delta);
    vectors.col(2 * k).head(n) = (1.0 + u) * c * a;
    vectors.col(2 * k).tail(n) = (u - 1.0) * c * a;
    energies(2 * k + 1) = 0.5 * (eps - delta);
    vectors.col(2 * k + 1).head(n) = (1.0 - u) * c * a;
    vectors.col(2 * k + 1).tail(n) = (1.0 + u) * c * a;
  }
  std::vector<int> order(2 * n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return energies(i) < energies(j); });
  Eigensystem out;
  out.energies.resize(2 * n);
  out.vectors.resize(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    out.energies(i) = energies(order[i]);
    out.vectors.col(i) = vectors.col(order[i]);
  }
  return out;
}

cplx noisy_transfer(const Eigensystem& eig0, double g, double t, int n, int m) {
  if (!(g >= 0.0)) throw std::invalid_argument("noisy_transfer: G must be >= 0");
  const int row = resolve_site(eig0, n) - 1;
  const int col = resolve_site(eig0, m) - 1;
  cplx f{0.0, 0.0};
  for (int k = 0; k < eig0.dim(); ++k) {
    const double eps = eig0.energies(k);
    const double delta = std::hypot(eps, 2.0 * g);
    const double u = mixing_u(eps, g);
    const double w0 = (1.0 + u) * (1.0 + u) / (1.0 + u * u);
    const double w1 = (1.0 - u) * (1.0 - u) / (1.0 + u * u);
    const cplx modes = w0 * std::polar(1.0, -0.5 * (eps + delta) * t) + w1 * std::polar(1.0, -0.5 * (eps - delta) * t);
    f += 0.5 * eig0.vectors(row, k) * eig0.vectors(col, k) * modes;
  }
  return f;
}

cplx strong_coupling_approx(const Eigensystem& eig0, double g, double t, int n, int m) {
  return std::cos(g * t) * transfer_amplitude(eig0, resolve_site(eig0, n), resolve_site(eig0, m), 0.5 * t);
}

cplx weak_correction(const Eigensystem& eig0, double g, double t, int n, int m) {
  const int row = resolve_site(eig0, n) - 1;
  const int col = resolve_site(eig0, m) - 1;
  const cplx i{0.0, 1.0};
  cplx corr{0.0, 0.0};
  for (int k = 0; k < eig0.dim(); ++k) {
    const double eps = eig0.energies(k);
    if (std::abs(eps) < 1e-12) throw std::invalid_argument("weak_correction: zero bare eigenvalue");
    const cplx bracket = std::polar(1.0, -eps * t) * (-1.0 / (eps * eps) - i * t / eps) + 1.0 / (eps * eps);
    corr += eig0.vectors(col, k) * eig0.vectors(row, k) * bracket;
  }
  return transfer_amplitude(eig0, row + 1, col + 1, t) + g * g * corr;
}

}  // namespace qst
