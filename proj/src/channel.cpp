#include "qst/channel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qst {

namespace {

MatrixXcd vec_to_matrix(const VectorXcd& v, int d) {
  return Eigen::Map<const MatrixXcd>(v.data(), d, d);
}


MatrixXcd hermitian_part(const MatrixXcd& x) { return 0.5 * (x + x.adjoint()); }

void require_square(const MatrixXcd& m, int d, const char* what) {
  if (m.rows() != d || m.cols() != d) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

MatrixXcd ginibre(int rows, int cols, Rng& rng) {
  MatrixXcd g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = cplx(rng.normal(), rng.normal());
  return g;
}

// Modified Gram-Schmidt keeping the leading columns' directions.
MatrixXcd orthonormalize_columns(MatrixXcd m) {
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < j; ++i) m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
    for (int i = 0; i < j; ++i) m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
    const double n = m.col(j).norm();
    if (n < 1e-12) throw std::runtime_error("orthonormalize: rank deficient sample");
    m.col(j) /= n;
  }
  return m;
}

std::vector<MatrixXcd> isometry_to_kraus(const MatrixXcd& v, int d, int r) {
  std::vector<MatrixXcd> kraus(r, MatrixXcd::Zero(d, d));
  for (int a = 0; a < d; ++a)
    for (int j = 0; j < r; ++j) kraus[j].row(a) = v.row(a * r + j);
  return kraus;
}

}  // namespace

bool is_density_matrix(const MatrixXcd& rho, double tol) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) return false;
  if ((rho - rho.adjoint()).norm() > tol) return false;
  if (std::abs(rho.trace() - cplx(1.0, 0.0)) > tol) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitian_part(rho), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

double trace_norm(const MatrixXcd& x) {
  Eigen::JacobiSVD<MatrixXcd> svd(x);
  return svd.singularValues().sum();
}

double trace_distance(const MatrixXcd& rho, const MatrixXcd& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    throw std::invalid_argument("trace_distance: dimension mismatch");
  }
  return 0.5 * trace_norm(rho - sigma);
}

double relative_entropy(const MatrixXcd& rho, const MatrixXcd& sigma, double tol) {
  if (rho.rows() != sigma.rows()) throw std::invalid_argument("relative_entropy: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> er(hermitian_part(rho));
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitian_part(sigma));
  const VectorXd& lr = er.eigenvalues();
  const VectorXd& ls = es.eigenvalues();
  double s = 0.0;
  for (Eigen::Index i = 0; i < lr.size(); ++i) {
    if (lr(i) > tol) s += lr(i) * std::log(lr(i));
  }
  // Tr rho log sigma = sum_{i,j} r_i |<r_i|s_j>|^2 log s_j
  const MatrixXd overlap = (er.eigenvectors().adjoint() * es.eigenvectors()).cwiseAbs2();
  for (Eigen::Index j = 0; j < ls.size(); ++j) {
    double weight = 0.0;
    for (Eigen::Index i = 0; i < lr.size(); ++i) {
      if (lr(i) > tol) weight += lr(i) * overlap(i, j);
    }
    if (weight <= tol) continue;
    if (ls(j) <= tol) return std::numeric_limits<double>::infinity();
    s -= weight * std::log(ls(j));
  }
  return std::max(0.0, s);
}

QuantumChannel::QuantumChannel(std::vector<MatrixXcd> kraus, double tol) : kraus_(std::move(kraus)) {
  if (kraus_.empty()) throw std::invalid_argument("QuantumChannel: no Kraus operators");
  dim_ = static_cast<int>(kraus_.front().rows());
  if (dim_ < 1 || dim_ > 16) throw std::invalid_argument("QuantumChannel: dimension must lie in [1, 16]");
  MatrixXcd sum = MatrixXcd::Zero(dim_, dim_);
  super_ = MatrixXcd::Zero(dim_ * dim_, dim_ * dim_);
  for (const auto& k : kraus_) {
    require_square(k, dim_, "QuantumChannel");
    sum += k.adjoint() * k;
    const MatrixXcd kc = k.conjugate();
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) super_.block(i * dim_, j * dim_, dim_, dim_) += kc(i, j) * k;
  }
  if ((sum - MatrixXcd::Identity(dim_, dim_)).norm() > tol) {
    throw std::invalid_argument("QuantumChannel: not trace preserving");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitian_part(choi()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) throw std::invalid_argument("QuantumChannel: Choi matrix not PSD");
}

MatrixXcd QuantumChannel::choi() const {
  const int d = dim_;
  MatrixXcd c = MatrixXcd::Zero(d * d, d * d);
  for (const auto& k : kraus_) {
    // |K>> = sum_i |i> x K|i>
    VectorXcd v(d * d);
    for (int i = 0; i < d; ++i) v.segment(i * d, d) = k.col(i);
    c += v * v.adjoint();
  }
  return c;
}

DensityMatrix QuantumChannel::apply(const DensityMatrix& rho) const {
  require_square(rho, dim_, "apply");
  MatrixXcd out = MatrixXcd::Zero(dim_, dim_);
  for (const auto& k : kraus_) out += k * rho * k.adjoint();
  return out;
}

SpectralReport spectral_report(const QuantumChannel& ch, double tol) {
  const int d = ch.dim();
  const MatrixXcd& s = ch.superoperator();
  SpectralReport r;
  Eigen::ComplexEigenSolver<MatrixXcd> es(s, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::stable_sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
  r.eigenvalues = Eigen::Map<VectorXcd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  for (cplx l : ev) {
    if (std::abs(l) >= 1.0 - tol) r.peripheral.push_back(l);
  }
  r.kappa = ev.size() > 1 ? std::abs(ev[1]) : 0.0;

  const MatrixXcd shifted = s - MatrixXcd::Identity(d * d, d * d);
  Eigen::JacobiSVD<MatrixXcd> svd(shifted, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= tol) ++nullity;
  }
  r.fixed_space_dim = nullity;
  if (nullity == 1) {
    MatrixXcd x = vec_to_matrix(svd.matrixV().col(d * d - 1), d);
    r.raw_fixed_operator = x;
    const cplx tr = x.trace();
    if (std::abs(tr) < 1e-12) {
      r.fixed_point_error = "fixed operator is traceless";
    } else {
      x = hermitian_part(x / tr);
      x /= x.trace().real();
      if (is_density_matrix(x, 1e-8)) {
        r.fixed_point = x;
      } else {
        r.fixed_point_error = "fixed operator is not positive semidefinite";
      }
    }
  } else if (nullity == 0) {
    r.fixed_point_error = "no eigenvalue 1 found";
  }
  return r;
}

Classification classify(const QuantumChannel& ch, double tol) {
  const SpectralReport r = spectral_report(ch, tol);
  Classification c;
  c.ergodic = r.fixed_space_dim == 1;
  c.mixing = c.ergodic && r.peripheral.size() == 1;
  c.kappa = r.kappa;
  return c;
}

std::vector<double> iterate(const QuantumChannel& ch, const DensityMatrix& rho0, int n_max, double eps) {
  const SpectralReport r = spectral_report(ch);
  if (!(r.fixed_space_dim == 1 && r.peripheral.size() == 1) || !r.fixed_point) {
    throw std::invalid_argument("iterate: channel is not mixing");
  }
  require_square(rho0, ch.dim(), "iterate");
  std::vector<double> out;
  DensityMatrix rho = rho0;
  out.push_back(trace_distance(rho, *r.fixed_point));
  for (int n = 1; n <= n_max && out.back() > eps; ++n) {
    rho = ch.apply(rho);
    out.push_back(trace_distance(rho, *r.fixed_point));
  }
  return out;
}

EnvelopeFit speed_envelope(const std::vector<double>& d1, double kappa, int d, int burn_in) {
  if (burn_in < 1) throw std::invalid_argument("speed_envelope: burn_in must be >= 1");
  EnvelopeFit fit;
  auto envelope = [&](int n) { return std::pow(double(n), d) * std::pow(kappa, n); };
  const int last = static_cast<int>(d1.size()) - 1;
  for (int n = burn_in; n <= std::min(2 * burn_in, last); ++n) {
    const double e = envelope(n);
    const double norm1 = 2.0 * d1[n];
    if (e > 0.0) {
      fit.c = std::max(fit.c, norm1 / e);
    } else if (norm1 > 1e-12) {
      fit.first_violation = n;
      return fit;
    }
  }
  for (int n = 2 * burn_in + 1; n <= last; ++n) {
    if (2.0 * d1[n] > fit.c * envelope(n) * (1.0 + 1e-9) + 1e-12) {
      fit.first_violation = n;
      return fit;
    }
  }
  fit.holds = true;
  return fit;
}

DensityMatrix birkhoff_average(const QuantumChannel& ch, const DensityMatrix& rho0, int n) {
  if (n < 0) throw std::invalid_argument("birkhoff_average: n must be >= 0");
  if (!classify(ch).ergodic) throw std::invalid_argument("birkhoff_average: channel is not ergodic");
  require_square(rho0, ch.dim(), "birkhoff_average");
  DensityMatrix rho = rho0;
  DensityMatrix sum = rho0;
  for (int l = 1; l <= n; ++l) {
    rho = ch.apply(rho);
    sum += rho;
  }
  return sum / double(n + 1);
}

LyapunovReport lyapunov_diagnostics(const QuantumChannel& ch, const std::vector<DensityMatrix>& samples, int steps,
                                    double tol) {
  const SpectralReport r = spectral_report(ch);
  if (!(r.fixed_space_dim == 1 && r.peripheral.size() == 1) || !r.fixed_point) {
    throw std::invalid_argument("lyapunov_diagnostics: channel is not mixing");
  }
  const DensityMatrix& fp = *r.fixed_point;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(fp, Eigen::EigenvaluesOnly);
  LyapunovReport rep;
  rep.entropy_skipped = es.eigenvalues().minCoeff() <= tol;
  if (rep.entropy_skipped) rep.notice = "fixed point not faithful: relative entropy branch skipped";

  rep.distance_to_zero = true;
  rep.entropy_nonincreasing = !rep.entropy_skipped;
  for (const auto& rho0 : samples) {
    std::vector<double> dist, ent;
    DensityMatrix rho = rho0;
    for (int n = 0; n <= steps; ++n) {
      dist.push_back(trace_distance(rho, fp));
      if (!rep.entropy_skipped) {
        ent.push_back(relative_entropy(rho, fp));
        if (ent.size() > 1 && ent.back() > ent[ent.size() - 2] + tol) rep.entropy_nonincreasing = false;
      }
      rho = ch.apply(rho);
    }
    if (dist.back() > std::max(1e-6, 1e-3 * dist.front())) rep.distance_to_zero = false;
    rep.distance.push_back(std::move(dist));
    if (!rep.entropy_skipped) rep.entropy.push_back(std::move(ent));
  }
  return rep;
}

ContractionReport contraction_check(const QuantumChannel& ch,
                                    const std::vector<std::pair<DensityMatrix, DensityMatrix>>& pairs, double tol) {
  ContractionReport rep;
  rep.weak_contraction = !pairs.empty();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double before = trace_distance(pairs[i].first, pairs[i].second);
    const double after = trace_distance(ch.apply(pairs[i].first), ch.apply(pairs[i].second));
    if (after > before + tol) ++rep.nonexpansive_violations;
    if (before > tol) rep.max_ratio = std::max(rep.max_ratio, after / before);
    if (before > tol && after >= before - tol) {
      rep.weak_contraction = false;
      if (!rep.witness) rep.witness = i;
    }
  }
  return rep;
}

FactorizingReport factorizing_eigenstates(const MatrixXcd& u, int d_a, const VectorXcd& phi, double tol) {
  const int d_b = static_cast<int>(phi.size());
  const int dim = d_a * d_b;
  if (d_a < 1 || d_b < 1 || u.rows() != dim || u.cols() != dim) {
    throw std::invalid_argument("factorizing_eigenstates: dimension mismatch");
  }
  if ((u.adjoint() * u - MatrixXcd::Identity(dim, dim)).norm() > 1e-10 * dim) {
    throw std::invalid_argument("factorizing_eigenstates: matrix is not unitary");
  }
  const VectorXcd ph = phi / phi.norm();
  // Columns of b span the slice A x |phi>.
  MatrixXcd b = MatrixXcd::Zero(dim, d_a);
  for (int a = 0; a < d_a; ++a) b.block(a * d_b, a, d_b, 1) = ph;
  const MatrixXcd outside = MatrixXcd::Identity(dim, dim) - b * b.adjoint();

  // y such that U^k b y stays in the slice for k = 1..dim-1.
  MatrixXcd stacked((dim - 1) * dim, d_a);
  MatrixXcd uk = MatrixXcd::Identity(dim, dim);
  for (int k = 1; k < dim; ++k) {
    uk = u * uk;
    stacked.block((k - 1) * dim, 0, dim, d_a) = outside * uk * b;
  }
  FactorizingReport rep;
  MatrixXcd basis;
  if (dim == 1) {
    basis = b;
  } else {
    Eigen::JacobiSVD<MatrixXcd> svd(stacked, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > tol) ++rank;
    }
    basis = b * svd.matrixV().rightCols(d_a - rank);
  }
  rep.count = static_cast<int>(basis.cols());
  if (rep.count > 0) {
    Eigen::ComplexEigenSolver<MatrixXcd> es(basis.adjoint() * u * basis);
    rep.eigenvalues = es.eigenvalues();
    rep.eigenvectors = basis * es.eigenvectors();
  } else {
    rep.eigenvectors = MatrixXcd(dim, 0);
    rep.eigenvalues = VectorXcd(0);
  }
  return rep;
}

QuantumChannel stinespring_channel(const MatrixXcd& u, int d_a, const VectorXcd& phi) {
  const int d_b = static_cast<int>(phi.size());
  if (u.rows() != d_a * d_b || u.cols() != d_a * d_b) throw std::invalid_argument("stinespring_channel: dimension mismatch");
  const VectorXcd ph = phi / phi.norm();
  std::vector<MatrixXcd> kraus(d_b, MatrixXcd::Zero(d_a, d_a));
  for (int j = 0; j < d_b; ++j)
    for (int a = 0; a < d_a; ++a)
      for (int a2 = 0; a2 < d_a; ++a2)
        for (int bb = 0; bb < d_b; ++bb) kraus[j](a, a2) += u(a * d_b + j, a2 * d_b + bb) * ph(bb);
  return QuantumChannel(std::move(kraus));
}

namespace fixtures {

QuantumChannel ergodic_example() {
  MatrixXcd k0 = MatrixXcd::Zero(2, 2), k1 = MatrixXcd::Zero(2, 2);
  k0(1, 0) = 1.0;
  k1(0, 1) = 1.0;
  return QuantumChannel({k0, k1});
}

QuantumChannel mixing_example() {
  MatrixXcd k0 = MatrixXcd::Zero(3, 3), k1 = MatrixXcd::Zero(3, 3), k2 = MatrixXcd::Zero(3, 3);
  k0(0, 0) = 1.0;
  k1(0, 1) = 1.0;
  k2(1, 2) = 1.0;
  return QuantumChannel({k0, k1, k2});
}

QuantumChannel identity(int d) { return QuantumChannel({MatrixXcd::Identity(d, d)}); }

QuantumChannel depolarizing(int d, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("depolarizing: lambda outside [0,1]");
  // rho -> lambda rho + (1 - lambda) I/d, via the d^2 generalized Pauli (clock and shift) operators.
  std::vector<MatrixXcd> kraus;
  const double w = (1.0 - lambda) / (d * d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      MatrixXcd k = MatrixXcd::Zero(d, d);
      for (int j = 0; j < d; ++j) k((j + a) % d, j) = std::polar(1.0, 2.0 * std::numbers::pi * b * j / d);
      const double weight = (a == 0 && b == 0) ? lambda + w : w;
      if (weight > 0.0) kraus.push_back(std::sqrt(weight) * k);
    }
  }
  return QuantumChannel(std::move(kraus));
}

QuantumChannel unitary(const MatrixXcd& u) { return QuantumChannel({u}); }

}  // namespace fixtures

MatrixXcd random_unitary(int d, Rng& rng) {
  Eigen::HouseholderQR<MatrixXcd> qr(ginibre(d, d, rng));
  MatrixXcd q = qr.householderQ();
  const MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    const cplx ri = r(i, i);
    if (std::abs(ri) > 0.0) q.col(i) *= ri / std::abs(ri);
  }
  return q;
}

DensityMatrix random_density_matrix(int d, Rng& rng, int rank) {
  const int k = rank > 0 ? rank : d;
  const MatrixXcd g = ginibre(d, k, rng);
  MatrixXcd rho = g * g.adjoint();
  return rho / rho.trace().real();
}

QuantumChannel random_channel_pure_fixed_point(int d, int n_kraus, Rng& rng) {
  if (d < 1 || n_kraus < 1) throw std::invalid_argument("random_channel: invalid sizes");
  MatrixXcd v = ginibre(d * n_kraus, d, rng);
  v.col(0).setZero();
  v(0, 0) = 1.0;  // |0> -> |0> x |e0>
  return QuantumChannel(isometry_to_kraus(orthonormalize_columns(v), d, n_kraus));
}

QuantumChannel random_channel(int d, int n_kraus, Rng& rng) {
  if (d < 1 || n_kraus < 1) throw std::invalid_argument("random_channel: invalid sizes");
  return QuantumChannel(isometry_to_kraus(orthonormalize_columns(ginibre(d * n_kraus, d, rng)), d, n_kraus));
}

}  // namespace qst
