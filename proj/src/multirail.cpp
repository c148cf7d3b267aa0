#include "qst/multirail.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qst {

namespace {

void validate(const MultiRailConfig& cfg, const std::vector<double>& intervals) {
  if (cfg.m_chains < 2) throw std::invalid_argument("multirail: need at least two chains");
  if (cfg.k_excitations < 1 || cfg.k_excitations > cfg.m_chains) {
    throw std::invalid_argument("multirail: K must lie in [1, M]");
  }
  if (cfg.chain.dim() < 2) throw std::invalid_argument("multirail: chain needs at least two sites");
  if (intervals.empty()) throw std::invalid_argument("multirail: empty schedule");
  for (double t : intervals) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("multirail: intervals must be finite and >= 0");
  }
}

MatrixXcd unitary(const Eigensystem& eig, double t) {
  VectorXcd phases(eig.dim());
  for (int k = 0; k < eig.dim(); ++k) phases(k) = std::polar(1.0, -eig.energies(k) * t);
  const MatrixXcd v = eig.vectors.cast<cplx>();
  return v * phases.asDiagonal() * v.transpose();
}

long ipow(long base, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Applies u to every mode of an N^K tensor stored with the first mode most significant.
void apply_modewise(VectorXcd& psi, const MatrixXcd& u, int n, int k) {
  VectorXcd fiber(n);
  for (int axis = 0; axis < k; ++axis) {
    const long stride = ipow(n, k - 1 - axis);
    const long block = stride * n;
    for (long outer = 0; outer < psi.size(); outer += block) {
      for (long inner = 0; inner < stride; ++inner) {
        for (int a = 0; a < n; ++a) fiber(a) = psi(outer + inner + a * stride);
        fiber = u * fiber;
        for (int a = 0; a < n; ++a) psi(outer + inner + a * stride) = fiber(a);
      }
    }
  }
}

}  // namespace

double efficiency(int m, int k) {
  if (m < 1 || k < 1 || k > m) throw std::invalid_argument("efficiency: need 1 <= k <= m");
  const double log2_binom = (std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0)) / std::numbers::ln2;
  return log2_binom / m;
}

int optimal_k(int m) {
  if (m < 2) throw std::invalid_argument("optimal_k: m must be >= 2");
  return m / 2;
}

double efficiency_opt(int m) { return efficiency(m, optimal_k(m)); }

ProductTermState::ProductTermState(int n, int k) : n_(n), k_(k) {
  if (n < 2 || k < 1) throw std::invalid_argument("ProductTermState: need n >= 2, k >= 1");
}

ProductTermState ProductTermState::first_sites(int n, int k) {
  ProductTermState s(n, k);
  s.add_term(1.0, std::vector<VectorXcd>(k, basis_state(n, 1)));
  return s;
}

void ProductTermState::add_term(cplx coeff, std::vector<VectorXcd> factors) {
  if (static_cast<int>(factors.size()) != k_) throw std::invalid_argument("add_term: wrong factor count");
  for (const auto& f : factors) {
    if (f.size() != n_) throw std::invalid_argument("add_term: wrong factor length");
  }
  // A single factor is just a vector; keep one term.
  if (k_ == 1 && !terms_.empty()) {
    Term& t = terms_.front();
    t.factors[0] = t.coeff * t.factors[0] + coeff * factors[0];
    t.coeff = 1.0;
    return;
  }
  terms_.push_back({coeff, std::move(factors)});
}

void ProductTermState::evolve(const Eigensystem& eig, double t) {
  if (eig.dim() != n_) throw std::invalid_argument("evolve: dimension mismatch");
  const MatrixXcd u = unitary(eig, t);
  for (auto& term : terms_) {
    for (auto& f : term.factors) f = u * f;
  }
}

cplx ProductTermState::end_amplitude() const {
  cplx total{0.0, 0.0};
  for (const auto& term : terms_) {
    cplx prod = term.coeff;
    for (const auto& f : term.factors) prod *= f(n_ - 1);
    total += prod;
  }
  return total;
}

cplx ProductTermState::project_out_end() {
  const cplx gamma = end_amplitude();
  add_term(-gamma, std::vector<VectorXcd>(k_, basis_state(n_, n_)));
  return gamma;
}

double ProductTermState::squared_norm() const {
  cplx total{0.0, 0.0};
  for (const auto& a : terms_) {
    for (const auto& b : terms_) {
      cplx prod = std::conj(a.coeff) * b.coeff;
      for (int f = 0; f < k_; ++f) prod *= a.factors[f].dot(b.factors[f]);
      total += prod;
    }
  }
  return std::max(0.0, total.real());
}

void ProductTermState::prune(double threshold) {
  // Fold factor norms into the coefficient so the threshold is meaningful.
  for (auto& term : terms_) {
    for (auto& f : term.factors) {
      const double nf = f.norm();
      if (nf > 0.0) {
        f /= nf;
        term.coeff *= nf;
      } else {
        term.coeff = 0.0;
      }
    }
  }
  std::erase_if(terms_, [&](const Term& t) { return std::abs(t.coeff) < threshold; });
}

VectorXcd ProductTermState::to_dense() const {
  const long size = ipow(n_, k_);
  VectorXcd out = VectorXcd::Zero(size);
  for (const auto& term : terms_) {
    VectorXcd acc = VectorXcd::Constant(1, term.coeff);
    for (const auto& f : term.factors) {
      VectorXcd next(acc.size() * n_);
      for (long i = 0; i < acc.size(); ++i) next.segment(i * n_, n_) = acc(i) * f;
      acc = std::move(next);
    }
    out += acc;
  }
  return out;
}

std::size_t ProductTermState::memory_bytes() const {
  return terms_.size() * (sizeof(Term) + static_cast<std::size_t>(k_) * n_ * sizeof(cplx));
}

MultiRailTrace simulate_multirail(const MultiRailConfig& cfg, const std::vector<double>& intervals,
                                  std::size_t memory_budget) {
  validate(cfg, intervals);
  const int n = cfg.chain.dim();
  const int k = cfg.k_excitations;
  const std::size_t per_term = sizeof(ProductTermState::Term) + static_cast<std::size_t>(k) * n * sizeof(cplx);
  if ((intervals.size() + 1) * per_term > memory_budget) {
    throw std::length_error("simulate_multirail: schedule exceeds memory budget");
  }

  const bool equal = std::all_of(intervals.begin(), intervals.end(),
                                 [&](double t) { return std::abs(t - intervals.front()) < 1e-15; });
  const double rho = equal ? spectral_radius_T(cfg.chain, intervals.front()) : 0.0;

  ProductTermState psi = ProductTermState::first_sites(n, k);
  MultiRailTrace trace;
  double prev_failure = 1.0;
  for (std::size_t q = 0; q < intervals.size(); ++q) {
    psi.evolve(cfg.chain, intervals[q]);
    psi.project_out_end();
    psi.prune();
    trace.max_terms = std::max(trace.max_terms, psi.terms().size());

    MultiRailStep step;
    step.q = static_cast<int>(q + 1);
    step.interval = intervals[q];
    step.failure = std::min(prev_failure, psi.squared_norm());
    step.p_cum = 1.0 - step.failure;
    step.p_cond = prev_failure > 0.0 ? 1.0 - step.failure / prev_failure : 0.0;
    step.rho_bound = equal ? std::pow(0.5 * (1.0 + rho), 2.0 * step.q) : 0.0;
    prev_failure = step.failure;
    trace.steps.push_back(step);
  }
  return trace;
}

std::vector<cplx> gamma_recursion(const MultiRailConfig& cfg, const std::vector<double>& intervals) {
  validate(cfg, intervals);
  const int n = cfg.chain.dim();
  const int k = cfg.k_excitations;
  const long size = ipow(n, k);
  const long end_index = size - 1;  // |N, ..., N>

  VectorXcd psi = VectorXcd::Zero(size);
  psi(0) = 1.0;
  std::vector<cplx> gammas;
  gammas.reserve(intervals.size());
  for (double t : intervals) {
    apply_modewise(psi, unitary(cfg.chain, t), n, k);
    const cplx gamma = psi(end_index);
    gammas.push_back(gamma);
    psi(end_index) = 0.0;
    const double nrm = psi.norm();
    if (nrm < 1e-300) {
      // Nothing left to transfer; later conditionals are undefined, report zero.
      gammas.resize(intervals.size(), cplx{0.0, 0.0});
      break;
    }
    psi /= nrm;
  }
  return gammas;
}

ConvergenceReport convergence_check(const Eigensystem& eig, double tol) {
  ConvergenceReport r;
  r.min_overlap = eig.vectors.row(eig.dim() - 1).cwiseAbs().minCoeff();
  r.converges = r.min_overlap > tol;
  return r;
}

double spectral_radius_T(const Eigensystem& eig, double t) {
  MatrixXcd tmat = unitary(eig, t);
  tmat.col(eig.dim() - 1).setZero();
  Eigen::ComplexEigenSolver<MatrixXcd> solver(tmat, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

bool degenerate_time(const Eigensystem& eig, double t) {
  return std::abs(spectral_radius_T(eig, t) - 1.0) < 1e-9;
}

RateReport rate_analysis(double p, double target_failure, int max_m) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("rate_analysis: p must lie in (0,1)");
  if (!(target_failure > 0.0 && target_failure < 1.0)) {
    throw std::invalid_argument("rate_analysis: target failure must lie in (0,1)");
  }
  if (max_m < 2) throw std::invalid_argument("rate_analysis: max_m must be >= 2");
  RateReport r;
  for (int m = 2; m <= max_m; ++m) {
    RatePoint pt;
    pt.m = m;
    pt.efficiency = efficiency_opt(m);
    const double pk = std::pow(p, m / 2);
    pt.steps = std::max(std::log(target_failure) / std::log1p(-pk), 1.0);
    pt.rate = pt.efficiency / pt.steps;
    if (pt.rate > r.rate) {
      r.rate = pt.rate;
      r.optimal_m = m;
      r.steps = pt.steps;
    }
    r.table.push_back(pt);
  }
  return r;
}

}  // namespace qst
