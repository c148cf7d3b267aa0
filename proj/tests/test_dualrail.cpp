#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qst/dualrail.hpp"
#include "qst/fidelity.hpp"
#include "qst/multirail.hpp"

using namespace qst;

namespace {

Eigensystem heis(int n) { return eigensystem(build_sector(ChainSpec::heisenberg(n))); }

DualRailSystem disordered_pair(int n, double delta, std::uint64_t seed) {
  Rng rng(seed);
  const auto h1 = sample_disorder(1.0, delta, 0.5, n - 1, rng);
  const auto h2 = sample_disorder(1.0, delta, 0.5, n - 1, rng);
  return {eigensystem(build_sector(ChainSpec::heisenberg_bonds(h1))),
          eigensystem(build_sector(ChainSpec::heisenberg_bonds(h2)))};
}

}  // namespace

TEST_CASE("system construction") {
  CHECK_THROWS_AS(DualRailSystem(heis(4), heis(5)), std::invalid_argument);
  const DualRailSystem sys(heis(4), heis(4));
  CHECK_THROWS_AS(simulate_dual_rail(sys, {}), std::invalid_argument);
  CHECK_THROWS_AS(simulate_dual_rail(sys, {{1.0, -1.0}}), std::invalid_argument);
}

TEST_CASE("identical chains are never biased") {
  const DualRailSystem sys(heis(20), heis(20));
  MeasurementSchedule s;
  for (int i = 0; i < 40; ++i) s.intervals.push_back(3.0 + 0.37 * i);
  const ProtocolTrace tr = simulate_dual_rail(sys, s);
  for (const auto& st : tr.steps) CHECK(st.bias <= 1e-12);
}

TEST_CASE("first measurement and product rule") {
  const Eigensystem e = heis(12);
  const DualRailSystem sys(e, e);
  const double t1 = 7.3;
  const ProtocolTrace one = simulate_dual_rail(sys, {{t1}});
  CHECK(one.steps[0].failure == doctest::Approx(1.0 - std::norm(transfer_amplitude(e, 12, 1, t1))).epsilon(1e-12));

  MeasurementSchedule s{{2.0, 5.0, 1.5, 9.0, 4.0, 3.3, 6.1}};
  const ProtocolTrace tr = simulate_dual_rail(sys, s);
  double prod = 1.0, prev = 1.0;
  for (const auto& st : tr.steps) {
    prod *= 1.0 - st.p_cond;
    CHECK(std::abs(st.failure - prod) <= 1e-12);
    CHECK(st.failure <= prev + 1e-15);
    prev = st.failure;
  }
  CHECK(tr.total_time == doctest::Approx(s.total()));
  CHECK(tr.final_failure == tr.steps.back().failure);
}

TEST_CASE("branch states agree with dense projection") {
  const std::vector<double> diag{0.1, -0.3, 0.2, 0.0, 0.4, -0.1};
  const std::vector<double> off{-1.0, -0.8, -1.2, -0.9, -1.1};
  const MatrixXd h = oracle::tridiagonal(diag, off);
  const Eigensystem e = eigensystem(h);
  const DualRailSystem sys(e, e);
  const std::vector<double> iv{1.3, 2.2, 0.7, 3.1};
  VectorXcd psi = VectorXcd::Zero(6);
  psi(0) = 1.0;
  const ProtocolTrace tr = simulate_dual_rail(sys, {iv});
  for (std::size_t i = 0; i < iv.size(); ++i) {
    psi = oracle::expm_minus_i(h, iv[i]) * psi;
    psi(5) = 0.0;
    CHECK(std::abs(tr.steps[i].failure - psi.squaredNorm()) <= 1e-10);
  }
}

TEST_CASE("unbiased times") {
  SUBCASE("identical chains: every grid time") {
    const DualRailSystem sys(heis(6), heis(6));
    UnbiasedOptions o;
    o.dt = 0.1;
    const auto c = unbiased_times(sys, 0.0, 5.0, o);
    CHECK(c.size() == 51);
  }
  SUBCASE("differing chains: crossings of |f| and |g|") {
    const Eigensystem a = eigensystem(build_sector(ChainSpec::xy(5)));
    const Eigensystem b = heis(5);
    const DualRailSystem sys(a, b);
    UnbiasedOptions o;
    o.dt = 0.01;
    const auto c = unbiased_times(sys, 0.0, 30.0, o);
    const MatrixXd ha = build_sector(ChainSpec::xy(5)).matrix;
    const MatrixXd hb = build_sector(ChainSpec::heisenberg(5)).matrix;
    auto diff = [&](double t) {
      return std::abs(oracle::expm_minus_i(ha, t)(4, 0)) - std::abs(oracle::expm_minus_i(hb, t)(4, 0));
    };
    int changes = 0;
    for (double t = 0.0; t < 30.0 - 1e-9; t += 0.01)
      if ((diff(t) < 0.0) != (diff(t + 0.01) < 0.0)) ++changes;
    CHECK(changes > 3);
    int nontrivial = 0;
    for (double t : c) {
      CHECK(std::abs(diff(t)) <= 1e-6);
      if (t > 0.0) ++nontrivial;
    }
    CHECK(nontrivial >= changes - 1);
  }
  SUBCASE("a cut chain only offers empty measurements") {
    const Eigensystem a = eigensystem(build_sector(ChainSpec::custom({-1.0, 0.0, -1.0, -1.0}, {0, 0, 0, 0, 0})));
    const Eigensystem b = eigensystem(build_sector(ChainSpec::xy(5)));
    const DualRailSystem sys(a, b);
    UnbiasedOptions o;
    o.dt = 0.01;
    const auto c = unbiased_times(sys, 0.0, 30.0, o);
    CHECK_FALSE(c.empty());
    for (double t : c) {
      CHECK(std::abs(transfer_amplitude(a, 5, 1, t)) <= 1e-12);
      CHECK(std::abs(transfer_amplitude(b, 5, 1, t)) <= 1e-6);
    }
  }
  CHECK_THROWS_AS(unbiased_times(DualRailSystem(heis(3), heis(3)), 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("optimized schedules") {
  SUBCASE("two sites: one perfect step") {
    const DualRailSystem sys(heis(2), heis(2));
    OptimizeOptions o;
    o.target_failure = 1e-6;
    const auto r = optimize_schedule(sys, o);
    CHECK(r.trace.reached_target);
    CHECK(r.trace.steps_used() == 1);
    CHECK(r.trace.final_failure <= 1e-12);
    CHECK(r.schedule.intervals[0] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-6));
  }
  SUBCASE("schedule replays identically") {
    const DualRailSystem sys(heis(8), heis(8));
    OptimizeOptions o;
    o.window = 8.0;
    const auto r = optimize_schedule(sys, o);
    CHECK(r.trace.reached_target);
    const ProtocolTrace rep = simulate_dual_rail(sys, r.schedule);
    REQUIRE(rep.steps.size() == r.trace.steps.size());
    for (std::size_t i = 0; i < rep.steps.size(); ++i)
      CHECK(std::abs(rep.steps[i].failure - r.trace.steps[i].failure) <= 1e-12);
  }
  SUBCASE("unreachable target is reported, not thrown") {
    const DualRailSystem sys(heis(8), heis(8));
    OptimizeOptions o;
    o.window = 8.0;
    o.max_steps = 2;
    const auto r = optimize_schedule(sys, o);
    CHECK_FALSE(r.trace.reached_target);
    CHECK(r.trace.steps_used() == 2);
    CHECK(r.trace.final_failure > 0.01);
  }
  CHECK_THROWS_AS(optimize_schedule(DualRailSystem(heis(3), heis(3)), {.target_failure = 0.0}), std::invalid_argument);
}

TEST_CASE("conclusiveness: success does not depend on the input") {
  const DualRailSystem sys = disordered_pair(10, 0.05, 99);
  OptimizeOptions o;
  o.window = 10.0;
  o.tol = 1e-12;
  o.max_steps = 15;
  const auto r = optimize_schedule(sys, o);
  REQUIRE(r.trace.steps_used() > 0);

  const ProtocolTrace ref = simulate_dual_rail(sys, r.schedule);
  std::vector<std::pair<double, double>> bloch;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) bloch.push_back({std::numbers::pi * (i + 0.5) / 3.0, 2.0 * std::numbers::pi * k / 4.0});
  for (auto [theta, phi] : bloch) {
    const cplx alpha = std::cos(theta / 2);
    const cplx beta = std::polar(std::sin(theta / 2), phi);
    DualRailState st(sys);
    double surv = 1.0;
    for (std::size_t l = 0; l < r.schedule.intervals.size(); ++l) {
      st.evolve(r.schedule.intervals[l]);
      const auto [f, g] = st.measure();
      const double p = std::norm(alpha * f) + std::norm(beta * g);
      surv -= p;
      CHECK(std::abs(surv - ref.steps[l].failure) <= 1e-9);
      // Phase correction restores the input.
      if (p > 1e-8) {
        const cplx ca = alpha * f, cb = beta * g * std::polar(1.0, -ref.steps[l].phase);
        const double fid = std::norm(std::conj(alpha) * ca + std::conj(beta) * cb) / p;
        CHECK(fid == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("equal intervals drive identical chains to certain success") {
  const Eigensystem e = heis(6);
  const double t = 1.1;
  REQUIRE_FALSE(degenerate_time(e, t));
  const DualRailSystem sys(e, e);
  MeasurementSchedule s{std::vector<double>(1000, t)};
  const ProtocolTrace tr = simulate_dual_rail(sys, s);
  CHECK(tr.final_failure < 1e-8);
  MultiRailConfig cfg{2, 1, e};
  const auto mr = simulate_multirail(cfg, s.intervals);
  for (std::size_t i = 0; i < s.intervals.size(); ++i)
    CHECK(std::abs(mr.steps[i].failure - tr.steps[i].failure) <= 1e-12);
}

TEST_CASE("tomography") {
  const DualRailSystem sys = disordered_pair(9, 0.05, 5);
  const Tomography tomo = tomography(sys);
  CHECK(std::abs(tomo.f_n1(0.0)) < 1e-14);
  CHECK(std::abs(tomo.f_nn(0.0) - 1.0) < 1e-12);
  CHECK(std::abs(tomo.g_nn(0.0) - 1.0) < 1e-12);

  const Eigensystem e = heis(7);
  const Tomography same = tomography(DualRailSystem(e, e));
  for (double t : {0.4, 3.0, 11.0}) CHECK(std::abs(same.f_n1(t) - same.g_n1(t)) < 1e-14);

  OptimizeOptions o;
  o.window = 9.0;
  const auto r = optimize_schedule(sys, o);
  const ProtocolTrace a = simulate_dual_rail(sys, r.schedule);
  const ProtocolTrace b = simulate_from_tomography(tomo, r.schedule);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(std::abs(a.steps[i].failure - b.steps[i].failure) <= 1e-10);
    CHECK(std::abs(a.steps[i].bias - b.steps[i].bias) <= 1e-8);
  }
}

TEST_CASE("damping") {
  const Eigensystem e = heis(8);
  const DualRailSystem sys(e, e);
  MeasurementSchedule s{std::vector<double>(4000, 2.0)};
  const ProtocolTrace clean = simulate_dual_rail(sys, s);
  const ProtocolTrace zero = damping_trace(sys, s, 0.0);
  for (std::size_t i = 0; i < s.intervals.size(); ++i)
    CHECK(std::abs(clean.steps[i].failure - zero.steps[i].failure) <= 1e-12);

  double prev_limit = 0.0;
  for (double g : {0.001, 0.01, 0.05}) {
    const ProtocolTrace d = damping_trace(sys, s, g);
    const double lim = d.final_failure;
    CHECK(lim > 0.0);
    CHECK(lim > prev_limit);
    // Plateau: the last steps no longer reduce the failure.
    CHECK(d.steps[2999].failure - lim < 1e-3 * lim + 1e-12);
    prev_limit = lim;
  }

  const double g1 = 0.02, g2 = 0.01, t = 0.01;
  const ProtocolTrace asym = damping_trace(sys, {{t}}, g1, g2);
  CHECK(asym.steps[0].bias / ((g1 - g2) * t) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(damping_trace(sys, s, -1.0), std::invalid_argument);
}

TEST_CASE("black box feasibility") {
  const cplx f0 = std::polar(0.8, 0.3);
  const BlackboxResult unc = blackbox_feasible(f0, 0.0, f0, 0.0);
  CHECK(unc.feasible);
  REQUIRE(unc.recovery);
  CHECK((unc.recovery->adjoint() * *unc.recovery - Eigen::Matrix2cd::Identity()).norm() < 1e-12);

  const cplx x{0.3, 0.2};
  CHECK_FALSE(blackbox_feasible(x, x, x, x).feasible);

  const double th = 0.7;
  const cplx i{0.0, 1.0};
  const BlackboxResult cpl = blackbox_feasible(f0 * std::cos(th), -i * f0 * std::sin(th), f0 * std::cos(th),
                                               -i * f0 * std::sin(th));
  CHECK(cpl.feasible);
  REQUIRE(cpl.recovery);
  CHECK((cpl.recovery->adjoint() * *cpl.recovery - Eigen::Matrix2cd::Identity()).norm() < 1e-12);

  CHECK_FALSE(blackbox_feasible(0.5, 0.0, 0.4, 0.0).feasible);
}

TEST_CASE("disorder sampling") {
  for (double h : sample_disorder(1.3, 0.0, 0.5, 19, std::uint64_t{4})) CHECK(h == 1.3);
  for (std::uint64_t seed = 1; seed < 30; ++seed) {
    const auto h = sample_disorder(1.0, 0.1, 1.0, 19, seed);
    const bool up = h[0] >= 1.0;
    for (double x : h) {
      CHECK((x >= 1.0) == up);
      CHECK(std::abs(x - 1.0) <= 0.1);
    }
  }
  Rng rng(2024);
  long same = 0, total = 0;
  double mean_mag = 0.0;
  for (int s = 0; s < 500; ++s) {
    const auto h = sample_disorder(1.0, 0.05, 0.5, 21, rng);
    for (std::size_t i = 1; i < h.size(); ++i) {
      same += (h[i] >= 1.0) == (h[i - 1] >= 1.0);
      ++total;
    }
    for (double x : h) mean_mag += std::abs(x - 1.0);
  }
  CHECK(std::abs(double(same) / total - 0.5) <= 0.02);
  CHECK(mean_mag / (500.0 * 21) == doctest::Approx(0.025).epsilon(0.03));

  Rng r2(3);
  long persist = 0, n2 = 0;
  for (int s = 0; s < 500; ++s) {
    const auto h = sample_disorder(1.0, 0.05, 0.9, 21, r2);
    for (std::size_t i = 1; i < h.size(); ++i) {
      persist += (h[i] >= 1.0) == (h[i - 1] >= 1.0);
      ++n2;
    }
  }
  CHECK(std::abs(double(persist) / n2 - 0.9) <= 0.02);

  CHECK(sample_disorder(1.0, 0.05, 0.3, 10, std::uint64_t{8}) == sample_disorder(1.0, 0.05, 0.3, 10, std::uint64_t{8}));
  CHECK_THROWS_AS(sample_disorder(1.0, -0.1, 0.5, 5, std::uint64_t{1}), std::invalid_argument);
  CHECK_THROWS_AS(sample_disorder(1.0, 0.1, 1.5, 5, std::uint64_t{1}), std::invalid_argument);
}

TEST_CASE("cooling") {
  const Eigensystem e2 = heis(2);
  for (double r : cooling_protocol(e2, 0.7, 5, VectorXcd::Zero(2))) CHECK(r == 0.0);
  const auto r2 = cooling_protocol(e2, std::numbers::pi / 2, 3, basis_state(2, 1));
  CHECK(r2[0] <= 1e-24);

  const Eigensystem e = eigensystem(build_sector(ChainSpec::xy(10)));
  const double t = 1.37;
  const auto res = cooling_protocol(e, t, 600, basis_state(10, 1));
  for (std::size_t k = 1; k < res.size(); ++k) CHECK(res[k] <= res[k - 1] + 1e-15);
  const double rho = spectral_radius_T(e, t);
  const double ratio = std::pow(res[599] / res[299], 1.0 / 300.0);
  CHECK(ratio == doctest::Approx(rho * rho).epsilon(1e-3));

  // Dense check of the first few residuals.
  const MatrixXd h = build_sector(ChainSpec::xy(10)).matrix;
  const MatrixXcd u = oracle::expm_minus_i(h, t);
  VectorXcd v = basis_state(10, 1);
  v(9) = 0.0;
  for (int k = 0; k < 5; ++k) {
    v = u * v;
    v(9) = 0.0;
    CHECK(std::abs(v.squaredNorm() - res[k]) <= 1e-10);
  }
  CHECK_THROWS_AS(cooling_protocol(e, t, 0, basis_state(10, 1)), std::invalid_argument);
}
