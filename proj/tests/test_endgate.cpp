#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qst/endgate.hpp"
#include "qst/multirail.hpp"
#include "qst/rng.hpp"

using namespace qst;

namespace {

Eigensystem xy(int n) { return eigensystem(build_sector(ChainSpec::xy(n))); }
Eigensystem heis(int n) { return eigensystem(build_sector(ChainSpec::heisenberg(n))); }

VectorXcd random_state(int dim, Rng& rng) {
  VectorXcd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cplx(rng.normal(), rng.normal());
  return v.normalized();
}

// Extended (N+1)-site XY Hamiltonian with the target hop set to `hop`.
MatrixXd extended_xy(int n, double hop, double target_diag) {
  std::vector<double> diag(n + 1, 0.0), off(n, -1.0);
  off[n - 1] = hop;
  diag[n] = target_diag;
  return oracle::tridiagonal(diag, off);
}

}  // namespace

TEST_CASE("valve gate") {
  const ValveGate s = valve_gate(1.0, 0.0);
  Eigen::Matrix2cd expect;
  expect << 0.0, -1.0, 1.0, 0.0;
  CHECK((s.matrix() - expect).norm() < 1e-14);
  CHECK((valve_gate(0.0, 1.0).matrix() - Eigen::Matrix2cd::Identity()).norm() < 1e-14);

  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const cplx a(rng.normal(), rng.normal()), b(rng.normal(), rng.normal());
    const ValveGate g = valve_gate(a, b);
    CHECK(std::norm(g.c) + std::norm(g.d) == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::Matrix2cd m = g.matrix();
    CHECK((m * m.adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-12);
    Eigen::Vector2cd in(a, b);
    const Eigen::Vector2cd out = m * in;
    CHECK(std::abs(out(0)) < 1e-12);
    CHECK(std::abs(out(1)) == doctest::Approx(in.norm()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(valve_gate(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("valve protocol") {
  const Eigensystem e = xy(9);
  const double t1 = 4.4;
  CHECK(valve_protocol(e, {t1}).final_p() == doctest::Approx(std::norm(transfer_amplitude(e, 9, 1, t1))).epsilon(1e-12));
  CHECK(valve_protocol(heis(2), {std::numbers::pi / 2}).final_p() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(valve_protocol(e, {}), std::invalid_argument);

  const Eigensystem e20 = xy(20);
  const std::vector<double> iv(3000, 1.0);
  const ValveTrace tr = valve_protocol(e20, iv);
  const MultiRailTrace mr = simulate_multirail({2, 1, e20}, iv);
  int first = -1;
  double prev = 0.0;
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    const auto& s = tr.steps[i];
    CHECK(s.p_success >= prev - 1e-15);
    prev = s.p_success;
    if (first < 0 && s.p_success > 0.99) first = static_cast<int>(i);
    CHECK(std::abs(s.p_success - mr.steps[i].p_cum) <= 1e-10);
  }
  CHECK(first > 0);
  CHECK(tr.steps.back().c_abs < 0.05);
  CHECK(tr.chain.squaredNorm() + std::norm(tr.target) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(spectral_radius_T(e20, 1.0) < 1.0);

  // A degenerate interval never converges: N=2 at t = 2 pi returns to |1>.
  const Eigensystem e2 = heis(2);
  REQUIRE(degenerate_time(e2, 2.0 * std::numbers::pi));
  CHECK(valve_protocol(e2, std::vector<double>(50, 2.0 * std::numbers::pi)).final_p() < 1e-12);
}

TEST_CASE("valve protocol against the dense extended chain") {
  const int n = 6;
  const Eigensystem e = xy(n);
  const MatrixXd h = build_sector(ChainSpec::xy(n)).matrix;
  const std::vector<double> iv{1.7, 2.3, 0.9, 3.1};
  const ValveTrace tr = valve_protocol(e, iv);
  VectorXcd chain = basis_state(n, 1);
  cplx target = 0.0;
  for (std::size_t i = 0; i < iv.size(); ++i) {
    chain = oracle::expm_minus_i(h, iv[i]) * chain;
    target = std::sqrt(std::norm(target) + std::norm(chain(n - 1)));
    chain(n - 1) = 0.0;
    CHECK(std::abs(tr.steps[i].p_success - std::norm(target)) <= 1e-12);
    CHECK(chain.squaredNorm() + tr.steps[i].p_success == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("valve optimization") {
  const ValveTrace two = valve_optimize(heis(2), 3.0);
  REQUIRE(two.steps.size() >= 1);
  CHECK(two.steps[0].t_cum == doctest::Approx(std::numbers::pi / 2).epsilon(1e-5));
  CHECK(two.final_p() == doctest::Approx(1.0).epsilon(1e-9));

  const ValveTrace none = valve_optimize(xy(20), 2.0);
  CHECK(none.steps.empty());
  CHECK(none.final_p() == 0.0);

  const Eigensystem e = xy(12);
  const double horizon = 120.0;
  const ValveTrace opt = valve_optimize(e, horizon);
  double prev = 0.0;
  for (const auto& s : opt.steps) {
    CHECK(s.t_cum <= horizon + 1e-12);
    CHECK(s.p_success >= prev - 1e-15);
    prev = s.p_success;
  }
  const ValveTrace eq = valve_protocol(e, std::vector<double>(static_cast<std::size_t>(horizon), 1.0));
  CHECK(opt.final_p() >= eq.final_p() - 1e-9);
  CHECK_THROWS_AS(valve_optimize(e, 0.0), std::invalid_argument);
}

TEST_CASE("switched Hamiltonians") {
  const ChainSpec spec = ChainSpec::xy(5);
  SUBCASE("decoupled target stays empty") {
    const SwitchedResult r = switched_sim(spec, SwitchMode::coupling, 0.0, {{3.0, false}, {4.0, false}});
    for (const auto& s : r.trajectory) CHECK(s.target == 0.0);
    CHECK(r.trajectory.size() == 3);
  }
  SUBCASE("segments agree with dense evolution") {
    const std::vector<SwitchSegment> sched{{2.0, false}, {1.3, true}, {0.7, false}, {2.1, true}};
    const SwitchedResult r = switched_sim(spec, SwitchMode::coupling, 0.0, sched);
    VectorXcd v = basis_state(6, 1);
    for (std::size_t i = 0; i < sched.size(); ++i) {
      v = oracle::expm_minus_i(extended_xy(5, sched[i].delta ? -1.0 : 0.0, 0.0), sched[i].duration) * v;
      CHECK(std::abs(r.trajectory[i + 1].target - std::norm(v(5))) <= 1e-10);
      CHECK(r.trajectory[i + 1].chain + r.trajectory[i + 1].target == doctest::Approx(1.0).epsilon(1e-10));
    }
    const double b = 20.0;
    const SwitchedResult f = switched_sim(spec, SwitchMode::field, b, sched);
    CHECK(f.warning.empty());
    v = basis_state(6, 1);
    for (std::size_t i = 0; i < sched.size(); ++i) {
      v = oracle::expm_minus_i(extended_xy(5, -1.0, sched[i].delta ? 2.0 * b : 0.0), sched[i].duration) * v;
      CHECK(std::abs(f.trajectory[i + 1].target - std::norm(v(5))) <= 1e-10);
    }
    CHECK_FALSE(switched_sim(spec, SwitchMode::field, 2.0, sched).warning.empty());
  }
  SUBCASE("two sites: a single opening reaches one half") {
    // With the target hop on, sites 1-2-3 form one chain: |<3|exp(-iHt)|2>|^2 = sin^2(sqrt2 t)/2.
    const double topen = std::numbers::pi / (2.0 * std::sqrt(2.0));
    const SwitchedResult r =
        switched_sim(ChainSpec::xy(2), SwitchMode::coupling, 0.0, {{std::numbers::pi / 2, false}, {topen, true}});
    CHECK(r.trajectory[2].target == doctest::Approx(0.5).epsilon(1e-10));
    const SwitchedResult g = switched_optimize(ChainSpec::xy(2), SwitchMode::coupling, 0.0, 40.0);
    CHECK(g.trajectory.back().target > 0.9);
  }
  CHECK_THROWS_AS(switched_sim(spec, SwitchMode::coupling, 0.0, {{-1.0, true}}), std::invalid_argument);
}

TEST_CASE("memory read") {
  const Eigensystem e = xy(7);
  const double t = 1.9;
  CHECK(memory_read(e, 1, t).eta == doctest::Approx(std::norm(transfer_amplitude(e, 7, 1, t))).epsilon(1e-12));
  CHECK(memory_read(heis(2), 1, std::numbers::pi / 2).eta == doctest::Approx(1.0).epsilon(1e-12));

  // Equals the valve protocol at identical schedules.
  for (int l : {1, 5, 30}) {
    const double eta = memory_read(e, l, t).eta;
    const double p = valve_protocol(e, std::vector<double>(l, t)).final_p();
    CHECK(std::abs(eta - p) <= 1e-12);
  }

  // Exponential convergence: log(1 - eta) is asymptotically linear in L.
  const Eigensystem e10 = xy(10);
  const MemoryReadResult r = memory_read(e10, 90, 1.0);
  std::vector<double> lg;
  for (const auto& s : r.steps) lg.push_back(std::log(1.0 - s.eta));
  const double s1 = (lg[59] - lg[29]) / 30.0;
  const double s2 = (lg[89] - lg[59]) / 30.0;
  CHECK(s1 < 0.0);
  CHECK(s2 == doctest::Approx(s1).epsilon(0.05));
  const double rho = spectral_radius_T(e10, 1.0);
  CHECK(s2 == doctest::Approx(2.0 * std::log(rho)).epsilon(0.05));

  double total = std::norm(r.state.vacuum()) + r.state.chain().squaredNorm() + r.state.slots().squaredNorm();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(memory_read(e, 0, t), std::invalid_argument);
}

TEST_CASE("memory write and round trips") {
  const Eigensystem e2 = heis(2);
  VectorXcd vac = VectorXcd::Zero(3);
  vac(0) = 1.0;
  CHECK(memory_write(e2, 1, 1.0, vac).fidelity == doctest::Approx(1.0));
  VectorXcd one = VectorXcd::Zero(3);
  one(1) = 1.0;
  CHECK(memory_write(e2, 1, std::numbers::pi / 2, one).fidelity == doctest::Approx(1.0).epsilon(1e-12));

  const Eigensystem e8 = xy(8);
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const VectorXcd psi = random_state(9, rng);
    const MemoryState in = MemoryState::chain_state(40, psi);
    const MemoryState back = apply_write(e8, 1.3, apply_read(e8, 1.3, in));
    CHECK((back.amp - in.amp).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(memory_write(e8, 5, 1.0, VectorXcd::Zero(9)), std::invalid_argument);
  CHECK_THROWS_AS(memory_write(e8, 5, 1.0, VectorXcd::Ones(4)), std::invalid_argument);
}

TEST_CASE("coding transform") {
  SUBCASE("perfect extraction") {
    const CodingReport r = coding_transform(heis(2), 3, std::numbers::pi / 2);
    CHECK(r.dv_norm <= 1e-9);
    CHECK(r.eta0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.read_fidelity == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("bounds on small chains") {
    for (int n : {3, 5, 8}) {
      for (int l : {n, 20, 60}) {
        const CodingReport r = coding_transform(xy(n), l, 1.0);
        CHECK(r.d.rows() == l + 1);
        CHECK(r.d.cols() == n + 1);
        for (double eta : r.eta) CHECK(eta <= 1.0 + 1e-12);
        CHECK(r.dv_norm <= r.dv_bound);
        CHECK(r.dv_within);
        CHECK(r.gram_offdiag <= r.gram_bound + 1e-12);
        CHECK(r.bound_vacuous == (r.fidelity_bound <= 0.0));
        if (!r.bound_vacuous) {
          CHECK(r.read_fidelity >= r.fidelity_bound);
          CHECK(r.write_fidelity >= r.fidelity_bound);
        }
        const MatrixXcd vv = r.v.adjoint() * r.v;
        CHECK((vv - MatrixXcd::Identity(n + 1, n + 1)).norm() < 1e-10);
      }
    }
  }
  SUBCASE("vacuous bound reported") {
    const CodingReport r = coding_transform(xy(8), 8, 0.3);
    CHECK(r.bound_vacuous);
    CHECK(r.fidelity_bound < 0.0);
  }
  CHECK_THROWS_AS(coding_transform(xy(5), 4, 1.0), std::invalid_argument);
}
