#pragma once

// Dual-rail encoding over two chains: conclusive end measurements, schedule
// optimization, damping, disorder sampling.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qst/rng.hpp"
#include "qst/xsector.hpp"

namespace qst {

struct DualRailSystem {
  Eigensystem chain1;
  Eigensystem chain2;

  DualRailSystem() = default;
  DualRailSystem(Eigensystem a, Eigensystem b);
  int n() const { return chain1.dim(); }
};

struct MeasurementSchedule {
  std::vector<double> intervals;
  double total() const;
};

struct DualRailStep {
  int step = 0;
  double interval = 0.0;
  double t_cum = 0.0;
  double p_cond = 0.0;   // conditional success of this measurement
  double failure = 1.0;  // joint failure P(l)
  double bias = 0.0;     // | |a| - |b| | after the projection
  double phase = 0.0;    // arg G - arg F, correction applied on success
};

struct ProtocolTrace {
  std::vector<DualRailStep> steps;
  double total_time = 0.0;
  double final_failure = 1.0;
  bool reached_target = false;
  int steps_used() const { return static_cast<int>(steps.size()); }
};

/// Running protocol state: both branches in their chain eigenbases,
/// unnormalized (squared norm = probability of no success so far).
class DualRailState {
 public:
  explicit DualRailState(const DualRailSystem& sys);

  void evolve(double t);
  /// Amplitudes at site N after a further free evolution by tau.
  cplx f_end(double tau) const;
  cplx g_end(double tau) const;
  /// Zeroes site N of both branches; returns (F, G) removed.
  std::pair<cplx, cplx> measure();
  double norm_a() const { return ca_.norm(); }
  double norm_b() const { return cb_.norm(); }
  VectorXcd branch_a() const;
  VectorXcd branch_b() const;

 private:
  const DualRailSystem* sys_;
  VectorXcd ca_, cb_;
  VectorXcd wa_, wb_;  // site-N weights in the eigenbasis
  void refresh_weights();
};

/// Free evolution between measurements with end projections; the a-branch
/// starts at site 1 of chain 1, the b-branch at site 1 of chain 2.
ProtocolTrace simulate_dual_rail(const DualRailSystem& sys, const MeasurementSchedule& sched);

struct UnbiasedOptions {
  double dt = 0.0;          // 0 -> default_dt of chain 1
  double tol = 1e-6;        // relative to the current branch norm
  bool match_slope = false;
};

/// Candidate waiting times tau in [t_lo, t_hi] at which ||F(tau)| - |G(tau)|| <= tol * |a|.
/// Sign changes of |F| - |G| are bisected to full precision.
std::vector<double> unbiased_times(const DualRailState& state, double t_lo, double t_hi,
                                   const UnbiasedOptions& opt = {});
std::vector<double> unbiased_times(const DualRailSystem& sys, double t_lo, double t_hi,
                                   const UnbiasedOptions& opt = {});

struct OptimizeOptions {
  double target_failure = 0.01;
  double window = 0.0;  // t_max_per_step; 0 -> 2 N / J
  double dt = 0.0;
  double tol = 1e-6;
  bool match_slope = false;
  int max_steps = 2000;
};

struct OptimizedSchedule {
  MeasurementSchedule schedule;
  ProtocolTrace trace;
};

/// Greedy schedule: each measurement time is the unbiased candidate in the
/// window maximizing the conditional success. Never throws on an unreached
/// target; `trace.reached_target` reports it.
OptimizedSchedule optimize_schedule(const DualRailSystem& sys, const OptimizeOptions& opt);

/// The four end-to-end matrix elements, evaluated as black boxes.
struct Tomography {
  std::function<cplx(double)> f_n1, f_nn, g_n1, g_nn;
};

Tomography tomography(const DualRailSystem& sys);

/// Replays a schedule from the tomography functions alone:
/// F(T) = f_N1(T) - sum_j c_j f_NN(T - T_j).
ProtocolTrace simulate_from_tomography(const Tomography& tomo, const MeasurementSchedule& sched);

/// No-jump evolution with decay rate gamma on chain 1 and gamma2 (default
/// gamma) on chain 2. Failure includes the probability lost to decay.
ProtocolTrace damping_trace(const DualRailSystem& sys, const MeasurementSchedule& sched, double gamma,
                            std::optional<double> gamma2 = std::nullopt);

struct BlackboxResult {
  bool feasible = false;
  std::optional<Eigen::Matrix2cd> recovery;
};

/// Conditions |f|^2+|ft|^2 = |gt|^2+|g|^2 and conj(f) gt + g conj(ft) = 0.
BlackboxResult blackbox_feasible(cplx f, cplx f_tilde, cplx g, cplx g_tilde, double tol = 1e-9);

/// n couplings J(1+delta): |delta| uniform on [0, delta_max]; the sign of each
/// delta repeats the previous one with probability c.
std::vector<double> sample_disorder(double j, double delta_max, double c, int n, Rng& rng);
std::vector<double> sample_disorder(double j, double delta_max, double c, int n, std::uint64_t seed);

/// Residual ||Theta (U(t) Theta)^k init||^2 for k = 1..steps (evolve, then clear site N).
std::vector<double> cooling_protocol(const Eigensystem& eig, double t, int steps, const VectorXcd& init);

}  // namespace qst
