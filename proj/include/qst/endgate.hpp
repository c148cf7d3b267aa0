#pragma once

// Gates at the receiving end: the valve protocol, its switched-Hamiltonian
// realizations, and memory-swap read/write on the vacuum-plus-one-excitation
// subspace.

#include <optional>
#include <string>
#include <vector>

#include "qst/xsector.hpp"

namespace qst {

/// V(c,d) on the (|N>, |N+1>) block: [[d, -c], [conj(c), conj(d)]],
/// so c|N> + d|N+1> -> |N+1>.
struct ValveGate {
  cplx c{0.0, 0.0};
  cplx d{1.0, 0.0};
  Eigen::Matrix2cd matrix() const;
};

ValveGate valve_gate(cplx state_n, cplx state_target);

struct EndStep {
  int step = 0;
  double interval = 0.0;
  double t_cum = 0.0;
  double p_success = 0.0;  // valve: |target|^2; memory swap: eta so far
  double c_abs = 0.0;      // |c| of the gate (valve opening)
  double eta = 0.0;
  bool skipped = false;
};

struct ValveTrace {
  std::vector<EndStep> steps;
  VectorXcd chain;
  cplx target{0.0, 0.0};
  double final_p() const { return steps.empty() ? 0.0 : steps.back().p_success; }
};

/// Alternates free evolution with instantaneous valve gates, starting from |1>.
ValveTrace valve_protocol(const Eigensystem& eig, const std::vector<double>& intervals);

/// Greedy: wait for the next local maximum of |a_N| and open the valve;
/// stops before the horizon is exceeded.
ValveTrace valve_optimize(const Eigensystem& eig, double horizon, double dt = 0.0);

enum class SwitchMode { coupling, field };

struct SwitchSegment {
  double duration = 0.0;
  bool delta = false;  // the switch variable: coupling on (coupling mode) or field on (field mode)
};

struct SwitchSample {
  double t = 0.0;
  double target = 0.0;  // |a_{N+1}|^2
  double chain = 0.0;   // sum over chain sites
};

struct SwitchedResult {
  std::vector<SwitchSample> trajectory;  // one sample per segment end, plus t = 0
  std::vector<SwitchSegment> schedule;
  std::string warning;
};

/// (N+1)-site piecewise-constant evolution from |1>. The extra hop equals the
/// chain's last hop; field mode adds 2B on site N+1 while delta is set.
SwitchedResult switched_sim(const ChainSpec& spec, SwitchMode mode, double b_field,
                            const std::vector<SwitchSegment>& sched);

/// Greedy switching: closed evolution to the next |a_N| maximum, then the open
/// duration (up to pi/J_last) maximizing the target; open phases that do not
/// raise the target are skipped.
SwitchedResult switched_optimize(const ChainSpec& spec, SwitchMode mode, double b_field, double horizon,
                                 double dt = 0.0);

/// Extended state for the memory protocol: [vacuum, chain 1..N, slots 1..L].
struct MemoryState {
  int n = 0;
  int l = 0;
  VectorXcd amp;
  static MemoryState chain_state(int l_slots, const VectorXcd& vacuum_and_chain);
  cplx vacuum() const { return amp(0); }
  VectorXcd chain() const { return amp.segment(1, n); }
  VectorXcd slots() const { return amp.segment(1 + n, l); }
  /// [vacuum, slots]: the memory register in the (L+1)-dim basis.
  VectorXcd memory() const;
};

/// W: for l = 1..L, evolve by t then swap site N with slot l.
MemoryState apply_read(const Eigensystem& eig, double t, MemoryState s);
/// W^dag: for l = L..1, swap site N with slot l then evolve by -t.
MemoryState apply_write(const Eigensystem& eig, double t, MemoryState s);

struct MemoryReadResult {
  double eta = 0.0;
  MemoryState state;
  std::vector<EndStep> steps;  // eta after each swap
};

/// Reads |1> (or `init`, an (N+1)-vector [vacuum, chain]) into L fresh slots.
MemoryReadResult memory_read(const Eigensystem& eig, int l_slots, double t);
MemoryReadResult memory_read(const Eigensystem& eig, int l_slots, double t, const VectorXcd& init);

struct MemoryWriteResult {
  double fidelity = 0.0;
  VectorXcd written;  // [vacuum, chain] after W^dag
};

/// Prepares the memory in the normalized read image of `target` and runs W^dag.
MemoryWriteResult memory_write(const Eigensystem& eig, int l_slots, double t, const VectorXcd& target);

struct CodingReport {
  MatrixXcd d;                 // (L+1) x (N+1), columns phi_k
  MatrixXcd v;                 // polar isometry of d
  std::vector<double> eta;     // eta_k per basis state (eta_0 entry is the vacuum, 1)
  double eta0 = 0.0;           // min_k eta_k
  double dv_norm = 0.0;        // Frobenius norm of D - V
  double dv_bound = 0.0;       // sqrt(3) (N+1) (1-eta0)^(1/4)
  bool dv_within = false;
  double gram_offdiag = 0.0;   // max_{k != k'} |<phi_k|phi_k'>|
  double gram_bound = 0.0;     // 3 sqrt(1-eta0)
  double read_fidelity = 0.0;  // min over basis states
  double write_fidelity = 0.0;
  double fidelity_bound = 0.0; // eta0 - 10 (N+1) (1-eta0)^(1/4)
  bool bound_vacuous = false;  // fidelity_bound <= 0
};

CodingReport coding_transform(const Eigensystem& eig, int l_slots, double t);

/// Read and write fidelities through V for an arbitrary (N+1)-vector.
double read_fidelity(const Eigensystem& eig, int l_slots, double t, const MatrixXcd& v, const VectorXcd& psi);
double write_fidelity(const Eigensystem& eig, int l_slots, double t, const MatrixXcd& v, const VectorXcd& psi);

}  // namespace qst
