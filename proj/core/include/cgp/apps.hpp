#pragma once

#include <cstdint>

#include "cgp/model.hpp"
#include "cgp/solver.hpp"

namespace cgp {

struct CapacityResult {
  double cap = 0;
  VectorXd x;               // minimizing log-domain point (empty when degenerate)
  bool zero_structure = false;  // a zero row or column forced cap = 0
  Solution detail;
};

/// cap(p_M) for entrywise nonnegative M, through the product-of-row-sums
/// program over 1'x = 0.
CapacityResult capacity(const MatrixXd& M, const SolverConfig& cfg = {});

struct PermanentBounds {
  double lower = 0;
  double upper = 0;
  double cap = 0;
};

/// Capacity sandwich on the permanent; the lower factor is the better of
/// n!/n^n and ((K-1)/K)^((K-1)n) for max column support K, with singleton
/// columns treated as exact.
PermanentBounds permanent_bounds(const MatrixXd& M, const SolverConfig& cfg = {});

/// Family of entrywise nonnegative side x side matrices cut out by a conic
/// description of vec(M) (row-major).
struct NonnegMatrixFamily {
  int side = 0;
  ConicSetDesc set;
};

struct CapacityMaxResult {
  double value = 0;      // sup_{M in family} cap(p_M)
  MatrixXd M_hat;        // recovered maximizer
  VectorXd x;            // outer log-domain point
  Solution detail;
};

CapacityMaxResult capacity_maximize(const NonnegMatrixFamily& family,
                                    const SolverConfig& cfg = {});

struct RobustConstraint {
  ConicSetDesc C;                    // coefficient uncertainty, nonneg flagged
  std::vector<ConicSetDesc> Qsets;   // one exponent set per coefficient
  double bound = 1.0;
};

struct RobustGpResult {
  Solution solution;
  VectorXd x;  // decision variables in user order
};

/// min objective'x subject to robust sum-of-exponential constraints.
RobustGpResult robust_gp_solve(const VectorXd& objective,
                               const std::vector<RobustConstraint>& constraints,
                               const SolverConfig& cfg = {});

/// Diagonal-mode linear system with boxed modes, conic initial set, and
/// half-space targets c_i'x <= d_i with nonnegative data.
struct LinearSystemSpec {
  VectorXd mode_lo;
  VectorXd mode_hi;
  ConicSetDesc x_init;     // subset of the nonnegative orthant
  MatrixXd target_C;       // one half-space per row
  VectorXd target_d;
};

std::vector<std::string> validate(const LinearSystemSpec& spec);

struct HittingTimeResult {
  double tau = 0;               // +inf when unreachable within the horizon
  bool unreachable = false;
  SolveStatus status = SolveStatus::NumericalFailure;
  Solution detail;
};

/// Worst-case hitting time over initial set and mode box; decided on the
/// horizon [0, t_max].
HittingTimeResult hitting_time(const LinearSystemSpec& spec, const SolverConfig& cfg = {},
                               double t_max = 1e3);

struct EntropyMaxResult {
  MatrixXd M;
  double entropy = 0;
  Solution detail;
};

/// Von-Neumann entropy maximization over {M >= 0, trace M = trace_value,
/// trace(A_j M) = b_j}.
EntropyMaxResult max_vn_entropy(int side,
                                const std::vector<std::pair<MatrixXd, double>>& lin_constraints,
                                double trace_value = 1.0, const SolverConfig& cfg = {});

/// Real Kraus-operator channel rho -> sum_j A_j rho A_j'.
struct QuantumChannel {
  std::vector<MatrixXd> kraus;

  int in_dim() const { return kraus.empty() ? 0 : static_cast<int>(kraus.front().cols()); }
  int out_dim() const { return kraus.empty() ? 0 : static_cast<int>(kraus.front().rows()); }
  MatrixXd apply(const MatrixXd& rho) const;
  /// || sum_j A_j'A_j - I ||, the trace-preservation defect.
  double validation_error() const;
};

struct CqResult {
  double value = 0;
  VectorXd p;
  Solution detail;
};

/// Classical-to-quantum capacity with respect to a fixed set of unit input
/// states: sup_p H_vn(L(sum p_i v_i v_i')) - sum p_i H_vn(L(v_i v_i')).
CqResult cq_capacity(const QuantumChannel& channel, const std::vector<VectorXd>& states,
                     const SolverConfig& cfg = {});

/// Fixed-density linear-programming lower bound: the average state is pinned
/// to rho, leaving a linear objective over the simplex.
CqResult cq_capacity_fixed_rho(const QuantumChannel& channel,
                               const std::vector<VectorXd>& states, const MatrixXd& rho,
                               const SolverConfig& cfg = {});

/// Row-stochastic transition matrix of the classical channel induced by
/// diagonal projection: T(i, j) = [L(e_i e_i')]_jj.
MatrixXd transition_matrix(const QuantumChannel& channel);

/// Capacity of the induced classical channel (basis states, diagonal
/// projection); equals the Shannon capacity of transition_matrix().
double induced_classical_capacity(const QuantumChannel& channel,
                                  const SolverConfig& cfg = {});

/// Capacity sequence from progressively augmenting the state set with
/// random unit vectors; nondecreasing within solver accuracy.
std::vector<double> capacity_state_augmentation(const QuantumChannel& channel,
                                                std::vector<VectorXd> states, int rounds,
                                                std::uint64_t seed,
                                                const SolverConfig& cfg = {});

/// Random benchmark channel on Sym(dim): a diagonal Kraus term, an
/// eps-scaled dense term, and the completing symmetric square root, jointly
/// scaled so the completion stays positive definite for all eps in [0, 1].
QuantumChannel make_random_channel(std::uint64_t seed, double eps, int dim = 8);

}  // namespace cgp
