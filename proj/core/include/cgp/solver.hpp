#pragma once

#include <cstdint>

#include "cgp/model.hpp"

namespace cgp {

struct SolverConfig {
  double tol = 1e-8;             // target certified duality gap
  double mu_factor = 10.0;       // barrier parameter growth
  int max_newton_per_center = 50;
  int max_outer = 200;
  double armijo_slope = 0.01;
  double backtrack = 0.5;
  double feas_tol = 1e-9;
  std::uint64_t seed = 0;        // consumed by sampling drivers, not the core
  double center_tol = 0.01;      // Newton decrement target while tracking the path
  double final_center_tol = 1e-6;
  double cond_limit = 1e14;      // backward-error based condition trigger
  bool collect_trace = true;
};

/// -log(a'X + b); `shiftable` marks terms relaxed by the phase-I slack.
struct AffineLogTerm {
  std::vector<std::pair<int, double>> a;
  double b = 0;
  bool shiftable = true;
};

/// -log(log(-X_z) - X_y), the coupling term of the lifted exponential rows.
struct ExpPairTerm {
  int y_index = 0;
  int z_index = 0;
};

/// -log(x0^2 - |x_rest|^2) on a contiguous variable slice. When shift_var
/// is set the block is evaluated at the slice shifted by X[shift_var] along
/// the cone's canonical interior direction (phase I relaxation).
struct SocBlockTerm {
  int offset = 0;
  int dim = 0;
  int shift_var = -1;
};

/// -log det of the symmetric matrix embedded on a contiguous svec slice.
struct PsdBlockTerm {
  int offset = 0;
  int side = 0;
  int shift_var = -1;
};

/// Composite logarithmic barrier plus hard linear equalities A X = b.
struct BarrierSpec {
  int num_vars = 0;
  std::vector<AffineLogTerm> affine_logs;
  std::vector<ExpPairTerm> exp_pairs;
  std::vector<SocBlockTerm> soc_blocks;
  std::vector<PsdBlockTerm> psd_blocks;
  MatrixXd A;
  VectorXd b;
  double theta = 0;

  bool in_domain(const VectorXd& X) const;
  double value(const VectorXd& X) const;  // throws std::domain_error outside
  void add_gradient(const VectorXd& X, VectorXd& g) const;
  void add_hessian(const VectorXd& X, MatrixXd& H) const;
  bool empty() const {
    return affine_logs.empty() && exp_pairs.empty() && soc_blocks.empty() &&
           psd_blocks.empty();
  }
};

/// The lifted reformulation over (x, y, z): per exponential row,
///   y_i - log(-z_i) <= 0,  z_i <= 0,  Q'x - u <= y,  R'x - v <= z,
/// with the cone barrier on x and equalities carried through.
struct CanonicalBarrierProblem {
  int n = 0;
  int k = 0;
  int num_vars = 0;       // n + 2k
  VectorXd objective;     // p extended with zeros
  BarrierSpec barrier;
  ConeSpec cone;          // original cone, for multiplier recovery
  std::vector<int> row_c_term;  // per row: affine-log index of y+u-Q'x
  std::vector<int> row_d_term;  // per row: affine-log index of z+v-R'x
  std::vector<int> eq_row_source;  // >=0: column of S; -1-j: zero-cone coord j
  int y_offset() const { return n; }
  int z_offset() const { return n + k; }
};

CanonicalBarrierProblem canonicalize(const CgpProblem& problem);

struct BarrierEval {
  double value = 0;
  VectorXd gradient;
  MatrixXd hessian;
};

/// Exact analytic value/gradient/Hessian of the composite barrier; throws
/// std::domain_error when the point is on or outside a term boundary.
BarrierEval barrier_eval(const CanonicalBarrierProblem& cbp, const VectorXd& point);

/// Extends a strictly feasible x to a strictly feasible lifted point by
/// placing y and z at the midpoints of their admissible intervals.
VectorXd lift_point(const CgpProblem& problem, const VectorXd& x);

Solution solve_primal(const CgpProblem& problem, const SolverConfig& cfg = {});

enum class Phase1Status { Feasible, Infeasible, IterationLimit, NumericalFailure };

struct Phase1Result {
  Phase1Status status = Phase1Status::NumericalFailure;
  VectorXd x;            // strictly feasible point when status == Feasible
  VectorXd lifted;       // matching lifted point (x, y, z)
  double slack = 0;      // final auxiliary slack value s*
  int iterations = 0;
};

Phase1Result phase1(const CgpProblem& problem, const SolverConfig& cfg = {});

Solution solve_entropy(const EntropyProblem& problem, const SolverConfig& cfg = {});

}  // namespace cgp
