#pragma once

#include "cgp/model.hpp"

namespace cgp {

/// Joint relative entropy sum_i nu_i log(nu_i / lambda_i) with the
/// conventions 0 log(0/lambda) = 0 and nu_i > 0, lambda_i = 0 -> +inf.
/// Throws on negative entries.
double rel_entropy(const VectorXd& nu, const VectorXd& lambda);

/// Convex conjugate of the exponential/affine characteristic function,
/// D(nu, e*lambda). Returns +inf outside the nonnegative orthant.
double conjugate_explin(const VectorXd& nu, const VectorXd& lambda);

/// Mechanical dual of a validated primal: entropy objective over
/// (nu, lambda, delta) with membership cone dual_cone(primal.cone).
EntropyProblem build_dual(const CgpProblem& primal);

struct DualPair {
  CgpProblem primal;
  EntropyProblem dual;
};

DualPair make_dual_pair(const CgpProblem& primal);

double eval_dual_objective(const EntropyProblem& dual, const VectorXd& nu,
                           const VectorXd& lambda, const VectorXd& delta);

bool check_dual_feasible(const EntropyProblem& dual, const VectorXd& nu,
                         const VectorXd& lambda, const VectorXd& delta,
                         double tol = 1e-8);

inline double duality_gap(double primal_obj, double dual_obj) {
  return primal_obj - dual_obj;
}

}  // namespace cgp
