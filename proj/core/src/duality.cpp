#include "cgp/duality.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cgp {

namespace {
constexpr double kEuler = 2.7182818284590452353602874713527;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double rel_entropy(const VectorXd& nu, const VectorXd& lambda) {
  if (nu.size() != lambda.size())
    throw std::invalid_argument("rel_entropy arguments must share length");
  double total = 0;
  for (int i = 0; i < nu.size(); ++i) {
    if (nu(i) < 0 || lambda(i) < 0)
      throw std::invalid_argument("rel_entropy arguments must be nonnegative");
    if (nu(i) == 0) continue;
    if (lambda(i) == 0) return kInf;
    total += nu(i) * std::log(nu(i) / lambda(i));
  }
  return total;
}

double conjugate_explin(const VectorXd& nu, const VectorXd& lambda) {
  if (nu.size() != lambda.size())
    throw std::invalid_argument("conjugate_explin arguments must share length");
  for (int i = 0; i < nu.size(); ++i)
    if (nu(i) < 0 || lambda(i) < 0) return kInf;
  return rel_entropy(nu, kEuler * lambda);
}

EntropyProblem build_dual(const CgpProblem& primal) {
  const auto violations = validate(primal);
  if (!violations.empty())
    throw std::invalid_argument("build_dual: invalid primal: " + violations.front());
  EntropyProblem d;
  d.k = primal.k();
  d.m = primal.m();
  d.u = primal.block.u;
  d.v = primal.block.v;
  d.w = primal.w;
  d.Q = primal.block.Q.rows() == primal.n ? primal.block.Q : MatrixXd::Zero(primal.n, 0);
  d.R = primal.block.R.rows() == primal.n ? primal.block.R : MatrixXd::Zero(primal.n, 0);
  d.S = primal.S.rows() == primal.n ? primal.S : MatrixXd::Zero(primal.n, 0);
  d.c0 = 0;
  d.p = primal.p;
  d.cone = dual_cone(primal.cone);
  d.second_arg_fixed = false;
  return d;
}

DualPair make_dual_pair(const CgpProblem& primal) {
  return DualPair{primal, build_dual(primal)};
}

double eval_dual_objective(const EntropyProblem& dual, const VectorXd& nu,
                           const VectorXd& lambda, const VectorXd& delta) {
  if (nu.size() != dual.k || delta.size() != dual.m)
    throw std::invalid_argument("eval_dual_objective: shape mismatch");
  double entropy;
  double linear = dual.u.dot(nu) + dual.w.dot(delta);
  if (dual.second_arg_fixed) {
    entropy = rel_entropy(nu, dual.fixed_second_arg);
  } else {
    if (lambda.size() != dual.k)
      throw std::invalid_argument("eval_dual_objective: shape mismatch");
    entropy = conjugate_explin(nu, lambda);
    linear += dual.v.dot(lambda);
  }
  return -(entropy + linear) + dual.c0;
}

bool check_dual_feasible(const EntropyProblem& dual, const VectorXd& nu,
                         const VectorXd& lambda, const VectorXd& delta,
                         double tol) {
  if (nu.size() != dual.k || delta.size() != dual.m) return false;
  if (nu.size() > 0 && nu.minCoeff() < -tol) return false;
  VectorXd expr = dual.p + dual.Q * nu + dual.S * delta;
  if (!dual.second_arg_fixed) {
    if (lambda.size() != dual.k) return false;
    if (lambda.size() > 0 && lambda.minCoeff() < -tol) return false;
    expr += dual.R * lambda;
  }
  return dual.cone.contains(expr, tol);
}

}  // namespace cgp
