#include <doctest.h>

#include <cmath>
#include <limits>

#include "cgp/duality.hpp"
#include "cgp/rng.hpp"

using namespace cgp;

namespace {

constexpr double kE = 2.7182818284590452;

VectorXd vec1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}

// Numeric conjugate sup_x {x'nu - exp{x}'lambda} by per-coordinate ternary
// search; the independent check for conjugate_explin.
double conjugate_numeric(const VectorXd& nu, const VectorXd& lambda) {
  double total = 0;
  for (int i = 0; i < nu.size(); ++i) {
    auto g = [&](double x) { return x * nu(i) - std::exp(x) * lambda(i); };
    double lo = -60, hi = 60;
    for (int it = 0; it < 300; ++it) {
      const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (g(m1) < g(m2))
        lo = m1;
      else
        hi = m2;
    }
    total += g(0.5 * (lo + hi));
  }
  return total;
}

}  // namespace

TEST_CASE("rel_entropy basic values") {
  VectorXd a(2), b(2);
  a << 0.3, 0.7;
  CHECK(rel_entropy(a, a) == doctest::Approx(0));
  CHECK(rel_entropy(VectorXd::Zero(2), VectorXd::Zero(2)) == 0);  // D(0,0) = 0
  CHECK(rel_entropy(vec1(1), vec1(kE)) == doctest::Approx(-1));
  CHECK(std::isinf(rel_entropy(vec1(1), vec1(0))));
  CHECK(rel_entropy(vec1(0), vec1(0)) == 0);
  CHECK_THROWS_AS(rel_entropy(vec1(-1), vec1(1)), std::invalid_argument);
}

TEST_CASE("rel_entropy joint convexity on random pairs") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = rng.uniform_int(1, 4);
    VectorXd nu1(k), lam1(k), nu2(k), lam2(k);
    for (int i = 0; i < k; ++i) {
      nu1(i) = rng.uniform(0.05, 5);
      lam1(i) = rng.uniform(0.05, 5);
      nu2(i) = rng.uniform(0.05, 5);
      lam2(i) = rng.uniform(0.05, 5);
    }
    const double t = rng.uniform(0.05, 0.95);
    const double mixed =
        rel_entropy(t * nu1 + (1 - t) * nu2, t * lam1 + (1 - t) * lam2);
    const double convex_comb = t * rel_entropy(nu1, lam1) + (1 - t) * rel_entropy(nu2, lam2);
    CHECK(mixed <= convex_comb + 1e-9);
  }
}

TEST_CASE("conjugate_explin closed forms") {
  CHECK(conjugate_explin(vec1(1), vec1(1)) == doctest::Approx(-1));
  CHECK(conjugate_explin(vec1(0), vec1(5)) == doctest::Approx(0));
  CHECK(conjugate_explin(vec1(2), vec1(3)) ==
        doctest::Approx(2 * std::log(2.0 / (3.0 * kE))).epsilon(1e-10));
  CHECK(std::isinf(conjugate_explin(vec1(-0.5), vec1(1))));
}

TEST_CASE("conjugate matches the numeric sup oracle") {
  CHECK(std::abs(conjugate_explin(vec1(2), vec1(3)) - conjugate_numeric(vec1(2), vec1(3))) <
        1e-6);
  Rng rng(17);
  for (int trial = 0; trial < 250; ++trial) {
    const int k = rng.uniform_int(1, 5);
    VectorXd nu(k), lam(k);
    for (int i = 0; i < k; ++i) {
      nu(i) = rng.uniform(0.1, 10);
      lam(i) = rng.uniform(0.1, 10);
    }
    CHECK(std::abs(conjugate_explin(nu, lam) - conjugate_numeric(nu, lam)) < 1e-6);
  }
}

TEST_CASE("build_dual of an LP reduces to LP duality shape") {
  // min p'x s.t. S'x = w, x >= 0
  CgpProblem P;
  P.n = 2;
  P.p = VectorXd::Ones(2);
  P.block = ExpAffineBlock::empty(2);
  P.S = MatrixXd::Ones(2, 1);
  P.w = VectorXd::Ones(1);
  P.cone = ConeSpec::orthant(2);
  const EntropyProblem D = build_dual(P);
  CHECK(D.k == 0);
  CHECK(D.m == 1);
  CHECK(D.cone.structurally_equal(ConeSpec::orthant(2)));
  // objective is -w'delta; at delta = 1 the dual expression p + S delta = (2,2) >= 0
  CHECK(eval_dual_objective(D, VectorXd(), VectorXd(), vec1(1.0)) == doctest::Approx(-1));
  CHECK(check_dual_feasible(D, VectorXd(), VectorXd(), vec1(1.0)));
  // the entropy term vanished structurally: objective is linear in delta
  const double d1 = eval_dual_objective(D, VectorXd(), VectorXd(), vec1(2.0));
  const double d2 = eval_dual_objective(D, VectorXd(), VectorXd(), vec1(4.0));
  const double d3 = eval_dual_objective(D, VectorXd(), VectorXd(), vec1(3.0));
  CHECK(d1 + d2 == doctest::Approx(2 * d3));
}

TEST_CASE("build_dual detects infeasible dual of an unbounded GP") {
  // min x s.t. exp(x) <= 1 over free x: unbounded below, so the dual
  // constraint 1 + nu = 0 over the zero cone has no nu >= 0.
  CgpProblem P;
  P.n = 1;
  P.p = VectorXd::Ones(1);
  P.block.Q = MatrixXd::Ones(1, 1);
  P.block.R = MatrixXd::Zero(1, 1);
  P.block.u = VectorXd::Zero(1);
  P.block.v = VectorXd::Ones(1);
  P.S = MatrixXd::Zero(1, 0);
  P.w = VectorXd::Zero(0);
  P.cone = ConeSpec::free(1);
  const EntropyProblem D = build_dual(P);
  CHECK(D.cone.kind() == ConeKind::Zero);
  // feasibility needs 1 + nu = 0, impossible for nu >= 0
  for (double nu = 0; nu <= 4; nu += 0.5)
    CHECK_FALSE(check_dual_feasible(D, vec1(nu), vec1(0.3), VectorXd()));
}

TEST_CASE("dual objective at the origin and infeasible points") {
  CgpProblem P;
  P.n = 2;
  P.p = VectorXd::Ones(2);
  P.block.Q = MatrixXd::Identity(2, 2);
  P.block.R = MatrixXd::Zero(2, 2);
  P.block.u = VectorXd::Zero(2);
  P.block.v = VectorXd::Ones(2);
  P.S = MatrixXd::Zero(2, 0);
  P.w = VectorXd::Zero(0);
  P.cone = ConeSpec::orthant(2);
  const EntropyProblem D = build_dual(P);
  // nu = lambda = 0, delta empty, p in K*: objective 0 and feasible
  CHECK(eval_dual_objective(D, VectorXd::Zero(2), VectorXd::Zero(2), VectorXd()) ==
        doctest::Approx(0));
  CHECK(check_dual_feasible(D, VectorXd::Zero(2), VectorXd::Zero(2), VectorXd()));
  VectorXd bad(2);
  bad << -0.1, 0.2;
  CHECK_FALSE(check_dual_feasible(D, bad, VectorXd::Zero(2), VectorXd()));
}

TEST_CASE("duality_gap is a plain difference") {
  CHECK(duality_gap(1, 1) == 0);
  CHECK(duality_gap(2, 1) == 1);
}
