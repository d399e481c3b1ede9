#include <doctest.h>

#include <cmath>

#include "cgp/duality.hpp"
#include "cgp/oracles.hpp"
#include "cgp/solver.hpp"
#include "test_util.hpp"

using namespace cgp;
using testutil::random_cgp;

namespace {

constexpr double kE = 2.7182818284590452;

CgpProblem simple_lp() {
  // min x1 + x2 s.t. x1 + x2 = 1, x >= 0
  CgpProblem P;
  P.n = 2;
  P.p = VectorXd::Ones(2);
  P.block = ExpAffineBlock::empty(2);
  P.S = MatrixXd::Ones(2, 1);
  P.w = VectorXd::Ones(1);
  P.cone = ConeSpec::orthant(2);
  return P;
}

CgpProblem exp_epigraph() {
  // min t s.t. exp(x) <= t, x >= 1, variables (x, t, s) with x - s = 1.
  CgpProblem P;
  P.n = 3;
  P.p = VectorXd::Zero(3);
  P.p(1) = 1;
  P.block.Q = MatrixXd::Zero(3, 1);
  P.block.Q(0, 0) = 1;
  P.block.R = MatrixXd::Zero(3, 1);
  P.block.R(1, 0) = -1;
  P.block.u = VectorXd::Zero(1);
  P.block.v = VectorXd::Zero(1);
  P.S = MatrixXd::Zero(3, 1);
  P.S(0, 0) = 1;
  P.S(2, 0) = -1;
  P.w = VectorXd::Ones(1);
  P.cone = ConeSpec::product({ConeSpec::free(2), ConeSpec::orthant(1)});
  return P;
}

}  // namespace

TEST_CASE("canonicalize counts lifted structure") {
  CgpProblem lp = simple_lp();
  const CanonicalBarrierProblem c0 = canonicalize(lp);
  CHECK(c0.num_vars == 2);
  CHECK(c0.barrier.exp_pairs.empty());
  CHECK(c0.barrier.affine_logs.size() == 2);  // orthant only
  CHECK(c0.barrier.theta == doctest::Approx(2));

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
  const CanonicalBarrierProblem c1 = canonicalize(P);
  CHECK(c1.num_vars == 3);  // (x, y1, z1)
  CHECK(c1.barrier.exp_pairs.size() == 1);
  CHECK(c1.barrier.affine_logs.size() == 3);  // c, d, -z terms
  CHECK(c1.barrier.theta == doctest::Approx(4));
}

TEST_CASE("barrier_eval on the orthant at ones") {
  CgpProblem lp = simple_lp();
  const CanonicalBarrierProblem cbp = canonicalize(lp);
  const BarrierEval ev = barrier_eval(cbp, VectorXd::Ones(2));
  CHECK(ev.value == doctest::Approx(0));
  CHECK(ev.gradient(0) == doctest::Approx(-1));
  CHECK(ev.gradient(1) == doctest::Approx(-1));
  CHECK(ev.hessian(0, 0) == doctest::Approx(1));
  CHECK_THROWS_AS(barrier_eval(cbp, VectorXd::Zero(2)), std::domain_error);
}

TEST_CASE("barrier_eval on the psd cone at the identity") {
  CgpProblem P;
  P.n = 3;
  P.p = VectorXd::Zero(3);
  P.block = ExpAffineBlock::empty(3);
  P.S = MatrixXd::Zero(3, 0);
  P.w = VectorXd::Zero(0);
  P.cone = ConeSpec::psd(2);
  const CanonicalBarrierProblem cbp = canonicalize(P);
  const VectorXd id = sym_to_vec(MatrixXd::Identity(2, 2));
  const BarrierEval ev = barrier_eval(cbp, id);
  CHECK(ev.value == doctest::Approx(0));
  CHECK((ev.gradient + id).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("barrier derivatives match finite differences") {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    auto inst = random_cgp(rng);
    const CanonicalBarrierProblem cbp = canonicalize(inst.problem);
    const VectorXd X = lift_point(inst.problem, inst.strict_point);
    REQUIRE(cbp.barrier.in_domain(X));
    const BarrierEval ev = barrier_eval(cbp, X);

    auto f = [&](const VectorXd& p) { return cbp.barrier.value(p); };
    CHECK(oracles::fd_gradient_dev(f, ev.gradient, X, 1e-6) < 1e-5);
    auto grad = [&](const VectorXd& p) {
      VectorXd g = VectorXd::Zero(cbp.num_vars);
      cbp.barrier.add_gradient(p, g);
      return g;
    };
    CHECK(oracles::fd_hessian_dev(grad, ev.hessian, X, 1e-6, 3, rng.next_u64()) < 1e-4);
  }
}

TEST_CASE("lift projection: strictly feasible x extends and projects back") {
  Rng rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_cgp(rng);
    const CanonicalBarrierProblem cbp = canonicalize(inst.problem);
    const VectorXd X = lift_point(inst.problem, inst.strict_point);
    CHECK(cbp.barrier.in_domain(X));
    // Projection direction: the x-part satisfies the original rows.
    const VectorXd x = X.head(inst.problem.n);
    for (int i = 0; i < inst.problem.k(); ++i) {
      const double row = std::exp(inst.problem.block.Q.col(i).dot(x) - inst.problem.block.u(i)) +
                         inst.problem.block.R.col(i).dot(x) - inst.problem.block.v(i);
      CHECK(row < 0);
    }
  }
}

TEST_CASE("solve_primal on the unit-simplex LP") {
  const Solution sol = solve_primal(simple_lp());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_obj == doctest::Approx(1).epsilon(1e-8));
  CHECK(sol.gap <= 1e-7);
  CHECK(sol.x.sum() == doctest::Approx(1).epsilon(1e-8));
}

TEST_CASE("solve_primal forces t = e on the exponential epigraph") {
  const Solution sol = solve_primal(exp_epigraph());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_obj == doctest::Approx(kE).epsilon(1e-6));
  CHECK(sol.x(0) == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("phase1 finds interior points and certifies infeasibility") {
  const Phase1Result ok = phase1(simple_lp());
  CHECK(ok.status == Phase1Status::Feasible);
  CHECK(ok.x.minCoeff() > 0);

  // exp(x) <= 0 is impossible.
  CgpProblem bad;
  bad.n = 1;
  bad.p = VectorXd::Ones(1);
  bad.block.Q = MatrixXd::Ones(1, 1);
  bad.block.R = MatrixXd::Zero(1, 1);
  bad.block.u = VectorXd::Zero(1);
  bad.block.v = VectorXd::Zero(1);
  bad.S = MatrixXd::Zero(1, 0);
  bad.w = VectorXd::Zero(0);
  bad.cone = ConeSpec::free(1);
  const Phase1Result cert = phase1(bad);
  CHECK(cert.status == Phase1Status::Infeasible);
  const Solution sol = solve_primal(bad);
  CHECK(sol.status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("random strictly feasible instances reach small certified gaps") {
  Rng rng(31);
  int solved = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = random_cgp(rng);
    SolverConfig cfg;
    cfg.tol = 1e-8;
    const Solution sol = solve_primal(inst.problem, cfg);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(std::abs(sol.gap) <= 1e-6);
    // weak duality against the known feasible point
    CHECK(inst.problem.p.dot(inst.strict_point) >= sol.dual_obj - 1e-7);
    // multipliers respect their signs
    if (sol.nu.size() > 0) CHECK(sol.nu.minCoeff() >= 0);
    if (sol.lambda.size() > 0) CHECK(sol.lambda.minCoeff() >= 0);
    CHECK(dual_cone(inst.problem.cone).contains(sol.mu, 1e-7));
    ++solved;
  }
  CHECK(solved == 30);
}

TEST_CASE("weak duality holds along the whole trace") {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_cgp(rng);
    const Solution sol = solve_primal(inst.problem);
    REQUIRE(sol.status == SolveStatus::Optimal);
    for (const auto& rec : sol.trace) CHECK(rec.primal_obj >= rec.dual_obj - 1e-9);
  }
}

TEST_CASE("entropy solver on the simplex relative-entropy example") {
  // max -D(nu, e*1) s.t. 1'nu = 1, nu >= 0 (k = 2): optimum nu = (1/2, 1/2),
  // value 1 - log(1/2).
  EntropyProblem E;
  E.k = 2;
  E.m = 0;
  E.u = VectorXd::Zero(2);
  E.v = VectorXd::Zero(2);
  E.w = VectorXd::Zero(0);
  E.Q = MatrixXd::Ones(1, 2);
  E.R = MatrixXd::Zero(1, 2);
  E.S = MatrixXd::Zero(1, 0);
  E.p = VectorXd::Constant(1, -1.0);
  E.cone = ConeSpec::zero(1);
  E.second_arg_fixed = true;
  E.fixed_second_arg = VectorXd::Constant(2, kE);
  const Solution sol = solve_entropy(E);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_obj == doctest::Approx(1 - std::log(0.5)).epsilon(1e-6));
  CHECK(sol.nu(0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(sol.nu(1) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("entropy solver reproduces LP duality") {
  const EntropyProblem D = build_dual(simple_lp());
  const Solution sol = solve_entropy(D);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.primal_obj == doctest::Approx(1).epsilon(1e-7));
}

TEST_CASE("primal and mechanical dual agree on random instances") {
  Rng rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    auto inst = random_cgp(rng);
    const Solution ps = solve_primal(inst.problem);
    REQUIRE(ps.status == SolveStatus::Optimal);
    const Solution ds = solve_entropy(build_dual(inst.problem));
    REQUIRE(ds.status == SolveStatus::Optimal);
    CHECK(std::abs(ps.primal_obj - ds.primal_obj) <= 1e-6 * (1 + std::abs(ps.primal_obj)));
  }
}

TEST_CASE("identical inputs produce identical iterate traces") {
  Rng rng(43);
  auto inst = random_cgp(rng);
  const Solution a = solve_primal(inst.problem);
  const Solution b = solve_primal(inst.problem);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].t == b.trace[i].t);
    CHECK(a.trace[i].decrement == b.trace[i].decrement);
    CHECK(a.trace[i].primal_obj == b.trace[i].primal_obj);
  }
}

TEST_CASE("newton decrement decreases within each centering") {
  // Indirect proxy: every centering in the trace finished within the cap and
  // the final decrements are below the loose threshold.
  Rng rng(47);
  auto inst = random_cgp(rng);
  SolverConfig cfg;
  const Solution sol = solve_primal(inst.problem, cfg);
  REQUIRE(sol.status == SolveStatus::Optimal);
  for (const auto& rec : sol.trace) {
    CHECK(rec.newton_steps <= cfg.max_newton_per_center);
    CHECK(rec.decrement <= 0.25);
  }
}

TEST_CASE("solver rejects invalid problems") {
  CgpProblem P = simple_lp();
  P.cone = ConeSpec::orthant(3);
  CHECK_THROWS_AS(solve_primal(P), std::invalid_argument);
}
