#include <doctest.h>

#include <cmath>

#include "cgp/model.hpp"
#include "cgp/rng.hpp"

using namespace cgp;

namespace {

// Cone-specific interior samplers for the duality pairing property.
VectorXd sample_in_cone(const ConeSpec& cone, Rng& rng) {
  switch (cone.kind()) {
    case ConeKind::Free: {
      VectorXd x(cone.dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.gaussian();
      return x;
    }
    case ConeKind::Zero: return VectorXd::Zero(cone.dim());
    case ConeKind::Orthant: {
      VectorXd x(cone.dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(0, 2);
      return x;
    }
    case ConeKind::SecondOrder: {
      VectorXd x(cone.dim());
      for (int i = 1; i < x.size(); ++i) x(i) = rng.gaussian();
      const double tail = cone.dim() > 1 ? x.tail(cone.dim() - 1).norm() : 0.0;
      x(0) = tail + rng.uniform(0, 1);
      return x;
    }
    case ConeKind::PsdMat: {
      const int s = cone.side();
      MatrixXd A(s, s);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) A(i, j) = rng.gaussian();
      return sym_to_vec(MatrixXd(A * A.transpose()));
    }
    case ConeKind::Product: {
      VectorXd x(cone.dim());
      int off = 0;
      for (const auto& f : cone.factors()) {
        x.segment(off, f.dim()) = sample_in_cone(f, rng);
        off += f.dim();
      }
      return x;
    }
  }
  return VectorXd();
}

}  // namespace

TEST_CASE("dual cones of the basic variants") {
  CHECK(dual_cone(ConeSpec::orthant(5)).structurally_equal(ConeSpec::orthant(5)));
  CHECK(dual_cone(ConeSpec::second_order(3)).structurally_equal(ConeSpec::second_order(3)));
  CHECK(dual_cone(ConeSpec::psd(3)).structurally_equal(ConeSpec::psd(3)));
  // dual of all of R^n is the zero cone
  const ConeSpec zero = dual_cone(ConeSpec::free(2));
  CHECK(zero.kind() == ConeKind::Zero);
  CHECK(zero.dim() == 2);
  CHECK(zero.contains(VectorXd::Zero(2)));
  CHECK_FALSE(zero.contains(VectorXd::Ones(2)));
}

TEST_CASE("dual of dual is structurally the identity") {
  std::vector<ConeSpec> cones = {
      ConeSpec::free(2), ConeSpec::zero(1), ConeSpec::orthant(4),
      ConeSpec::second_order(3), ConeSpec::psd(2),
      ConeSpec::product({ConeSpec::orthant(2), ConeSpec::psd(2), ConeSpec::free(1)})};
  for (const auto& K : cones) CHECK(dual_cone(dual_cone(K)).structurally_equal(K));
}

TEST_CASE("pairing between sampled cone and dual cone points") {
  Rng rng(7);
  std::vector<ConeSpec> cones = {
      ConeSpec::orthant(4), ConeSpec::second_order(5), ConeSpec::psd(3),
      ConeSpec::product({ConeSpec::orthant(2), ConeSpec::second_order(3), ConeSpec::psd(2)}),
      ConeSpec::free(3), ConeSpec::zero(2)};
  for (const auto& K : cones) {
    const ConeSpec Kd = dual_cone(K);
    for (int trial = 0; trial < 200; ++trial) {
      const VectorXd x = sample_in_cone(K, rng);
      const VectorXd y = sample_in_cone(Kd, rng);
      CHECK(x.dot(y) >= -1e-12);
    }
  }
}

TEST_CASE("cone membership and interior points") {
  const ConeSpec soc = ConeSpec::second_order(3);
  VectorXd in(3);
  in << 2, 1, 1;
  VectorXd out(3);
  out << 1, 1, 1;
  CHECK(soc.contains(in));
  CHECK_FALSE(soc.contains(out));
  CHECK(soc.contains(soc.interior_point()));

  const ConeSpec psd = ConeSpec::psd(3);
  CHECK(psd.contains(psd.interior_point()));
  MatrixXd indef = MatrixXd::Identity(3, 3);
  indef(0, 0) = -1;
  CHECK_FALSE(psd.contains(sym_to_vec(indef)));

  const ConeSpec prod = ConeSpec::product({ConeSpec::orthant(2), ConeSpec::psd(2)});
  CHECK(prod.dim() == 5);
  CHECK(prod.contains(prod.interior_point()));
  CHECK(prod.barrier_parameter() == doctest::Approx(4));
}

TEST_CASE("sym_to_vec identity and isometry examples") {
  const VectorXd v = sym_to_vec(MatrixXd::Identity(2, 2));
  CHECK(v.size() == 3);
  CHECK(v(0) == doctest::Approx(1));
  CHECK(v(1) == doctest::Approx(0));
  CHECK(v(2) == doctest::Approx(1));
  CHECK(v.dot(v) == doctest::Approx(2));  // trace(I * I)

  MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  const VectorXd fv = sym_to_vec(flip);
  CHECK(fv(1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(fv.squaredNorm() == doctest::Approx(2));  // trace(M^2)
}

TEST_CASE("sym_to_vec round trip on a random symmetric matrix") {
  Rng rng(11);
  MatrixXd A(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) A(i, j) = rng.gaussian();
  const MatrixXd S = 0.5 * (A + A.transpose());
  const MatrixXd back = vec_to_sym(sym_to_vec(S));
  CHECK((back - S).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("sym_to_vec isometry property on random pairs") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.uniform_int(1, 5);
    MatrixXd A(n, n), B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        A(i, j) = rng.gaussian();
        B(i, j) = rng.gaussian();
      }
    const MatrixXd As = 0.5 * (A + A.transpose());
    const MatrixXd Bs = 0.5 * (B + B.transpose());
    const double lhs = sym_to_vec(As).dot(sym_to_vec(Bs));
    const double rhs = (As * Bs).trace();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * As.norm() * Bs.norm() + 1e-14);
  }
}

TEST_CASE("sym_to_vec rejects non-symmetric input") {
  MatrixXd M(2, 2);
  M << 1, 2, 3, 4;
  CHECK_THROWS_AS(sym_to_vec(M), std::invalid_argument);
}

TEST_CASE("validate accepts a well-formed problem") {
  CgpProblem P;
  P.n = 2;
  P.p = VectorXd::Ones(2);
  P.block.Q = MatrixXd::Ones(2, 1);
  P.block.R = MatrixXd::Zero(2, 1);
  P.block.u = VectorXd::Zero(1);
  P.block.v = VectorXd::Ones(1);
  P.S = MatrixXd::Zero(2, 0);
  P.w = VectorXd::Zero(0);
  P.cone = ConeSpec::orthant(2);
  CHECK(validate(P).empty());
}

TEST_CASE("validate names the offending field") {
  CgpProblem P;
  P.n = 2;
  P.p = VectorXd::Ones(2);
  P.block.Q = MatrixXd::Ones(2, 1);
  P.block.R = MatrixXd::Ones(2, 2);  // shape clash with Q
  P.block.u = VectorXd::Zero(1);
  P.block.v = VectorXd::Ones(2);
  P.S = MatrixXd::Zero(2, 0);
  P.w = VectorXd::Zero(0);
  P.cone = ConeSpec::orthant(2);
  auto violations = validate(P);
  REQUIRE(!violations.empty());
  CHECK(violations.front() == "Q/R shape mismatch");

  P.block.R = MatrixXd::Zero(2, 1);
  P.block.v = VectorXd::Ones(1);
  P.cone = ConeSpec::orthant(3);
  violations = validate(P);
  REQUIRE(!violations.empty());
  CHECK(violations.front() == "cone dim ≠ n");
}

TEST_CASE("conic set membership") {
  // {x >= 0 : 1 - x1 - x2 >= 0}, the triangle
  ConicSetDesc d;
  d.dim = 2;
  d.nonneg = true;
  d.g = VectorXd::Ones(1);
  d.F = MatrixXd::Constant(1, 2, -1.0);
  d.cone = ConeSpec::orthant(1);
  VectorXd x(2);
  x << 0.25, 0.5;
  CHECK(d.member(x));
  x << 0.75, 0.5;
  CHECK_FALSE(d.member(x));
  x << -0.1, 0.1;
  CHECK_FALSE(d.member(x));
}

TEST_CASE("counter rng reproduces streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng g(3);
  double mean = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += g.gaussian();
  CHECK(std::abs(mean / n) < 0.03);
}
