#pragma once

#include <vector>

#include "cgp/model.hpp"
#include "cgp/rng.hpp"

namespace cgp::testutil {

inline VectorXd sample_in_cone(const ConeSpec& cone, Rng& rng) {
  switch (cone.kind()) {
    case ConeKind::Free: {
      VectorXd x(cone.dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.gaussian();
      return x;
    }
    case ConeKind::Zero: return VectorXd::Zero(cone.dim());
    case ConeKind::Orthant: {
      VectorXd x(cone.dim());
      for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(0.3, 2);
      return x;
    }
    case ConeKind::SecondOrder: {
      VectorXd x(cone.dim());
      for (int i = 1; i < x.size(); ++i) x(i) = 0.5 * rng.gaussian();
      const double tail = cone.dim() > 1 ? x.tail(cone.dim() - 1).norm() : 0.0;
      x(0) = tail + rng.uniform(0.2, 1.5);
      return x;
    }
    case ConeKind::PsdMat: {
      const int s = cone.side();
      MatrixXd A(s, s);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) A(i, j) = 0.6 * rng.gaussian();
      MatrixXd M = A * A.transpose();
      M += rng.uniform(0.1, 0.6) * MatrixXd::Identity(s, s);
      return sym_to_vec(M);
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

struct RandomCgp {
  CgpProblem problem;
  VectorXd strict_point;
};

/// Random strictly feasible, compact-feasible-set instance: the cone point
/// is sampled first and the data are fitted around it; one normalization
/// equality per cone factor keeps the feasible set bounded.
inline RandomCgp random_cgp(Rng& rng, int cone_choice = -1) {
  std::vector<ConeSpec> menu = {
      ConeSpec::orthant(rng.uniform_int(2, 8)),
      ConeSpec::second_order(rng.uniform_int(2, 6)),
      ConeSpec::psd(rng.uniform_int(2, 4)),
      ConeSpec::product({ConeSpec::orthant(rng.uniform_int(1, 3)),
                         ConeSpec::second_order(rng.uniform_int(2, 4))}),
      ConeSpec::product({ConeSpec::orthant(2), ConeSpec::psd(2)}),
  };
  const ConeSpec cone =
      menu[cone_choice >= 0 ? cone_choice % menu.size() : rng.next_u64() % menu.size()];
  const int n = cone.dim();
  const VectorXd x0 = sample_in_cone(cone, rng);

  RandomCgp out;
  CgpProblem& P = out.problem;
  P.n = n;
  P.cone = cone;
  P.p = VectorXd(n);
  for (int i = 0; i < n; ++i) P.p(i) = rng.gaussian();

  const int k = rng.uniform_int(0, 5);
  P.block.Q = MatrixXd(n, k);
  P.block.R = MatrixXd(n, k);
  P.block.u = VectorXd(k);
  P.block.v = VectorXd(k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) {
      P.block.Q(i, j) = 0.5 * rng.gaussian();
      P.block.R(i, j) = 0.5 * rng.gaussian();
    }
    P.block.u(j) = rng.uniform(-0.5, 0.5);
    const double expo = P.block.Q.col(j).dot(x0) - P.block.u(j);
    P.block.v(j) = std::exp(expo) + P.block.R.col(j).dot(x0) + rng.uniform(0.2, 1.0);
  }

  // Normalization rows (bounded feasible set) plus a couple of random ties.
  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  cone.visit_leaves([&](int off, const ConeSpec& leaf) {
    VectorXd row = VectorXd::Zero(n);
    switch (leaf.kind()) {
      case ConeKind::Orthant:
        for (int i = 0; i < leaf.dim(); ++i) row(off + i) = 1.0;
        break;
      case ConeKind::SecondOrder: row(off) = 1.0; break;
      case ConeKind::PsdMat: {
        int idx = off;
        for (int c = 0; c < leaf.side(); ++c) {
          row(idx) = 1.0;  // diagonal svec coordinates
          idx += leaf.side() - c;
        }
        break;
      }
      default: return;
    }
    rows.push_back(row);
    rhs.push_back(row.dot(x0));
  });
  const int extra = rng.uniform_int(0, 1);
  for (int e = 0; e < extra; ++e) {
    VectorXd row(n);
    for (int i = 0; i < n; ++i) row(i) = 0.4 * rng.gaussian();
    rows.push_back(row);
    rhs.push_back(row.dot(x0));
  }
  P.S = MatrixXd(n, static_cast<int>(rows.size()));
  P.w = VectorXd(static_cast<int>(rows.size()));
  for (size_t j = 0; j < rows.size(); ++j) {
    P.S.col(static_cast<int>(j)) = rows[j];
    P.w(static_cast<int>(j)) = rhs[j];
  }
  out.strict_point = x0;
  return out;
}

}  // namespace cgp::testutil
