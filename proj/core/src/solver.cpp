#include "cgp/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgp/duality.hpp"

namespace cgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMachEps = 2.220446049250313e-16;

double safe_exp(double x) { return std::exp(std::min(x, 600.0)); }

void svec_into(const MatrixXd& M, Eigen::Ref<VectorXd> out) {
  const int n = static_cast<int>(M.rows());
  const double s2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) out(idx++) = (i == j) ? M(i, j) : s2 * M(i, j);
}

MatrixXd unsvec(const Eigen::Ref<const VectorXd>& v, int side) {
  MatrixXd M(side, side);
  const double inv_s2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      const double x = (i == j) ? v(idx) : v(idx) * inv_s2;
      M(i, j) = x;
      M(j, i) = x;
      ++idx;
    }
  return M;
}

VectorXd psd_shift_direction(int side) {
  VectorXd e = VectorXd::Zero(side * (side + 1) / 2);
  int idx = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      if (i == j) e(idx) = 1.0;
      ++idx;
    }
  return e;
}

// Neumaier-compensated evaluation: the argument of an active log term is a
// near-cancelling sum (magnitude ~1/t against O(1) addends), and multiplier
// recovery divides by it, so plain summation would cap the attainable dual
// accuracy.
double affine_log_arg(const AffineLogTerm& term, const VectorXd& X) {
  double sum = term.b;
  double comp = 0;
  for (const auto& [i, c] : term.a) {
    const double v = c * X(i);
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

// ---------------------------------------------------------------------------
// BarrierSpec evaluation
// ---------------------------------------------------------------------------

bool BarrierSpec::in_domain(const VectorXd& X) const {
  for (const auto& term : affine_logs)
    if (!(affine_log_arg(term, X) > 0)) return false;
  for (const auto& term : exp_pairs) {
    const double z = X(term.z_index);
    if (!(z < 0)) return false;
    if (!(std::log(-z) - X(term.y_index) > 0)) return false;
  }
  for (const auto& blk : soc_blocks) {
    VectorXd v = X.segment(blk.offset, blk.dim);
    if (blk.shift_var >= 0) v(0) += X(blk.shift_var);
    const double tail2 = blk.dim > 1 ? v.tail(blk.dim - 1).squaredNorm() : 0.0;
    if (!(v(0) > 0) || !(v(0) * v(0) - tail2 > 0)) return false;
  }
  for (const auto& blk : psd_blocks) {
    MatrixXd M = unsvec(X.segment(blk.offset, svec_dim(blk.side)), blk.side);
    if (blk.shift_var >= 0) M.diagonal().array() += X(blk.shift_var);
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) return false;
    if (llt.matrixLLT().diagonal().minCoeff() <= 0) return false;
  }
  return true;
}

double BarrierSpec::value(const VectorXd& X) const {
  double total = 0;
  for (const auto& term : affine_logs) {
    const double g = affine_log_arg(term, X);
    if (!(g > 0)) throw std::domain_error("barrier: affine term outside domain");
    total -= std::log(g);
  }
  for (const auto& term : exp_pairs) {
    const double z = X(term.z_index);
    if (!(z < 0)) throw std::domain_error("barrier: z not negative");
    const double gap = std::log(-z) - X(term.y_index);
    if (!(gap > 0)) throw std::domain_error("barrier: exponential pair outside domain");
    total -= std::log(gap);
  }
  for (const auto& blk : soc_blocks) {
    VectorXd v = X.segment(blk.offset, blk.dim);
    if (blk.shift_var >= 0) v(0) += X(blk.shift_var);
    const double tail2 = blk.dim > 1 ? v.tail(blk.dim - 1).squaredNorm() : 0.0;
    const double s = v(0) * v(0) - tail2;
    if (!(v(0) > 0) || !(s > 0)) throw std::domain_error("barrier: outside second-order cone");
    total -= std::log(s);
  }
  for (const auto& blk : psd_blocks) {
    MatrixXd M = unsvec(X.segment(blk.offset, svec_dim(blk.side)), blk.side);
    if (blk.shift_var >= 0) M.diagonal().array() += X(blk.shift_var);
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 0)
      throw std::domain_error("barrier: outside psd cone");
    total -= 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  return total;
}

void BarrierSpec::add_gradient(const VectorXd& X, VectorXd& g) const {
  for (const auto& term : affine_logs) {
    const double inv = 1.0 / affine_log_arg(term, X);
    for (const auto& [i, c] : term.a) g(i) -= c * inv;
  }
  for (const auto& term : exp_pairs) {
    const double z = X(term.z_index);
    const double gap = std::log(-z) - X(term.y_index);
    g(term.y_index) += 1.0 / gap;
    g(term.z_index) -= 1.0 / (gap * z);
  }
  for (const auto& blk : soc_blocks) {
    VectorXd v = X.segment(blk.offset, blk.dim);
    if (blk.shift_var >= 0) v(0) += X(blk.shift_var);
    const double tail2 = blk.dim > 1 ? v.tail(blk.dim - 1).squaredNorm() : 0.0;
    const double s = v(0) * v(0) - tail2;
    VectorXd gv(blk.dim);
    gv(0) = -2.0 * v(0) / s;
    if (blk.dim > 1) gv.tail(blk.dim - 1) = 2.0 * v.tail(blk.dim - 1) / s;
    g.segment(blk.offset, blk.dim) += gv;
    if (blk.shift_var >= 0) g(blk.shift_var) += gv(0);
  }
  for (const auto& blk : psd_blocks) {
    const int d = svec_dim(blk.side);
    MatrixXd M = unsvec(X.segment(blk.offset, d), blk.side);
    if (blk.shift_var >= 0) M.diagonal().array() += X(blk.shift_var);
    MatrixXd Minv = M.llt().solve(MatrixXd::Identity(blk.side, blk.side));
    VectorXd gv(d);
    svec_into(-Minv, gv);
    g.segment(blk.offset, d) += gv;
    if (blk.shift_var >= 0) g(blk.shift_var) -= Minv.trace();
  }
}

void BarrierSpec::add_hessian(const VectorXd& X, MatrixXd& H) const {
  for (const auto& term : affine_logs) {
    const double g = affine_log_arg(term, X);
    const double w = 1.0 / (g * g);
    for (const auto& [i, ci] : term.a)
      for (const auto& [j, cj] : term.a) H(i, j) += w * ci * cj;
  }
  for (const auto& term : exp_pairs) {
    const int y = term.y_index, z = term.z_index;
    const double zv = X(z);
    const double gap = std::log(-zv) - X(y);
    const double ib = 1.0 / gap, iz = 1.0 / zv;
    H(y, y) += ib * ib;
    H(y, z) += -ib * ib * iz;
    H(z, y) += -ib * ib * iz;
    H(z, z) += iz * iz * (ib * ib + ib);
  }
  for (const auto& blk : soc_blocks) {
    VectorXd v = X.segment(blk.offset, blk.dim);
    if (blk.shift_var >= 0) v(0) += X(blk.shift_var);
    const double tail2 = blk.dim > 1 ? v.tail(blk.dim - 1).squaredNorm() : 0.0;
    const double s = v(0) * v(0) - tail2;
    VectorXd grad_s(blk.dim);
    grad_s(0) = 2.0 * v(0);
    if (blk.dim > 1) grad_s.tail(blk.dim - 1) = -2.0 * v.tail(blk.dim - 1);
    MatrixXd Hv = (grad_s * grad_s.transpose()) / (s * s);
    Hv(0, 0) -= 2.0 / s;
    for (int i = 1; i < blk.dim; ++i) Hv(i, i) += 2.0 / s;
    H.block(blk.offset, blk.offset, blk.dim, blk.dim) += Hv;
    if (blk.shift_var >= 0) {
      const int sv = blk.shift_var;
      for (int i = 0; i < blk.dim; ++i) {
        H(blk.offset + i, sv) += Hv(i, 0);
        H(sv, blk.offset + i) += Hv(0, i);
      }
      H(sv, sv) += Hv(0, 0);
    }
  }
  for (const auto& blk : psd_blocks) {
    const int d = svec_dim(blk.side);
    MatrixXd M = unsvec(X.segment(blk.offset, d), blk.side);
    if (blk.shift_var >= 0) M.diagonal().array() += X(blk.shift_var);
    MatrixXd Minv = M.llt().solve(MatrixXd::Identity(blk.side, blk.side));
    MatrixXd Hv(d, d);
    const double inv_s2 = 1.0 / std::sqrt(2.0);
    int a = 0;
    VectorXd col(d);
    for (int j = 0; j < blk.side; ++j)
      for (int i = j; i < blk.side; ++i) {
        MatrixXd Xa;
        if (i == j) {
          Xa = Minv.col(i) * Minv.row(i);
        } else {
          Xa = inv_s2 * (Minv.col(i) * Minv.row(j) + Minv.col(j) * Minv.row(i));
        }
        svec_into(Xa, col);
        Hv.col(a++) = col;
      }
    H.block(blk.offset, blk.offset, d, d) += Hv;
    if (blk.shift_var >= 0) {
      const int sv = blk.shift_var;
      const VectorXd e = psd_shift_direction(blk.side);
      const VectorXd cross = Hv * e;
      for (int i = 0; i < d; ++i) {
        H(blk.offset + i, sv) += cross(i);
        H(sv, blk.offset + i) += cross(i);
      }
      H(sv, sv) += e.dot(cross);
    }
  }
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

CanonicalBarrierProblem canonicalize(const CgpProblem& problem) {
  const auto violations = validate(problem);
  if (!violations.empty())
    throw std::invalid_argument("canonicalize: invalid problem: " + violations.front());

  const int n = problem.n;
  const int k = problem.k();
  CanonicalBarrierProblem cbp;
  cbp.n = n;
  cbp.k = k;
  cbp.num_vars = n + 2 * k;
  cbp.cone = problem.cone;
  cbp.objective = VectorXd::Zero(cbp.num_vars);
  cbp.objective.head(n) = problem.p;

  BarrierSpec& bp = cbp.barrier;
  bp.num_vars = cbp.num_vars;

  for (int i = 0; i < k; ++i) {
    const int yi = cbp.y_offset() + i;
    const int zi = cbp.z_offset() + i;
    AffineLogTerm c_term;
    c_term.a.emplace_back(yi, 1.0);
    for (int j = 0; j < n; ++j)
      if (problem.block.Q(j, i) != 0) c_term.a.emplace_back(j, -problem.block.Q(j, i));
    c_term.b = problem.block.u(i);
    cbp.row_c_term.push_back(static_cast<int>(bp.affine_logs.size()));
    bp.affine_logs.push_back(std::move(c_term));

    AffineLogTerm d_term;
    d_term.a.emplace_back(zi, 1.0);
    for (int j = 0; j < n; ++j)
      if (problem.block.R(j, i) != 0) d_term.a.emplace_back(j, -problem.block.R(j, i));
    d_term.b = problem.block.v(i);
    cbp.row_d_term.push_back(static_cast<int>(bp.affine_logs.size()));
    bp.affine_logs.push_back(std::move(d_term));

    AffineLogTerm neg_z;  // z <= 0; not relaxed, it guards the pair term's log
    neg_z.a.emplace_back(zi, -1.0);
    neg_z.shiftable = false;
    bp.affine_logs.push_back(std::move(neg_z));

    bp.exp_pairs.push_back(ExpPairTerm{yi, zi});
    bp.theta += 4;
  }

  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> eq_rows;
  problem.cone.visit_leaves([&](int off, const ConeSpec& leaf) {
    switch (leaf.kind()) {
      case ConeKind::Free: break;
      case ConeKind::Zero:
        for (int j = 0; j < leaf.dim(); ++j) {
          eq_rows.push_back({{{off + j, 1.0}}, 0.0});
          cbp.eq_row_source.push_back(-1 - (off + j));
        }
        break;
      case ConeKind::Orthant:
        for (int j = 0; j < leaf.dim(); ++j) {
          AffineLogTerm t;
          t.a.emplace_back(off + j, 1.0);
          bp.affine_logs.push_back(std::move(t));
          bp.theta += 1;
        }
        break;
      case ConeKind::SecondOrder:
        bp.soc_blocks.push_back(SocBlockTerm{off, leaf.dim()});
        bp.theta += 2;
        break;
      case ConeKind::PsdMat:
        bp.psd_blocks.push_back(PsdBlockTerm{off, leaf.side()});
        bp.theta += leaf.side();
        break;
      case ConeKind::Product: break;  // visit_leaves never yields products
    }
  });

  const int m = problem.m();
  const int n_eq = m + static_cast<int>(eq_rows.size());
  bp.A = MatrixXd::Zero(n_eq, cbp.num_vars);
  bp.b = VectorXd::Zero(n_eq);
  std::vector<int> sources;
  for (int j = 0; j < m; ++j) {
    bp.A.row(j).head(n) = problem.S.col(j).transpose();
    bp.b(j) = problem.w(j);
    sources.push_back(j);
  }
  for (size_t r = 0; r < eq_rows.size(); ++r) {
    for (const auto& [i, c] : eq_rows[r].first) bp.A(m + static_cast<int>(r), i) = c;
    bp.b(m + static_cast<int>(r)) = eq_rows[r].second;
    sources.push_back(cbp.eq_row_source[r]);
  }
  cbp.eq_row_source = std::move(sources);
  return cbp;
}

BarrierEval barrier_eval(const CanonicalBarrierProblem& cbp, const VectorXd& point) {
  if (point.size() != cbp.num_vars)
    throw std::invalid_argument("barrier_eval: point dimension mismatch");
  BarrierEval out;
  out.value = cbp.barrier.value(point);  // throws outside the domain
  out.gradient = VectorXd::Zero(cbp.num_vars);
  cbp.barrier.add_gradient(point, out.gradient);
  out.hessian = MatrixXd::Zero(cbp.num_vars, cbp.num_vars);
  cbp.barrier.add_hessian(point, out.hessian);
  return out;
}

VectorXd lift_point(const CgpProblem& problem, const VectorXd& x) {
  const int n = problem.n, k = problem.k();
  if (x.size() != n) throw std::invalid_argument("lift_point: x dimension mismatch");
  VectorXd X = VectorXd::Zero(n + 2 * k);
  X.head(n) = x;
  for (int i = 0; i < k; ++i) {
    const double e = problem.block.Q.col(i).dot(x) - problem.block.u(i);
    const double a = problem.block.R.col(i).dot(x) - problem.block.v(i);
    if (e > 600 || !(safe_exp(e) + a < 0))
      throw std::invalid_argument("lift_point: x is not strictly feasible");
    const double z = 0.5 * (a - std::exp(e));
    X(n + k + i) = z;
    X(n + i) = 0.5 * (e + std::log(-z));
  }
  return X;
}

// ---------------------------------------------------------------------------
// Smooth objectives
// ---------------------------------------------------------------------------

namespace {

struct SmoothObjective {
  virtual ~SmoothObjective() = default;
  virtual double value(const VectorXd& X) const = 0;
  virtual void add_gradient(const VectorXd& X, VectorXd& g) const = 0;
  virtual void add_hessian(const VectorXd& X, MatrixXd& H) const = 0;
};

struct LinearObjective final : SmoothObjective {
  VectorXd c;
  explicit LinearObjective(VectorXd cv) : c(std::move(cv)) {}
  double value(const VectorXd& X) const override { return c.dot(X); }
  void add_gradient(const VectorXd&, VectorXd& g) const override { g += c; }
  void add_hessian(const VectorXd&, MatrixXd&) const override {}
};

/// Minimized form of the entropy objective:
///   variable mode: sum_i nu_i (log nu_i - log lambda_i - 1) + lin'X - c0
///   fixed mode:    sum_i nu_i (log nu_i - log bar_i)        + lin'X - c0
struct EntropyMinObjective final : SmoothObjective {
  int k = 0;
  int nu_off = 0;
  int lam_off = -1;  // -1 in fixed mode
  VectorXd log_fixed;
  VectorXd lin;
  double c0 = 0;

  double value(const VectorXd& X) const override {
    double f = lin.dot(X) - c0;
    for (int i = 0; i < k; ++i) {
      const double nu = X(nu_off + i);
      if (lam_off >= 0) {
        f += nu * (std::log(nu) - std::log(X(lam_off + i)) - 1.0);
      } else {
        f += nu * (std::log(nu) - log_fixed(i));
      }
    }
    return f;
  }

  void add_gradient(const VectorXd& X, VectorXd& g) const override {
    g += lin;
    for (int i = 0; i < k; ++i) {
      const double nu = X(nu_off + i);
      if (lam_off >= 0) {
        const double lam = X(lam_off + i);
        g(nu_off + i) += std::log(nu) - std::log(lam);
        g(lam_off + i) += -nu / lam;
      } else {
        g(nu_off + i) += std::log(nu) - log_fixed(i) + 1.0;
      }
    }
  }

  void add_hessian(const VectorXd& X, MatrixXd& H) const override {
    for (int i = 0; i < k; ++i) {
      const double nu = X(nu_off + i);
      H(nu_off + i, nu_off + i) += 1.0 / nu;
      if (lam_off >= 0) {
        const double lam = X(lam_off + i);
        H(nu_off + i, lam_off + i) += -1.0 / lam;
        H(lam_off + i, nu_off + i) += -1.0 / lam;
        H(lam_off + i, lam_off + i) += nu / (lam * lam);
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Path-following engine
// ---------------------------------------------------------------------------

enum class CenterCode { Converged, Stalled, NumericalFailure };

class PathEngine {
 public:
  PathEngine(const BarrierSpec& bp, const SmoothObjective& obj, const SolverConfig& cfg)
      : bp_(bp), obj_(obj), cfg_(cfg) {
    reduce_equalities();
  }

  bool init(VectorXd X0) {
    X_ = std::move(X0);
    if (!bp_.in_domain(X_)) return false;
    t_ = std::max(1.0, bp_.theta);
    omega_full_ = VectorXd::Zero(bp_.A.rows());
    return true;
  }

  CenterCode center(double ctol) {
    const int N = bp_.num_vars;
    const int mr = static_cast<int>(Ared_.rows());
    VectorXd g(N), rhs(N + mr), sol(N + mr);
    MatrixXd H(N, N), K(N + mr, N + mr);
    last_decrement_ = kInf;
    last_steps_ = 0;
    for (int it = 0; it < cfg_.max_newton_per_center; ++it) {
      g.setZero();
      obj_.add_gradient(X_, g);
      g *= t_;
      bp_.add_gradient(X_, g);
      H.setZero();
      obj_.add_hessian(X_, H);
      H *= t_;
      bp_.add_hessian(X_, H);
      // Relative damping only; an absolute shift would swamp the low-
      // curvature directions once the barrier Hessian grows with t.
      H.diagonal() *= 1.0 + 1e-14;

      rhs.head(N) = -g;
      if (mr > 0) rhs.tail(mr) = bred_ - Ared_ * X_;
      const double hscale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
      const double regs[] = {0.0, 1e-14, 1e-11, 1e-8};
      double res = kInf;
      for (int attempt = 0; attempt < 4 && !(res <= 1e-9); ++attempt) {
        K.setZero();
        K.topLeftCorner(N, N) = H;
        K.topLeftCorner(N, N).diagonal().array() += regs[attempt] * hscale;
        if (mr > 0) {
          K.topRightCorner(N, mr) = Ared_.transpose();
          K.bottomLeftCorner(mr, N) = Ared_;
        }
        Eigen::PartialPivLU<MatrixXd> lu(K);
        sol = lu.solve(rhs);
        for (int refine = 0; refine < 2; ++refine) sol += lu.solve(rhs - K * sol);
        res = sol.allFinite() ? (K * sol - rhs).lpNorm<Eigen::Infinity>() /
                                    std::max(1.0, rhs.lpNorm<Eigen::Infinity>())
                              : kInf;
      }
      if (!sol.allFinite() || res / kMachEps > cfg_.cond_limit)
        return CenterCode::NumericalFailure;

      const VectorXd d = sol.head(N);
      store_omega(sol.tail(mr));
      last_direction_ = d;
      const double lambda2 = std::max(0.0, d.dot(H.selfadjointView<Eigen::Lower>() * d));
      last_decrement_ = std::sqrt(lambda2);
      if (last_decrement_ <= ctol) return CenterCode::Converged;

      const double phi0 = t_ * obj_.value(X_) + bp_.value(X_);
      double alpha = 1.0;
      bool stepped = false;
      for (int ls = 0; ls < 90; ++ls) {
        VectorXd Xn = X_ + alpha * d;
        if (bp_.in_domain(Xn)) {
          const double phin = t_ * obj_.value(Xn) + bp_.value(Xn);
          if (phin <= phi0 - cfg_.armijo_slope * alpha * lambda2) {
            X_ = std::move(Xn);
            stepped = true;
            break;
          }
        }
        alpha *= cfg_.backtrack;
      }
      ++last_steps_;
      ++total_newton_;
      if (!stepped) return last_decrement_ < 1e-3 ? CenterCode::Converged : CenterCode::Stalled;
    }
    return last_decrement_ <= std::max(0.25, ctol) ? CenterCode::Converged : CenterCode::Stalled;
  }

  void advance(double t_cap = kInf) { t_ = std::min(t_ * cfg_.mu_factor, t_cap); }

  const VectorXd& X() const { return X_; }
  double t() const { return t_; }
  const VectorXd& omega() const { return omega_full_; }
  const VectorXd& last_direction() const { return last_direction_; }
  double decrement() const { return last_decrement_; }
  int steps_in_center() const { return last_steps_; }
  int total_newton() const { return total_newton_; }
  double eq_residual() const {
    return Ared_.rows() == 0 ? 0.0 : (Ared_ * X_ - bred_).lpNorm<Eigen::Infinity>();
  }
  bool equalities_consistent(const VectorXd& X0) const {
    if (bp_.A.rows() == 0) return true;
    return (bp_.A * X0 - bp_.b).lpNorm<Eigen::Infinity>() <=
           1e-7 * (1.0 + bp_.b.lpNorm<Eigen::Infinity>());
  }

 private:
  void reduce_equalities() {
    const auto rows = bp_.A.rows();
    if (rows == 0) return;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(bp_.A.transpose());
    const int r = static_cast<int>(qr.rank());
    selected_.clear();
    const auto& perm = qr.colsPermutation().indices();
    for (int i = 0; i < r; ++i) selected_.push_back(perm(i));
    std::sort(selected_.begin(), selected_.end());
    Ared_.resize(r, bp_.A.cols());
    bred_.resize(r);
    for (int i = 0; i < r; ++i) {
      Ared_.row(i) = bp_.A.row(selected_[i]);
      bred_(i) = bp_.b(selected_[i]);
    }
  }

  void store_omega(const Eigen::Ref<const VectorXd>& omega_red) {
    omega_full_.setZero();
    for (size_t i = 0; i < selected_.size(); ++i)
      omega_full_(selected_[i]) = omega_red(static_cast<int>(i));
  }

  const BarrierSpec& bp_;
  const SmoothObjective& obj_;
  SolverConfig cfg_;
  MatrixXd Ared_;
  VectorXd bred_;
  std::vector<int> selected_;
  VectorXd X_;
  VectorXd omega_full_;
  VectorXd last_direction_;
  double t_ = 1;
  double last_decrement_ = kInf;
  int last_steps_ = 0;
  int total_newton_ = 0;
};

// ---------------------------------------------------------------------------
// Phase I on an arbitrary barrier program
// ---------------------------------------------------------------------------

BarrierSpec make_phase1_spec(const BarrierSpec& bp) {
  BarrierSpec out = bp;
  const int s_index = bp.num_vars;
  out.num_vars = bp.num_vars + 1;
  for (auto& term : out.affine_logs)
    if (term.shiftable) term.a.emplace_back(s_index, 1.0);
  for (auto& blk : out.soc_blocks) blk.shift_var = s_index;
  for (auto& blk : out.psd_blocks) blk.shift_var = s_index;
  out.A = MatrixXd::Zero(bp.A.rows(), out.num_vars);
  out.A.leftCols(bp.num_vars) = bp.A;
  out.b = bp.b;
  return out;
}

struct BarrierPhase1Result {
  Phase1Status status = Phase1Status::NumericalFailure;
  VectorXd X;  // strictly feasible for the original spec when Feasible
  double slack = 0;
  int iterations = 0;
};

/// Minimizes the shared slack s over the relaxed program. `seed_point`
/// must satisfy the equalities; it need not be in the barrier domain.
BarrierPhase1Result barrier_phase1(const BarrierSpec& bp, const VectorXd& seed_point,
                                   const SolverConfig& cfg) {
  BarrierPhase1Result out;
  if (bp.empty()) {
    out.status = Phase1Status::Feasible;
    out.X = seed_point;
    out.slack = -1;
    return out;
  }
  const BarrierSpec relaxed = make_phase1_spec(bp);
  const int s_index = bp.num_vars;

  double s0 = 1.0;
  for (const auto& term : bp.affine_logs)
    if (term.shiftable) s0 = std::max(s0, 1.0 - affine_log_arg(term, seed_point));
  for (const auto& blk : bp.soc_blocks) {
    const VectorXd v = seed_point.segment(blk.offset, blk.dim);
    const double tail = blk.dim > 1 ? v.tail(blk.dim - 1).norm() : 0.0;
    s0 = std::max(s0, tail - v(0) + 1.0);
  }
  for (const auto& blk : bp.psd_blocks) {
    const MatrixXd M = unsvec(seed_point.segment(blk.offset, svec_dim(blk.side)), blk.side);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
    s0 = std::max(s0, 1.0 - es.eigenvalues().minCoeff());
  }

  VectorXd X0(relaxed.num_vars);
  X0.head(bp.num_vars) = seed_point;
  X0(s_index) = s0;
  for (int tries = 0; tries < 60 && !relaxed.in_domain(X0); ++tries) X0(s_index) *= 2.0;

  VectorXd c = VectorXd::Zero(relaxed.num_vars);
  c(s_index) = 1.0;
  LinearObjective obj(c);
  SolverConfig p1cfg = cfg;
  p1cfg.final_center_tol = std::min(cfg.final_center_tol, 1e-4);
  PathEngine engine(relaxed, obj, p1cfg);
  if (!engine.init(X0)) {
    out.status = Phase1Status::NumericalFailure;
    return out;
  }

  const double stop_level = -std::max(100.0 * cfg.feas_tol, 1e-6);
  const double gap_target = std::max(0.01 * cfg.feas_tol, 1e-12);
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const CenterCode code = engine.center(cfg.center_tol);
    out.iterations = engine.total_newton();
    if (code == CenterCode::NumericalFailure) {
      out.status = Phase1Status::NumericalFailure;
      return out;
    }
    const double s = engine.X()(s_index);
    if (s < stop_level || (code == CenterCode::Stalled && s < -cfg.feas_tol)) {
      out.status = Phase1Status::Feasible;
      out.X = engine.X().head(bp.num_vars);
      out.slack = s;
      return out;
    }
    if (code == CenterCode::Stalled) break;
    if (relaxed.theta / engine.t() <= gap_target * (1.0 + std::abs(s))) {
      out.slack = s;
      out.X = engine.X().head(bp.num_vars);
      out.status = s < -cfg.feas_tol ? Phase1Status::Feasible : Phase1Status::Infeasible;
      return out;
    }
    engine.advance();
  }
  out.slack = engine.X()(s_index);
  out.X = engine.X().head(bp.num_vars);
  out.status = out.slack < -cfg.feas_tol ? Phase1Status::Feasible : Phase1Status::IterationLimit;
  return out;
}

/// Minimal-norm solution of the equality system, or empty when inconsistent.
bool equality_seed(const BarrierSpec& bp, VectorXd& X0) {
  X0 = VectorXd::Zero(bp.num_vars);
  if (bp.A.rows() == 0) return true;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(bp.A);
  X0 = cod.solve(bp.b);
  return (bp.A * X0 - bp.b).lpNorm<Eigen::Infinity>() <=
         1e-7 * (1.0 + bp.b.lpNorm<Eigen::Infinity>());
}

/// Places y and z of every exponential row with unit margins on the pair and
/// negativity terms; the exponent is capped so that the remaining phase-I
/// slack requirement grows only linearly with large exponents.
void seed_exp_rows(const CgpProblem& problem, const CanonicalBarrierProblem& cbp,
                   VectorXd& X) {
  const VectorXd x = X.head(cbp.n);
  for (int i = 0; i < cbp.k; ++i) {
    const double e = problem.block.Q.col(i).dot(x) - problem.block.u(i);
    const double z = -std::exp(std::min(std::max(2.0, e + 2.0), 32.0));
    X(cbp.z_offset() + i) = z;
    X(cbp.y_offset() + i) = std::log(-z) - 1.0;
  }
}

struct RecoveredDuals {
  VectorXd nu, lambda, delta, mu;
  double dual_obj = 0;
  double dual_residual = 0;
};

// Multiplier recovery with a virtual Newton step: the slacks and the cone
// gradient are linearized along the last computed direction, which restores
// first-order accuracy once X-space increments fall below double resolution.
RecoveredDuals recover_duals(const CgpProblem& problem, const CanonicalBarrierProblem& cbp,
                             const VectorXd& X, double t, const VectorXd& omega,
                             const VectorXd& step = VectorXd()) {
  RecoveredDuals out;
  const int n = cbp.n, k = cbp.k, m = problem.m();
  const bool refine = step.size() == X.size();
  auto slack_at = [&](int term_index) {
    const AffineLogTerm& term = cbp.barrier.affine_logs[term_index];
    double g = affine_log_arg(term, X);
    if (refine)
      for (const auto& [i, c] : term.a) g += c * step(i);
    return g;
  };
  out.nu.resize(k);
  out.lambda.resize(k);
  for (int i = 0; i < k; ++i) {
    out.nu(i) = 1.0 / (t * slack_at(cbp.row_c_term[i]));
    out.lambda(i) = 1.0 / (t * slack_at(cbp.row_d_term[i]));
  }
  out.delta = VectorXd::Zero(m);
  VectorXd zero_mult = VectorXd::Zero(n);
  for (size_t r = 0; r < cbp.eq_row_source.size(); ++r) {
    const int src = cbp.eq_row_source[r];
    if (src >= 0)
      out.delta(src) = omega(static_cast<int>(r)) / t;
    else
      zero_mult(-1 - src) = omega(static_cast<int>(r));
  }

  // Cone multiplier from the barrier gradient of the cone terms only.
  VectorXd cone_grad = VectorXd::Zero(cbp.num_vars);
  BarrierSpec cone_only;
  cone_only.num_vars = cbp.num_vars;
  const int first_cone_log = 3 * k;  // rows contribute three affine logs each
  cone_only.affine_logs.assign(cbp.barrier.affine_logs.begin() + first_cone_log,
                               cbp.barrier.affine_logs.end());
  cone_only.soc_blocks = cbp.barrier.soc_blocks;
  cone_only.psd_blocks = cbp.barrier.psd_blocks;
  cone_only.add_gradient(X, cone_grad);
  if (refine) {
    MatrixXd cone_hess = MatrixXd::Zero(cbp.num_vars, cbp.num_vars);
    cone_only.add_hessian(X, cone_hess);
    cone_grad += cone_hess.selfadjointView<Eigen::Lower>() * step;
  }
  out.mu = -(cone_grad.head(n) + zero_mult) / t;

  const VectorXd x = X.head(n);
  out.dual_obj = -(conjugate_explin(out.nu, out.lambda) + problem.block.u.dot(out.nu) +
                   problem.block.v.dot(out.lambda) + problem.w.dot(out.delta));
  VectorXd station = problem.p - out.mu;
  if (k > 0) station += problem.block.Q * out.nu + problem.block.R * out.lambda;
  if (m > 0) station += problem.S * out.delta;
  out.dual_residual = station.lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// phase1 / solve_primal
// ---------------------------------------------------------------------------

Phase1Result phase1(const CgpProblem& problem, const SolverConfig& cfg) {
  const auto violations = validate(problem);
  if (!violations.empty())
    throw std::invalid_argument("phase1: invalid problem: " + violations.front());
  const CanonicalBarrierProblem cbp = canonicalize(problem);

  Phase1Result out;
  VectorXd seed;
  if (!equality_seed(cbp.barrier, seed)) {
    out.status = Phase1Status::Infeasible;
    out.slack = kInf;
    return out;
  }

  // The equality least-squares point is often already strictly feasible.
  try {
    VectorXd lifted = lift_point(problem, seed.head(cbp.n));
    if (cbp.barrier.in_domain(lifted)) {
      out.status = Phase1Status::Feasible;
      out.lifted = std::move(lifted);
      out.x = seed.head(cbp.n);
      out.slack = -1;
      return out;
    }
  } catch (const std::invalid_argument&) {
  }

  seed_exp_rows(problem, cbp, seed);
  const BarrierPhase1Result r = barrier_phase1(cbp.barrier, seed, cfg);
  out.status = r.status;
  out.slack = r.slack;
  out.iterations = r.iterations;
  if (r.status == Phase1Status::Feasible) {
    out.lifted = r.X;
    out.x = r.X.head(cbp.n);
  }
  return out;
}

Solution solve_primal(const CgpProblem& problem, const SolverConfig& cfg) {
  const auto violations = validate(problem);
  if (!violations.empty())
    throw std::invalid_argument("solve_primal: invalid problem: " + violations.front());

  Solution sol;
  const CanonicalBarrierProblem cbp = canonicalize(problem);
  const int n = cbp.n, k = cbp.k, m = problem.m();

  // No barrier content: the feasible set is an affine subspace.
  if (cbp.barrier.empty()) {
    VectorXd x0;
    if (!equality_seed(cbp.barrier, x0)) {
      sol.status = SolveStatus::PrimalInfeasible;
      sol.message = "inconsistent equality constraints";
      return sol;
    }
    VectorXd rhs = -problem.p;
    VectorXd delta = VectorXd::Zero(m);
    if (m > 0) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(problem.S);
      delta = cod.solve(rhs);
    }
    const double res = (problem.p + (m > 0 ? (problem.S * delta).eval()
                                           : VectorXd::Zero(n).eval()))
                           .lpNorm<Eigen::Infinity>();
    if (res > 1e-9 * (1.0 + problem.p.lpNorm<Eigen::Infinity>())) {
      sol.status = SolveStatus::DualInfeasible;
      sol.message = "objective unbounded below on the affine feasible set";
      return sol;
    }
    sol.status = SolveStatus::Optimal;
    sol.x = x0.head(n);
    sol.primal_obj = problem.p.dot(sol.x);
    sol.delta = delta;
    sol.dual_obj = m > 0 ? -problem.w.dot(delta) : 0.0;
    sol.gap = sol.primal_obj - sol.dual_obj;
    sol.nu = VectorXd::Zero(k);
    sol.lambda = VectorXd::Zero(k);
    sol.mu = VectorXd::Zero(n);
    return sol;
  }

  const Phase1Result ph1 = phase1(problem, cfg);
  if (ph1.status == Phase1Status::Infeasible) {
    sol.status = SolveStatus::PrimalInfeasible;
    sol.message = "phase I: no strictly feasible point (s* >= 0)";
    return sol;
  }
  if (ph1.status != Phase1Status::Feasible) {
    sol.status = ph1.status == Phase1Status::IterationLimit ? SolveStatus::IterationLimit
                                                            : SolveStatus::NumericalFailure;
    sol.message = "phase I did not converge";
    return sol;
  }

  LinearObjective obj(cbp.objective);
  PathEngine engine(cbp.barrier, obj, cfg);
  if (!engine.init(ph1.lifted)) {
    sol.status = SolveStatus::NumericalFailure;
    sol.message = "phase I point rejected by the barrier domain";
    return sol;
  }

  const double obj_scale = 1.0 + std::abs(problem.p.dot(ph1.x));
  // The path stops where the exactly-centered gap theta/t sits just under
  // the target; running t higher only erodes floating-point headroom.
  const double t_target = std::max(1.0, cbp.barrier.theta) / (0.5 * cfg.tol);
  bool converged = false;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const CenterCode code = engine.center(cfg.center_tol);
    if (code == CenterCode::NumericalFailure) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "KKT system beyond conditioning limit";
      sol.iterations = engine.total_newton();
      return sol;
    }
    const RecoveredDuals rd = recover_duals(problem, cbp, engine.X(), engine.t(),
                                            engine.omega(), engine.last_direction());
    const double pobj = problem.p.dot(engine.X().head(n));
    if (cfg.collect_trace) {
      IterationRecord rec;
      rec.t = engine.t();
      rec.newton_steps = engine.steps_in_center();
      rec.decrement = engine.decrement();
      rec.primal_obj = pobj;
      rec.dual_obj = rd.dual_obj;
      rec.gap_bound = cbp.barrier.theta / engine.t();
      rec.eq_residual = engine.eq_residual();
      rec.dual_residual = rd.dual_residual;
      sol.trace.push_back(rec);
    }
    if (pobj < -1e13 * obj_scale) {
      sol.status = SolveStatus::DualInfeasible;
      sol.message = "objective unbounded below";
      sol.iterations = engine.total_newton();
      return sol;
    }
    const double gap = pobj - rd.dual_obj;
    if (std::abs(gap) <= 0.9 * cfg.tol && rd.dual_residual <= cfg.tol &&
        cbp.barrier.theta / engine.t() <= 2.0 * cfg.tol) {
      converged = true;
      break;
    }
    if (engine.t() >= 0.999 * t_target) break;
    if (code == CenterCode::Stalled && outer > 4) break;
    engine.advance(t_target);
  }

  engine.center(std::min(cfg.final_center_tol, 0.1 * cfg.tol));
  const RecoveredDuals rd = recover_duals(problem, cbp, engine.X(), engine.t(),
                                          engine.omega(), engine.last_direction());
  sol.x = engine.X().head(n);
  sol.primal_obj = problem.p.dot(sol.x);
  sol.dual_obj = rd.dual_obj;
  sol.gap = sol.primal_obj - sol.dual_obj;
  sol.nu = rd.nu;
  sol.lambda = rd.lambda;
  sol.delta = rd.delta;
  sol.mu = rd.mu;
  sol.iterations = engine.total_newton();
  const bool certified = std::abs(sol.gap) <= 10.0 * cfg.tol &&
                         rd.dual_residual <= 10.0 * cfg.tol &&
                         engine.eq_residual() <= 1e4 * cfg.feas_tol;
  sol.status = (converged || certified) && certified ? SolveStatus::Optimal
                                                     : SolveStatus::IterationLimit;
  if (sol.status != SolveStatus::Optimal)
    sol.message = "stopped before certification (gap " + std::to_string(sol.gap) + ")";
  return sol;
}

// ---------------------------------------------------------------------------
// solve_entropy
// ---------------------------------------------------------------------------

Solution solve_entropy(const EntropyProblem& problem, const SolverConfig& cfg) {
  const auto violations = validate(problem);
  if (!violations.empty())
    throw std::invalid_argument("solve_entropy: invalid problem: " + violations.front());

  const int k = problem.k;
  const int kb = problem.second_arg_fixed ? 0 : k;
  const int m = problem.m;
  const int rows = problem.rows();

  // Layout: [nu | lambda | delta | cone slacks]. Second-order and psd
  // leaves whose rows are already a consecutive run of plain delta
  // variables are barriered in place; the rest get slack variables.
  auto plain_var_of_row = [&](int r) -> int {
    if (problem.p(r) != 0) return -1;
    for (int i = 0; i < k; ++i)
      if (problem.Q(r, i) != 0) return -1;
    if (kb > 0)
      for (int i = 0; i < k; ++i)
        if (problem.R(r, i) != 0) return -1;
    int var = -1;
    for (int j = 0; j < m; ++j)
      if (problem.S(r, j) != 0) {
        if (var >= 0 || problem.S(r, j) != 1.0) return -1;
        var = j;
      }
    return var;
  };
  std::vector<bool> delta_in_block(m, false);
  auto direct_slice = [&](int off, int dim) -> int {
    const int first = plain_var_of_row(off);
    if (first < 0) return -1;
    for (int j = 0; j < dim; ++j) {
      const int v = plain_var_of_row(off + j);
      if (v != first + j || delta_in_block[v]) return -1;
    }
    for (int j = 0; j < dim; ++j) delta_in_block[first + j] = true;
    return first;
  };

  int num_vars = k + kb + m;
  struct BlockPlan {
    int var_off;   // slice start in solver variables
    bool direct;   // true when no slack variables are needed
  };
  std::vector<BlockPlan> block_plans;
  problem.cone.visit_leaves([&](int off, const ConeSpec& leaf) {
    if (leaf.kind() == ConeKind::SecondOrder || leaf.kind() == ConeKind::PsdMat) {
      const int first = direct_slice(off, leaf.dim());
      if (first >= 0) {
        block_plans.push_back({k + kb + first, true});
      } else {
        block_plans.push_back({num_vars, false});
        num_vars += leaf.dim();
      }
    }
  });

  BarrierSpec bp;
  bp.num_vars = num_vars;
  auto row_coeffs = [&](int r) {
    std::vector<std::pair<int, double>> a;
    for (int i = 0; i < k; ++i)
      if (problem.Q(r, i) != 0) a.emplace_back(i, problem.Q(r, i));
    if (kb > 0)
      for (int i = 0; i < k; ++i)
        if (problem.R(r, i) != 0) a.emplace_back(k + i, problem.R(r, i));
    for (int j = 0; j < m; ++j)
      if (problem.S(r, j) != 0) a.emplace_back(k + kb + j, problem.S(r, j));
    return a;
  };

  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> eqs;
  size_t block_cursor = 0;
  problem.cone.visit_leaves([&](int off, const ConeSpec& leaf) {
    switch (leaf.kind()) {
      case ConeKind::Free: break;
      case ConeKind::Zero:
        for (int r = off; r < off + leaf.dim(); ++r)
          eqs.push_back({row_coeffs(r), -problem.p(r)});
        break;
      case ConeKind::Orthant:
        for (int r = off; r < off + leaf.dim(); ++r) {
          AffineLogTerm t;
          t.a = row_coeffs(r);
          t.b = problem.p(r);
          bp.affine_logs.push_back(std::move(t));
          bp.theta += 1;
        }
        break;
      case ConeKind::SecondOrder:
      case ConeKind::PsdMat: {
        const BlockPlan& plan = block_plans[block_cursor++];
        if (!plan.direct) {
          for (int j = 0; j < leaf.dim(); ++j) {
            auto a = row_coeffs(off + j);
            a.emplace_back(plan.var_off + j, -1.0);
            eqs.push_back({std::move(a), -problem.p(off + j)});
          }
        }
        if (leaf.kind() == ConeKind::SecondOrder) {
          bp.soc_blocks.push_back(SocBlockTerm{plan.var_off, leaf.dim()});
          bp.theta += 2;
        } else {
          bp.psd_blocks.push_back(PsdBlockTerm{plan.var_off, leaf.side()});
          bp.theta += leaf.side();
        }
        break;
      }
      case ConeKind::Product: break;
    }
  });
  for (int i = 0; i < k + kb; ++i) {
    AffineLogTerm t;
    t.a.emplace_back(i, 1.0);
    bp.affine_logs.push_back(std::move(t));
    bp.theta += 1;
  }

  bp.A = MatrixXd::Zero(static_cast<int>(eqs.size()), num_vars);
  bp.b = VectorXd::Zero(static_cast<int>(eqs.size()));
  for (size_t r = 0; r < eqs.size(); ++r) {
    for (const auto& [i, c] : eqs[r].first) bp.A(static_cast<int>(r), i) = c;
    bp.b(static_cast<int>(r)) = eqs[r].second;
  }

  EntropyMinObjective obj;
  obj.k = k;
  obj.nu_off = 0;
  obj.lam_off = kb > 0 ? k : -1;
  obj.c0 = problem.c0;
  obj.lin = VectorXd::Zero(num_vars);
  obj.lin.head(k) = problem.u;
  if (kb > 0) obj.lin.segment(k, k) = problem.v;
  obj.lin.segment(k + kb, m) = problem.w;
  if (problem.second_arg_fixed) {
    obj.log_fixed.resize(k);
    for (int i = 0; i < k; ++i) {
      if (problem.fixed_second_arg(i) <= 0)
        throw std::invalid_argument("solve_entropy: fixed second argument must be positive");
      obj.log_fixed(i) = std::log(problem.fixed_second_arg(i));
    }
  }

  Solution sol;
  VectorXd seed;
  if (!equality_seed(bp, seed)) {
    sol.status = SolveStatus::PrimalInfeasible;
    sol.message = "inconsistent equality constraints";
    return sol;
  }
  const BarrierPhase1Result ph1 = barrier_phase1(bp, seed, cfg);
  if (ph1.status == Phase1Status::Infeasible) {
    sol.status = SolveStatus::PrimalInfeasible;
    sol.message = "phase I: entropy problem infeasible";
    return sol;
  }
  if (ph1.status != Phase1Status::Feasible) {
    sol.status = ph1.status == Phase1Status::IterationLimit ? SolveStatus::IterationLimit
                                                            : SolveStatus::NumericalFailure;
    sol.message = "phase I did not converge";
    return sol;
  }

  PathEngine engine(bp, obj, cfg);
  if (!engine.init(ph1.status == Phase1Status::Feasible ? ph1.X : seed)) {
    sol.status = SolveStatus::NumericalFailure;
    sol.message = "phase I point rejected by the barrier domain";
    return sol;
  }

  const double gap_target = 0.1 * cfg.tol;
  const double t_target = std::max(1.0, bp.theta) / gap_target;
  const double scale0 = 1.0 + std::abs(obj.value(engine.X()));
  bool converged = false;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const CenterCode code = engine.center(cfg.center_tol);
    if (code == CenterCode::NumericalFailure) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "KKT system beyond conditioning limit";
      return sol;
    }
    const double value = -obj.value(engine.X());
    if (cfg.collect_trace) {
      IterationRecord rec;
      rec.t = engine.t();
      rec.newton_steps = engine.steps_in_center();
      rec.decrement = engine.decrement();
      rec.primal_obj = value;
      rec.dual_obj = value + bp.theta / engine.t();
      rec.gap_bound = bp.theta / engine.t();
      rec.eq_residual = engine.eq_residual();
      sol.trace.push_back(rec);
    }
    if (value > 1e13 * scale0) {
      sol.status = SolveStatus::DualInfeasible;
      sol.message = "entropy objective unbounded above";
      return sol;
    }
    if (bp.theta / engine.t() <= gap_target) {
      converged = true;
      break;
    }
    if (code == CenterCode::Stalled && outer > 4) break;
    engine.advance(t_target);
  }
  engine.center(cfg.final_center_tol);

  const VectorXd& X = engine.X();
  sol.nu = X.head(k);
  sol.lambda = kb > 0 ? X.segment(k, k).eval() : VectorXd();
  sol.delta = X.segment(k + kb, m);
  sol.x = X.head(k + kb + m);
  sol.primal_obj = -obj.value(X);
  sol.gap = bp.theta / engine.t();
  sol.dual_obj = sol.primal_obj + sol.gap;
  sol.iterations = engine.total_newton();
  sol.status = converged && sol.gap <= cfg.tol ? SolveStatus::Optimal : SolveStatus::IterationLimit;
  if (sol.status != SolveStatus::Optimal)
    sol.message = "stopped before reaching the certified gap target";
  return sol;
}

}  // namespace cgp
