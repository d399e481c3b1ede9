#include "cgp/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace cgp {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

ConeSpec ConeSpec::free(int dim) {
  require(dim >= 0, "cone dim must be nonnegative");
  return ConeSpec(ConeKind::Free, dim, 0);
}

ConeSpec ConeSpec::zero(int dim) {
  require(dim >= 0, "cone dim must be nonnegative");
  return ConeSpec(ConeKind::Zero, dim, 0);
}

ConeSpec ConeSpec::orthant(int dim) {
  require(dim >= 0, "cone dim must be nonnegative");
  return ConeSpec(ConeKind::Orthant, dim, 0);
}

ConeSpec ConeSpec::second_order(int dim) {
  require(dim >= 1, "second-order cone dim must be >= 1");
  return ConeSpec(ConeKind::SecondOrder, dim, 0);
}

ConeSpec ConeSpec::psd(int side) {
  require(side >= 1, "psd cone side must be >= 1");
  return ConeSpec(ConeKind::PsdMat, svec_dim(side), side);
}

ConeSpec ConeSpec::product(std::vector<ConeSpec> factors) {
  int dim = 0;
  for (const auto& f : factors) dim += f.dim();
  ConeSpec c(ConeKind::Product, dim, 0);
  c.factors_ = std::make_shared<const std::vector<ConeSpec>>(std::move(factors));
  return c;
}

const std::vector<ConeSpec>& ConeSpec::factors() const {
  static const std::vector<ConeSpec> none;
  return factors_ ? *factors_ : none;
}

ConeSpec ConeSpec::dual() const {
  switch (kind_) {
    case ConeKind::Free: return zero(dim_);
    case ConeKind::Zero: return free(dim_);
    case ConeKind::Orthant:
    case ConeKind::SecondOrder:
    case ConeKind::PsdMat: return *this;
    case ConeKind::Product: {
      std::vector<ConeSpec> duals;
      duals.reserve(factors().size());
      for (const auto& f : factors()) duals.push_back(f.dual());
      return product(std::move(duals));
    }
  }
  throw std::logic_error("unreachable cone kind");
}

double ConeSpec::barrier_parameter() const {
  switch (kind_) {
    case ConeKind::Free:
    case ConeKind::Zero: return 0;
    case ConeKind::Orthant: return dim_;
    case ConeKind::SecondOrder: return 2;
    case ConeKind::PsdMat: return side_;
    case ConeKind::Product: {
      double t = 0;
      for (const auto& f : factors()) t += f.barrier_parameter();
      return t;
    }
  }
  throw std::logic_error("unreachable cone kind");
}

bool ConeSpec::contains(const VectorXd& x, double tol) const {
  require(x.size() == dim_, "point dimension does not match cone");
  switch (kind_) {
    case ConeKind::Free: return true;
    case ConeKind::Zero: return dim_ == 0 || x.lpNorm<Eigen::Infinity>() <= tol;
    case ConeKind::Orthant: return dim_ == 0 || x.minCoeff() >= -tol;
    case ConeKind::SecondOrder: {
      const double tail = dim_ > 1 ? x.tail(dim_ - 1).norm() : 0.0;
      return x(0) >= tail - tol;
    }
    case ConeKind::PsdMat: {
      const MatrixXd M = vec_to_sym(x);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff() >= -tol * (1.0 + M.norm());
    }
    case ConeKind::Product: {
      int off = 0;
      for (const auto& f : factors()) {
        if (!f.contains(x.segment(off, f.dim()), tol)) return false;
        off += f.dim();
      }
      return true;
    }
  }
  throw std::logic_error("unreachable cone kind");
}

VectorXd ConeSpec::interior_point() const {
  VectorXd x = VectorXd::Zero(dim_);
  switch (kind_) {
    case ConeKind::Free:
    case ConeKind::Zero: break;
    case ConeKind::Orthant: x.setOnes(); break;
    case ConeKind::SecondOrder: x(0) = 1; break;
    case ConeKind::PsdMat: x = sym_to_vec(MatrixXd::Identity(side_, side_)); break;
    case ConeKind::Product: {
      int off = 0;
      for (const auto& f : factors()) {
        x.segment(off, f.dim()) = f.interior_point();
        off += f.dim();
      }
      break;
    }
  }
  return x;
}

VectorXd ConeSpec::interior_direction() const { return interior_point(); }

double ConeSpec::min_shift(const VectorXd& x, double margin) const {
  require(x.size() == dim_, "point dimension does not match cone");
  switch (kind_) {
    case ConeKind::Free:
    case ConeKind::Zero: return 0;
    case ConeKind::Orthant: return dim_ == 0 ? 0.0 : margin - x.minCoeff();
    case ConeKind::SecondOrder: {
      const double tail = dim_ > 1 ? x.tail(dim_ - 1).norm() : 0.0;
      return tail - x(0) + margin;
    }
    case ConeKind::PsdMat: {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(vec_to_sym(x), Eigen::EigenvaluesOnly);
      return margin - es.eigenvalues().minCoeff();
    }
    case ConeKind::Product: {
      double s = 0;
      int off = 0;
      for (const auto& f : factors()) {
        s = std::max(s, f.min_shift(x.segment(off, f.dim()), margin));
        off += f.dim();
      }
      return s;
    }
  }
  throw std::logic_error("unreachable cone kind");
}

void ConeSpec::visit_leaves(const std::function<void(int, const ConeSpec&)>& fn) const {
  std::function<void(int, const ConeSpec&)> walk = [&](int off, const ConeSpec& c) {
    if (c.kind() == ConeKind::Product) {
      int o = off;
      for (const auto& f : c.factors()) {
        walk(o, f);
        o += f.dim();
      }
    } else {
      fn(off, c);
    }
  };
  walk(0, *this);
}

bool ConeSpec::structurally_equal(const ConeSpec& other) const {
  if (kind_ != other.kind_ || dim_ != other.dim_ || side_ != other.side_) return false;
  if (kind_ == ConeKind::Product) {
    if (factors().size() != other.factors().size()) return false;
    for (size_t i = 0; i < factors().size(); ++i)
      if (!factors()[i].structurally_equal(other.factors()[i])) return false;
  }
  return true;
}

ConeSpec dual_cone(const ConeSpec& cone) { return cone.dual(); }

int svec_dim(int side) { return side * (side + 1) / 2; }

int svec_side(int dim) {
  const int side = static_cast<int>(std::round((std::sqrt(8.0 * dim + 1.0) - 1.0) / 2.0));
  if (svec_dim(side) != dim) throw std::invalid_argument("length is not a triangular number");
  return side;
}

VectorXd sym_to_vec(const MatrixXd& M) {
  require(M.rows() == M.cols(), "sym_to_vec needs a square matrix");
  const double scale = std::max(1.0, M.lpNorm<Eigen::Infinity>());
  if ((M - M.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * scale)
    throw std::invalid_argument("matrix is not symmetric within tolerance");
  const int n = static_cast<int>(M.rows());
  VectorXd v(svec_dim(n));
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i)
      v(idx++) = (i == j) ? M(i, j) : kSqrt2 * 0.5 * (M(i, j) + M(j, i));
  return v;
}

MatrixXd vec_to_sym(const VectorXd& v) {
  const int n = svec_side(static_cast<int>(v.size()));
  MatrixXd M(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      const double x = (i == j) ? v(idx) : v(idx) / kSqrt2;
      M(i, j) = x;
      M(j, i) = x;
      ++idx;
    }
  return M;
}

ExpAffineBlock ExpAffineBlock::empty(int n) {
  ExpAffineBlock b;
  b.Q = MatrixXd::Zero(n, 0);
  b.R = MatrixXd::Zero(n, 0);
  b.u = VectorXd::Zero(0);
  b.v = VectorXd::Zero(0);
  return b;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

bool ConicSetDesc::member(const VectorXd& x, double tol) const {
  if (x.size() != dim) return false;
  if (nonneg && dim > 0 && x.minCoeff() < -tol) return false;
  return cone.contains(g + F * x, tol);
}

std::vector<std::string> validate(const CgpProblem& problem) {
  std::vector<std::string> out;
  if (problem.n < 0) out.push_back("n negative");
  if (problem.p.size() != problem.n) out.push_back("objective length ≠ n");
  if (problem.block.Q.rows() != problem.block.R.rows() ||
      problem.block.Q.cols() != problem.block.R.cols())
    out.push_back("Q/R shape mismatch");
  if (problem.block.Q.rows() != problem.n && problem.block.Q.cols() > 0)
    out.push_back("exp block row count ≠ n");
  if (problem.block.u.size() != problem.block.Q.cols())
    out.push_back("u length ≠ exp block width");
  if (problem.block.v.size() != problem.block.R.cols())
    out.push_back("v length ≠ exp block width");
  if (problem.S.cols() != problem.w.size()) out.push_back("S/w shape mismatch");
  if (problem.S.rows() != problem.n && problem.S.cols() > 0)
    out.push_back("equality block row count ≠ n");
  if (problem.cone.dim() != problem.n) out.push_back("cone dim ≠ n");
  return out;
}

std::vector<std::string> validate(const EntropyProblem& problem) {
  std::vector<std::string> out;
  const int rows = problem.rows();
  if (problem.k < 0) out.push_back("k negative");
  if (problem.u.size() != problem.k) out.push_back("u length ≠ k");
  if (problem.Q.rows() != rows || problem.Q.cols() != problem.k)
    out.push_back("Q shape mismatch");
  if (!problem.second_arg_fixed) {
    if (problem.v.size() != problem.k) out.push_back("v length ≠ k");
    if (problem.R.rows() != rows || problem.R.cols() != problem.k)
      out.push_back("R shape mismatch");
  } else if (problem.fixed_second_arg.size() != problem.k) {
    out.push_back("fixed second argument length ≠ k");
  }
  if (problem.w.size() != problem.m) out.push_back("w length ≠ m");
  if (problem.S.rows() != rows || problem.S.cols() != problem.m)
    out.push_back("S shape mismatch");
  if (problem.cone.dim() != rows) out.push_back("cone dim ≠ constraint rows");
  return out;
}

}  // namespace cgp
