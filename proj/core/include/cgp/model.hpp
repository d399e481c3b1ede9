#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ConeKind { Free, Zero, Orthant, SecondOrder, PsdMat, Product };

/// Structured cone over R^dim. The positive-semidefinite cone is embedded
/// through the scaled vectorization of Sym(side), see sym_to_vec below.
/// Free and Zero are each other's duals; all other variants are self-dual.
class ConeSpec {
 public:
  ConeSpec() : kind_(ConeKind::Free), dim_(0) {}

  static ConeSpec free(int dim);
  static ConeSpec zero(int dim);
  static ConeSpec orthant(int dim);
  static ConeSpec second_order(int dim);
  static ConeSpec psd(int side);
  static ConeSpec product(std::vector<ConeSpec> factors);

  ConeKind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// Matrix side for PsdMat cones.
  int side() const { return side_; }
  const std::vector<ConeSpec>& factors() const;

  ConeSpec dual() const;

  /// Complexity parameter of the standard logarithmic barrier
  /// (orthant: dim, second-order: 2, psd: side, free/zero: 0).
  double barrier_parameter() const;

  bool contains(const VectorXd& x, double tol = 1e-9) const;

  /// A canonical interior point (zero for Free and Zero cones).
  VectorXd interior_point() const;

  /// Canonical inward direction used by phase-I shifts; zero on Free and
  /// Zero factors, which need no shifting.
  VectorXd interior_direction() const;

  /// Smallest s such that x + s * interior_direction() clears every leaf
  /// boundary by `margin`. Free and Zero leaves contribute nothing.
  double min_shift(const VectorXd& x, double margin) const;

  /// Calls fn(offset, leaf) for every non-product leaf, including dim-0 ones.
  void visit_leaves(const std::function<void(int, const ConeSpec&)>& fn) const;

  bool structurally_equal(const ConeSpec& other) const;

 private:
  ConeSpec(ConeKind kind, int dim, int side) : kind_(kind), dim_(dim), side_(side) {}

  ConeKind kind_;
  int dim_;
  int side_ = 0;
  std::shared_ptr<const std::vector<ConeSpec>> factors_;
};

/// Dual cone under the standard inner product; Product maps factorwise.
ConeSpec dual_cone(const ConeSpec& cone);

int svec_dim(int side);
int svec_side(int dim);

/// Isometric embedding of Sym(side) into R^{side(side+1)/2}: column-major
/// lower triangle with off-diagonal entries scaled by sqrt(2), so vector
/// inner products equal trace inner products. Throws if M is not symmetric
/// to 1e-12 relative.
VectorXd sym_to_vec(const MatrixXd& M);
MatrixXd vec_to_sym(const VectorXd& v);

/// Rowwise constraint exp{Q'x - u} + R'x - v <= 0; k may be zero.
struct ExpAffineBlock {
  MatrixXd Q;  // n x k
  MatrixXd R;  // n x k
  VectorXd u;  // k
  VectorXd v;  // k

  int k() const { return static_cast<int>(u.size()); }
  static ExpAffineBlock empty(int n);
};

/// Primal form: inf p'x  s.t.  exp{Q'x-u} + R'x - v <= 0,  S'x = w,  x in K.
struct CgpProblem {
  int n = 0;
  VectorXd p;
  ExpAffineBlock block;
  MatrixXd S;  // n x m
  VectorXd w;  // m
  ConeSpec cone;

  int k() const { return block.k(); }
  int m() const { return static_cast<int>(w.size()); }
};

/// Entropy-plus-linear form:
///   sup -[D(nu, e*lambda) + u'nu + v'lambda + w'delta] + c0
///   s.t. p + Q nu + R lambda + S delta in cone,  nu, lambda >= 0.
/// `cone` is the membership cone of the affine expression itself (the dual
/// of the primal cone when the problem is built from a CgpProblem).
/// When second_arg_fixed is set the relative entropy's second argument is
/// the constant vector fixed_second_arg, lambda disappears as a variable,
/// and R and v are ignored.
struct EntropyProblem {
  int k = 0;  // entropy-pair dimension
  int m = 0;  // free multiplier dimension
  VectorXd u;  // k
  VectorXd v;  // k
  VectorXd w;  // m
  MatrixXd Q;  // rows x k
  MatrixXd R;  // rows x k
  MatrixXd S;  // rows x m
  double c0 = 0;
  VectorXd p;  // rows
  ConeSpec cone;
  bool second_arg_fixed = false;
  VectorXd fixed_second_arg;  // k, used when second_arg_fixed

  int rows() const { return static_cast<int>(p.size()); }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, IterationLimit, NumericalFailure };

const char* to_string(SolveStatus status);

struct IterationRecord {
  double t = 0;             // barrier parameter
  int newton_steps = 0;     // steps spent in this centering
  double decrement = 0;     // final Newton decrement
  double primal_obj = 0;
  double dual_obj = 0;
  double gap_bound = 0;     // theta / t
  double eq_residual = 0;
  double dual_residual = 0;
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  VectorXd x;
  double primal_obj = 0;
  double dual_obj = 0;
  double gap = 0;
  VectorXd nu;
  VectorXd lambda;
  VectorXd delta;
  VectorXd mu;
  int iterations = 0;  // total Newton steps
  std::vector<IterationRecord> trace;
  std::string message;
};

/// Conic set {x : (x >= 0 when nonneg), g + F x in cone}.
struct ConicSetDesc {
  int dim = 0;
  bool nonneg = false;
  VectorXd g;
  MatrixXd F;  // g.size() x dim
  ConeSpec cone;

  bool member(const VectorXd& x, double tol = 1e-9) const;
};

/// Shape and consistency report; empty means the problem can be consumed by
/// the solver without dimension errors.
std::vector<std::string> validate(const CgpProblem& problem);
std::vector<std::string> validate(const EntropyProblem& problem);

}  // namespace cgp
