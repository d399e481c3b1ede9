#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cgp/model.hpp"

namespace cgp {

/// Sparse affine expression over builder variables.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0;

  LinExpr() = default;
  /*implicit*/ LinExpr(double c) : constant(c) {}
  static LinExpr var(int index, double coeff = 1.0);

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double s);
  double eval(const VectorXd& values) const;
  void normalize();  // merge duplicate indices, drop zeros
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);
LinExpr operator-(LinExpr a);

/// Symmetric-matrix-valued affine expression: constant + sum_j coeff_j * var_j.
struct MatrixAff {
  int rows = 0;
  int cols = 0;
  MatrixXd constant;
  std::vector<std::pair<int, MatrixXd>> coeff;

  static MatrixAff constant_matrix(const MatrixXd& M);
  /// Matrix built entrywise from a svec coordinate block of variables.
  static MatrixAff from_svec_vars(int side, int first_var);
  MatrixAff transposed() const;
  MatrixXd eval(const VectorXd& values) const;
  /// Entry (i, j) as a scalar expression.
  LinExpr entry(int i, int j) const;
};

/// Embeds `small` into a rows x cols zero frame with top-left corner (r0, c0).
MatrixAff embed(const MatrixAff& small, int rows, int cols, int r0, int c0);

/// svec coordinates of a square MatrixAff (symmetrized).
std::vector<LinExpr> svec_exprs(const MatrixAff& expr);
LinExpr trace_expr(const MatrixAff& expr);

/// sum_i C_i exp(E_i) + affine, with positive semidefinite C_i.
struct MatrixSumExp {
  int side = 0;
  std::vector<std::pair<MatrixXd, LinExpr>> exp_terms;
  MatrixAff affine;
};

struct LiftResult {
  std::vector<int> new_vars;
  std::map<std::string, int> named;
  int exp_rows = 0;
  int eq_rows = 0;
  int cone_blocks = 0;
};

/// Common constraint surface shared by the CGP and entropy builders, so the
/// conic/affine transforms compose onto either target form.
class ConicBuilderBase {
 public:
  virtual ~ConicBuilderBase() = default;
  virtual int new_var(const std::string& label = "") = 0;
  virtual int num_vars() const = 0;
  virtual void add_eq(const LinExpr& expr) = 0;          // expr == 0
  virtual void add_ineq(const LinExpr& expr) = 0;        // expr <= 0
  virtual void attach_cone(const std::vector<LinExpr>& exprs, const ConeSpec& cone) = 0;
};

struct BuiltCgp {
  CgpProblem problem;
  std::vector<int> var_position;  // builder variable -> coordinate in x
  double objective_offset = 0;
  double value(const VectorXd& x, int var) const { return x(var_position[var]); }
  VectorXd extract(const VectorXd& x, const std::vector<int>& vars) const;
};

/// Incremental assembly of a problem in primal form. Cone attachments bind
/// to variables (slacks are introduced for general affine expressions);
/// unattached variables end up in a leading Free factor.
class ProblemBuilder final : public ConicBuilderBase {
 public:
  explicit ProblemBuilder(int user_vars = 0);

  int new_var(const std::string& label = "") override;
  int num_vars() const override { return static_cast<int>(labels_.size()); }

  /// exp(exponent) + affine <= 0, one primal row.
  void add_exp_row(const LinExpr& exponent, const LinExpr& affine);
  /// sum_i c_i exp(E_i) + affine <= 0 with c_i >= 0; rewritten into rows.
  void add_sum_exp_row(const std::vector<std::pair<double, LinExpr>>& terms,
                       const LinExpr& affine);
  void add_eq(const LinExpr& expr) override;
  void add_ineq(const LinExpr& expr) override;
  void attach_cone(const std::vector<LinExpr>& exprs, const ConeSpec& cone) override;
  void attach_cone_vars(std::vector<int> vars, const ConeSpec& cone);

  BuiltCgp build(const LinExpr& objective) const;

  int exp_row_count() const { return static_cast<int>(exp_rows_.size()); }
  int eq_count() const { return static_cast<int>(eqs_.size()); }

 private:
  struct ExpRow {
    LinExpr exponent, affine;
  };
  std::vector<ExpRow> exp_rows_;
  std::vector<LinExpr> eqs_;
  struct Attachment {
    std::vector<int> vars;
    ConeSpec cone;
  };
  std::vector<Attachment> attachments_;
  std::vector<std::string> labels_;
  std::vector<bool> claimed_;
};

struct BuiltEntropy {
  EntropyProblem problem;
  std::vector<int> var_position;  // builder variable -> index in (nu, delta)
  double value(const VectorXd& stacked, int var) const { return stacked(var_position[var]); }
};

/// Assembly of an entropy-form problem: designated entropy variables carry
/// the relative-entropy objective with a fixed second argument; all
/// constraints are affine rows grouped into a product membership cone.
class EntropyBuilder final : public ConicBuilderBase {
 public:
  EntropyBuilder() = default;

  int new_var(const std::string& label = "") override;
  int new_entropy_var(double fixed_second_arg, const std::string& label = "");
  int num_vars() const override { return static_cast<int>(labels_.size()); }

  void add_eq(const LinExpr& expr) override;
  void add_ineq(const LinExpr& expr) override;
  void attach_cone(const std::vector<LinExpr>& exprs, const ConeSpec& cone) override;

  /// Objective is sup -[D(nu, fixed) + sum_v cost_v * v] + c0.
  void set_cost(int var, double cost);
  void set_constant(double c0);

  BuiltEntropy build() const;

 private:
  struct Row {
    LinExpr expr;
  };
  std::vector<Row> rows_;
  std::vector<ConeSpec> row_cones_;
  std::vector<std::string> labels_;
  std::vector<bool> is_entropy_;
  std::vector<double> fixed_arg_;
  std::vector<double> cost_;
  double c0_ = 0;
};

// --- Lifted representations -------------------------------------------------

/// log(sum_i c_i exp(E_i)) + sum_j cbar_j exp(Ebar_j) + affine <= 0.
LiftResult lift_log_sum_exp(ProblemBuilder& b, const VectorXd& c,
                            const std::vector<LinExpr>& exponents,
                            const std::vector<std::pair<double, LinExpr>>& extra_sum_exp,
                            const LinExpr& affine);

/// prod_j (sum_i c^j_i exp(E^j_i)) <= t for positive sum-of-exponential
/// factors; t may be any affine expression.
LiftResult lift_product_sum_exp(ProblemBuilder& b,
                                const std::vector<std::vector<std::pair<double, LinExpr>>>& factors,
                                const LinExpr& t);

/// sum_i C_i exp(E_i) + affine_vec <=_K 0 with each C_i in K (checked
/// exactly for orthant, second-order, and psd cones; others rejected).
LiftResult lift_cone_weighted_sum_exp(ProblemBuilder& b,
                                      const std::vector<VectorXd>& C,
                                      const std::vector<LinExpr>& exponents,
                                      const std::vector<LinExpr>& affine_vec,
                                      const ConeSpec& cone);

/// Matrix ordering version: sum_i C_i exp(E_i) + affine <= 0 in Sym(side).
LiftResult lift_matrix_weighted_sum_exp(ProblemBuilder& b, const MatrixSumExp& expr);

/// F11 < 0 and F22 - F12 F11^{-1} F12' < 0 through the block matrix lift;
/// strictness realized with a margin sigma * I.
LiftResult lift_schur_inverse(ProblemBuilder& b, const MatrixSumExp& f11,
                              const MatrixAff& f12, const MatrixSumExp& f22,
                              double sigma = 1e-9);

/// Sum of the top r eigenvalues of M bounded by t.
LiftResult top_r_eigensum_epigraph(ConicBuilderBase& b, const MatrixAff& M, int r,
                                   const LinExpr& t);

/// Couples x (given variables) to the spectrum of M: ordering constraints,
/// the top-r partial-sum epigraphs, and the trace equality.
LiftResult spectral_couple(ConicBuilderBase& b, const MatrixAff& M,
                           const std::vector<int>& x_vars);

/// Adds spectral surrogate variables x for M and couples them; the caller
/// then emits the epigraph of its permutation-invariant f on x.
LiftResult spectral_lift(ConicBuilderBase& b, const MatrixAff& M);

/// Entropy-form hypograph of the Von-Neumann entropy: creates entropy
/// variables x coupled to the spectrum of M with fixed second argument 1,
/// so that maximizing -D(x, 1) over the lift yields H_vn(M).
LiftResult vn_entropy_hypograph(EntropyBuilder& b, const MatrixAff& M);

/// Exact reformulation of sup{sum_i c_i exp(q_i'x) : c in C, q_i in Q_i} <= t
/// for conic uncertainty sets; C must carry the nonnegativity flag.
LiftResult robust_sum_exp(ProblemBuilder& b, const ConicSetDesc& C,
                          const std::vector<ConicSetDesc>& Qsets,
                          const std::vector<LinExpr>& x_exprs, const LinExpr& t);

/// Bound sup{sum_j c_j * E_j : c in desc} <= t where E_j is exp(exponent_j)
/// or an absent term (then only the dual row survives). Used by the robust
/// transform and by drivers whose coefficient uncertainty enters linearly.
LiftResult robust_linear_sup_bound(ProblemBuilder& b, const ConicSetDesc& desc,
                                   const std::vector<std::optional<LinExpr>>& exponents,
                                   const LinExpr& t);

}  // namespace cgp
