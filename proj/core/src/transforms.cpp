#include "cgp/transforms.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace cgp {

// ---------------------------------------------------------------------------
// LinExpr
// ---------------------------------------------------------------------------

LinExpr LinExpr::var(int index, double coeff) {
  LinExpr e;
  e.terms.emplace_back(index, coeff);
  return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
  constant += other.constant;
  normalize();
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  for (const auto& [i, c] : other.terms) terms.emplace_back(i, -c);
  constant -= other.constant;
  normalize();
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& [i, c] : terms) c *= s;
  constant *= s;
  return *this;
}

double LinExpr::eval(const VectorXd& values) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * values(i);
  return v;
}

void LinExpr::normalize() {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<int, double>> merged;
  for (const auto& [i, c] : terms) {
    if (!merged.empty() && merged.back().first == i)
      merged.back().second += c;
    else
      merged.emplace_back(i, c);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const auto& t) { return t.second == 0.0; }),
               merged.end());
  terms = std::move(merged);
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }

// ---------------------------------------------------------------------------
// MatrixAff
// ---------------------------------------------------------------------------

MatrixAff MatrixAff::constant_matrix(const MatrixXd& M) {
  MatrixAff a;
  a.rows = static_cast<int>(M.rows());
  a.cols = static_cast<int>(M.cols());
  a.constant = M;
  return a;
}

MatrixAff MatrixAff::from_svec_vars(int side, int first_var) {
  MatrixAff a;
  a.rows = a.cols = side;
  a.constant = MatrixXd::Zero(side, side);
  const double inv_s2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      MatrixXd E = MatrixXd::Zero(side, side);
      if (i == j) {
        E(i, j) = 1.0;
      } else {
        E(i, j) = inv_s2;
        E(j, i) = inv_s2;
      }
      a.coeff.emplace_back(first_var + idx, E);
      ++idx;
    }
  return a;
}

MatrixAff MatrixAff::transposed() const {
  MatrixAff t;
  t.rows = cols;
  t.cols = rows;
  t.constant = constant.transpose();
  for (const auto& [v, M] : coeff) t.coeff.emplace_back(v, M.transpose());
  return t;
}

MatrixXd MatrixAff::eval(const VectorXd& values) const {
  MatrixXd M = constant;
  for (const auto& [v, C] : coeff) M += values(v) * C;
  return M;
}

LinExpr MatrixAff::entry(int i, int j) const {
  LinExpr e(constant(i, j));
  for (const auto& [v, C] : coeff)
    if (C(i, j) != 0) e += LinExpr::var(v, C(i, j));
  return e;
}

MatrixAff embed(const MatrixAff& small, int rows, int cols, int r0, int c0) {
  MatrixAff out;
  out.rows = rows;
  out.cols = cols;
  out.constant = MatrixXd::Zero(rows, cols);
  out.constant.block(r0, c0, small.rows, small.cols) = small.constant;
  for (const auto& [v, M] : small.coeff) {
    MatrixXd big = MatrixXd::Zero(rows, cols);
    big.block(r0, c0, small.rows, small.cols) = M;
    out.coeff.emplace_back(v, big);
  }
  return out;
}

std::vector<LinExpr> svec_exprs(const MatrixAff& expr) {
  if (expr.rows != expr.cols)
    throw std::invalid_argument("svec_exprs: matrix expression must be square");
  const int side = expr.rows;
  const double s2 = std::sqrt(2.0);
  std::vector<LinExpr> out;
  out.reserve(svec_dim(side));
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      if (i == j) {
        out.push_back(expr.entry(i, j));
      } else {
        LinExpr e = expr.entry(i, j) + expr.entry(j, i);
        e *= 0.5 * s2;
        out.push_back(std::move(e));
      }
    }
  return out;
}

LinExpr trace_expr(const MatrixAff& expr) {
  LinExpr t;
  for (int i = 0; i < std::min(expr.rows, expr.cols); ++i) t += expr.entry(i, i);
  return t;
}

// ---------------------------------------------------------------------------
// ProblemBuilder
// ---------------------------------------------------------------------------

ProblemBuilder::ProblemBuilder(int user_vars) {
  for (int i = 0; i < user_vars; ++i) new_var("x" + std::to_string(i));
}

int ProblemBuilder::new_var(const std::string& label) {
  labels_.push_back(label.empty() ? "v" + std::to_string(labels_.size()) : label);
  claimed_.push_back(false);
  return static_cast<int>(labels_.size()) - 1;
}

void ProblemBuilder::add_exp_row(const LinExpr& exponent, const LinExpr& affine) {
  ExpRow row{exponent, affine};
  row.exponent.normalize();
  row.affine.normalize();
  exp_rows_.push_back(std::move(row));
}

void ProblemBuilder::add_sum_exp_row(const std::vector<std::pair<double, LinExpr>>& terms,
                                     const LinExpr& affine) {
  std::vector<std::pair<double, LinExpr>> active;
  for (const auto& [c, e] : terms) {
    if (c < 0) throw std::invalid_argument("add_sum_exp_row: negative coefficient");
    if (c > 0) active.emplace_back(c, e);
  }
  if (active.empty()) {
    add_ineq(affine);
    return;
  }
  // First term folds into the row; the rest get epigraph variables.
  LinExpr rest = affine;
  for (size_t i = 1; i < active.size(); ++i) {
    const int yi = new_var("sumexp_y" + std::to_string(num_vars()));
    add_exp_row(active[i].second + LinExpr(std::log(active[i].first)),
                LinExpr::var(yi, -1.0));
    rest += LinExpr::var(yi);
  }
  add_exp_row(active[0].second + LinExpr(std::log(active[0].first)), rest);
}

void ProblemBuilder::add_eq(const LinExpr& expr) {
  LinExpr e = expr;
  e.normalize();
  eqs_.push_back(std::move(e));
}

void ProblemBuilder::add_ineq(const LinExpr& expr) {
  const int s = new_var("slack" + std::to_string(num_vars()));
  attach_cone_vars({s}, ConeSpec::orthant(1));
  add_eq(expr + LinExpr::var(s));
}

void ProblemBuilder::attach_cone_vars(std::vector<int> vars, const ConeSpec& cone) {
  if (static_cast<int>(vars.size()) != cone.dim())
    throw std::invalid_argument("attach_cone_vars: dimension mismatch");
  for (int v : vars) {
    if (claimed_[v])
      throw std::invalid_argument("attach_cone_vars: variable already in a cone block");
    claimed_[v] = true;
  }
  attachments_.push_back({std::move(vars), cone});
}

void ProblemBuilder::attach_cone(const std::vector<LinExpr>& exprs, const ConeSpec& cone) {
  if (static_cast<int>(exprs.size()) != cone.dim())
    throw std::invalid_argument("attach_cone: dimension mismatch");
  if (cone.kind() == ConeKind::Zero) {
    for (const auto& e : exprs) add_eq(e);
    return;
  }
  if (cone.kind() == ConeKind::Free) return;
  if (cone.kind() == ConeKind::Product) {
    int off = 0;
    for (const auto& f : cone.factors()) {
      std::vector<LinExpr> sub(exprs.begin() + off, exprs.begin() + off + f.dim());
      attach_cone(sub, f);
      off += f.dim();
    }
    return;
  }
  std::vector<int> vars;
  vars.reserve(exprs.size());
  bool direct = true;
  for (const auto& e : exprs) {
    if (e.terms.size() == 1 && e.terms[0].second == 1.0 && e.constant == 0.0 &&
        !claimed_[e.terms[0].first]) {
      vars.push_back(e.terms[0].first);
    } else {
      direct = false;
      break;
    }
  }
  if (direct) {
    // A variable may appear only once across blocks.
    std::vector<int> sorted = vars;
    std::sort(sorted.begin(), sorted.end());
    direct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  }
  if (!direct) {
    vars.clear();
    for (const auto& e : exprs) {
      const int s = new_var("cone_slack" + std::to_string(num_vars()));
      add_eq(e - LinExpr::var(s));
      vars.push_back(s);
    }
  }
  attach_cone_vars(std::move(vars), cone);
}

VectorXd BuiltCgp::extract(const VectorXd& x, const std::vector<int>& vars) const {
  VectorXd out(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) out(static_cast<int>(i)) = x(var_position[vars[i]]);
  return out;
}

BuiltCgp ProblemBuilder::build(const LinExpr& objective) const {
  const int nv = num_vars();
  BuiltCgp out;
  out.var_position.assign(nv, -1);

  int pos = 0;
  for (int v = 0; v < nv; ++v)
    if (!claimed_[v]) out.var_position[v] = pos++;
  const int free_count = pos;
  std::vector<ConeSpec> factors;
  if (free_count > 0) factors.push_back(ConeSpec::free(free_count));
  for (const auto& att : attachments_) {
    for (int v : att.vars) out.var_position[v] = pos++;
    factors.push_back(att.cone);
  }

  CgpProblem& P = out.problem;
  P.n = nv;
  P.cone = factors.size() == 1 ? factors.front() : ConeSpec::product(factors);
  P.p = VectorXd::Zero(nv);
  for (const auto& [v, c] : objective.terms) P.p(out.var_position[v]) += c;
  out.objective_offset = objective.constant;

  const int k = static_cast<int>(exp_rows_.size());
  P.block.Q = MatrixXd::Zero(nv, k);
  P.block.R = MatrixXd::Zero(nv, k);
  P.block.u = VectorXd::Zero(k);
  P.block.v = VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    for (const auto& [v, c] : exp_rows_[i].exponent.terms)
      P.block.Q(out.var_position[v], i) += c;
    P.block.u(i) = -exp_rows_[i].exponent.constant;
    for (const auto& [v, c] : exp_rows_[i].affine.terms)
      P.block.R(out.var_position[v], i) += c;
    P.block.v(i) = -exp_rows_[i].affine.constant;
  }

  const int m = static_cast<int>(eqs_.size());
  P.S = MatrixXd::Zero(nv, m);
  P.w = VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    for (const auto& [v, c] : eqs_[j].terms) P.S(out.var_position[v], j) += c;
    P.w(j) = -eqs_[j].constant;
  }
  return out;
}

// ---------------------------------------------------------------------------
// EntropyBuilder
// ---------------------------------------------------------------------------

int EntropyBuilder::new_var(const std::string& label) {
  labels_.push_back(label.empty() ? "d" + std::to_string(labels_.size()) : label);
  is_entropy_.push_back(false);
  fixed_arg_.push_back(0);
  cost_.push_back(0);
  return static_cast<int>(labels_.size()) - 1;
}

int EntropyBuilder::new_entropy_var(double fixed_second_arg, const std::string& label) {
  if (fixed_second_arg <= 0)
    throw std::invalid_argument("new_entropy_var: second argument must be positive");
  const int v = new_var(label.empty() ? "nu" + std::to_string(labels_.size()) : label);
  is_entropy_[v] = true;
  fixed_arg_[v] = fixed_second_arg;
  return v;
}

void EntropyBuilder::add_eq(const LinExpr& expr) {
  LinExpr e = expr;
  e.normalize();
  rows_.push_back({std::move(e)});
  row_cones_.push_back(ConeSpec::zero(1));
}

void EntropyBuilder::add_ineq(const LinExpr& expr) {
  LinExpr e = -LinExpr(expr);
  e.normalize();
  rows_.push_back({std::move(e)});
  row_cones_.push_back(ConeSpec::orthant(1));
}

void EntropyBuilder::attach_cone(const std::vector<LinExpr>& exprs, const ConeSpec& cone) {
  if (static_cast<int>(exprs.size()) != cone.dim())
    throw std::invalid_argument("attach_cone: dimension mismatch");
  if (cone.kind() == ConeKind::Free) return;
  for (const auto& e : exprs) {
    LinExpr copy = e;
    copy.normalize();
    rows_.push_back({std::move(copy)});
  }
  // Record the block as one factor covering exprs.size() rows.
  row_cones_.push_back(cone);
  for (size_t i = 1; i < exprs.size(); ++i) row_cones_.push_back(ConeSpec::free(0));
}

void EntropyBuilder::set_cost(int var, double cost) { cost_[var] = cost; }
void EntropyBuilder::set_constant(double c0) { c0_ = c0; }

BuiltEntropy EntropyBuilder::build() const {
  const int nv = num_vars();
  BuiltEntropy out;
  out.var_position.assign(nv, -1);
  int k = 0, m = 0;
  for (int v = 0; v < nv; ++v)
    if (is_entropy_[v]) out.var_position[v] = k++;
  for (int v = 0; v < nv; ++v)
    if (!is_entropy_[v]) out.var_position[v] = k + m++;

  EntropyProblem& E = out.problem;
  E.k = k;
  E.m = m;
  E.second_arg_fixed = true;
  E.fixed_second_arg = VectorXd::Zero(k);
  E.u = VectorXd::Zero(k);
  E.w = VectorXd::Zero(m);
  for (int v = 0; v < nv; ++v) {
    if (is_entropy_[v]) {
      E.fixed_second_arg(out.var_position[v]) = fixed_arg_[v];
      E.u(out.var_position[v]) = cost_[v];
    } else {
      E.w(out.var_position[v] - k) = cost_[v];
    }
  }
  E.v = VectorXd::Zero(k);
  E.c0 = c0_;

  const int rows = static_cast<int>(rows_.size());
  E.p = VectorXd::Zero(rows);
  E.Q = MatrixXd::Zero(rows, k);
  E.R = MatrixXd::Zero(rows, k);
  E.S = MatrixXd::Zero(rows, m);
  for (int r = 0; r < rows; ++r) {
    E.p(r) = rows_[r].expr.constant;
    for (const auto& [v, c] : rows_[r].expr.terms) {
      const int posn = out.var_position[v];
      if (is_entropy_[v])
        E.Q(r, posn) += c;
      else
        E.S(r, posn - k) += c;
    }
  }

  std::vector<ConeSpec> factors;
  for (const auto& c : row_cones_)
    if (!(c.kind() == ConeKind::Free && c.dim() == 0)) factors.push_back(c);
  E.cone = factors.size() == 1 ? factors.front() : ConeSpec::product(factors);
  return out;
}

// ---------------------------------------------------------------------------
// Lifts
// ---------------------------------------------------------------------------

LiftResult lift_log_sum_exp(ProblemBuilder& b, const VectorXd& c,
                            const std::vector<LinExpr>& exponents,
                            const std::vector<std::pair<double, LinExpr>>& extra_sum_exp,
                            const LinExpr& affine) {
  if (static_cast<int>(exponents.size()) != c.size())
    throw std::invalid_argument("lift_log_sum_exp: coefficient/exponent mismatch");
  if (c.size() > 0 && c.minCoeff() < 0)
    throw std::invalid_argument("lift_log_sum_exp: coefficients must be nonnegative");
  LiftResult res;
  const int beta = b.new_var("lse_beta");
  res.new_vars.push_back(beta);
  res.named["beta"] = beta;

  std::vector<std::pair<double, LinExpr>> terms;
  for (int i = 0; i < c.size(); ++i)
    terms.emplace_back(c(i), exponents[i] - LinExpr::var(beta) - LinExpr(1.0));
  for (const auto& t : extra_sum_exp) terms.push_back(t);
  b.add_sum_exp_row(terms, affine + LinExpr::var(beta));
  res.exp_rows = static_cast<int>(terms.size());
  return res;
}

LiftResult lift_product_sum_exp(ProblemBuilder& b,
                                const std::vector<std::vector<std::pair<double, LinExpr>>>& factors,
                                const LinExpr& t) {
  if (factors.empty())
    throw std::invalid_argument("lift_product_sum_exp: factor list must not be empty");
  LiftResult res;
  const int p = static_cast<int>(factors.size());
  std::vector<int> betas;
  for (int j = 0; j < p; ++j) {
    const int bj = b.new_var("prod_beta" + std::to_string(j));
    betas.push_back(bj);
    res.new_vars.push_back(bj);
  }
  const int delta = b.new_var("prod_delta");
  res.new_vars.push_back(delta);
  res.named["delta"] = delta;
  res.named["beta0"] = betas[0];

  std::vector<std::pair<double, LinExpr>> terms;
  LinExpr beta_sum;
  for (int j = 0; j < p; ++j) {
    for (const auto& [cj, ej] : factors[j])
      terms.emplace_back(cj, ej - LinExpr::var(betas[j]) - LinExpr(1.0));
    beta_sum += LinExpr::var(betas[j]);
  }
  b.add_sum_exp_row(terms, beta_sum - LinExpr::var(delta));
  b.add_exp_row(LinExpr::var(delta), -LinExpr(t));
  res.exp_rows = static_cast<int>(terms.size()) + 1;
  return res;
}

namespace {

void check_cone_membership(const VectorXd& x, const ConeSpec& cone) {
  switch (cone.kind()) {
    case ConeKind::Orthant:
    case ConeKind::SecondOrder:
    case ConeKind::PsdMat:
      if (!cone.contains(x, 1e-11 * (1.0 + x.cwiseAbs().maxCoeff())))
        throw std::invalid_argument("cone-weighted lift: coefficient not in the cone");
      return;
    default:
      throw std::invalid_argument("cone-weighted lift: unsupported coefficient cone");
  }
}

}  // namespace

LiftResult lift_cone_weighted_sum_exp(ProblemBuilder& b,
                                      const std::vector<VectorXd>& C,
                                      const std::vector<LinExpr>& exponents,
                                      const std::vector<LinExpr>& affine_vec,
                                      const ConeSpec& cone) {
  if (C.size() != exponents.size())
    throw std::invalid_argument("lift_cone_weighted_sum_exp: C/exponent mismatch");
  if (static_cast<int>(affine_vec.size()) != cone.dim())
    throw std::invalid_argument("lift_cone_weighted_sum_exp: affine part dimension mismatch");
  for (const auto& ci : C) check_cone_membership(ci, cone);

  LiftResult res;
  std::vector<int> ys;
  for (size_t i = 0; i < C.size(); ++i) {
    const int yi = b.new_var("cwse_y" + std::to_string(i));
    ys.push_back(yi);
    res.new_vars.push_back(yi);
    b.add_exp_row(exponents[i], LinExpr::var(yi, -1.0));
    ++res.exp_rows;
  }
  std::vector<LinExpr> member;
  member.reserve(cone.dim());
  for (int l = 0; l < cone.dim(); ++l) {
    LinExpr e = -LinExpr(affine_vec[l]);
    for (size_t i = 0; i < C.size(); ++i)
      if (C[i](l) != 0) e += LinExpr::var(ys[i], -C[i](l));
    member.push_back(std::move(e));
  }
  b.attach_cone(member, cone);
  res.cone_blocks = 1;
  if (!ys.empty()) res.named["y0"] = ys.front();
  return res;
}

LiftResult lift_matrix_weighted_sum_exp(ProblemBuilder& b, const MatrixSumExp& expr) {
  const int side = expr.side;
  if (expr.affine.rows != side || expr.affine.cols != side)
    throw std::invalid_argument("lift_matrix_weighted_sum_exp: affine part shape mismatch");
  std::vector<VectorXd> C;
  std::vector<LinExpr> exponents;
  for (const auto& [Ci, Ei] : expr.exp_terms) {
    if (Ci.rows() != side || Ci.cols() != side)
      throw std::invalid_argument("lift_matrix_weighted_sum_exp: coefficient shape mismatch");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Ci + Ci.transpose()),
                                               Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * (1.0 + Ci.norm()))
      throw std::invalid_argument("lift_matrix_weighted_sum_exp: coefficient not PSD");
    C.push_back(sym_to_vec(0.5 * (Ci + Ci.transpose())));
    exponents.push_back(Ei);
  }
  return lift_cone_weighted_sum_exp(b, C, exponents, svec_exprs(expr.affine),
                                    ConeSpec::psd(side));
}

LiftResult lift_schur_inverse(ProblemBuilder& b, const MatrixSumExp& f11,
                              const MatrixAff& f12, const MatrixSumExp& f22,
                              double sigma) {
  const int l1 = f11.side, l2 = f22.side;
  if (f12.rows != l1 || f12.cols != l2)
    throw std::invalid_argument("lift_schur_inverse: off-diagonal block shape mismatch");
  const int big = l1 + l2;
  MatrixSumExp block;
  block.side = big;
  for (const auto& [Ci, Ei] : f11.exp_terms) {
    MatrixXd C = MatrixXd::Zero(big, big);
    C.topLeftCorner(l1, l1) = Ci;
    block.exp_terms.emplace_back(C, Ei);
  }
  for (const auto& [Ci, Ei] : f22.exp_terms) {
    MatrixXd C = MatrixXd::Zero(big, big);
    C.bottomRightCorner(l2, l2) = Ci;
    block.exp_terms.emplace_back(C, Ei);
  }
  MatrixAff aff = embed(f11.affine, big, big, 0, 0);
  const MatrixAff a22 = embed(f22.affine, big, big, l1, l1);
  const MatrixAff a12 = embed(f12, big, big, 0, l1);
  const MatrixAff a21 = embed(f12.transposed(), big, big, l1, 0);
  aff.constant += a22.constant + a12.constant + a21.constant;
  for (const auto& part : {a22, a12, a21})
    for (const auto& [v, M] : part.coeff) aff.coeff.emplace_back(v, M);
  aff.constant += sigma * MatrixXd::Identity(big, big);
  block.affine = std::move(aff);
  return lift_matrix_weighted_sum_exp(b, block);
}

LiftResult top_r_eigensum_epigraph(ConicBuilderBase& b, const MatrixAff& M, int r,
                                   const LinExpr& t) {
  const int side = M.rows;
  if (M.rows != M.cols)
    throw std::invalid_argument("top_r_eigensum_epigraph: matrix expression must be square");
  if (r < 1 || r > side)
    throw std::invalid_argument("top_r_eigensum_epigraph: r out of range");
  LiftResult res;
  const int d = svec_dim(side);
  const int z0 = b.num_vars();
  std::vector<LinExpr> zvars;
  for (int i = 0; i < d; ++i) {
    const int v = b.new_var("topr_z");
    res.new_vars.push_back(v);
    zvars.push_back(LinExpr::var(v));
  }
  const int alpha = b.new_var("topr_alpha");
  res.new_vars.push_back(alpha);
  res.named["alpha"] = alpha;
  res.named["z0"] = z0;

  b.attach_cone(zvars, ConeSpec::psd(side));
  ++res.cone_blocks;

  // alpha*I - M + Z >= 0.
  MatrixAff zmat = MatrixAff::from_svec_vars(side, z0);
  MatrixAff slack;
  slack.rows = slack.cols = side;
  slack.constant = -M.constant;
  for (const auto& [v, C] : M.coeff) slack.coeff.emplace_back(v, -C);
  for (const auto& [v, C] : zmat.coeff) slack.coeff.emplace_back(v, C);
  slack.coeff.emplace_back(alpha, MatrixXd::Identity(side, side));
  b.attach_cone(svec_exprs(slack), ConeSpec::psd(side));
  ++res.cone_blocks;

  b.add_ineq(LinExpr::var(alpha, static_cast<double>(r)) + trace_expr(zmat) - t);
  return res;
}

LiftResult spectral_couple(ConicBuilderBase& b, const MatrixAff& M,
                           const std::vector<int>& x_vars) {
  const int side = M.rows;
  if (static_cast<int>(x_vars.size()) != side)
    throw std::invalid_argument("spectral_couple: need one surrogate per eigenvalue");
  LiftResult res;
  for (int j = 0; j + 1 < side; ++j)
    b.add_ineq(LinExpr::var(x_vars[j + 1]) - LinExpr::var(x_vars[j]));
  for (int r = 1; r < side; ++r) {
    LinExpr partial;
    for (int i = 0; i < r; ++i) partial += LinExpr::var(x_vars[i]);
    const LiftResult sub = top_r_eigensum_epigraph(b, M, r, partial);
    res.new_vars.insert(res.new_vars.end(), sub.new_vars.begin(), sub.new_vars.end());
    res.cone_blocks += sub.cone_blocks;
  }
  LinExpr total;
  for (int v : x_vars) total += LinExpr::var(v);
  b.add_eq(trace_expr(M) - total);
  ++res.eq_rows;
  return res;
}

LiftResult spectral_lift(ConicBuilderBase& b, const MatrixAff& M) {
  LiftResult res;
  std::vector<int> xv;
  for (int i = 0; i < M.rows; ++i) {
    const int v = b.new_var("spec_x" + std::to_string(i));
    xv.push_back(v);
    res.new_vars.push_back(v);
    res.named["x" + std::to_string(i)] = v;
  }
  const LiftResult sub = spectral_couple(b, M, xv);
  res.new_vars.insert(res.new_vars.end(), sub.new_vars.begin(), sub.new_vars.end());
  res.cone_blocks = sub.cone_blocks;
  res.eq_rows = sub.eq_rows;
  return res;
}

LiftResult vn_entropy_hypograph(EntropyBuilder& b, const MatrixAff& M) {
  LiftResult res;
  std::vector<int> xv;
  for (int i = 0; i < M.rows; ++i) {
    const int v = b.new_entropy_var(1.0, "vn_x" + std::to_string(i));
    xv.push_back(v);
    res.new_vars.push_back(v);
    res.named["x" + std::to_string(i)] = v;
  }
  const LiftResult sub = spectral_couple(b, M, xv);
  res.new_vars.insert(res.new_vars.end(), sub.new_vars.begin(), sub.new_vars.end());
  res.cone_blocks = sub.cone_blocks;
  res.eq_rows = sub.eq_rows;
  return res;
}

LiftResult robust_linear_sup_bound(ProblemBuilder& b, const ConicSetDesc& desc,
                                   const std::vector<std::optional<LinExpr>>& exponents,
                                   const LinExpr& t) {
  if (!desc.nonneg)
    throw std::invalid_argument("robust bound: coefficient set must carry the nonneg flag");
  if (static_cast<int>(exponents.size()) != desc.dim)
    throw std::invalid_argument("robust bound: one term per coefficient coordinate");
  const int l = static_cast<int>(desc.g.size());
  if (desc.F.rows() != l || desc.F.cols() != desc.dim)
    throw std::invalid_argument("robust bound: F shape mismatch");

  LiftResult res;
  std::vector<int> zeta;
  std::vector<LinExpr> zeta_exprs;
  for (int i = 0; i < l; ++i) {
    const int z = b.new_var("zeta" + std::to_string(i));
    zeta.push_back(z);
    res.new_vars.push_back(z);
    zeta_exprs.push_back(LinExpr::var(z));
  }
  if (!zeta.empty()) res.named["zeta0"] = zeta.front();
  b.attach_cone(zeta_exprs, dual_cone(desc.cone));
  ++res.cone_blocks;

  LinExpr gz;
  for (int i = 0; i < l; ++i)
    if (desc.g(i) != 0) gz += LinExpr::var(zeta[i], desc.g(i));
  b.add_ineq(gz - t);

  for (int j = 0; j < desc.dim; ++j) {
    LinExpr fz;
    for (int i = 0; i < l; ++i)
      if (desc.F(i, j) != 0) fz += LinExpr::var(zeta[i], desc.F(i, j));
    if (exponents[j]) {
      b.add_exp_row(*exponents[j], fz);
      ++res.exp_rows;
    } else {
      b.add_ineq(fz);
    }
  }
  return res;
}

LiftResult robust_sum_exp(ProblemBuilder& b, const ConicSetDesc& C,
                          const std::vector<ConicSetDesc>& Qsets,
                          const std::vector<LinExpr>& x_exprs, const LinExpr& t) {
  const int k = C.dim;
  if (static_cast<int>(Qsets.size()) != k)
    throw std::invalid_argument("robust_sum_exp: need one Q set per coefficient");
  LiftResult res;

  // Dualize each exponent set, producing exp(h_i'theta_i) with theta in the
  // dual cone and M_i'theta_i + x = 0.
  std::vector<std::optional<LinExpr>> exponents;
  for (int i = 0; i < k; ++i) {
    const ConicSetDesc& qs = Qsets[i];
    if (qs.nonneg)
      throw std::invalid_argument("robust_sum_exp: exponent sets take a pure conic form");
    if (qs.dim != static_cast<int>(x_exprs.size()))
      throw std::invalid_argument("robust_sum_exp: Q set dimension mismatch");
    const int mi = static_cast<int>(qs.g.size());
    if (qs.F.rows() != mi || qs.F.cols() != qs.dim)
      throw std::invalid_argument("robust_sum_exp: Q set shape mismatch");
    std::vector<int> theta;
    std::vector<LinExpr> theta_exprs;
    for (int r = 0; r < mi; ++r) {
      const int v = b.new_var("theta" + std::to_string(i) + "_" + std::to_string(r));
      theta.push_back(v);
      res.new_vars.push_back(v);
      theta_exprs.push_back(LinExpr::var(v));
    }
    b.attach_cone(theta_exprs, dual_cone(qs.cone));
    ++res.cone_blocks;
    for (int j = 0; j < qs.dim; ++j) {
      LinExpr eq = x_exprs[j];
      for (int r = 0; r < mi; ++r)
        if (qs.F(r, j) != 0) eq += LinExpr::var(theta[r], qs.F(r, j));
      b.add_eq(eq);
      ++res.eq_rows;
    }
    LinExpr h_theta;
    for (int r = 0; r < mi; ++r)
      if (qs.g(r) != 0) h_theta += LinExpr::var(theta[r], qs.g(r));
    exponents.emplace_back(std::move(h_theta));
  }

  const LiftResult inner = robust_linear_sup_bound(b, C, exponents, t);
  res.new_vars.insert(res.new_vars.end(), inner.new_vars.begin(), inner.new_vars.end());
  res.exp_rows += inner.exp_rows;
  res.cone_blocks += inner.cone_blocks;
  for (const auto& [k2, v2] : inner.named) res.named[k2] = v2;
  return res;
}

}  // namespace cgp
