#include "cgp/apps.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgp/rng.hpp"
#include "cgp/transforms.hpp"

namespace cgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double entropy_of_spectrum(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()),
                                             Eigen::EigenvaluesOnly);
  double h = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam > 1e-14) h -= lam * std::log(lam);
  }
  return h;
}

double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Permanent / capacity
// ---------------------------------------------------------------------------

CapacityResult capacity(const MatrixXd& M, const SolverConfig& cfg) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n) throw std::invalid_argument("capacity: matrix must be square");
  if (n == 0) throw std::invalid_argument("capacity: empty matrix");
  if (M.minCoeff() < -1e-12)
    throw std::invalid_argument("capacity: matrix must be entrywise nonnegative");

  CapacityResult out;
  for (int i = 0; i < n; ++i) {
    if (M.row(i).maxCoeff() <= 0 || M.col(i).maxCoeff() <= 0) {
      out.cap = 0;
      out.zero_structure = true;
      return out;
    }
  }

  ProblemBuilder b(n);
  std::vector<std::vector<std::pair<double, LinExpr>>> factors(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (M(i, j) > 0) factors[i].emplace_back(M(i, j), LinExpr::var(j));
  const int t = b.new_var("cap_t");
  lift_product_sum_exp(b, factors, LinExpr::var(t));
  LinExpr sum_x;
  for (int j = 0; j < n; ++j) sum_x += LinExpr::var(j);
  b.add_eq(sum_x);

  const BuiltCgp built = b.build(LinExpr::var(t));
  out.detail = solve_primal(built.problem, cfg);
  out.cap = out.detail.primal_obj;
  std::vector<int> user(n);
  for (int j = 0; j < n; ++j) user[j] = j;
  if (out.detail.x.size() > 0) out.x = built.extract(out.detail.x, user);
  return out;
}

PermanentBounds permanent_bounds(const MatrixXd& M, const SolverConfig& cfg) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n) throw std::invalid_argument("permanent_bounds: matrix must be square");
  if (M.minCoeff() < -1e-12)
    throw std::invalid_argument("permanent_bounds: matrix must be entrywise nonnegative");
  PermanentBounds out;
  out.cap = capacity(M, cfg).cap;
  out.upper = out.cap;

  int max_col_nnz = 0;
  for (int j = 0; j < n; ++j) {
    int nnz = 0;
    for (int i = 0; i < n; ++i)
      if (M(i, j) > 0) ++nnz;
    max_col_nnz = std::max(max_col_nnz, nnz);
  }
  double factor = factorial(n) / std::pow(static_cast<double>(n), n);
  if (max_col_nnz <= 1) {
    factor = 1.0;  // singleton columns factor out exactly
  } else {
    const double k = max_col_nnz;
    factor = std::max(factor, std::pow((k - 1.0) / k, (k - 1.0) * n));
  }
  out.lower = factor * out.cap;
  return out;
}

CapacityMaxResult capacity_maximize(const NonnegMatrixFamily& family,
                                    const SolverConfig& cfg) {
  const int n = family.side;
  if (family.set.dim != n * n)
    throw std::invalid_argument("capacity_maximize: family description dimension must be side^2");
  if (!family.set.nonneg)
    throw std::invalid_argument("capacity_maximize: family must carry the nonneg flag");
  const int l = static_cast<int>(family.set.g.size());
  const MatrixXd& F = family.set.F;

  // Outer program: inf exp(g'zeta + 1'beta) with the per-entry rows
  //   [adjoint(zeta)]_ij + exp(x_j - beta_i - 1) <= 0,  1'x = 0,  zeta in K*.
  ProblemBuilder b(n);  // x
  std::vector<int> beta(n), zeta(l);
  for (int i = 0; i < n; ++i) beta[i] = b.new_var("beta" + std::to_string(i));
  std::vector<LinExpr> zeta_exprs;
  for (int r = 0; r < l; ++r) {
    zeta[r] = b.new_var("zeta" + std::to_string(r));
    zeta_exprs.push_back(LinExpr::var(zeta[r]));
  }
  b.attach_cone(zeta_exprs, dual_cone(family.set.cone));

  LinExpr sum_x;
  for (int j = 0; j < n; ++j) sum_x += LinExpr::var(j);
  b.add_eq(sum_x);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      LinExpr adj;  // row-major vec index
      const int idx = i * n + j;
      for (int r = 0; r < l; ++r)
        if (F(r, idx) != 0) adj += LinExpr::var(zeta[r], F(r, idx));
      b.add_exp_row(LinExpr::var(j) - LinExpr::var(beta[i]) - LinExpr(1.0), adj);
    }

  LinExpr objective;
  for (int r = 0; r < l; ++r)
    if (family.set.g(r) != 0) objective += LinExpr::var(zeta[r], family.set.g(r));
  for (int i = 0; i < n; ++i) objective += LinExpr::var(beta[i]);

  const BuiltCgp built = b.build(objective);
  CapacityMaxResult out;
  out.detail = solve_primal(built.problem, cfg);
  out.value = std::exp(out.detail.primal_obj);
  std::vector<int> user(n);
  for (int j = 0; j < n; ++j) user[j] = j;
  if (out.detail.x.size() == 0) return out;
  out.x = built.extract(out.detail.x, user);

  // Recover the maximizing matrix by the inner linear conic program
  // sup_{M in family} sum_ij M_ij exp(x_j - beta_i - 1).
  MatrixXd E(n, n);
  for (int i = 0; i < n; ++i) {
    const double bi = built.value(out.detail.x, beta[i]);
    for (int j = 0; j < n; ++j) E(i, j) = std::exp(out.x(j) - bi - 1.0);
  }
  ProblemBuilder inner;
  std::vector<int> mv(n * n);
  std::vector<LinExpr> mv_exprs;
  for (int idx = 0; idx < n * n; ++idx) {
    mv[idx] = inner.new_var("m" + std::to_string(idx));
    mv_exprs.push_back(LinExpr::var(mv[idx]));
  }
  inner.attach_cone(mv_exprs, ConeSpec::orthant(n * n));
  std::vector<LinExpr> member;
  for (int r = 0; r < l; ++r) {
    LinExpr e(family.set.g(r));
    for (int idx = 0; idx < n * n; ++idx)
      if (F(r, idx) != 0) e += LinExpr::var(mv[idx], F(r, idx));
    member.push_back(std::move(e));
  }
  inner.attach_cone(member, family.set.cone);
  LinExpr inner_obj;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inner_obj += LinExpr::var(mv[i * n + j], -E(i, j));
  const BuiltCgp inner_built = inner.build(inner_obj);
  const Solution inner_sol = solve_primal(inner_built.problem, cfg);
  if (inner_sol.x.size() > 0) {
    out.M_hat.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.M_hat(i, j) = std::max(0.0, inner_built.value(inner_sol.x, mv[i * n + j]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Robust GP
// ---------------------------------------------------------------------------

RobustGpResult robust_gp_solve(const VectorXd& objective,
                               const std::vector<RobustConstraint>& constraints,
                               const SolverConfig& cfg) {
  const int n = static_cast<int>(objective.size());
  ProblemBuilder b(n);
  std::vector<LinExpr> x_exprs;
  for (int j = 0; j < n; ++j) x_exprs.push_back(LinExpr::var(j));
  for (const auto& rc : constraints)
    robust_sum_exp(b, rc.C, rc.Qsets, x_exprs, LinExpr(rc.bound));
  LinExpr obj;
  for (int j = 0; j < n; ++j)
    if (objective(j) != 0) obj += LinExpr::var(j, objective(j));
  const BuiltCgp built = b.build(obj);
  RobustGpResult out;
  out.solution = solve_primal(built.problem, cfg);
  if (out.solution.x.size() > 0) {
    std::vector<int> user(n);
    for (int j = 0; j < n; ++j) user[j] = j;
    out.x = built.extract(out.solution.x, user);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hitting time
// ---------------------------------------------------------------------------

std::vector<std::string> validate(const LinearSystemSpec& spec) {
  std::vector<std::string> out;
  const int n = static_cast<int>(spec.mode_lo.size());
  if (spec.mode_hi.size() != n) out.push_back("mode box bounds differ in length");
  for (int j = 0; j < n; ++j)
    if (spec.mode_lo(j) > spec.mode_hi(j)) out.push_back("mode box empty at coordinate " + std::to_string(j));
  if (spec.x_init.dim != n) out.push_back("initial set dimension ≠ state dimension");
  if (!spec.x_init.nonneg) out.push_back("initial set must lie in the nonnegative orthant");
  if (spec.target_C.cols() != n) out.push_back("target half-space width ≠ state dimension");
  if (spec.target_C.rows() != spec.target_d.size()) out.push_back("target C/d shape mismatch");
  if (spec.target_C.size() > 0 && spec.target_C.minCoeff() < 0)
    out.push_back("target half-space coefficients must be nonnegative");
  if (spec.target_d.size() > 0 && spec.target_d.minCoeff() < 0)
    out.push_back("target thresholds must be nonnegative");
  return out;
}

HittingTimeResult hitting_time(const LinearSystemSpec& spec, const SolverConfig& cfg,
                               double t_max) {
  const auto violations = validate(spec);
  if (!violations.empty())
    throw std::invalid_argument("hitting_time: " + violations.front());
  const int n = static_cast<int>(spec.mode_lo.size());

  ProblemBuilder b;
  const int t = b.new_var("t");
  b.attach_cone({LinExpr::var(t)}, ConeSpec::orthant(1));
  b.add_ineq(LinExpr::var(t) - LinExpr(t_max));

  for (int i = 0; i < spec.target_C.rows(); ++i) {
    std::vector<std::optional<LinExpr>> exponents(n);
    for (int j = 0; j < n; ++j) {
      const double cij = spec.target_C(i, j);
      if (cij <= 0) continue;  // absent term; only the dual row survives
      // sup over the mode box: theta >= 0, theta1 - theta2 + t = 0,
      // exponent -lo*theta1 + hi*theta2 + log c.
      const int th1 = b.new_var("th1_" + std::to_string(i) + "_" + std::to_string(j));
      const int th2 = b.new_var("th2_" + std::to_string(i) + "_" + std::to_string(j));
      b.attach_cone({LinExpr::var(th1), LinExpr::var(th2)}, ConeSpec::orthant(2));
      b.add_eq(LinExpr::var(th1) - LinExpr::var(th2) + LinExpr::var(t));
      exponents[j] = LinExpr::var(th1, -spec.mode_lo(j)) +
                     LinExpr::var(th2, spec.mode_hi(j)) + LinExpr(std::log(cij));
    }
    robust_linear_sup_bound(b, spec.x_init, exponents, LinExpr(spec.target_d(i)));
  }

  const BuiltCgp built = b.build(LinExpr::var(t));
  HittingTimeResult out;
  out.detail = solve_primal(built.problem, cfg);
  out.status = out.detail.status;
  if (out.detail.status == SolveStatus::PrimalInfeasible) {
    out.unreachable = true;
    out.tau = kInf;
  } else if (out.detail.x.size() > 0) {
    out.tau = std::max(0.0, built.value(out.detail.x, t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Von-Neumann entropy maximization
// ---------------------------------------------------------------------------

EntropyMaxResult max_vn_entropy(int side,
                                const std::vector<std::pair<MatrixXd, double>>& lin_constraints,
                                double trace_value, const SolverConfig& cfg) {
  if (side < 1) throw std::invalid_argument("max_vn_entropy: side must be positive");
  const int d = svec_dim(side);
  EntropyBuilder eb;
  std::vector<int> msvec(d);
  std::vector<LinExpr> m_exprs;
  for (int a = 0; a < d; ++a) {
    msvec[a] = eb.new_var("msvec" + std::to_string(a));
    m_exprs.push_back(LinExpr::var(msvec[a]));
  }
  eb.attach_cone(m_exprs, ConeSpec::psd(side));
  const MatrixAff Mexpr = MatrixAff::from_svec_vars(side, msvec.front());
  vn_entropy_hypograph(eb, Mexpr);
  eb.add_eq(trace_expr(Mexpr) - LinExpr(trace_value));
  for (const auto& [A, rhs] : lin_constraints) {
    if (A.rows() != side || A.cols() != side)
      throw std::invalid_argument("max_vn_entropy: constraint matrix shape mismatch");
    const VectorXd a = sym_to_vec(0.5 * (A + A.transpose()));
    LinExpr e(-rhs);
    for (int idx = 0; idx < d; ++idx)
      if (a(idx) != 0) e += LinExpr::var(msvec[idx], a(idx));
    eb.add_eq(e);
  }

  const BuiltEntropy built = eb.build();
  EntropyMaxResult out;
  out.detail = solve_entropy(built.problem, cfg);
  out.entropy = out.detail.primal_obj;
  if (out.detail.x.size() > 0) {
    VectorXd v(d);
    for (int a = 0; a < d; ++a) v(a) = built.value(out.detail.x, msvec[a]);
    out.M = vec_to_sym(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantum channel capacity
// ---------------------------------------------------------------------------

MatrixXd QuantumChannel::apply(const MatrixXd& rho) const {
  MatrixXd out = MatrixXd::Zero(out_dim(), out_dim());
  for (const auto& A : kraus) out += A * rho * A.transpose();
  return out;
}

double QuantumChannel::validation_error() const {
  if (kraus.empty()) return kInf;
  MatrixXd s = MatrixXd::Zero(in_dim(), in_dim());
  for (const auto& A : kraus) s += A.transpose() * A;
  return (s - MatrixXd::Identity(in_dim(), in_dim())).norm();
}

namespace {

void check_channel_and_states(const QuantumChannel& channel,
                              const std::vector<VectorXd>& states) {
  if (channel.kraus.empty())
    throw std::invalid_argument("quantum channel has no Kraus operators");
  if (channel.validation_error() > 1e-8)
    throw std::invalid_argument("quantum channel is not trace preserving");
  if (states.empty()) throw std::invalid_argument("state list must not be empty");
  for (const auto& v : states) {
    if (v.size() != channel.in_dim())
      throw std::invalid_argument("state dimension does not match the channel");
    if (std::abs(v.norm() - 1.0) > 1e-10)
      throw std::invalid_argument("states must be unit vectors");
  }
}

}  // namespace

CqResult cq_capacity(const QuantumChannel& channel, const std::vector<VectorXd>& states,
                     const SolverConfig& cfg) {
  check_channel_and_states(channel, states);
  const int m = static_cast<int>(states.size());
  const int out_dim = channel.out_dim();

  std::vector<MatrixXd> W(m);
  VectorXd H(m);
  for (int i = 0; i < m; ++i) {
    W[i] = channel.apply(states[i] * states[i].transpose());
    W[i] = 0.5 * (W[i] + W[i].transpose());
    H(i) = entropy_of_spectrum(W[i]);
  }

  bool all_diagonal = true;
  for (const auto& Wi : W) {
    MatrixXd off = Wi;
    off.diagonal().setZero();
    if (off.lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + Wi.norm())) {
      all_diagonal = false;
      break;
    }
  }

  EntropyBuilder eb;
  std::vector<int> pv(m);
  for (int i = 0; i < m; ++i) pv[i] = eb.new_var("p" + std::to_string(i));
  std::vector<LinExpr> p_exprs;
  LinExpr simplex(-1.0);
  for (int i = 0; i < m; ++i) {
    p_exprs.push_back(LinExpr::var(pv[i]));
    simplex += LinExpr::var(pv[i]);
    eb.set_cost(pv[i], H(i));
  }
  eb.attach_cone(p_exprs, ConeSpec::orthant(m));
  eb.add_eq(simplex);

  if (all_diagonal) {
    // Diagonal output: the output entropy is the Shannon entropy of the
    // diagonal distribution, no spectral lift required.
    for (int j = 0; j < out_dim; ++j) {
      double col_mass = 0;
      for (int i = 0; i < m; ++i) col_mass += W[i](j, j);
      if (col_mass <= 0) continue;  // unreachable output symbol
      const int qj = eb.new_entropy_var(1.0, "q" + std::to_string(j));
      LinExpr e = LinExpr::var(qj, -1.0);
      for (int i = 0; i < m; ++i)
        if (W[i](j, j) != 0) e += LinExpr::var(pv[i], W[i](j, j));
      eb.add_eq(e);
    }
  } else {
    MatrixAff Mexpr;
    Mexpr.rows = Mexpr.cols = out_dim;
    Mexpr.constant = MatrixXd::Zero(out_dim, out_dim);
    for (int i = 0; i < m; ++i) Mexpr.coeff.emplace_back(pv[i], W[i]);
    vn_entropy_hypograph(eb, Mexpr);
  }

  const BuiltEntropy built = eb.build();
  CqResult out;
  out.detail = solve_entropy(built.problem, cfg);
  out.value = out.detail.primal_obj;
  if (out.detail.x.size() > 0) {
    out.p.resize(m);
    for (int i = 0; i < m; ++i) out.p(i) = built.value(out.detail.x, pv[i]);
  }
  return out;
}

CqResult cq_capacity_fixed_rho(const QuantumChannel& channel,
                               const std::vector<VectorXd>& states, const MatrixXd& rho,
                               const SolverConfig& cfg) {
  check_channel_and_states(channel, states);
  const int m = static_cast<int>(states.size());
  const int n = channel.in_dim();
  if (rho.rows() != n || rho.cols() != n)
    throw std::invalid_argument("cq_capacity_fixed_rho: density shape mismatch");

  VectorXd H(m);
  ProblemBuilder b;
  std::vector<int> pv(m);
  std::vector<LinExpr> p_exprs;
  for (int i = 0; i < m; ++i) {
    pv[i] = b.new_var("p" + std::to_string(i));
    p_exprs.push_back(LinExpr::var(pv[i]));
    MatrixXd Wi = channel.apply(states[i] * states[i].transpose());
    H(i) = entropy_of_spectrum(Wi);
  }
  b.attach_cone(p_exprs, ConeSpec::orthant(m));
  LinExpr simplex(-1.0);
  for (int i = 0; i < m; ++i) simplex += LinExpr::var(pv[i]);
  b.add_eq(simplex);

  const int d = svec_dim(n);
  const VectorXd rho_vec = sym_to_vec(0.5 * (rho + rho.transpose()));
  std::vector<VectorXd> state_vecs(m);
  for (int i = 0; i < m; ++i)
    state_vecs[i] = sym_to_vec(states[i] * states[i].transpose());
  for (int a = 0; a < d; ++a) {
    LinExpr e(-rho_vec(a));
    for (int i = 0; i < m; ++i)
      if (state_vecs[i](a) != 0) e += LinExpr::var(pv[i], state_vecs[i](a));
    b.add_eq(e);
  }

  LinExpr obj;
  for (int i = 0; i < m; ++i)
    if (H(i) != 0) obj += LinExpr::var(pv[i], H(i));
  const BuiltCgp built = b.build(obj);
  CqResult out;
  out.detail = solve_primal(built.problem, cfg);
  if (out.detail.status == SolveStatus::Optimal) {
    out.value = entropy_of_spectrum(channel.apply(rho)) - out.detail.primal_obj;
    out.p.resize(m);
    for (int i = 0; i < m; ++i) out.p(i) = built.value(out.detail.x, pv[i]);
  }
  return out;
}

MatrixXd transition_matrix(const QuantumChannel& channel) {
  const int n = channel.in_dim();
  const int kk = channel.out_dim();
  MatrixXd T(n, kk);
  for (int i = 0; i < n; ++i) {
    MatrixXd rho = MatrixXd::Zero(n, n);
    rho(i, i) = 1.0;
    const MatrixXd out = channel.apply(rho);
    for (int j = 0; j < kk; ++j) T(i, j) = std::max(0.0, out(j, j));
    const double s = T.row(i).sum();
    if (s > 0) T.row(i) /= s;
  }
  return T;
}

double induced_classical_capacity(const QuantumChannel& channel, const SolverConfig& cfg) {
  const int n = channel.in_dim();
  const int out_dim = channel.out_dim();
  // Compose with the diagonal projection: Kraus set {e_j e_j' A_l}.
  QuantumChannel projected;
  for (int j = 0; j < out_dim; ++j) {
    MatrixXd P = MatrixXd::Zero(out_dim, out_dim);
    P(j, j) = 1.0;
    for (const auto& A : channel.kraus) projected.kraus.push_back(P * A);
  }
  std::vector<VectorXd> basis(n);
  for (int i = 0; i < n; ++i) {
    basis[i] = VectorXd::Zero(n);
    basis[i](i) = 1.0;
  }
  return cq_capacity(projected, basis, cfg).value;
}

std::vector<double> capacity_state_augmentation(const QuantumChannel& channel,
                                                std::vector<VectorXd> states, int rounds,
                                                std::uint64_t seed,
                                                const SolverConfig& cfg) {
  std::vector<double> values;
  values.push_back(cq_capacity(channel, states, cfg).value);
  Rng rng(seed);
  for (int r = 0; r < rounds; ++r) {
    VectorXd v(channel.in_dim());
    for (int i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
    if (v.norm() == 0) v(0) = 1.0;
    v.normalize();
    states.push_back(v);
    values.push_back(cq_capacity(channel, states, cfg).value);
  }
  return values;
}

QuantumChannel make_random_channel(std::uint64_t seed, double eps, int dim) {
  if (eps < 0 || eps > 1)
    throw std::invalid_argument("make_random_channel: eps must be in [0, 1]");
  Rng rng(seed);
  MatrixXd A1 = MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) A1(i, i) = rng.gaussian();
  MatrixXd A2(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A2(i, j) = rng.gaussian();

  // Joint scale so I - A1'A1 - eps^2 A2'A2 stays positive definite on [0, 1].
  MatrixXd G = A1.transpose() * A1 + A2.transpose() * A2;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G, Eigen::EigenvaluesOnly);
  const double scale = std::sqrt(0.98 / std::max(es.eigenvalues().maxCoeff(), 1e-12));
  A1 *= scale;
  A2 *= scale;

  MatrixXd rem = MatrixXd::Identity(dim, dim) - A1.transpose() * A1 -
                 (eps * eps) * A2.transpose() * A2;
  Eigen::SelfAdjointEigenSolver<MatrixXd> esr(0.5 * (rem + rem.transpose()));
  VectorXd lam = esr.eigenvalues().cwiseMax(0.0);
  MatrixXd A3 = esr.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                esr.eigenvectors().transpose();

  QuantumChannel ch;
  ch.kraus = {A1, eps * A2, A3};
  return ch;
}

}  // namespace cgp
