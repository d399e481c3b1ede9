#include "cgp/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cgp/rng.hpp"

namespace cgp::oracles {

double perm_exact(const MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n) throw std::invalid_argument("perm_exact: matrix must be square");
  if (n == 0) return 1.0;
  if (n > 12) throw std::invalid_argument("perm_exact: n > 12 not supported");

  // Gray-code Ryser: perm = (-1)^n sum_{S != empty} (-1)^{|S|} prod_i row_i(S).
  VectorXd row_sums = VectorXd::Zero(n);
  double total = 0;
  std::uint32_t prev = 0;
  const std::uint32_t limit = 1u << n;
  int popcount = 0;
  for (std::uint32_t g = 1; g < limit; ++g) {
    const std::uint32_t gray = g ^ (g >> 1);
    const std::uint32_t changed = gray ^ prev;
    const int j = std::countr_zero(changed);
    if (gray & changed) {
      row_sums += M.col(j);
      ++popcount;
    } else {
      row_sums -= M.col(j);
      --popcount;
    }
    prev = gray;
    const double prod = row_sums.prod();
    total += (popcount % 2 == 0 ? 1.0 : -1.0) * prod;
  }
  return (n % 2 == 0 ? 1.0 : -1.0) * total;
}

double perm_enumerate(const MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n) throw std::invalid_argument("perm_enumerate: matrix must be square");
  if (n > 8) throw std::invalid_argument("perm_enumerate: n > 8 not supported");
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  double total = 0;
  do {
    double prod = 1;
    for (int i = 0; i < n; ++i) prod *= M(i, sigma[i]);
    total += prod;
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return total;
}

namespace {

// Objective log p_M(exp{x}) = sum_i log(sum_j M_ij e^{x_j}) on 1'x = 0.
double log_capacity_objective(const MatrixXd& M, const VectorXd& x) {
  double total = 0;
  for (int i = 0; i < M.rows(); ++i) {
    double s = 0;
    for (int j = 0; j < M.cols(); ++j)
      if (M(i, j) > 0) s += M(i, j) * std::exp(x(j));
    if (s <= 0) return std::numeric_limits<double>::infinity();
    total += std::log(s);
  }
  return total;
}

// Projected Newton on the hyperplane; independent of the solver machinery.
double capacity_newton(const MatrixXd& M, VectorXd x) {
  const int n = static_cast<int>(M.cols());
  x.array() -= x.mean();
  for (int it = 0; it < 200; ++it) {
    VectorXd grad = VectorXd::Zero(n);
    MatrixXd hess = MatrixXd::Zero(n, n);
    for (int i = 0; i < M.rows(); ++i) {
      VectorXd e(n);
      double s = 0;
      for (int j = 0; j < n; ++j) {
        e(j) = M(i, j) > 0 ? M(i, j) * std::exp(x(j)) : 0.0;
        s += e(j);
      }
      const VectorXd w = e / s;
      grad += w;
      hess += w.asDiagonal().toDenseMatrix() - w * w.transpose();
    }
    hess.diagonal().array() += 1e-12;
    VectorXd d = -hess.ldlt().solve(grad);
    d.array() -= d.mean();
    const VectorXd pg = grad - VectorXd::Constant(n, grad.mean());
    if (pg.lpNorm<Eigen::Infinity>() < 1e-12) break;
    double alpha = 1.0;
    const double f0 = log_capacity_objective(M, x);
    for (int ls = 0; ls < 60; ++ls) {
      if (log_capacity_objective(M, x + alpha * d) < f0 - 1e-4 * alpha * pg.squaredNorm())
        break;
      alpha *= 0.5;
    }
    x += alpha * d;
    x.array() -= x.mean();
  }
  return std::exp(log_capacity_objective(M, x));
}

}  // namespace

double capacity_grid(const MatrixXd& M, int resolution) {
  const int n = static_cast<int>(M.cols());
  if (M.rows() != n) throw std::invalid_argument("capacity_grid: matrix must be square");
  for (int i = 0; i < n; ++i) {
    if (M.row(i).maxCoeff() <= 0) return 0.0;
    if (M.col(i).maxCoeff() <= 0) return 0.0;
  }

  VectorXd best = VectorXd::Zero(n);
  if (n >= 2 && n <= 4 && resolution >= 3) {
    double best_val = std::numeric_limits<double>::infinity();
    const double span = 4.0;
    std::vector<int> idx(n - 1, 0);
    const int total = static_cast<int>(std::pow(resolution, n - 1));
    for (int flat = 0; flat < total; ++flat) {
      int rem = flat;
      VectorXd x(n);
      double sum = 0;
      for (int d = 0; d < n - 1; ++d) {
        const int q = rem % resolution;
        rem /= resolution;
        x(d) = -span + 2 * span * q / (resolution - 1);
        sum += x(d);
      }
      x(n - 1) = -sum;
      const double val = log_capacity_objective(M, x);
      if (val < best_val) {
        best_val = val;
        best = x;
      }
    }
  }
  const double from_grid = capacity_newton(M, best);
  const double from_origin = capacity_newton(M, VectorXd::Zero(n));
  return std::min(from_grid, from_origin);
}

double fd_gradient_dev(const std::function<double(const VectorXd&)>& f,
                       const VectorXd& grad, const VectorXd& x, double h) {
  double worst = 0;
  VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    const double fd = (f(xp) - f(xm)) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1.0, std::abs(grad(i))));
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return worst;
}

double fd_hessian_dev(const std::function<VectorXd(const VectorXd&)>& grad,
                      const MatrixXd& hess, const VectorXd& x, double h, int trials,
                      std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    VectorXd v(x.size());
    for (int i = 0; i < v.size(); ++i) v(i) = rng.gaussian();
    v /= std::max(1.0, v.norm());
    const VectorXd fd = (grad(x + h * v) - grad(x - h * v)) / (2 * h);
    const VectorXd hv = hess * v;
    worst = std::max(worst, (fd - hv).lpNorm<Eigen::Infinity>() /
                                std::max(1.0, hv.lpNorm<Eigen::Infinity>()));
  }
  return worst;
}

ConicSetSampler::ConicSetSampler(const ConicSetDesc& desc, std::uint64_t seed,
                                 std::optional<double> box_bound)
    : desc_(desc), seed_(seed) {
  if (box_bound) {
    box_ = *box_bound;
    calibrated_ = true;
  }
}

VectorXd ConicSetSampler::candidate() {
  Rng r(seed_ ^ (0x9e3779b97f4a7c15ull * (counter_ + 1)));
  VectorXd x(desc_.dim);
  for (int i = 0; i < desc_.dim; ++i) {
    const double u = r.uniform();
    x(i) = desc_.nonneg ? box_ * u : box_ * (2 * u - 1);
  }
  ++counter_;
  return x;
}

void ConicSetSampler::calibrate() {
  // Grow the box until accepted points stop hugging its boundary.
  for (int round = 0; round < 24; ++round) {
    int hits = 0;
    double max_coord = 0;
    for (int i = 0; i < 600; ++i) {
      const VectorXd x = candidate();
      if (desc_.member(x, 1e-11)) {
        ++hits;
        max_coord = std::max(max_coord, x.cwiseAbs().maxCoeff());
      }
    }
    if (hits > 0 && max_coord < 0.8 * box_) break;
    box_ *= 2.0;
  }
  calibrated_ = true;
}

std::optional<VectorXd> ConicSetSampler::draw(int max_tries) {
  if (!calibrated_) calibrate();
  for (int i = 0; i < max_tries; ++i) {
    const VectorXd x = candidate();
    if (desc_.member(x, 1e-11)) {
      ++accepted_;
      return x;
    }
  }
  return std::nullopt;
}

std::optional<VectorXd> ConicSetSampler::draw_boundary(int max_tries) {
  auto inside = draw(max_tries);
  if (!inside) return std::nullopt;
  VectorXd dir(desc_.dim);
  Rng r(seed_ ^ (0xabcdefull + counter_ * 7919));
  for (int i = 0; i < desc_.dim; ++i) dir(i) = r.gaussian();
  if (dir.norm() == 0) return inside;
  dir.normalize();
  // Binary search for the furthest member along dir.
  double lo = 0, hi = 1;
  while (desc_.member(*inside + hi * dir, 1e-11) && hi < 1e12) hi *= 2;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (desc_.member(*inside + mid * dir, 1e-11))
      lo = mid;
    else
      hi = mid;
  }
  return *inside + lo * dir;
}

HittingSampleReport hitting_time_sample(const ConicSetDesc& x_init,
                                        const VectorXd& mode_lo, const VectorXd& mode_hi,
                                        const MatrixXd& target_C, const VectorXd& target_d,
                                        double tau, int draws, std::uint64_t seed) {
  const int n = x_init.dim;
  if (mode_lo.size() != n || mode_hi.size() != n)
    throw std::invalid_argument("hitting_time_sample: mode box dimension mismatch");
  HittingSampleReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();

  const bool enumerate_corners = n <= 16;
  const int corner_count = enumerate_corners ? (1 << n) : 1;
  ConicSetSampler sampler(x_init, seed);
  for (int d = 0; d < draws; ++d) {
    auto x0 = (d % 4 == 3) ? sampler.draw_boundary() : sampler.draw();
    if (!x0) break;
    for (int c = 0; c < corner_count; ++c) {
      VectorXd modes(n);
      for (int j = 0; j < n; ++j)
        modes(j) = (enumerate_corners && !((c >> j) & 1)) ? mode_lo(j) : mode_hi(j);
      VectorXd xt(n);
      for (int j = 0; j < n; ++j) xt(j) = (*x0)(j) * std::exp(modes(j) * tau);
      for (int i = 0; i < target_C.rows(); ++i) {
        const double margin = target_d(i) - target_C.row(i).dot(xt);
        if (margin < rep.worst_margin) {
          rep.worst_margin = margin;
          rep.witness_x0 = *x0;
          rep.witness_modes = modes;
        }
      }
    }
  }
  rep.accepted = sampler.accepted();
  rep.all_inside = rep.accepted > 0 && rep.worst_margin >= -1e-9;
  return rep;
}

AdversaryReport adversary_sample(const ConicSetDesc& C,
                                 const std::vector<ConicSetDesc>& Qsets,
                                 const VectorXd& xhat, int draws, std::uint64_t seed) {
  const int k = C.dim;
  if (static_cast<int>(Qsets.size()) != k)
    throw std::invalid_argument("adversary_sample: need one Q set per coefficient");
  AdversaryReport rep;
  rep.worst = -std::numeric_limits<double>::infinity();

  ConicSetSampler c_sampler(C, seed);
  std::vector<ConicSetSampler> q_samplers;
  q_samplers.reserve(Qsets.size());
  for (size_t i = 0; i < Qsets.size(); ++i)
    q_samplers.emplace_back(Qsets[i], seed + 1000 + i);

  for (int d = 0; d < draws; ++d) {
    const bool push = d % 2 == 1;
    auto c = push ? c_sampler.draw_boundary() : c_sampler.draw();
    if (!c) break;
    MatrixXd q(xhat.size(), k);
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      auto qi = push ? q_samplers[i].draw_boundary() : q_samplers[i].draw();
      if (!qi)
        ok = false;
      else
        q.col(i) = *qi;
    }
    if (!ok) break;
    double val = 0;
    for (int i = 0; i < k; ++i) val += (*c)(i)*std::exp(q.col(i).dot(xhat));
    if (val > rep.worst) {
      rep.worst = val;
      rep.worst_c = *c;
      rep.worst_q = q;
    }
  }
  rep.accepted = c_sampler.accepted();
  return rep;
}

double blahut_arimoto(const MatrixXd& transition, int max_iters, double tol) {
  const int m = static_cast<int>(transition.rows());
  const int n = static_cast<int>(transition.cols());
  for (int i = 0; i < m; ++i) {
    if (transition.row(i).minCoeff() < -1e-12)
      throw std::invalid_argument("blahut_arimoto: negative transition probability");
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-8)
      throw std::invalid_argument("blahut_arimoto: rows must sum to one");
  }
  VectorXd p = VectorXd::Constant(m, 1.0 / m);
  for (int it = 0; it < max_iters; ++it) {
    VectorXd q = transition.transpose() * p;  // output distribution
    VectorXd D(m);
    for (int i = 0; i < m; ++i) {
      double di = 0;
      for (int j = 0; j < n; ++j) {
        const double t = transition(i, j);
        if (t > 0) di += t * std::log(t / std::max(q(j), 1e-300));
      }
      D(i) = di;
    }
    const double upper = D.maxCoeff();
    const double lower = p.dot(D);
    if (upper - lower < tol) return lower;
    VectorXd pn(m);
    for (int i = 0; i < m; ++i) pn(i) = p(i) * std::exp(D(i) - upper);
    p = pn / pn.sum();
  }
  VectorXd q = transition.transpose() * p;
  double cap = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const double t = transition(i, j);
      if (t > 0) cap += p(i) * t * std::log(t / std::max(q(j), 1e-300));
    }
  return cap;
}

double kkt_entropy_check(const MatrixXd& m_star,
                         const std::vector<MatrixXd>& constraint_matrices) {
  const int side = static_cast<int>(m_star.rows());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m_star);
  if (es.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument("kkt_entropy_check: matrix must be positive definite");
  MatrixXd log_m = es.eigenvectors() *
                   es.eigenvalues().array().log().matrix().asDiagonal() *
                   es.eigenvectors().transpose();

  const int d = svec_dim(side);
  MatrixXd basis(d, static_cast<int>(constraint_matrices.size()) + 1);
  for (size_t j = 0; j < constraint_matrices.size(); ++j)
    basis.col(static_cast<int>(j)) = sym_to_vec(0.5 * (constraint_matrices[j] +
                                                       constraint_matrices[j].transpose()));
  basis.col(basis.cols() - 1) = sym_to_vec(MatrixXd::Identity(side, side));

  const VectorXd target = sym_to_vec(log_m);
  const VectorXd fit = basis * basis.colPivHouseholderQr().solve(target);
  return (target - fit).norm();  // Frobenius residual via isometry
}

}  // namespace cgp::oracles
