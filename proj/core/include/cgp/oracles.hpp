#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "cgp/model.hpp"

namespace cgp::oracles {

/// Exact permanent by Ryser's inclusion-exclusion with Gray-code updates,
/// O(2^n n). Throws for n > 12.
double perm_exact(const MatrixXd& M);

/// Exact permanent by direct permutation enumeration; cross-check for
/// perm_exact. Throws for n > 8.
double perm_enumerate(const MatrixXd& M);

/// Low-accuracy estimate of cap(p_M) = inf{p_M(y) : y > 0, prod y = 1}.
/// Log-domain grid scan (n <= 4) refined by a projected Newton descent on
/// the hyperplane 1'x = 0; validated to ~1e-3 on closed forms.
double capacity_grid(const MatrixXd& M, int resolution = 21);

/// Max relative deviation between an analytic gradient and central finite
/// differences, coordinatewise.
double fd_gradient_dev(const std::function<double(const VectorXd&)>& f,
                       const VectorXd& grad, const VectorXd& x, double h = 1e-6);

/// Max relative deviation between analytic Hessian-vector products and
/// differenced gradients along `trials` random directions.
double fd_hessian_dev(const std::function<VectorXd(const VectorXd&)>& grad,
                      const MatrixXd& hess, const VectorXd& x, double h = 1e-6,
                      int trials = 4, std::uint64_t seed = 0);

/// Rejection sampler over {x : (x >= 0), g + Fx in K}. The sampling box is
/// grown adaptively unless a bound is supplied; fails (returns empty) when
/// nothing is accepted.
class ConicSetSampler {
 public:
  ConicSetSampler(const ConicSetDesc& desc, std::uint64_t seed,
                  std::optional<double> box_bound = std::nullopt);
  /// One accepted point, or empty after `max_tries` rejections.
  std::optional<VectorXd> draw(int max_tries = 20000);
  /// Accepted point pushed to the set boundary along a random direction.
  std::optional<VectorXd> draw_boundary(int max_tries = 20000);
  int accepted() const { return accepted_; }
  double box_bound() const { return box_; }

 private:
  ConicSetDesc desc_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double box_ = 1.0;
  bool calibrated_ = false;
  int accepted_ = 0;
  void calibrate();
  VectorXd candidate();
};

struct HittingSampleReport {
  bool all_inside = false;
  double worst_margin = 0;  // min over draws/half-spaces of d_i - c_i'x(tau)
  VectorXd witness_x0;
  VectorXd witness_modes;
  int accepted = 0;
};

/// Samples initial states from the conic description and enumerates mode-box
/// corners; reports whether every sampled trajectory lies in the target at
/// time tau.
HittingSampleReport hitting_time_sample(const ConicSetDesc& x_init,
                                        const VectorXd& mode_lo, const VectorXd& mode_hi,
                                        const MatrixXd& target_C, const VectorXd& target_d,
                                        double tau, int draws, std::uint64_t seed);

struct AdversaryReport {
  double worst = 0;
  VectorXd worst_c;
  MatrixXd worst_q;  // columns q^(i)
  int accepted = 0;
};

/// Sampled lower bound on sup{sum_i c_i exp(q_i'x) : c in C, q_i in Q_i};
/// mixes interior and boundary-pushed draws.
AdversaryReport adversary_sample(const ConicSetDesc& C,
                                 const std::vector<ConicSetDesc>& Qsets,
                                 const VectorXd& xhat, int draws, std::uint64_t seed);

/// Capacity (nats) of a row-stochastic channel matrix by the classical
/// alternating fixed-point iteration.
double blahut_arimoto(const MatrixXd& transition, int max_iters = 20000,
                      double tol = 1e-10);

/// Stationarity residual for entropy maximization: Frobenius norm of
/// log(M*) minus its least-squares projection onto span{constraints, I}.
double kkt_entropy_check(const MatrixXd& m_star,
                         const std::vector<MatrixXd>& constraint_matrices);

}  // namespace cgp::oracles
