#ifndef CLFCBF_COMPAT_HPP
#define CLFCBF_COMPAT_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "clfcbf/equilibria.hpp"
#include "clfcbf/plant.hpp"
#include "clfcbf/qp.hpp"

namespace clfcbf {

/// Shape state pi: row-wise stacked lower triangle of L, H(pi) = L^T L.
Eigen::MatrixXd hessian_from_shape(const Eigen::VectorXd& pi);
/// Inverse with the nonnegative-diagonal convention. Throws InvalidInput on an
/// indefinite H.
Eigen::VectorXd shape_from_hessian(const Eigen::MatrixXd& H);
int shape_dim(int n);

struct ShapeLyapunov {
  double value = 0.0;
  Eigen::VectorXd grad;  // over pi, chain rule through L
};

/// V_pi = 0.5 |H(pi) - H_target|_F^2 and its analytic gradient.
ShapeLyapunov shape_lyapunov(const Eigen::VectorXd& pi, const Eigen::MatrixXd& H_target);

struct ShapeQPResult {
  Eigen::VectorXd u_pi;
  double delta_v = 0.0;
};

/// Single-constraint shape QP; H_sel is the i-th compatible target inside S_i,
/// the reference otherwise. Solved by the same micro-QP as the state controller.
ShapeQPResult shape_qp_step(const Eigen::VectorXd& pi, const ActiveRegion& region,
                            const Eigen::MatrixXd& H_ref,
                            const std::vector<Eigen::MatrixXd>& H_targets, double p_pi,
                            double gamma_pi);

struct CompatOptions {
  double eps = 1.1;
  int penalty_rounds = 8;
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  int max_inner_iters = 200;
  double fd_step = 1e-6;
  double feas_tol = 1e-8;
  AnalysisOptions analysis;
};

struct CompatSolution {
  Eigen::MatrixXd H;
  double objective = 0.0;  // |H - H_ref|_F^2
  struct Cert {
    double B = 0.0;
    bool monotone_ok = false;
    double lmi_max_eig = 0.0;  // max eig of HA + A^T H (LTI), 0 for driftless
  } cert;
  int iterations = 0;
  bool converged = false;
  bool exact_compatible = false;  // post-verified through is_compatible
  bool barrier_cert_ok = false;   // Thm-5 sufficient certificate itself
};

/// Nearest i-th compatible Hessian: exterior penalty over the Cholesky factor
/// with BFGS inner loops and finite-difference gradients. Returns H_ref
/// untouched when it already satisfies every constraint. Throws
/// CompatibilizationFailed when no feasible iterate appears.
CompatSolution compatibilize(const Eigen::MatrixXd& H_ref, const Plant& plant,
                             const std::vector<Barrier>& barriers, int barrier_idx, double p,
                             double eps, const CompatOptions& opts = {});

}  // namespace clfcbf

#endif  // CLFCBF_COMPAT_HPP
