#include "clfcbf/compat.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "clfcbf/errors.hpp"

namespace clfcbf {

int shape_dim(int n) { return n * (n + 1) / 2; }

namespace {

int dim_from_shape(int len) {
  const int n = static_cast<int>(std::round((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (n * (n + 1) / 2 != len) throw InvalidInput("shape state length is not n(n+1)/2");
  return n;
}

Eigen::MatrixXd lower_from_shape(const Eigen::VectorXd& pi) {
  const int n = dim_from_shape(static_cast<int>(pi.size()));
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) L(i, j) = pi(k++);
  return L;
}

Eigen::VectorXd shape_from_lower(const Eigen::MatrixXd& L) {
  const int n = static_cast<int>(L.rows());
  Eigen::VectorXd pi(shape_dim(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) pi(k++) = L(i, j);
  return pi;
}

}  // namespace

Eigen::MatrixXd hessian_from_shape(const Eigen::VectorXd& pi) {
  const Eigen::MatrixXd L = lower_from_shape(pi);
  return L.transpose() * L;
}

Eigen::VectorXd shape_from_hessian(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, H.norm()))
    throw InvalidInput("shape_from_hessian: H has a negative eigenvalue");
  // H = L^T L with L lower triangular, via the flip trick: JHJ = K^T K with K
  // upper triangular, then L = JKJ. Nonnegative diagonal by construction.
  const int n = static_cast<int>(H.rows());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) J(i, n - 1 - i) = 1.0;
  const Eigen::MatrixXd Hf = J * H * J;
  Eigen::LLT<Eigen::MatrixXd> llt(Hf + 1e-300 * Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd K;
  if (llt.info() == Eigen::Success) {
    K = llt.matrixU();
  } else {
    // semidefinite fallback through a square root that we re-triangularize
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esf(Hf);
    const Eigen::MatrixXd sqrtHf = esf.eigenvectors() *
                                   esf.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                   esf.eigenvectors().transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sqrtHf);
    K = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
      if (K(i, i) < 0) K.row(i) *= -1.0;
  }
  Eigen::MatrixXd L = J * K * J;
  // enforce nonnegative diagonal (sign flips of rows of K keep K^T K)
  for (int i = 0; i < n; ++i)
    if (L(i, i) < 0) L.row(i) *= -1.0;
  return shape_from_lower(L);
}

ShapeLyapunov shape_lyapunov(const Eigen::VectorXd& pi, const Eigen::MatrixXd& H_target) {
  const Eigen::MatrixXd L = lower_from_shape(pi);
  const Eigen::MatrixXd E = L.transpose() * L - H_target;
  ShapeLyapunov out;
  out.value = 0.5 * E.squaredNorm();
  // dV/dL = 2 L E for symmetric E; the pi-gradient reads off the lower triangle
  const Eigen::MatrixXd GL = 2.0 * L * E;
  const int n = static_cast<int>(L.rows());
  out.grad = Eigen::VectorXd(shape_dim(n));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) out.grad(k++) = GL(i, j);
  return out;
}

ShapeQPResult shape_qp_step(const Eigen::VectorXd& pi, const ActiveRegion& region,
                            const Eigen::MatrixXd& H_ref,
                            const std::vector<Eigen::MatrixXd>& H_targets, double p_pi,
                            double gamma_pi) {
  const Eigen::MatrixXd* sel = &H_ref;
  if (region.kind == ActiveRegion::Kind::Single &&
      region.barrier < static_cast<int>(H_targets.size()))
    sel = &H_targets[static_cast<size_t>(region.barrier)];
  const ShapeLyapunov v = shape_lyapunov(pi, *sel);

  // same micro-QP as the state controller: one CLF-type row over (u_pi, delta_v)
  const int m = static_cast<int>(pi.size());
  QPConstraint row;
  row.a = Eigen::VectorXd(m + 1);
  row.a.head(m) = v.grad;
  row.a(m) = -1.0;
  row.b = -gamma_pi * v.value;
  const QPOutcome out = solve_micro_qp({row}, m, p_pi);
  return ShapeQPResult{out.u, out.delta};
}

// ------------------------------------------------------------ compatibilize

namespace {

struct PenaltyEval {
  double objective = 0.0;   // |H - Href|_F^2
  double viol_lmi = 0.0;    // max(0, max eig of HA + A^T H)
  double viol_B = 0.0;      // max(0, -B)
  double viol_mono = 0.0;   // max(0, -min eig S' on grid)
  double merit(double w) const {
    return objective + w * (viol_lmi * viol_lmi + viol_B * viol_B + viol_mono * viol_mono);
  }
  bool feasible(double tol) const {
    return viol_lmi <= tol && viol_B <= tol && viol_mono <= tol;
  }
};

class CompatProblem {
 public:
  CompatProblem(const Eigen::MatrixXd& H_ref, const Plant& plant, const Barrier& barrier,
                const TransformedCLF& clf_proto, double p, double eps, const CompatOptions& opts)
      : H_ref_(H_ref), plant_(plant), barrier_(barrier), clf_proto_(clf_proto), p_(p), eps_(eps),
        opts_(opts) {}

  PenaltyEval eval(const Eigen::VectorXd& theta) const {
    PenaltyEval out;
    const Eigen::MatrixXd H = hessian_from_shape(theta);
    out.objective = (H - H_ref_).squaredNorm();
    out.viol_lmi = lmi_violation(H);
    // Severely flat H makes the pencil nearly singular; treat as a large
    // violation instead of throwing out of the line search.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-9 * std::max(1.0, H.norm())) {
      out.viol_B = 1e6;
      out.viol_mono = 1e6;
      return out;
    }
    try {
      const TransformedCLF clf = clf_proto_.with_hessian(H);
      const PencilSystem ps = build_pencil(plant_, clf, barrier_, p_);
      const CompatBarrierResult cb = compatibility_barrier(ps, barrier_, eps_, opts_.analysis);
      out.viol_B = std::isinf(cb.B) ? 0.0 : std::max(0.0, -cb.B);
      out.viol_mono = cb.monotone_ok ? 0.0 : mono_violation(ps);
    } catch (const Error&) {
      out.viol_B = 1e6;
      out.viol_mono = 1e6;
    }
    return out;
  }

  double lmi_violation(const Eigen::MatrixXd& H) const {
    if (!plant_.is_lti()) return 0.0;
    const Eigen::MatrixXd lyap = H * plant_.A() + plant_.A().transpose() * H;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lyap, Eigen::EigenvaluesOnly);
    return std::max(0.0, es.eigenvalues().maxCoeff());
  }

  double mono_violation(const PencilSystem& ps) const {
    const MatrixPoly s = stability_polynomial(ps, barrier_);
    const MatrixPoly sd = s.derivative();
    const QFunction qf = q_function(ps, barrier_);
    double lam_max = 2.0;
    for (double sp : qf.spectrum) lam_max = std::max(lam_max, 2.0 * (1.0 + std::abs(sp)));
    double worst = 0.0;
    for (int k = 0; k <= 100; ++k) {
      const double lam = lam_max * k / 100.0;
      const Eigen::MatrixXd m = 0.5 * (sd(lam) + sd(lam).transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      worst = std::max(worst, -es.eigenvalues().minCoeff());
    }
    return worst;
  }

 private:
  Eigen::MatrixXd H_ref_;
  const Plant& plant_;
  const Barrier& barrier_;
  const TransformedCLF& clf_proto_;
  double p_, eps_;
  CompatOptions opts_;
};

Eigen::VectorXd fd_gradient(const CompatProblem& prob, const Eigen::VectorXd& theta, double w,
                            double step_scale) {
  const int d = static_cast<int>(theta.size());
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) {
    const double h = step_scale * (1.0 + std::abs(theta(i)));
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    g(i) = (prob.eval(tp).merit(w) - prob.eval(tm).merit(w)) / (2.0 * h);
  }
  return g;
}

// BFGS with backtracking; returns iterations spent.
int bfgs_minimize(const CompatProblem& prob, double w, Eigen::VectorXd& theta, int max_iters,
                  double fd_step) {
  const int d = static_cast<int>(theta.size());
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(d, d);
  double f = prob.eval(theta).merit(w);
  Eigen::VectorXd g = fd_gradient(prob, theta, w, fd_step);
  int it = 0;
  for (; it < max_iters; ++it) {
    if (g.norm() <= 1e-10 * (1.0 + std::abs(f))) break;
    Eigen::VectorXd dir = -Hinv * g;
    if (dir.dot(g) >= 0.0) {  // reset on loss of descent
      Hinv.setIdentity();
      dir = -g;
    }
    double alpha = 1.0;
    double f_new = f;
    Eigen::VectorXd theta_new = theta;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      theta_new = theta + alpha * dir;
      f_new = prob.eval(theta_new).merit(w);
      if (f_new <= f + 1e-4 * alpha * g.dot(dir)) {
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!ok) break;
    const Eigen::VectorXd g_new = fd_gradient(prob, theta_new, w, fd_step);
    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
      const double rho = 1.0 / sy;
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
             rho * s * s.transpose();
    }
    theta = theta_new;
    f = f_new;
    g = g_new;
    if (s.norm() <= 1e-12 * (1.0 + theta.norm())) break;
  }
  return it;
}

}  // namespace

CompatSolution compatibilize(const Eigen::MatrixXd& H_ref, const Plant& plant,
                             const std::vector<Barrier>& barriers, int barrier_idx, double p,
                             double eps, const CompatOptions& opts) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(H_ref, Eigen::EigenvaluesOnly);
  if (es0.eigenvalues().minCoeff() <= 0.0)
    throw InvalidInput("compatibilize: H_ref must be positive definite");
  if (eps <= 1.0) throw InvalidInput("compatibilize: eps must exceed 1");
  const Barrier& barrier = barriers.at(static_cast<size_t>(barrier_idx));

  const TransformedCLF clf_proto(QuadraticFn(H_ref, plant.x0(), 0.0), ClassK(1.0));
  CompatProblem prob(H_ref, plant, barrier, clf_proto, p, eps, opts);

  const auto finish = [&](const Eigen::MatrixXd& H, int iters, bool converged) {
    CompatSolution sol;
    sol.H = H;
    sol.objective = (H - H_ref).squaredNorm();
    sol.iterations = iters;
    sol.converged = converged;
    const PenaltyEval pe = prob.eval(shape_from_hessian(H));
    sol.cert.lmi_max_eig = plant.is_lti() ? prob.lmi_violation(H) : 0.0;
    const TransformedCLF clf = clf_proto.with_hessian(H);
    const PencilSystem ps = build_pencil(plant, clf, barrier, p);
    const CompatBarrierResult cb = compatibility_barrier(ps, barrier, eps, opts.analysis);
    sol.cert.B = cb.B;
    sol.cert.monotone_ok = cb.monotone_ok;
    sol.barrier_cert_ok = pe.feasible(opts.feas_tol);
    // Thm 5 is sufficient, not necessary: the exact check decides.
    sol.exact_compatible = is_compatible(plant, clf, barrier, p, opts.analysis).compatible;
    return sol;
  };

  // Already feasible: hand back the reference untouched.
  const Eigen::VectorXd theta0 = shape_from_hessian(H_ref);
  if (prob.eval(theta0).feasible(opts.feas_tol)) return finish(H_ref, 0, true);

  Eigen::VectorXd theta = theta0;
  double w = opts.penalty_init;
  int total_iters = 0;
  std::optional<Eigen::VectorXd> best_feasible;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int round = 0; round < opts.penalty_rounds; ++round) {
    total_iters += bfgs_minimize(prob, w, theta, opts.max_inner_iters, opts.fd_step);
    const PenaltyEval pe = prob.eval(theta);
    if (pe.feasible(opts.feas_tol) && pe.objective < best_obj) {
      best_feasible = theta;
      best_obj = pe.objective;
    }
    w *= opts.penalty_growth;
  }
  if (!best_feasible) {
    // final polish at the largest weight before giving up
    const PenaltyEval pe = prob.eval(theta);
    if (pe.feasible(10.0 * opts.feas_tol)) {
      best_feasible = theta;
    } else {
      throw CompatibilizationFailed(
          "compatibilize: no feasible iterate (residual B viol " + std::to_string(pe.viol_B) +
          ", lmi " + std::to_string(pe.viol_lmi) + ", mono " + std::to_string(pe.viol_mono) + ")");
    }
  }
  return finish(hessian_from_shape(*best_feasible), total_iters, true);
}

}  // namespace clfcbf
