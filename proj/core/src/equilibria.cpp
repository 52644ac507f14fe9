#include "clfcbf/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "clfcbf/errors.hpp"

namespace clfcbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScalarPoly scalar_from_1x1(const MatrixPoly& m) {
  if (m.rows() != 1 || m.cols() != 1) throw InvalidInput("expected 1x1 matrix polynomial");
  std::vector<double> c;
  for (int k = 0; k <= std::max(0, m.degree()); ++k) c.push_back(m.coeff(k)(0, 0));
  return ScalarPoly{std::move(c)};
}

}  // namespace

PencilSystem build_pencil(const Plant& plant, const TransformedCLF& clf, const Barrier& barrier,
                          double p, int barrier_idx) {
  const Eigen::MatrixXd& Hh = barrier.fn.H;
  const Eigen::MatrixXd& Hv = clf.hessian();
  Eigen::MatrixXd M, N;
  if (plant.is_lti()) {
    const Eigen::MatrixXd BBt = plant.B() * plant.B().transpose();
    M = BBt * Hh;
    N = p * BBt * Hv - plant.A();
  } else {
    M = Hh;
    N = p * Hv;
  }
  const Eigen::VectorXd w = N * (barrier.fn.center - clf.center());
  return PencilSystem{Pencil(std::move(M), std::move(N)), w, barrier_idx, plant.kind()};
}

Eigen::VectorXd equilibrium_field(const Eigen::VectorXd& x, double lambda, const Plant& plant,
                                  const TransformedCLF& clf, const Barrier& barrier, double p) {
  const Eigen::MatrixXd G = plant.gram(x);
  return plant.drift(x) + lambda * G * barrier_eval(barrier.fn, x).grad - p * G * clf.vbar_grad(x);
}

Eigen::MatrixXd equilibrium_jacobian(const Eigen::VectorXd& x, double lambda, const Plant& plant,
                                     const TransformedCLF& clf, const Barrier& barrier, double p) {
  const Eigen::MatrixXd G = plant.gram(x);
  Eigen::MatrixXd J = plant.drift_jacobian(x);
  J += lambda * (plant.gram_times_vector_jacobian(x, barrier_eval(barrier.fn, x).grad) +
                 G * barrier.fn.H);
  J -= p * (plant.gram_times_vector_jacobian(x, clf.vbar_grad(x)) + G * clf.hessian());
  return J;
}

QFunction q_function(const PencilSystem& ps, const Barrier& barrier) {
  const MatrixPoly adj = pencil_adjugate(ps.pencil);
  const MatrixPoly aw = adj * MatrixPoly::constant(ps.w);
  const MatrixPoly quad = aw.transpose() * MatrixPoly::constant(barrier.fn.H) * aw;
  QFunction q;
  q.n_poly = scalar_from_1x1(quad).trimmed(1e-13);
  const ScalarPoly det = pencil_det(ps.pencil);
  q.d_poly = (det * det).trimmed(1e-13);
  q.z_poly = (q.n_poly - q.d_poly).trimmed(1e-13);
  q.spectrum = pencil_real_spectrum(ps.pencil);
  q.proper = q.n_poly.degree() < q.d_poly.degree();
  return q;
}

namespace {

struct StabilityData {
  MatrixPoly S;
  MatrixPoly R;
  MatrixPoly v;  // H_h Adj{P} w
};

StabilityData build_stability_data(const PencilSystem& ps, const Barrier& barrier) {
  const int n = ps.pencil.dim();
  if (n < 2) throw InvalidInput("stability_polynomial: needs n >= 2");
  const MatrixPoly adj = pencil_adjugate(ps.pencil);
  StabilityData sd;
  sd.v = (MatrixPoly::constant(barrier.fn.H) * adj * MatrixPoly::constant(ps.w)).trimmed(1e-12);
  sd.R = poly_nullspace(sd.v, n - 1);
  const MatrixPoly P = ps.pencil.as_matrix_poly();
  sd.S = (sd.R.transpose() * (P + P.transpose()) * sd.R).trimmed(1e-13);
  return sd;
}

}  // namespace

MatrixPoly stability_polynomial(const PencilSystem& ps, const Barrier& barrier) {
  return build_stability_data(ps, barrier).S;
}

Stability classify_equilibrium(double lambda_e, const MatrixPoly& s, double marginal_tol) {
  const Eigen::MatrixXd se = 0.5 * (s(lambda_e) + s(lambda_e).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(se, Eigen::EigenvaluesOnly);
  const double tol = marginal_tol * std::max(se.norm(), 1e-30);
  const double hi = es.eigenvalues().maxCoeff();
  if (hi > tol) return Stability::Unstable;
  if (hi < -tol) return Stability::Stable;
  return Stability::Marginal;
}

namespace {

double default_lam_max(const QFunction& q) {
  double m = 0.0;
  for (double s : q.spectrum) m = std::max(m, std::abs(s));
  double r = 0.0;
  if (q.z_poly.degree() >= 1)
    for (const auto& root : poly_roots(q.z_poly)) r = std::max(r, std::abs(root));
  return 2.0 * (1.0 + m + r);
}

// Rank guard: when the polynomial basis degenerates exactly at lambda_e, fall
// back to a pointwise orthogonal complement (same verdict by congruence).
Stability classify_with_fallback(double lambda_e, const StabilityData& sd, const Pencil& pencil,
                                 double marginal_tol, double* s_min, double* s_max) {
  const MatrixPoly* s_used = &sd.S;
  MatrixPoly s_pt;
  const Eigen::MatrixXd Re = sd.R(lambda_e);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Re);
  const double top = svd.singularValues()(0);
  const bool rank_deficient =
      top <= 0.0 || svd.singularValues()(svd.singularValues().size() - 1) <= 1e-8 * top;
  if (rank_deficient) {
    const Eigen::VectorXd ve = sd.v(lambda_e);
    if (ve.norm() > 0) {
      const Eigen::MatrixXd Rpt = pointwise_complement(ve);
      const Eigen::MatrixXd Pe = pencil(lambda_e);
      s_pt = MatrixPoly::constant(Rpt.transpose() * (Pe + Pe.transpose()) * Rpt);
      s_used = &s_pt;
    }
  }
  const Eigen::MatrixXd m = 0.5 * ((*s_used)(lambda_e) + (*s_used)(lambda_e).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  *s_min = es.eigenvalues().minCoeff();
  *s_max = es.eigenvalues().maxCoeff();
  return classify_equilibrium(lambda_e, *s_used, marginal_tol);
}

}  // namespace

BoundaryAnalysis boundary_equilibria(const Plant& plant, const TransformedCLF& clf,
                                     const std::vector<Barrier>& barriers, int barrier_idx,
                                     const ControllerConfig& cfg, const AnalysisOptions& opts) {
  const Barrier& barrier = barriers.at(static_cast<size_t>(barrier_idx));
  BoundaryAnalysis out;
  PencilSystem ps = build_pencil(plant, clf, barrier, cfg.p, barrier_idx);
  out.qfun = q_function(ps, barrier);
  const StabilityData sd = build_stability_data(ps, barrier);
  out.s_poly = sd.S;
  out.lam_max = opts.lam_max.value_or(default_lam_max(out.qfun));
  out.s_intervals = definiteness_intervals(out.s_poly, out.lam_max, opts.grid);
  const int n = plant.state_dim();
  if (out.s_intervals.nsd_interval_count > n)
    throw Error("boundary_equilibria: NSD interval count exceeded the dimension bound");

  if (out.qfun.z_poly.degree() < 1) return out;
  for (const auto& root : poly_roots(out.qfun.z_poly, opts.root_tol)) {
    if (std::abs(root.imag()) > opts.root_tol * (1.0 + std::abs(root.real()))) continue;
    double lam = root.real();
    if (lam < 0.0) {
      if (lam > -1e-10) lam = 0.0;
      else continue;
    }
    bool degenerate = false;
    for (double s : out.qfun.spectrum)
      if (std::abs(lam - s) <= opts.spectrum_clearance * (1.0 + std::abs(lam))) degenerate = true;
    if (degenerate) {
      out.degenerate_roots.push_back(lam);
      continue;
    }

    const Eigen::MatrixXd Pe = ps.pencil(lam);
    const Eigen::VectorXd nu = Pe.fullPivLu().solve(ps.w);
    EquilibriumPoint pt;
    pt.x = nu + barrier.fn.center;
    pt.lambda_e = lam;
    pt.barrier_idx = barrier_idx;

    // a-posteriori verification through the actual controller, barrier i alone
    const std::vector<Barrier> solo{barrier};
    Eigen::VectorXd fcl;
    try {
      fcl = closed_loop_field(pt.x, plant, clf, solo, cfg);
    } catch (const InfeasibleQP&) {
      out.unverified_roots.push_back(lam);
      continue;
    }
    const Eigen::MatrixXd G = plant.gram(pt.x);
    const double scale = 1.0 + plant.drift(pt.x).norm() + cfg.p * (G * clf.vbar_grad(pt.x)).norm() +
                         std::abs(lam) * (G * barrier_eval(barrier.fn, pt.x).grad).norm();
    pt.field_residual = fcl.norm();
    pt.boundary_residual = std::abs(barrier_eval(barrier.fn, pt.x).h);
    if (pt.field_residual > 1e-6 * scale || pt.boundary_residual > 1e-6) {
      out.unverified_roots.push_back(lam);
      continue;
    }

    pt.verdict = classify_with_fallback(lam, sd, ps.pencil, opts.marginal_tol, &pt.s_min_eig,
                                        &pt.s_max_eig);
    try {
      const BoundaryJacobian bj = boundary_jacobian(pt.x, lam, plant, clf, barrier, cfg);
      Eigen::EigenSolver<Eigen::MatrixXd> es(bj.J, false);
      for (int k = 0; k < es.eigenvalues().size(); ++k)
        pt.jacobian_real_parts.push_back(es.eigenvalues()(k).real());
      std::sort(pt.jacobian_real_parts.begin(), pt.jacobian_real_parts.end());
    } catch (const UnsupportedDegenerate&) {
      // L_g h = 0 there; spectrum diagnostics stay empty
    }
    out.points.push_back(std::move(pt));
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const EquilibriumPoint& a, const EquilibriumPoint& b) {
              return a.lambda_e < b.lambda_e;
            });
  return out;
}

BoundaryJacobian boundary_jacobian(const Eigen::VectorXd& xe, double lambda_e, const Plant& plant,
                                   const TransformedCLF& clf, const Barrier& barrier,
                                   const ControllerConfig& cfg) {
  const int n = plant.state_dim();
  const Eigen::MatrixXd G = plant.gram(xe);
  const BarrierEval be = barrier_eval(barrier.fn, xe);
  const double gh_norm_sq = be.grad.dot(G * be.grad);
  if (gh_norm_sq <= 1e-16)
    throw UnsupportedDegenerate("boundary_jacobian: L_g h vanishes at x_e");

  const ClfEval ce = clf.recover(xe);
  const Eigen::VectorXd z1 = be.grad / std::sqrt(gh_norm_sq);
  const Eigen::VectorXd z2 = ce.grad - ce.grad.dot(G * z1) * z1;
  const double eta = 1.0 / (1.0 + cfg.p * z2.dot(G * z2));

  Eigen::MatrixXd Z(n, 2);
  Z.col(0) = z1;
  Z.col(1) = z2;
  Eigen::MatrixXd N1 = Eigen::MatrixXd::Zero(2, 2);
  N1(0, 0) = 1.0;
  N1(1, 1) = cfg.p * eta;

  const double gprime = clf.gamma().deriv(ce.V);
  const double aprime = barrier.alpha.deriv(be.h);
  Eigen::MatrixXd Psi(2, 2);
  Psi << aprime, 0.0, ce.grad.dot(G * z1) * (gprime - aprime), gprime;

  // J_i = df/dx + lambda d(G grad h)/dx - p gamma(V) d(G grad V)/dx
  Eigen::MatrixXd Ji = plant.drift_jacobian(xe);
  Ji += lambda_e * (plant.gram_times_vector_jacobian(xe, be.grad) + G * barrier.fn.H);
  const double gV = cfg.gamma(ce.V);
  Ji -= cfg.p * gV * (plant.gram_times_vector_jacobian(xe, ce.grad) + G * clf.recovered_hessian(xe));

  BoundaryJacobian out;
  out.frame = BoundaryFrame{z1, z2, eta, Z, N1, Psi, Ji};
  out.J = (Eigen::MatrixXd::Identity(n, n) - G * Z * N1 * Z.transpose()) * Ji -
          G * Z * N1 * Psi * Z.transpose();
  return out;
}

std::vector<EquilibriumPoint> interior_equilibria(const Plant& plant, const TransformedCLF& clf,
                                                  const std::vector<Barrier>& barriers,
                                                  const ControllerConfig& cfg,
                                                  const Eigen::VectorXd& box_lo,
                                                  const Eigen::VectorXd& box_hi, int grid_per_dim) {
  const int n = plant.state_dim();
  const auto F = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return plant.drift(x) - cfg.p * plant.gram(x) * clf.vbar_grad(x);
  };
  const auto JF = [&](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd J = plant.drift_jacobian(x);
    J -= cfg.p * (plant.gram_times_vector_jacobian(x, clf.vbar_grad(x)) +
                  plant.gram(x) * clf.hessian());
    return J;
  };
  const auto inside_safe = [&](const Eigen::VectorXd& x) {
    for (const auto& b : barriers)
      if (barrier_eval(b.fn, x).h < -1e-9) return false;
    return true;
  };

  std::vector<EquilibriumPoint> found;
  const long total = static_cast<long>(std::pow(grid_per_dim, n));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Eigen::VectorXd x(n);
    for (int k = 0; k < n; ++k) {
      const int i = static_cast<int>(rem % grid_per_dim);
      rem /= grid_per_dim;
      x(k) = box_lo(k) + (box_hi(k) - box_lo(k)) * (i + 0.5) / grid_per_dim;
    }
    if (!inside_safe(x)) continue;
    // damped Newton
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      const Eigen::VectorXd r = F(x);
      if (!r.allFinite()) break;
      if (r.norm() <= 1e-12 * (1.0 + x.norm())) {
        converged = true;
        break;
      }
      Eigen::VectorXd step = JF(x).fullPivLu().solve(-r);
      if (!step.allFinite()) break;
      double alpha = 1.0;
      const double r0 = r.norm();
      while (alpha > 1e-4 && F(x + alpha * step).norm() > (1.0 - 0.25 * alpha) * r0) alpha *= 0.5;
      x += alpha * step;
      if ((box_hi - x).minCoeff() < -(box_hi - box_lo).norm() ||
          (x - box_lo).minCoeff() < -(box_hi - box_lo).norm())
        break;  // wandered far outside the search box
    }
    if (!converged || !inside_safe(x)) continue;
    bool duplicate = false;
    for (const auto& p : found)
      if ((p.x - x).norm() < 1e-5) duplicate = true;
    if (duplicate) continue;
    EquilibriumPoint pt;
    pt.x = x;
    pt.barrier_idx = -1;
    pt.lambda_e = 0.0;
    pt.field_residual = F(x).norm();
    if ((x - clf.center()).norm() < 1e-6) {
      pt.verdict = Stability::Stable;  // the CLF minimum
    } else {
      Eigen::EigenSolver<Eigen::MatrixXd> es(JF(x), false);
      double maxre = -kInf;
      for (int k = 0; k < es.eigenvalues().size(); ++k) {
        pt.jacobian_real_parts.push_back(es.eigenvalues()(k).real());
        maxre = std::max(maxre, es.eigenvalues()(k).real());
      }
      std::sort(pt.jacobian_real_parts.begin(), pt.jacobian_real_parts.end());
      pt.verdict = maxre > 1e-7 ? Stability::Unstable
                                : (maxre < -1e-7 ? Stability::Stable : Stability::Marginal);
    }
    found.push_back(std::move(pt));
  }
  return found;
}

CompatBarrierResult compatibility_barrier(const PencilSystem& ps, const Barrier& barrier,
                                          double eps, const AnalysisOptions& opts) {
  if (eps <= 1.0) throw InvalidInput("compatibility_barrier: eps must exceed 1");
  const QFunction qf = q_function(ps, barrier);
  const MatrixPoly s = stability_polynomial(ps, barrier);
  const double lam_max = opts.lam_max.value_or(default_lam_max(qf));
  const SignIntervals si = definiteness_intervals(s, lam_max, opts.grid);

  CompatBarrierResult out;
  out.sigma_minus = si.sigma_minus;

  // monotonicity certificate: S' PSD on the grid and a PSD leading coefficient
  const MatrixPoly sd = s.derivative();
  bool mono = true;
  const int sd_deg = std::max(sd.degree(), 0);
  {
    const Eigen::MatrixXd lead = 0.5 * (sd.coeff(sd_deg) + sd.coeff(sd_deg).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lead, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, lead.norm())) mono = false;
  }
  for (int k = 0; k <= opts.grid && mono; ++k) {
    const double lam = lam_max * static_cast<double>(k) / opts.grid;
    const Eigen::MatrixXd m = 0.5 * (sd(lam) + sd(lam).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, m.norm())) mono = false;
  }
  out.monotone_ok = mono;

  const double hi = si.sigma_minus == kInf ? lam_max : si.sigma_minus;
  if (hi < 0.0) {
    out.B = kInf;  // NSD window misses the nonnegative axis: compatible by vacuity
    return out;
  }
  const ScalarPoly z_eps = (qf.n_poly - eps * qf.d_poly).trimmed(1e-13);
  double best = std::min(z_eps(0.0), z_eps(hi));
  const ScalarPoly dz = z_eps.derivative();
  if (dz.degree() >= 1)
    for (double r : poly_real_roots(dz))
      if (r > 0.0 && r < hi) best = std::min(best, z_eps(r));
  out.B = best;
  return out;
}

namespace {

std::pair<Eigen::VectorXd, Eigen::VectorXd> default_box(const TransformedCLF& clf,
                                                        const std::vector<Barrier>& barriers) {
  const int n = static_cast<int>(clf.center().size());
  double radius = 1.0;
  for (const auto& b : barriers) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.fn.H, Eigen::EigenvaluesOnly);
    const double extent = 1.0 / std::sqrt(std::max(es.eigenvalues().minCoeff(), 1e-12));
    radius = std::max(radius, (b.fn.center - clf.center()).norm() + extent);
  }
  radius *= 1.5;
  const Eigen::VectorXd lo = clf.center() - Eigen::VectorXd::Constant(n, radius);
  const Eigen::VectorXd hi = clf.center() + Eigen::VectorXd::Constant(n, radius);
  return {lo, hi};
}

}  // namespace

CompatibilityEvidence is_compatible(const Plant& plant, const TransformedCLF& clf,
                                    const Barrier& barrier, double p, const AnalysisOptions& opts) {
  CompatibilityEvidence ev;
  const std::vector<Barrier> solo{barrier};
  ControllerConfig cfg;
  cfg.p = p;
  const BoundaryAnalysis ba = boundary_equilibria(plant, clf, solo, 0, cfg, opts);
  ev.boundary_points = ba.points;
  bool ok = true;
  for (const auto& pt : ba.points)
    if (pt.verdict != Stability::Unstable) ok = false;

  const auto [lo, hi] = default_box(clf, solo);
  const int grid = plant.state_dim() <= 2 ? 25 : 9;
  for (auto& pt : interior_equilibria(plant, clf, solo, cfg, lo, hi, grid))
    if ((pt.x - clf.center()).norm() >= 1e-6) {
      ev.interior_points.push_back(pt);
      ok = false;
    }
  ev.compatible = ok;
  return ev;
}

}  // namespace clfcbf
