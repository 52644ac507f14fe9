#ifndef CLFCBF_EQUILIBRIA_HPP
#define CLFCBF_EQUILIBRIA_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "clfcbf/pencil.hpp"
#include "clfcbf/plant.hpp"
#include "clfcbf/qp.hpp"

namespace clfcbf {

/// Per-barrier pencil P(lambda) = lambda M - N with offset w = N (c_i - x0).
///  driftless: M = H_h, N = p H_Vbar
///  LTI:       M = B B^T H_h, N = p B B^T H_Vbar - A
struct PencilSystem {
  Pencil pencil;
  Eigen::VectorXd w;
  int barrier_idx = 0;
  PlantKind plant_kind = PlantKind::LTI;
};

PencilSystem build_pencil(const Plant& plant, const TransformedCLF& clf, const Barrier& barrier,
                          double p, int barrier_idx = 0);

/// Equilibrium-manifold field f_i(x, lambda) = f + lambda G grad(h_i) - p G grad(Vbar).
Eigen::VectorXd equilibrium_field(const Eigen::VectorXd& x, double lambda, const Plant& plant,
                                  const TransformedCLF& clf, const Barrier& barrier, double p);
/// Jacobian of f_i in x (analytic for constant G, finite differences otherwise).
Eigen::MatrixXd equilibrium_jacobian(const Eigen::VectorXd& x, double lambda, const Plant& plant,
                                     const TransformedCLF& clf, const Barrier& barrier, double p);

/// Rational Q-function q = n / det(P)^2 with z = n - det(P)^2.
struct QFunction {
  ScalarPoly n_poly;
  ScalarPoly d_poly;  // det(P)^2
  ScalarPoly z_poly;  // n - d
  std::vector<double> spectrum;  // real pencil spectrum
  bool proper = false;           // deg n < deg d
  double operator()(double lambda) const { return n_poly(lambda) / d_poly(lambda); }
};

QFunction q_function(const PencilSystem& ps, const Barrier& barrier);

enum class Stability { Stable, Unstable, Marginal };

struct EquilibriumPoint {
  Eigen::VectorXd x;
  double lambda_e = 0.0;
  int barrier_idx = -1;  // -1 marks an interior point
  Stability verdict = Stability::Marginal;
  // diagnostics
  double field_residual = 0.0;    // |f_cl(x_e)| through the actual QP
  double boundary_residual = 0.0; // |h_i(x_e)|
  double s_min_eig = 0.0, s_max_eig = 0.0;  // extremes of S(lambda_e)
  std::vector<double> jacobian_real_parts;  // numeric closed-loop Jacobian spectrum
};

struct AnalysisOptions {
  double root_tol = 1e-8;           // complex-root acceptance
  double spectrum_clearance = 1e-6; // relative clearance of lambda_e from sigma_P
  double marginal_tol = 1e-7;       // classification margin, scaled by |S|_F
  double eps = 1.1;                 // compatibility-barrier margin, > 1
  int grid = 400;                   // definiteness sampling per interval sweep
  std::optional<double> lam_max;    // default: 2 (1 + max|sigma_P| + max|roots z|)
};

/// Stability matrix polynomial S = R^T (P + P^T) R with R the polynomial
/// nullspace basis of H_h Adj{P} w.
MatrixPoly stability_polynomial(const PencilSystem& ps, const Barrier& barrier);

Stability classify_equilibrium(double lambda_e, const MatrixPoly& s, double marginal_tol);

/// Boundary equilibria of barrier i: nonnegative real roots of z outside the
/// pencil spectrum, each verified a posteriori through the actual controller
/// running with barrier i alone (the per-barrier theory; under disjointness the
/// full closed loop agrees whenever the point is safe for the other barriers).
/// Roots within the spectral clearance are dropped (degenerate) with a note;
/// roots failing the a-posteriori residuals land in unverified_roots.
struct BoundaryAnalysis {
  std::vector<EquilibriumPoint> points;
  std::vector<double> degenerate_roots;
  std::vector<double> unverified_roots;
  QFunction qfun;
  MatrixPoly s_poly;
  SignIntervals s_intervals;
  double lam_max = 0.0;
};

BoundaryAnalysis boundary_equilibria(const Plant& plant, const TransformedCLF& clf,
                                     const std::vector<Barrier>& barriers, int barrier_idx,
                                     const ControllerConfig& cfg, const AnalysisOptions& opts = {});

/// Frame quantities entering the Lemma-1 closed-loop Jacobian.
struct BoundaryFrame {
  Eigen::VectorXd z1, z2;
  double eta = 1.0;
  Eigen::MatrixXd Z;    // [z1 z2]
  Eigen::MatrixXd N1;   // diag(1, p eta)
  Eigen::MatrixXd Psi;
  Eigen::MatrixXd Ji;
};

struct BoundaryJacobian {
  Eigen::MatrixXd J;
  BoundaryFrame frame;
};

/// J_cl(x_e) = (I - G Z N1 Z^T) J_i - G Z N1 Psi Z^T.
/// Throws UnsupportedDegenerate when L_g h_i vanishes at x_e.
BoundaryJacobian boundary_jacobian(const Eigen::VectorXd& xe, double lambda_e, const Plant& plant,
                                   const TransformedCLF& clf, const Barrier& barrier,
                                   const ControllerConfig& cfg);

/// Interior equilibria f(x) = p G grad(Vbar) by damped Newton from a grid.
std::vector<EquilibriumPoint> interior_equilibria(const Plant& plant, const TransformedCLF& clf,
                                                  const std::vector<Barrier>& barriers,
                                                  const ControllerConfig& cfg,
                                                  const Eigen::VectorXd& box_lo,
                                                  const Eigen::VectorXd& box_hi,
                                                  int grid_per_dim = 25);

struct CompatBarrierResult {
  double B = 0.0;          // +inf when the NSD window misses R>=0
  double sigma_minus = 0.0;
  bool monotone_ok = false;
};

/// B(q) = min over [0, sigma_-] of n(lambda) - eps det(P)^2, evaluated at the
/// real critical points and endpoints; monotonicity = grid-certified S' >= 0
/// plus PSD leading coefficient.
CompatBarrierResult compatibility_barrier(const PencilSystem& ps, const Barrier& barrier,
                                          double eps, const AnalysisOptions& opts = {});

struct CompatibilityEvidence {
  bool compatible = false;
  std::vector<EquilibriumPoint> boundary_points;
  std::vector<EquilibriumPoint> interior_points;  // beyond x0, if any
};

/// Exact check (Cor. 1 route) with only the i-th CBF in the controller: every
/// boundary equilibrium unstable and the interior set reduced to the CLF
/// minimum.
CompatibilityEvidence is_compatible(const Plant& plant, const TransformedCLF& clf,
                                    const Barrier& barrier, double p,
                                    const AnalysisOptions& opts = {});

}  // namespace clfcbf

#endif  // CLFCBF_EQUILIBRIA_HPP
