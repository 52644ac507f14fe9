#ifndef CLFCBF_PENCIL_HPP
#define CLFCBF_PENCIL_HPP

#include <vector>

#include <Eigen/Core>

#include "clfcbf/poly.hpp"

namespace clfcbf {

/// Regular linear matrix pencil P(lambda) = lambda*M - N.
class Pencil {
 public:
  /// Throws DegeneratePencil when det(lambda*M - N) is the zero polynomial.
  Pencil(Eigen::MatrixXd M, Eigen::MatrixXd N);

  int dim() const { return static_cast<int>(M_.rows()); }
  const Eigen::MatrixXd& M() const { return M_; }
  const Eigen::MatrixXd& N() const { return N_; }
  Eigen::MatrixXd operator()(double lambda) const { return lambda * M_ - N_; }
  MatrixPoly as_matrix_poly() const;

 private:
  Eigen::MatrixXd M_, N_;
};

/// det(lambda*M - N) with exact coefficients: Leibniz expansion for dim <= 4,
/// interpolation through dim+1 Chebyshev sample points otherwise.
ScalarPoly pencil_det(const Pencil& p);

/// Adjugate matrix polynomial, degree <= n-1, satisfying
/// P(lambda) Adj{P(lambda)} = det(P(lambda)) I identically.
MatrixPoly pencil_adjugate(const Pencil& p);

/// Real spectrum of the pencil: real roots of det P.
std::vector<double> pencil_real_spectrum(const Pencil& p, double tol = 1e-8);

/// Minimal-degree matrix polynomial R (n x (n-1)) with R(l)^T v(l) == 0 and
/// pointwise rank n-1 away from finitely many l. Search starts at degree 0.
/// Throws NullspaceDegreeExceeded past max_deg.
MatrixPoly poly_nullspace(const MatrixPoly& v, int max_deg);

/// Constant orthogonal complement of a single vector: n x (n-1), used as the
/// pointwise fallback when the polynomial basis degenerates at an isolated l.
Eigen::MatrixXd pointwise_complement(const Eigen::VectorXd& v);

enum class Definiteness { NSD, PSD, Indefinite };

/// Sign classification of a symmetric matrix polynomial over lambda.
struct SignIntervals {
  std::vector<double> breakpoints;        // ascending real roots of det S
  std::vector<Definiteness> verdicts;     // breakpoints.size()+1 entries
  double sigma_minus = 0.0;               // sup of the leftmost NSD interval; +-inf sentinels
  double sigma_plus = 0.0;                // inf of the rightmost PSD interval; +-inf sentinels
  int nsd_interval_count = 0;
};

/// Classifies S(lambda) between the real roots of det S. Midpoints plus a
/// `grid`-point sweep over [-lam_max, lam_max] decide each verdict; eigenvalues
/// with |mu| <= 1e-9 * ||S(l)||_F count as zero.
SignIntervals definiteness_intervals(const MatrixPoly& s, double lam_max, int grid);

}  // namespace clfcbf

#endif  // CLFCBF_PENCIL_HPP
