#ifndef CLFCBF_POLY_HPP
#define CLFCBF_POLY_HPP

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace clfcbf {

/// Dense real polynomial, coefficients ascending in degree.
/// The zero polynomial is the empty coefficient vector; degree() reports -1
/// for it (stand-in for the -infinity convention).
class ScalarPoly {
 public:
  ScalarPoly() = default;
  explicit ScalarPoly(std::vector<double> coeffs);
  static ScalarPoly constant(double c);
  static ScalarPoly identity();  // p(x) = x

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  double coeff(int k) const;  // 0 beyond stored degree
  double leading() const;

  double operator()(double x) const;
  std::complex<double> operator()(std::complex<double> x) const;

  ScalarPoly derivative() const;
  ScalarPoly& operator+=(const ScalarPoly& rhs);
  ScalarPoly& operator-=(const ScalarPoly& rhs);
  friend ScalarPoly operator+(ScalarPoly lhs, const ScalarPoly& rhs) { return lhs += rhs; }
  friend ScalarPoly operator-(ScalarPoly lhs, const ScalarPoly& rhs) { return lhs -= rhs; }
  friend ScalarPoly operator*(const ScalarPoly& a, const ScalarPoly& b);
  friend ScalarPoly operator*(double s, ScalarPoly p);

  double max_abs_coeff() const;
  /// Drops trailing coefficients below rel_tol * max|coeff|.
  ScalarPoly trimmed(double rel_tol = 1e-13) const;

 private:
  void strip_exact_zeros();
  std::vector<double> coeffs_;
};

/// Roots of p (with multiplicity) via balanced companion-matrix eigenvalues.
/// Throws DegenerateInput on the zero polynomial; a constant has no roots.
std::vector<std::complex<double>> poly_roots(const ScalarPoly& p, double tol = 1e-8);

/// Real roots only: |imag| <= tol*(1+|real|), sorted ascending.
std::vector<double> poly_real_roots(const ScalarPoly& p, double tol = 1e-8);

/// Matrix-valued polynomial, coefficient matrices ascending in degree.
class MatrixPoly {
 public:
  MatrixPoly() : rows_(0), cols_(0) {}
  MatrixPoly(int rows, int cols) : rows_(rows), cols_(cols) {}
  explicit MatrixPoly(std::vector<Eigen::MatrixXd> coeff_mats);
  static MatrixPoly constant(const Eigen::MatrixXd& m);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int degree() const;
  bool is_zero(double rel_tol = 0.0) const;

  Eigen::MatrixXd coeff(int k) const;  // zero matrix beyond degree
  void set_coeff(int k, const Eigen::MatrixXd& m);

  Eigen::MatrixXd operator()(double x) const;
  MatrixPoly transpose() const;
  MatrixPoly derivative() const;
  MatrixPoly col(int j) const;  // column as an rx1 MatrixPoly

  friend MatrixPoly operator+(const MatrixPoly& a, const MatrixPoly& b);
  friend MatrixPoly operator-(const MatrixPoly& a, const MatrixPoly& b);
  friend MatrixPoly operator*(const MatrixPoly& a, const MatrixPoly& b);
  friend MatrixPoly operator*(double s, MatrixPoly p);
  friend MatrixPoly operator*(const ScalarPoly& s, const MatrixPoly& p);

  double max_abs_coeff() const;
  MatrixPoly trimmed(double rel_tol = 1e-13) const;
  bool symmetric_coeffs(double tol = 1e-9) const;

 private:
  int rows_, cols_;
  std::vector<Eigen::MatrixXd> coeff_;
};

/// det of a square MatrixPoly by evaluation/interpolation at Chebyshev nodes.
ScalarPoly matrix_poly_det(const MatrixPoly& s);

}  // namespace clfcbf

#endif  // CLFCBF_POLY_HPP
