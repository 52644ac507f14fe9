#include "clfcbf/poly.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "clfcbf/errors.hpp"

namespace clfcbf {

ScalarPoly::ScalarPoly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  strip_exact_zeros();
}

ScalarPoly ScalarPoly::constant(double c) { return ScalarPoly{{c}}; }

ScalarPoly ScalarPoly::identity() { return ScalarPoly{{0.0, 1.0}}; }

void ScalarPoly::strip_exact_zeros() {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double ScalarPoly::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
  return coeffs_[static_cast<size_t>(k)];
}

double ScalarPoly::leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }

double ScalarPoly::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::complex<double> ScalarPoly::operator()(std::complex<double> x) const {
  std::complex<double> acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

ScalarPoly ScalarPoly::derivative() const {
  if (coeffs_.size() <= 1) return {};
  std::vector<double> d(coeffs_.size() - 1);
  for (size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return ScalarPoly{std::move(d)};
}

ScalarPoly& ScalarPoly::operator+=(const ScalarPoly& rhs) {
  if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), 0.0);
  for (size_t k = 0; k < rhs.coeffs_.size(); ++k) coeffs_[k] += rhs.coeffs_[k];
  strip_exact_zeros();
  return *this;
}

ScalarPoly& ScalarPoly::operator-=(const ScalarPoly& rhs) {
  if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), 0.0);
  for (size_t k = 0; k < rhs.coeffs_.size(); ++k) coeffs_[k] -= rhs.coeffs_[k];
  strip_exact_zeros();
  return *this;
}

ScalarPoly operator*(const ScalarPoly& a, const ScalarPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<double> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (size_t i = 0; i < a.coeffs_.size(); ++i)
    for (size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return ScalarPoly{std::move(out)};
}

ScalarPoly operator*(double s, ScalarPoly p) {
  for (auto& c : p.coeffs_) c *= s;
  p.strip_exact_zeros();
  return p;
}

double ScalarPoly::max_abs_coeff() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

ScalarPoly ScalarPoly::trimmed(double rel_tol) const {
  const double cutoff = rel_tol * max_abs_coeff();
  std::vector<double> out = coeffs_;
  while (!out.empty() && std::abs(out.back()) <= cutoff) out.pop_back();
  return ScalarPoly{std::move(out)};
}

namespace {

// Parlett-Reinsch style balancing of the companion matrix.
void balance_companion(Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  Eigen::MatrixXd off = c;
  off.diagonal().setZero();
  const double gamma = 0.9;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      const double row = off.row(i).lpNorm<1>();
      const double col = off.col(i).lpNorm<1>();
      if (row <= 0.0 || col <= 0.0) continue;
      int expo = 0;
      std::frexp(row / col, &expo);
      expo /= 2;
      if (expo != 0) {
        const double sc = std::ldexp(col, expo);
        const double sr = std::ldexp(row, -expo);
        if (sc + sr < gamma * (col + row)) {
          changed = true;
          off.row(i) *= std::ldexp(1.0, -expo);
          off.col(i) *= std::ldexp(1.0, expo);
        }
      }
    }
  }
  off.diagonal() = c.diagonal();
  c = off;
}

}  // namespace

std::vector<std::complex<double>> poly_roots(const ScalarPoly& p, double /*tol*/) {
  ScalarPoly q = p.trimmed(1e-13);
  if (q.is_zero()) throw DegenerateInput("poly_roots: zero polynomial");
  const int deg = q.degree();
  if (deg == 0) return {};
  if (deg == 1) return {std::complex<double>(-q.coeff(0) / q.coeff(1), 0.0)};
  if (deg == 2) {
    const double a = q.coeff(2), b = q.coeff(1), c = q.coeff(0);
    const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4 * a * c, 0.0));
    // Citardauq-style split avoids cancellation on the small root.
    const std::complex<double> qq = -0.5 * (b + (b >= 0 ? 1.0 : -1.0) * disc);
    std::vector<std::complex<double>> r{qq / a};
    if (std::abs(qq) > 0)
      r.push_back(c / qq);
    else
      r.push_back(std::complex<double>(0.0, 0.0));
    return r;
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  companion.diagonal(-1).setOnes();
  for (int k = 0; k < deg; ++k) companion(k, deg - 1) = -q.coeff(k) / q.leading();
  balance_companion(companion);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw Error("poly_roots: eigensolver failed");
  std::vector<std::complex<double>> roots(static_cast<size_t>(deg));
  for (int k = 0; k < deg; ++k) roots[static_cast<size_t>(k)] = solver.eigenvalues()(k);
  return roots;
}

std::vector<double> poly_real_roots(const ScalarPoly& p, double tol) {
  std::vector<double> out;
  for (const auto& r : poly_roots(p, tol))
    if (std::abs(r.imag()) <= tol * (1.0 + std::abs(r.real()))) out.push_back(r.real());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- MatrixPoly

MatrixPoly::MatrixPoly(std::vector<Eigen::MatrixXd> coeff_mats) {
  if (coeff_mats.empty()) throw InvalidInput("MatrixPoly: empty coefficient list");
  rows_ = static_cast<int>(coeff_mats.front().rows());
  cols_ = static_cast<int>(coeff_mats.front().cols());
  for (const auto& m : coeff_mats)
    if (m.rows() != rows_ || m.cols() != cols_)
      throw InvalidInput("MatrixPoly: coefficient dimension mismatch");
  coeff_ = std::move(coeff_mats);
}

MatrixPoly MatrixPoly::constant(const Eigen::MatrixXd& m) { return MatrixPoly{{m}}; }

int MatrixPoly::degree() const {
  for (int k = static_cast<int>(coeff_.size()) - 1; k >= 0; --k)
    if (coeff_[static_cast<size_t>(k)].cwiseAbs().maxCoeff() != 0.0) return k;
  return -1;
}

bool MatrixPoly::is_zero(double rel_tol) const {
  const double cutoff = rel_tol * max_abs_coeff();
  for (const auto& m : coeff_)
    if (m.cwiseAbs().maxCoeff() > cutoff) return false;
  return true;
}

Eigen::MatrixXd MatrixPoly::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(coeff_.size())) return Eigen::MatrixXd::Zero(rows_, cols_);
  return coeff_[static_cast<size_t>(k)];
}

void MatrixPoly::set_coeff(int k, const Eigen::MatrixXd& m) {
  if (m.rows() != rows_ || m.cols() != cols_) throw InvalidInput("set_coeff: dimension mismatch");
  if (k >= static_cast<int>(coeff_.size()))
    coeff_.resize(static_cast<size_t>(k) + 1, Eigen::MatrixXd::Zero(rows_, cols_));
  coeff_[static_cast<size_t>(k)] = m;
}

Eigen::MatrixXd MatrixPoly::operator()(double x) const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows_, cols_);
  for (auto it = coeff_.rbegin(); it != coeff_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

MatrixPoly MatrixPoly::transpose() const {
  MatrixPoly out(cols_, rows_);
  for (size_t k = 0; k < coeff_.size(); ++k)
    out.set_coeff(static_cast<int>(k), coeff_[k].transpose());
  return out;
}

MatrixPoly MatrixPoly::derivative() const {
  MatrixPoly out(rows_, cols_);
  for (size_t k = 1; k < coeff_.size(); ++k)
    out.set_coeff(static_cast<int>(k) - 1, static_cast<double>(k) * coeff_[k]);
  if (out.coeff_.empty()) out.coeff_.push_back(Eigen::MatrixXd::Zero(rows_, cols_));
  return out;
}

MatrixPoly MatrixPoly::col(int j) const {
  MatrixPoly out(rows_, 1);
  for (size_t k = 0; k < coeff_.size(); ++k)
    out.set_coeff(static_cast<int>(k), coeff_[k].col(j));
  return out;
}

MatrixPoly operator+(const MatrixPoly& a, const MatrixPoly& b) {
  MatrixPoly out(a.rows_, a.cols_);
  const int deg = std::max(a.degree(), b.degree());
  for (int k = 0; k <= std::max(deg, 0); ++k) out.set_coeff(k, a.coeff(k) + b.coeff(k));
  return out;
}

MatrixPoly operator-(const MatrixPoly& a, const MatrixPoly& b) {
  MatrixPoly out(a.rows_, a.cols_);
  const int deg = std::max(a.degree(), b.degree());
  for (int k = 0; k <= std::max(deg, 0); ++k) out.set_coeff(k, a.coeff(k) - b.coeff(k));
  return out;
}

MatrixPoly operator*(const MatrixPoly& a, const MatrixPoly& b) {
  if (a.cols_ != b.rows_) throw InvalidInput("MatrixPoly product: dimension mismatch");
  MatrixPoly out(a.rows_, b.cols_);
  const int da = std::max(a.degree(), 0), db = std::max(b.degree(), 0);
  for (int k = 0; k <= da + db; ++k) out.set_coeff(k, Eigen::MatrixXd::Zero(a.rows_, b.cols_));
  for (int i = 0; i <= da; ++i)
    for (int j = 0; j <= db; ++j)
      out.set_coeff(i + j, out.coeff(i + j) + a.coeff(i) * b.coeff(j));
  return out;
}

MatrixPoly operator*(double s, MatrixPoly p) {
  for (auto& m : p.coeff_) m *= s;
  return p;
}

MatrixPoly operator*(const ScalarPoly& s, const MatrixPoly& p) {
  MatrixPoly out(p.rows_, p.cols_);
  const int dp = std::max(p.degree(), 0);
  for (int i = 0; i <= s.degree(); ++i)
    for (int j = 0; j <= dp; ++j)
      out.set_coeff(i + j, out.coeff(i + j) + s.coeff(i) * p.coeff(j));
  if (out.coeff_.empty()) out.coeff_.push_back(Eigen::MatrixXd::Zero(p.rows_, p.cols_));
  return out;
}

double MatrixPoly::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& c : coeff_)
    if (c.size() > 0) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

MatrixPoly MatrixPoly::trimmed(double rel_tol) const {
  const double cutoff = rel_tol * max_abs_coeff();
  MatrixPoly out(rows_, cols_);
  int top = -1;
  for (int k = static_cast<int>(coeff_.size()) - 1; k >= 0; --k)
    if (coeff_[static_cast<size_t>(k)].cwiseAbs().maxCoeff() > cutoff) {
      top = k;
      break;
    }
  for (int k = 0; k <= top; ++k) out.set_coeff(k, coeff_[static_cast<size_t>(k)]);
  if (top < 0) out.set_coeff(0, Eigen::MatrixXd::Zero(rows_, cols_));
  return out;
}

bool MatrixPoly::symmetric_coeffs(double tol) const {
  if (rows_ != cols_) return false;
  const double scale = std::max(1.0, max_abs_coeff());
  for (const auto& m : coeff_)
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  return true;
}

ScalarPoly matrix_poly_det(const MatrixPoly& s) {
  if (s.rows() != s.cols()) throw InvalidInput("matrix_poly_det: not square");
  const int q = s.rows();
  if (q == 1) {
    std::vector<double> c;
    for (int k = 0; k <= std::max(0, s.degree()); ++k) c.push_back(s.coeff(k)(0, 0));
    return ScalarPoly{std::move(c)}.trimmed();
  }
  const int deg_bound = q * std::max(s.degree(), 0);
  const int npts = deg_bound + 1;
  // Chebyshev nodes spread over a span matched to the coefficient scale.
  const double span = 1.0 + 0.5 * static_cast<double>(deg_bound);
  Eigen::VectorXd xs(npts), ys(npts);
  for (int i = 0; i < npts; ++i) {
    const double theta = M_PI * (2.0 * i + 1.0) / (2.0 * npts);
    xs(i) = span * std::cos(theta);
    ys(i) = s(xs(i)).determinant();
  }
  // Newton divided differences, then expand to the monomial basis.
  Eigen::VectorXd dd = ys;
  for (int j = 1; j < npts; ++j)
    for (int i = npts - 1; i >= j; --i) dd(i) = (dd(i) - dd(i - 1)) / (xs(i) - xs(i - j));
  std::vector<double> coeffs(static_cast<size_t>(npts), 0.0);
  std::vector<double> basis(static_cast<size_t>(npts), 0.0);  // prod (x - xs_j), monomial coeffs
  basis[0] = 1.0;
  int basis_deg = 0;
  coeffs[0] += dd(0);
  for (int j = 1; j < npts; ++j) {
    // basis *= (x - xs(j-1))
    for (int k = basis_deg + 1; k >= 1; --k)
      basis[static_cast<size_t>(k)] = basis[static_cast<size_t>(k - 1)] -
                                      xs(j - 1) * basis[static_cast<size_t>(k)];
    basis[0] *= -xs(j - 1);
    ++basis_deg;
    for (int k = 0; k <= basis_deg; ++k) coeffs[static_cast<size_t>(k)] += dd(j) * basis[static_cast<size_t>(k)];
  }
  return ScalarPoly{std::move(coeffs)}.trimmed(1e-12);
}

}  // namespace clfcbf
