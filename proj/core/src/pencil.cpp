#include "clfcbf/pencil.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "clfcbf/errors.hpp"

namespace clfcbf {

namespace {

// det(lambda*M - N) for square blocks, exact Leibniz expansion over
// permutations; each entry is the linear polynomial M_ij*l - N_ij.
ScalarPoly det_leibniz(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N) {
  const int n = static_cast<int>(M.rows());
  if (n == 0) return ScalarPoly::constant(1.0);
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  ScalarPoly det;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[static_cast<size_t>(i)] > perm[static_cast<size_t>(j)]) ++inversions;
    ScalarPoly term = ScalarPoly::constant(inversions % 2 == 0 ? 1.0 : -1.0);
    for (int i = 0; i < n; ++i) {
      const int j = perm[static_cast<size_t>(i)];
      term = term * ScalarPoly{{-N(i, j), M(i, j)}};
    }
    det += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

ScalarPoly det_interpolated(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N) {
  const int n = static_cast<int>(M.rows());
  MatrixPoly p(n, n);
  p.set_coeff(0, -N);
  p.set_coeff(1, M);
  return matrix_poly_det(p);
}

ScalarPoly det_pencil_raw(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N) {
  return M.rows() <= 4 ? det_leibniz(M, N) : det_interpolated(M, N);
}

}  // namespace

Pencil::Pencil(Eigen::MatrixXd M, Eigen::MatrixXd N) : M_(std::move(M)), N_(std::move(N)) {
  if (M_.rows() != M_.cols() || N_.rows() != N_.cols() || M_.rows() != N_.rows())
    throw InvalidInput("Pencil: M, N must be square and equally sized");
  const double scale = std::max({1.0, M_.cwiseAbs().maxCoeff(), N_.cwiseAbs().maxCoeff()});
  const ScalarPoly det = det_pencil_raw(M_, N_);
  const double det_scale = std::pow(scale, dim());
  if (det.max_abs_coeff() <= 1e-12 * det_scale)
    throw DegeneratePencil("Pencil: det(lambda M - N) is identically zero");
}

MatrixPoly Pencil::as_matrix_poly() const {
  MatrixPoly p(dim(), dim());
  p.set_coeff(0, -N_);
  p.set_coeff(1, M_);
  return p;
}

ScalarPoly pencil_det(const Pencil& p) { return det_pencil_raw(p.M(), p.N()); }

MatrixPoly pencil_adjugate(const Pencil& p) {
  const int n = p.dim();
  MatrixPoly adj(n, n);
  if (n == 1) {
    adj.set_coeff(0, Eigen::MatrixXd::Ones(1, 1));
    return adj;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // adj(j,i) = (-1)^{i+j} det of P with row i, col j removed
      Eigen::MatrixXd Ms(n - 1, n - 1), Ns(n - 1, n - 1);
      int rr = 0;
      for (int r = 0; r < n; ++r) {
        if (r == i) continue;
        int cc = 0;
        for (int c = 0; c < n; ++c) {
          if (c == j) continue;
          Ms(rr, cc) = p.M()(r, c);
          Ns(rr, cc) = p.N()(r, c);
          ++cc;
        }
        ++rr;
      }
      const ScalarPoly minor = det_pencil_raw(Ms, Ns);
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      for (int k = 0; k <= minor.degree(); ++k) {
        Eigen::MatrixXd c = adj.coeff(k);
        c(j, i) += sign * minor.coeff(k);
        adj.set_coeff(k, c);
      }
    }
  }
  return adj;
}

std::vector<double> pencil_real_spectrum(const Pencil& p, double tol) {
  const ScalarPoly det = pencil_det(p).trimmed(1e-12);
  if (det.degree() < 1) return {};
  return poly_real_roots(det, tol);
}

Eigen::MatrixXd pointwise_complement(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(v);
  Eigen::MatrixXd Q = qr.matrixQ();
  return Q.rightCols(n - 1);
}

namespace {

// Pointwise rank of the columns selected from the kernel basis, evaluated at
// a probe lambda.
int eval_rank(const std::vector<MatrixPoly>& cols, double lambda, double tol) {
  if (cols.empty()) return 0;
  Eigen::MatrixXd m(cols.front().rows(), static_cast<int>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) m.col(static_cast<int>(j)) = cols[j](lambda);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double top = svd.singularValues()(0);
  int rank = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k)
    if (svd.singularValues()(k) > tol * std::max(top, 1e-300)) ++rank;
  return rank;
}

}  // namespace

MatrixPoly poly_nullspace(const MatrixPoly& v, int max_deg) {
  if (v.cols() != 1) throw InvalidInput("poly_nullspace: expected a column vector polynomial");
  const int n = v.rows();
  if (n < 2) throw InvalidInput("poly_nullspace: need n >= 2");
  const MatrixPoly vt = v.trimmed(1e-12);
  if (vt.is_zero(1e-300)) throw InvalidInput("poly_nullspace: zero vector polynomial");
  const int l = std::max(vt.degree(), 0);
  const double vscale = vt.max_abs_coeff();

  for (int d = 0; d <= max_deg; ++d) {
    // Convolution system: sum_i v_i^T r_{k-i} = 0 for k = 0..l+d, unknowns
    // r_0..r_d stacked into (d+1)n coordinates.
    const int rows = l + d + 1;
    const int cols = (d + 1) * n;
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(rows, cols);
    for (int k = 0; k < rows; ++k)
      for (int i = 0; i <= l; ++i) {
        const int ri = k - i;
        if (ri < 0 || ri > d) continue;
        V.block(k, ri * n, 1, n) = vt.coeff(i).transpose() / vscale;
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullV);
    const double top = svd.singularValues()(0);
    std::vector<MatrixPoly> kernel_cols;
    for (int c = cols - 1; c >= 0; --c) {
      const double sv = c < svd.singularValues().size() ? svd.singularValues()(c) : 0.0;
      if (sv > 1e-10 * std::max(top, 1.0)) break;
      MatrixPoly r(n, 1);
      for (int k = 0; k <= d; ++k)
        r.set_coeff(k, svd.matrixV().col(c).segment(k * n, n));
      kernel_cols.push_back(std::move(r));
    }
    if (static_cast<int>(kernel_cols.size()) < n - 1) continue;

    // Greedy pointwise-rank selection so the chosen columns are independent
    // as polynomial vectors, not merely as stacked coefficients.
    const std::array<double, 3> probes{0.37281, -1.11934, 2.64052};
    std::vector<MatrixPoly> chosen;
    for (auto& cand : kernel_cols) {
      if (static_cast<int>(chosen.size()) == n - 1) break;
      std::vector<MatrixPoly> trial = chosen;
      trial.push_back(cand);
      bool independent = true;
      for (double lam : probes)
        if (eval_rank(trial, lam, 1e-8) < static_cast<int>(trial.size())) {
          independent = false;
          break;
        }
      if (independent) chosen.push_back(std::move(cand));
    }
    if (static_cast<int>(chosen.size()) < n - 1) continue;

    MatrixPoly R(n, n - 1);
    int deg = 0;
    for (const auto& c : chosen) deg = std::max(deg, std::max(c.degree(), 0));
    for (int k = 0; k <= deg; ++k) {
      Eigen::MatrixXd ck(n, n - 1);
      for (int j = 0; j < n - 1; ++j) ck.col(j) = chosen[static_cast<size_t>(j)].coeff(k);
      R.set_coeff(k, ck);
    }
    // Residual check of R^T v == 0, coefficient-wise.
    const MatrixPoly resid = (R.transpose() * vt).trimmed(0.0);
    if (resid.max_abs_coeff() > 1e-7 * vscale * std::max(1.0, R.max_abs_coeff())) continue;
    return R;
  }
  throw NullspaceDegreeExceeded("poly_nullspace: no rank-(n-1) basis up to degree " +
                                std::to_string(max_deg));
}

SignIntervals definiteness_intervals(const MatrixPoly& s, double lam_max, int grid) {
  if (s.rows() != s.cols()) throw InvalidInput("definiteness_intervals: not square");
  if (!s.symmetric_coeffs(1e-9))
    throw InvalidInput("definiteness_intervals: coefficient matrices not symmetric");

  const auto classify_at = [&](double lam) -> Definiteness {
    const Eigen::MatrixXd m = 0.5 * (s(lam) + s(lam).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double tol = 1e-9 * std::max(m.norm(), 1e-30);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (hi <= tol && lo >= -tol) return Definiteness::NSD;  // numerically zero matrix
    if (hi <= tol) return Definiteness::NSD;
    if (lo >= -tol) return Definiteness::PSD;
    return Definiteness::Indefinite;
  };

  SignIntervals out;
  const ScalarPoly det = matrix_poly_det(s).trimmed(1e-11);
  if (det.degree() >= 1) {
    for (double r : poly_real_roots(det, 1e-8)) out.breakpoints.push_back(r);
    std::sort(out.breakpoints.begin(), out.breakpoints.end());
    // collapse numerically repeated roots
    std::vector<double> uniq;
    for (double b : out.breakpoints)
      if (uniq.empty() || std::abs(b - uniq.back()) > 1e-9 * (1.0 + std::abs(b)))
        uniq.push_back(b);
    out.breakpoints = std::move(uniq);
  }

  const size_t nint = out.breakpoints.size() + 1;
  out.verdicts.resize(nint);
  const double lo_edge = out.breakpoints.empty() ? -lam_max : out.breakpoints.front();
  const double hi_edge = out.breakpoints.empty() ? lam_max : out.breakpoints.back();
  const double pad = 0.5 * (hi_edge - lo_edge) + 1.0 + 0.05 * lam_max;
  for (size_t i = 0; i < nint; ++i) {
    const double a = i == 0 ? lo_edge - pad : out.breakpoints[i - 1];
    const double b = i == nint - 1 ? hi_edge + pad : out.breakpoints[i];
    Definiteness verdict = classify_at(0.5 * (a + b));
    // extra samples strictly inside the interval for robustness
    const int extra = std::max(2, grid / static_cast<int>(nint));
    for (int k = 1; k <= extra && verdict != Definiteness::Indefinite; ++k) {
      const double t = a + (b - a) * static_cast<double>(k) / (extra + 1.0);
      const Definiteness v = classify_at(t);
      if (v != verdict) verdict = Definiteness::Indefinite;
    }
    out.verdicts[i] = verdict;
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  out.sigma_minus = -inf;
  if (out.verdicts.front() == Definiteness::NSD)
    out.sigma_minus = out.breakpoints.empty() ? inf : out.breakpoints.front();
  out.sigma_plus = inf;
  if (out.verdicts.back() == Definiteness::PSD)
    out.sigma_plus = out.breakpoints.empty() ? -inf : out.breakpoints.back();
  out.nsd_interval_count =
      static_cast<int>(std::count(out.verdicts.begin(), out.verdicts.end(), Definiteness::NSD));
  return out;
}

}  // namespace clfcbf
