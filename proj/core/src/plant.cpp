#include "clfcbf/plant.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "clfcbf/errors.hpp"

namespace clfcbf {

Plant Plant::lti(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd x0) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || x0.size() != A.rows())
    throw InvalidInput("Plant::lti: dimension mismatch");
  Plant p;
  p.kind_ = PlantKind::LTI;
  p.n_ = static_cast<int>(A.rows());
  p.m_ = static_cast<int>(B.cols());
  p.A_ = std::move(A);
  p.B_ = std::move(B);
  p.x0_ = std::move(x0);
  return p;
}

Plant Plant::driftless(Eigen::MatrixXd g_const, std::optional<Eigen::VectorXd> x0) {
  const int n = static_cast<int>(g_const.rows());
  const int m = static_cast<int>(g_const.cols());
  if (m < n) throw InvalidInput("Plant::driftless: needs m >= n for full row rank");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g_const);
  if (svd.singularValues()(n - 1) <= 1e-10 * svd.singularValues()(0))
    throw InvalidInput("Plant::driftless: g is not full row rank");
  Plant p;
  p.kind_ = PlantKind::DriftlessFullRank;
  p.n_ = n;
  p.m_ = m;
  p.g_const_ = std::move(g_const);
  p.x0_ = x0.value_or(Eigen::VectorXd::Zero(n));
  return p;
}

Plant Plant::driftless(std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g, int n, int m,
                       std::optional<Eigen::VectorXd> x0) {
  if (m < n) throw InvalidInput("Plant::driftless: needs m >= n");
  Plant p;
  p.kind_ = PlantKind::DriftlessFullRank;
  p.n_ = n;
  p.m_ = m;
  p.g_fn_ = std::move(g);
  p.x0_ = x0.value_or(Eigen::VectorXd::Zero(n));
  return p;
}

Eigen::VectorXd Plant::drift(const Eigen::VectorXd& x) const {
  if (is_lti()) return A_ * (x - x0_);
  return Eigen::VectorXd::Zero(n_);
}

Eigen::MatrixXd Plant::input_map(const Eigen::VectorXd& x) const {
  if (is_lti()) return B_;
  Eigen::MatrixXd g = g_fn_ ? g_fn_(x) : g_const_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  if (svd.singularValues()(n_ - 1) <= 1e-10 * std::max(svd.singularValues()(0), 1e-300))
    throw InvalidInput("Plant: g(x) lost full row rank at a queried state");
  return g;
}

Eigen::MatrixXd Plant::gram(const Eigen::VectorXd& x) const {
  const Eigen::MatrixXd g = input_map(x);
  return g * g.transpose();
}

Eigen::MatrixXd Plant::drift_jacobian(const Eigen::VectorXd&) const {
  if (is_lti()) return A_;
  return Eigen::MatrixXd::Zero(n_, n_);
}

Eigen::MatrixXd Plant::gram_times_vector_jacobian(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& v) const {
  if (constant_gram()) return Eigen::MatrixXd::Zero(n_, n_);
  const double h = 1e-6 * (1.0 + x.norm());
  Eigen::MatrixXd J(n_, n_);
  for (int k = 0; k < n_; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
    e(k) = h;
    J.col(k) = (gram(x + e) * v - gram(x - e) * v) / (2.0 * h);
  }
  return J;
}

const Eigen::MatrixXd& Plant::A() const {
  if (!is_lti()) throw InvalidInput("Plant::A: not an LTI plant");
  return A_;
}

const Eigen::MatrixXd& Plant::B() const {
  if (!is_lti()) throw InvalidInput("Plant::B: not an LTI plant");
  return B_;
}

// ------------------------------------------------------------- quadratics

QuadraticFn::QuadraticFn(Eigen::MatrixXd H_, Eigen::VectorXd center_, double offset_)
    : H(std::move(H_)), center(std::move(center_)), offset(offset_) {
  if (H.rows() != H.cols() || center.size() != H.rows())
    throw InvalidInput("QuadraticFn: dimension mismatch");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInput("QuadraticFn: H not symmetric");
}

double QuadraticFn::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd d = x - center;
  return 0.5 * d.dot(H * d) + offset;
}

Eigen::VectorXd QuadraticFn::grad(const Eigen::VectorXd& x) const { return H * (x - center); }

BarrierEval barrier_eval(const QuadraticFn& b, const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x - b.center;
  return {0.5 * (d.dot(b.H * d) - 1.0), b.H * d};
}

ClassK::ClassK(double g) : gain(g) {
  if (g <= 0.0) throw InvalidInput("ClassK: gain must be positive");
}

// ------------------------------------------------------------- transformed CLF

TransformedCLF::TransformedCLF(QuadraticFn vbar, ClassK gamma)
    : vbar_(std::move(vbar)), gamma_(gamma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(vbar_.H, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw InvalidInput("TransformedCLF: Hessian must be positive definite");
}

ClfEval TransformedCLF::recover(const Eigen::VectorXd& x) const {
  const double vb = vbar_.value(x);
  if (vb <= 0.0) return {0.0, Eigen::VectorXd::Zero(x.size())};
  const double V = std::sqrt(2.0 * vb / gamma_.gain);
  return {V, vbar_.grad(x) / (gamma_.gain * V)};
}

Eigen::MatrixXd TransformedCLF::recovered_hessian(const Eigen::VectorXd& x) const {
  const ClfEval e = recover(x);
  if (e.V <= 0.0)
    throw InvalidInput("TransformedCLF::recovered_hessian: undefined at the center");
  const Eigen::MatrixXd Q = vbar_.H / gamma_.gain;
  return (Q - e.grad * e.grad.transpose()) / e.V;
}

TransformedCLF TransformedCLF::with_hessian(const Eigen::MatrixXd& H) const {
  return TransformedCLF(QuadraticFn(H, vbar_.center, vbar_.offset), gamma_);
}

// ------------------------------------------------------------- assumptions

bool check_assumption1(const Eigen::VectorXd& clf_center, const std::vector<Barrier>& barriers) {
  for (const auto& b : barriers)
    if (barrier_eval(b.fn, clf_center).h < 0.0) return false;
  return true;
}

namespace {

// Minimum of h_j over the boundary ellipsoid of barrier i. Dense angular
// sampling in 2-D; projected-gradient descents from ring starts otherwise.
double min_hj_on_boundary_i(const QuadraticFn& bi, const QuadraticFn& bj, int n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bi.H);
  const Eigen::MatrixXd axes =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  double best = std::numeric_limits<double>::infinity();
  if (n == 2) {
    constexpr int samples = 720;
    for (int k = 0; k < samples; ++k) {
      const double th = 2.0 * M_PI * k / samples;
      const Eigen::Vector2d dir(std::cos(th), std::sin(th));
      const Eigen::VectorXd x = bi.center + axes * dir;
      best = std::min(best, barrier_eval(bj, x).h);
    }
    return best;
  }
  // n >= 3: gradient descent on the sphere parametrization u -> c + axes*u/|u|
  const int starts = 2 * n * n + 6;
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k)
      u(k) = std::cos(0.7 * (s + 1) * (k + 1) + 0.31 * s);  // deterministic spread
    u.normalize();
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd x = bi.center + axes * u;
      const Eigen::VectorXd g = axes.transpose() * barrier_eval(bj, x).grad;
      Eigen::VectorXd gt = g - g.dot(u) * u;  // tangent component
      if (gt.norm() < 1e-12) break;
      u = (u - 0.1 * gt / std::max(1.0, gt.norm())).normalized();
    }
    best = std::min(best, barrier_eval(bj, bi.center + axes * u).h);
  }
  return best;
}

}  // namespace

bool check_assumption2(const std::vector<Barrier>& barriers, double margin_tol) {
  const int n = barriers.empty() ? 0 : static_cast<int>(barriers.front().fn.center.size());
  for (const auto& b : barriers) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.fn.H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-12)
      throw UnsupportedGeometry("check_assumption2: unbounded unsafe set (singular Hessian)");
  }
  for (size_t i = 0; i < barriers.size(); ++i)
    for (size_t j = 0; j < barriers.size(); ++j) {
      if (i == j) continue;
      // c_j sits in its own unsafe set, so h_i(c_j) < 0 already means overlap
      if (barrier_eval(barriers[i].fn, barriers[j].fn.center).h < 0.0) return false;
      if (min_hj_on_boundary_i(barriers[i].fn, barriers[j].fn, n) < margin_tol) return false;
    }
  return true;
}

bool check_assumption3(const Plant& plant, const TransformedCLF& clf) {
  if (!plant.is_lti()) return true;  // driftless: L_f V == 0
  const Eigen::MatrixXd& H = clf.hessian();
  const Eigen::MatrixXd lyap = H * plant.A() + plant.A().transpose() * H;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lyap, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() <= 1e-9 * std::max(1.0, lyap.norm());
}

}  // namespace clfcbf
