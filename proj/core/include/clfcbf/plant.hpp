#ifndef CLFCBF_PLANT_HPP
#define CLFCBF_PLANT_HPP

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace clfcbf {

enum class PlantKind { LTI, DriftlessFullRank };

/// System dynamics xdot = f(x) + g(x) u. Two supported classes:
///  - LTI: f(x) = A (x - x0), g = B constant
///  - driftless: f = 0, g(x) full row rank everywhere it is queried (m >= n)
class Plant {
 public:
  static Plant lti(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::VectorXd x0);
  static Plant driftless(Eigen::MatrixXd g_const, std::optional<Eigen::VectorXd> x0 = {});
  static Plant driftless(std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g, int n, int m,
                         std::optional<Eigen::VectorXd> x0 = {});

  PlantKind kind() const { return kind_; }
  bool is_lti() const { return kind_ == PlantKind::LTI; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd input_map(const Eigen::VectorXd& x) const;  // g(x), rank-checked when driftless
  Eigen::MatrixXd gram(const Eigen::VectorXd& x) const;       // G = g g^T
  bool constant_gram() const { return is_lti() || g_fn_ == nullptr; }

  Eigen::MatrixXd drift_jacobian(const Eigen::VectorXd& x) const;  // A or 0
  /// d/dx [ G(x) v ] for fixed v; analytic zero contribution from G when G is
  /// constant, central finite differences otherwise.
  Eigen::MatrixXd gram_times_vector_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;

  const Eigen::MatrixXd& A() const;
  const Eigen::MatrixXd& B() const;
  const Eigen::VectorXd& x0() const { return x0_; }

 private:
  Plant() = default;
  PlantKind kind_ = PlantKind::LTI;
  int n_ = 0, m_ = 0;
  Eigen::MatrixXd A_, B_;   // LTI
  Eigen::MatrixXd g_const_; // driftless with constant map
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> g_fn_;  // driftless general
  Eigen::VectorXd x0_;
};

/// Quadratic form 0.5 (x-center)^T H (x-center) + offset.
struct QuadraticFn {
  Eigen::MatrixXd H;
  Eigen::VectorXd center;
  double offset = 0.0;

  QuadraticFn() = default;
  /// Throws InvalidInput when H is not symmetric within 1e-12 (scaled).
  QuadraticFn(Eigen::MatrixXd H_, Eigen::VectorXd center_, double offset_ = 0.0);
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
};

struct BarrierEval {
  double h;
  Eigen::VectorXd grad;
};

/// h = 0.5 ((x-c)^T H (x-c) - 1), grad = H (x-c).
BarrierEval barrier_eval(const QuadraticFn& b, const Eigen::VectorXd& x);

/// Class-K function; only the linear shape is required, kept as a tagged type
/// so other shapes can slot in behind the same interface.
struct ClassK {
  enum class Kind { Linear };
  Kind kind = Kind::Linear;
  double gain = 1.0;

  ClassK() = default;
  explicit ClassK(double g);
  double operator()(double v) const { return gain * v; }
  double deriv(double) const { return gain; }
};

struct ClfEval {
  double V;
  Eigen::VectorXd grad;
};

/// Transformed CLF Vbar = 0.5 (x-x0)^T H (x-x0) with the class-K gamma that
/// produced it; recovers the original V by inverting the integral transform.
class TransformedCLF {
 public:
  TransformedCLF() = default;
  TransformedCLF(QuadraticFn vbar, ClassK gamma);

  const QuadraticFn& vbar() const { return vbar_; }
  const ClassK& gamma() const { return gamma_; }
  const Eigen::VectorXd& center() const { return vbar_.center; }
  const Eigen::MatrixXd& hessian() const { return vbar_.H; }

  double vbar_value(const Eigen::VectorXd& x) const { return vbar_.value(x); }
  Eigen::VectorXd vbar_grad(const Eigen::VectorXd& x) const { return vbar_.grad(x); }

  /// V = sqrt(2 Vbar / gamma_c) for linear gamma; (0, 0) exactly at the center.
  ClfEval recover(const Eigen::VectorXd& x) const;
  /// Hessian of the recovered V at x != x0: (H/gamma_c - gradV gradV^T) / V.
  Eigen::MatrixXd recovered_hessian(const Eigen::VectorXd& x) const;

  /// Replaces the quadratic Hessian (used by the adaptive shape controller).
  TransformedCLF with_hessian(const Eigen::MatrixXd& H) const;

 private:
  QuadraticFn vbar_;
  ClassK gamma_;
};

struct Barrier {
  QuadraticFn fn;
  ClassK alpha;
};

bool check_assumption1(const Eigen::VectorXd& clf_center, const std::vector<Barrier>& barriers);
/// Pairwise disjointness of the unsafe ellipsoids, certified by dense boundary
/// sampling (n=2) or projected multistart minimization (n>=3).
/// Throws UnsupportedGeometry on singular barrier Hessians.
bool check_assumption2(const std::vector<Barrier>& barriers, double margin_tol = 1e-6);
bool check_assumption3(const Plant& plant, const TransformedCLF& clf);

}  // namespace clfcbf

#endif  // CLFCBF_PLANT_HPP
