#ifndef CLFCBF_QP_HPP
#define CLFCBF_QP_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "clfcbf/plant.hpp"

namespace clfcbf {

struct ControllerConfig {
  double p = 1.0;  // slack penalty, > 0
  ClassK gamma{1.0};
  ClassK alpha{1.0};  // default barrier alpha, overridable per barrier
  double multiplier_tol = 1e-7;
};

/// Solution of the state QP. lambdas(0) is the CLF multiplier, lambdas(1+i)
/// the i-th CBF multiplier; active holds constraint indices in that order.
struct QPOutcome {
  Eigen::VectorXd u;
  double delta = 0.0;
  Eigen::VectorXd lambdas;
  std::vector<int> active;
  double objective = 0.0;
};

/// One inequality a^T z <= b over the decision z = (u, delta).
struct QPConstraint {
  Eigen::VectorXd a;
  double b;
};

/// Exact active-set enumeration for min 0.5|u|^2 + 0.5 p delta^2 subject to
/// the given inequalities. Candidate sets are visited smallest-first, then
/// lexicographically; the feasible candidate with nonnegative multipliers and
/// lowest objective wins. Throws InfeasibleQP when no candidate qualifies.
QPOutcome solve_micro_qp(const std::vector<QPConstraint>& constraints, int m, double p);

/// The CLF-CBF QP at state x. N <= 16 barriers.
QPOutcome solve_qp(const Eigen::VectorXd& x, const Plant& plant, const TransformedCLF& clf,
                   const std::vector<Barrier>& barriers, const ControllerConfig& cfg);

/// f(x) + g(x) u*(x).
Eigen::VectorXd closed_loop_field(const Eigen::VectorXd& x, const Plant& plant,
                                  const TransformedCLF& clf, const std::vector<Barrier>& barriers,
                                  const ControllerConfig& cfg);

/// Same field assembled from the KKT multipliers: f + G(-lam0 gradV + sum lam_i grad h_i).
Eigen::VectorXd closed_loop_field_multiplier_form(const Eigen::VectorXd& x, const Plant& plant,
                                                  const TransformedCLF& clf,
                                                  const std::vector<Barrier>& barriers,
                                                  const ControllerConfig& cfg);

struct ActiveRegion {
  enum class Kind { Interior, Single, MultiActive };
  Kind kind = Kind::Interior;
  int barrier = -1;              // valid for Single
  std::vector<int> active_set;   // barrier indices with multiplier above threshold
};

/// S_i membership from the QP multipliers: Single(i) iff lam0 and lam_i alone
/// exceed the scaled threshold.
ActiveRegion active_region(const Eigen::VectorXd& x, const Plant& plant, const TransformedCLF& clf,
                           const std::vector<Barrier>& barriers, const ControllerConfig& cfg);

struct FeasibilityReport {
  long states_checked = 0;
  std::vector<Eigen::VectorXd> infeasible_states;
};

/// Sweeps solve_qp over the given states, recording infeasibilities.
FeasibilityReport check_feasibility(const std::vector<Eigen::VectorXd>& states, const Plant& plant,
                                    const TransformedCLF& clf, const std::vector<Barrier>& barriers,
                                    const ControllerConfig& cfg);

}  // namespace clfcbf

#endif  // CLFCBF_QP_HPP
