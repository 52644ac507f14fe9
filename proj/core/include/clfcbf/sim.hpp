#ifndef CLFCBF_SIM_HPP
#define CLFCBF_SIM_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfcbf/compat.hpp"
#include "clfcbf/equilibria.hpp"
#include "clfcbf/scenario.hpp"

namespace clfcbf {

enum class Termination {
  ConvergedOrigin,
  ConvergedOther,
  HorizonReached,
  Infeasible,
  ShapeDegenerate,
};
std::string to_string(Termination t);
std::string to_string(Stability s);

struct TrajectoryStep {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double delta = 0.0;
  Eigen::VectorXd lambdas;
  std::string region;             // "int", "S1", ..., or "multi"
  Eigen::VectorXd h_values;
  double vbar = 0.0;
  Eigen::VectorXd pi;             // empty unless adaptive
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Termination termination = Termination::HorizonReached;
  Eigen::VectorXd final_state;
  std::optional<Eigen::VectorXd> stalled_at;  // nearby equilibrium for ConvergedOther
  double min_h = 0.0;
  double max_href_dev_after_region_exit = 0.0;  // adaptive: ||H(pi)-H_ref||_F at the end
  bool visited_region = false;                  // adaptive: entered some S_i
};

/// Classical fixed-step RK4 over an arbitrary field. The recorder callback, if
/// given, is invoked once per accepted step with the step-start state.
Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
                         const Eigen::VectorXd& x, double dt);

Trajectory integrate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
                     const Eigen::VectorXd& x_init, double T, double dt);

/// Closed-loop simulation with full per-step diagnostics; adaptive when the
/// scenario enables it (targets must then be supplied).
Trajectory simulate_trajectory(const Scenario& scn, const Eigen::VectorXd& x_init,
                               const std::vector<Eigen::MatrixXd>* adaptive_targets = nullptr);

struct BarrierReport {
  int barrier_idx = 0;
  QFunction qfun;
  SignIntervals s_intervals;
  std::vector<EquilibriumPoint> equilibria;
  std::vector<double> degenerate_roots;
  bool compatible = false;
  double lam_max = 0.0;
};

struct Report {
  std::string scenario_name;
  unsigned long seed = 0;
  bool assumption1 = false, assumption2 = false, assumption3 = false;
  std::vector<BarrierReport> barriers;
  std::vector<EquilibriumPoint> interior;
  std::vector<CompatSolution> compat;  // empty unless compatibilization ran
  std::vector<Trajectory> trajectories;
  int converged_to_origin = 0;
  int converged_other = 0;
  int horizon_reached = 0;
  int infeasible = 0;
  double min_h_overall = 0.0;
};

struct RunOptions {
  bool adaptive = false;
  bool run_compat = false;       // compatibilize targets (implied by adaptive)
  bool simulate = true;
  unsigned long seed = 0;
  int max_threads = 0;           // 0: hardware concurrency
};

/// Pipeline: assumptions -> pencils -> Q-functions -> equilibria ->
/// (optional) compatibilization -> batched simulation. Deterministic for a
/// fixed scenario + seed.
Report run_scenario(const Scenario& scn, const RunOptions& opts = {});

/// Writes report.json, per-trajectory CSVs, qfunction_<i>.csv and
/// equilibria_<i>.csv into dir. Returns the list of files written.
std::vector<std::string> emit(const Report& report, const std::string& dir);

std::string report_to_json(const Report& report);

}  // namespace clfcbf

#endif  // CLFCBF_SIM_HPP
