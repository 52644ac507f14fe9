#ifndef CLFCBF_SCENARIO_HPP
#define CLFCBF_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfcbf/plant.hpp"
#include "clfcbf/qp.hpp"

namespace clfcbf {

struct AdaptationConfig {
  bool enabled = false;
  double p_pi = 1.0;
  double gamma_pi = 5.0;
  double eps = 1.1;           // compatibilization margin
  int hysteresis_steps = 3;   // consecutive steps before a target switch
  double pd_floor = 1e-6;     // minimum curvature of H(pi)
};

struct SimulationConfig {
  double T = 20.0;
  double dt = 1e-3;
  double conv_tol = 1e-3;
  bool stop_on_converge = true;
  std::vector<Eigen::VectorXd> starts;  // resolved start list (explicit or from grid)
};

struct Scenario {
  std::string name;
  Plant plant{Plant::lti(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                         Eigen::VectorXd::Zero(1))};
  TransformedCLF clf;
  std::vector<Barrier> barriers;
  ControllerConfig controller;
  AdaptationConfig adaptation;
  SimulationConfig simulation;
  double analysis_eps = 1.1;
  int analysis_grid = 400;

  int state_dim() const { return plant.state_dim(); }
};

/// Parses and validates a scenario JSON document. Assumption 1/2 violations
/// (and assumption 3 for LTI plants) are reported as InvalidInput with a
/// structured message.
Scenario load_scenario_json(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);

/// Bundled scenarios compiled into the library: radial_driftless,
/// fig1_scenario, fig2_scenario, fig3_scenario, lti_n1, driftless_n3.
std::vector<std::string> bundled_scenario_names();
std::string bundled_scenario_json(const std::string& name);  // throws InvalidInput on unknown name

/// Resolution order: existing file path, then bundled name.
Scenario resolve_scenario(const std::string& path_or_name);

}  // namespace clfcbf

#endif  // CLFCBF_SCENARIO_HPP
