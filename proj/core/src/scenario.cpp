#include "clfcbf/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bundled_scenarios.hpp"
#include "clfcbf/errors.hpp"

namespace clfcbf {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw InvalidInput("scenario: " + what + " must be a row-major array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw InvalidInput("scenario: ragged rows in " + what);
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidInput("scenario: " + what + " must be an array");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

Scenario load_scenario_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("scenario: JSON parse error: ") + e.what());
  }

  Scenario s;
  s.name = j.value("name", "unnamed");

  // clf first: its center anchors the plant
  const json& jclf = j.at("clf");
  const Eigen::MatrixXd Hv = parse_matrix(jclf.at("H"), "clf.H");
  const Eigen::VectorXd center = parse_vector(jclf.at("center"), "clf.center");
  const double gamma_c = jclf.value("gamma_c", 1.0);
  const std::string printed_is = jclf.value("printed_is", "vbar");
  if (printed_is == "v")
    throw InvalidInput(
        "scenario: clf.printed_is=\"v\" is not representable: the integral transform of a "
        "quadratic V is quartic, outside the quadratic framework; supply the transformed "
        "Hessian with printed_is=\"vbar\"");
  if (printed_is != "vbar") throw InvalidInput("scenario: clf.printed_is must be vbar or v");
  s.clf = TransformedCLF(QuadraticFn(Hv, center, 0.0), ClassK(gamma_c));

  const json& jp = j.at("plant");
  const std::string kind = jp.at("kind").get<std::string>();
  if (kind == "lti") {
    s.plant = Plant::lti(parse_matrix(jp.at("A"), "plant.A"), parse_matrix(jp.at("B"), "plant.B"),
                         center);
  } else if (kind == "driftless") {
    s.plant = Plant::driftless(parse_matrix(jp.at("g"), "plant.g"), center);
  } else {
    throw InvalidInput("scenario: plant.kind must be lti or driftless");
  }
  if (s.plant.state_dim() != center.size())
    throw InvalidInput("scenario: plant and clf dimensions disagree");

  const json& jc = j.at("controller");
  s.controller.p = jc.at("p").get<double>();
  if (s.controller.p <= 0.0) throw InvalidInput("scenario: controller.p must be positive");
  s.controller.multiplier_tol = jc.value("multiplier_tol", 1e-7);
  s.controller.gamma = ClassK(gamma_c);

  for (const auto& jb : j.at("barriers")) {
    Barrier b;
    b.fn = QuadraticFn(parse_matrix(jb.at("H"), "barrier.H"),
                       parse_vector(jb.at("center"), "barrier.center"), 0.0);
    b.alpha = ClassK(jb.value("alpha_c", 1.0));
    s.barriers.push_back(std::move(b));
  }
  if (s.barriers.empty()) throw InvalidInput("scenario: at least one barrier required");
  s.controller.alpha = s.barriers.front().alpha;

  if (j.contains("adaptation")) {
    const json& ja = j.at("adaptation");
    s.adaptation.enabled = ja.value("enabled", false);
    s.adaptation.p_pi = ja.value("p_pi", 1.0);
    s.adaptation.gamma_pi = ja.value("gamma_pi", 5.0);
    s.adaptation.eps = ja.value("eps", 1.1);
    s.adaptation.hysteresis_steps = ja.value("hysteresis_steps", 3);
    s.adaptation.pd_floor = ja.value("pd_floor", 1e-6);
  }

  const json& js = j.at("simulation");
  s.simulation.T = js.value("T", 20.0);
  s.simulation.dt = js.value("dt", 1e-3);
  s.simulation.conv_tol = js.value("conv_tol", 1e-3);
  s.simulation.stop_on_converge = js.value("stop_on_converge", true);
  if (s.simulation.dt <= 0.0 || s.simulation.T < s.simulation.dt)
    throw InvalidInput("scenario: need dt > 0 and T >= dt");

  const int n = s.plant.state_dim();
  if (js.contains("grid")) {
    const Eigen::VectorXd lo = parse_vector(js.at("grid").at("lo"), "grid.lo");
    const Eigen::VectorXd hi = parse_vector(js.at("grid").at("hi"), "grid.hi");
    const Eigen::VectorXd cnt = parse_vector(js.at("grid").at("n"), "grid.n");
    if (lo.size() != n || hi.size() != n || cnt.size() != n)
      throw InvalidInput("scenario: grid dimension mismatch");
    std::vector<Eigen::VectorXd> pts{Eigen::VectorXd(0)};
    for (int k = 0; k < n; ++k) {
      std::vector<Eigen::VectorXd> next;
      const int c = static_cast<int>(cnt(k));
      for (const auto& base : pts)
        for (int i = 0; i < c; ++i) {
          Eigen::VectorXd v(base.size() + 1);
          v.head(base.size()) = base;
          v(base.size()) = c == 1 ? lo(k) : lo(k) + (hi(k) - lo(k)) * i / (c - 1.0);
          next.push_back(std::move(v));
        }
      pts = std::move(next);
    }
    s.simulation.starts = std::move(pts);
  } else if (js.contains("starts") && js.at("starts").is_string() &&
             js.at("starts").get<std::string>() == "circle") {
    const json& jc2 = js.at("circle");
    const double r = jc2.at("radius").get<double>();
    const int count = jc2.at("count").get<int>();
    if (n != 2) throw InvalidInput("scenario: circle starts need a planar state");
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * M_PI * k / count;
      Eigen::VectorXd v(2);
      v << center(0) + r * std::cos(th), center(1) + r * std::sin(th);
      s.simulation.starts.push_back(std::move(v));
    }
  } else if (js.contains("starts")) {
    for (const auto& jv : js.at("starts"))
      s.simulation.starts.push_back(parse_vector(jv, "simulation.starts"));
  }
  for (const auto& st : s.simulation.starts)
    if (st.size() != n) throw InvalidInput("scenario: start state dimension mismatch");

  if (j.contains("analysis")) {
    s.analysis_eps = j.at("analysis").value("eps", 1.1);
    s.analysis_grid = j.at("analysis").value("grid", 400);
  }

  // standing assumptions, reported as structured errors
  if (!check_assumption1(center, s.barriers))
    throw InvalidInput("scenario '" + s.name + "': assumption 1 violated (CLF minimum unsafe)");
  if (!check_assumption2(s.barriers))
    throw InvalidInput("scenario '" + s.name + "': assumption 2 violated (unsafe sets intersect)");
  if (s.plant.is_lti() && !check_assumption3(s.plant, s.clf))
    throw InvalidInput("scenario '" + s.name +
                       "': assumption 3 violated (H A + A^T H not negative semidefinite)");
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_json(ss.str());
}

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::kBundledScenarios) names.emplace_back(name);
  return names;
}

std::string bundled_scenario_json(const std::string& name) {
  for (const auto& [n, text] : detail::kBundledScenarios)
    if (n == name) return std::string(text);
  throw InvalidInput("unknown bundled scenario: " + name);
}

Scenario resolve_scenario(const std::string& path_or_name) {
  if (std::filesystem::exists(path_or_name)) return load_scenario_file(path_or_name);
  return load_scenario_json(bundled_scenario_json(path_or_name));
}

}  // namespace clfcbf
