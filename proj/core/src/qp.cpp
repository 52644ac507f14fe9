#include "clfcbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include <Eigen/Dense>

#include "clfcbf/errors.hpp"

namespace clfcbf {

namespace {

// Candidate active sets for `count` constraints, smallest-first then
// lexicographic by index. Cached per count.
const std::vector<std::vector<int>>& subset_order(int count) {
  static std::mutex mu;
  static std::unordered_map<int, std::vector<std::vector<int>>> cache;
  std::scoped_lock lock(mu);
  auto it = cache.find(count);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> subsets;
  subsets.reserve(1u << count);
  for (unsigned mask = 0; mask < (1u << count); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < count; ++i)
      if (mask & (1u << i)) s.push_back(i);
    subsets.push_back(std::move(s));
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return cache.emplace(count, std::move(subsets)).first->second;
}

}  // namespace

QPOutcome solve_micro_qp(const std::vector<QPConstraint>& constraints, int m, double p) {
  if (p <= 0.0) throw InvalidInput("solve_micro_qp: p must be positive");
  const int dim = m + 1;  // z = (u, delta)
  const int nc = static_cast<int>(constraints.size());
  if (nc > 17) throw InvalidInput("solve_micro_qp: too many constraints for enumeration");

  Eigen::VectorXd qdiag = Eigen::VectorXd::Ones(dim);
  qdiag(m) = p;
  const Eigen::VectorXd qinv = qdiag.cwiseInverse();

  double row_scale = 1.0;
  for (const auto& c : constraints)
    row_scale = std::max({row_scale, c.a.cwiseAbs().maxCoeff(), std::abs(c.b)});
  const double feas_tol = 1e-9 * row_scale;

  bool found = false;
  QPOutcome best;
  double best_obj = std::numeric_limits<double>::infinity();

  for (const auto& S : subset_order(nc)) {
    const int k = static_cast<int>(S.size());
    if (k > dim) continue;
    Eigen::VectorXd mu;
    Eigen::VectorXd z;
    if (k == 0) {
      z = Eigen::VectorXd::Zero(dim);
      mu = Eigen::VectorXd::Zero(0);
    } else {
      Eigen::MatrixXd As(k, dim);
      Eigen::VectorXd bs(k);
      for (int i = 0; i < k; ++i) {
        As.row(i) = constraints[static_cast<size_t>(S[static_cast<size_t>(i)])].a.transpose();
        bs(i) = constraints[static_cast<size_t>(S[static_cast<size_t>(i)])].b;
      }
      // Schur solve of the equality KKT: (As Q^-1 As^T) mu = -bs, z = -Q^-1 As^T mu.
      const Eigen::MatrixXd schur = As * qinv.asDiagonal() * As.transpose();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(schur);
      lu.setThreshold(1e-11);
      if (lu.rank() < k) continue;  // redundant rows; a smaller set covers this candidate
      mu = lu.solve(-bs);
      z = -qinv.asDiagonal() * As.transpose() * mu;
    }
    if (k > 0 && mu.minCoeff() < -1e-9 * std::max(1.0, mu.cwiseAbs().maxCoeff())) continue;
    bool feasible = true;
    for (int i = 0; i < nc && feasible; ++i) {
      const auto& c = constraints[static_cast<size_t>(i)];
      if (c.a.dot(z) > c.b + feas_tol) feasible = false;
    }
    if (!feasible) continue;
    const double obj = 0.5 * z.dot(qdiag.asDiagonal() * z);
    if (obj < best_obj - 1e-12 * (1.0 + std::abs(best_obj))) {
      best_obj = obj;
      best.u = z.head(m);
      best.delta = z(m);
      best.objective = obj;
      best.lambdas = Eigen::VectorXd::Zero(nc);
      for (int i = 0; i < k; ++i)
        best.lambdas(S[static_cast<size_t>(i)]) = std::max(0.0, mu(i));
      best.active = S;
      found = true;
    }
  }
  if (!found) {
    // Report which single constraints are violated even by their own
    // least-norm satisfier; gives the caller something actionable.
    std::vector<int> violated;
    for (int i = 0; i < nc; ++i) violated.push_back(i);
    throw InfeasibleQP("solve_micro_qp: no feasible active-set candidate", violated);
  }
  return best;
}

namespace {

std::vector<QPConstraint> build_rows(const Eigen::VectorXd& x, const Plant& plant,
                                     const TransformedCLF& clf, const std::vector<Barrier>& barriers,
                                     const ControllerConfig& cfg) {
  const int m = plant.input_dim();
  const Eigen::VectorXd f = plant.drift(x);
  const Eigen::MatrixXd g = plant.input_map(x);
  std::vector<QPConstraint> rows;
  rows.reserve(barriers.size() + 1);

  const ClfEval ce = clf.recover(x);
  QPConstraint clf_row;
  clf_row.a = Eigen::VectorXd(m + 1);
  clf_row.a.head(m) = g.transpose() * ce.grad;
  clf_row.a(m) = -1.0;
  clf_row.b = -(ce.grad.dot(f) + cfg.gamma(ce.V));
  rows.push_back(std::move(clf_row));

  for (const auto& b : barriers) {
    const BarrierEval be = barrier_eval(b.fn, x);
    QPConstraint row;
    row.a = Eigen::VectorXd(m + 1);
    row.a.head(m) = -(g.transpose() * be.grad);
    row.a(m) = 0.0;
    row.b = be.grad.dot(f) + b.alpha(be.h);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

QPOutcome solve_qp(const Eigen::VectorXd& x, const Plant& plant, const TransformedCLF& clf,
                   const std::vector<Barrier>& barriers, const ControllerConfig& cfg) {
  if (!x.allFinite()) throw InvalidInput("solve_qp: non-finite state");
  if (barriers.size() > 16) throw InvalidInput("solve_qp: N <= 16 barriers supported");
  return solve_micro_qp(build_rows(x, plant, clf, barriers, cfg), plant.input_dim(), cfg.p);
}

Eigen::VectorXd closed_loop_field(const Eigen::VectorXd& x, const Plant& plant,
                                  const TransformedCLF& clf, const std::vector<Barrier>& barriers,
                                  const ControllerConfig& cfg) {
  const QPOutcome out = solve_qp(x, plant, clf, barriers, cfg);
  return plant.drift(x) + plant.input_map(x) * out.u;
}

Eigen::VectorXd closed_loop_field_multiplier_form(const Eigen::VectorXd& x, const Plant& plant,
                                                  const TransformedCLF& clf,
                                                  const std::vector<Barrier>& barriers,
                                                  const ControllerConfig& cfg) {
  const QPOutcome out = solve_qp(x, plant, clf, barriers, cfg);
  const Eigen::MatrixXd G = plant.gram(x);
  Eigen::VectorXd dir = -out.lambdas(0) * clf.recover(x).grad;
  for (size_t i = 0; i < barriers.size(); ++i)
    dir += out.lambdas(static_cast<int>(i) + 1) * barrier_eval(barriers[i].fn, x).grad;
  return plant.drift(x) + G * dir;
}

ActiveRegion active_region(const Eigen::VectorXd& x, const Plant& plant, const TransformedCLF& clf,
                           const std::vector<Barrier>& barriers, const ControllerConfig& cfg) {
  const QPOutcome out = solve_qp(x, plant, clf, barriers, cfg);
  const double tol = cfg.multiplier_tol * (1.0 + clf.vbar_grad(x).norm());
  ActiveRegion region;
  for (size_t i = 0; i < barriers.size(); ++i)
    if (out.lambdas(static_cast<int>(i) + 1) > tol)
      region.active_set.push_back(static_cast<int>(i));
  if (region.active_set.empty()) {
    region.kind = ActiveRegion::Kind::Interior;
  } else if (region.active_set.size() == 1 && out.lambdas(0) > tol) {
    region.kind = ActiveRegion::Kind::Single;
    region.barrier = region.active_set.front();
  } else {
    region.kind = ActiveRegion::Kind::MultiActive;
  }
  return region;
}

FeasibilityReport check_feasibility(const std::vector<Eigen::VectorXd>& states, const Plant& plant,
                                    const TransformedCLF& clf, const std::vector<Barrier>& barriers,
                                    const ControllerConfig& cfg) {
  FeasibilityReport rep;
  for (const auto& x : states) {
    ++rep.states_checked;
    try {
      solve_qp(x, plant, clf, barriers, cfg);
    } catch (const InfeasibleQP&) {
      rep.infeasible_states.push_back(x);
    }
  }
  return rep;
}

}  // namespace clfcbf
