#include "dimg/dm_solver.hpp"

#include <cmath>

namespace dimg {

double terminal_value(const UtilitySpec& u, const InformationState& mu) {
  double total = 0.0;
  for (const auto& atom : mu.atoms()) total += utility_eval(u, atom.s) * atom.w;
  return total;
}

BackupResult bellman_backup(const PomdpModel& model, int x, const InformationState& mu,
                            double z, const ContinuationFn& value_next) {
  const auto& feasible = model.feasible_actions[static_cast<std::size_t>(x)];
  if (feasible.empty()) throw std::domain_error("bellman_backup: empty feasible set");
  double best = 0.0;
  int best_action = -1;
  const double z_next = model.dm_discount * z;
  for (int a : feasible) {
    double v = 0.0;
    for (int xn = 0; xn < model.nx(); ++xn)
      v += value_next(a, xn, update(model, x, a, xn, mu, z), z_next);
    if (best_action < 0 || v < best) {
      best = v;
      best_action = a;
    }
  }
  return {best, best_action};
}

namespace {

struct TreeSolver {
  const PomdpModel& model;
  const SolveOptions& options;
  SolveResult result;
  std::size_t nodes = 0;

  double visit(int x, const InformationState& mu, double z, int stage,
               std::vector<int>& key) {
    if (++nodes > options.node_cap)
      throw ResourceCapError("solve: history node cap exceeded");
    if (stage == model.horizon) {
      double v = terminal_value(model.utility, mu);
      result.values[key] = v;
      return v;
    }
    BackupResult b = bellman_backup(
        model, x, mu, z,
        [&](int a, int xn, const InformationState& mu_next, double z_next) {
          key.push_back(a);
          key.push_back(xn);
          double v = visit(xn, mu_next, z_next, stage + 1, key);
          key.pop_back();
          key.pop_back();
          return v;
        });
    result.values[key] = b.value;
    result.policy.set(key, b.action);
    return b.value;
  }
};

}  // namespace

SolveResult solve(const PomdpModel& model, const SolveOptions& options) {
  TreeSolver solver{model, options, {}, 0};
  const InformationState mu0 = initial_state(model);
  for (int x0 = 0; x0 < model.nx(); ++x0) {
    std::vector<int> key{x0};
    solver.result.j_initial.push_back(solver.visit(x0, mu0, 1.0, 0, key));
  }
  return std::move(solver.result);
}

namespace {

double chained_value(const PomdpModel& model, const Policy& policy, int x,
                     const InformationState& mu, double z, int stage,
                     std::vector<int>& key) {
  if (stage == model.horizon) return terminal_value(model.utility, mu);
  const int a = policy.action(key);
  if (!model.action_feasible(x, a))
    throw std::domain_error("cost_iteration_check: policy prescribes infeasible action");
  double v = 0.0;
  for (int xn = 0; xn < model.nx(); ++xn) {
    key.push_back(a);
    key.push_back(xn);
    v += chained_value(model, policy, xn, update(model, x, a, xn, mu, z),
                       model.dm_discount * z, stage + 1, key);
    key.pop_back();
    key.pop_back();
  }
  return v;
}

double direct_value(const PomdpModel& model, const Policy& policy, int stage, int x,
                    int y, double s, double prob, std::vector<int>& key) {
  const int a = policy.action(key);
  const double s_next = s + std::pow(model.dm_discount, stage) * model.dm_c(x, y, a);
  if (stage == model.horizon - 1)
    return prob * utility_eval(model.utility, s_next);
  double acc = 0.0;
  for (int xn = 0; xn < model.nx(); ++xn)
    for (int yn = 0; yn < model.ny(); ++yn) {
      double p = model.q(x, y, a, xn, yn) * prob;
      if (p == 0.0) continue;
      key.push_back(a);
      key.push_back(xn);
      acc += direct_value(model, policy, stage + 1, xn, yn, s_next, p, key);
      key.pop_back();
      key.pop_back();
    }
  return acc;
}

}  // namespace

std::vector<CostIterationPair> cost_iteration_check(const PomdpModel& model,
                                                    const Policy& policy) {
  std::vector<CostIterationPair> out;
  for (int x0 = 0; x0 < model.nx(); ++x0) {
    std::vector<int> key{x0};
    CostIterationPair pair{};
    pair.chained = chained_value(model, policy, x0, initial_state(model), 1.0, 0, key);
    double direct = 0.0;
    for (int y0 = 0; y0 < model.ny(); ++y0) {
      double p0 = model.initial_hidden_law[static_cast<std::size_t>(y0)];
      if (p0 == 0.0) continue;
      key.assign({x0});
      direct += direct_value(model, policy, 0, x0, y0, 0.0, p0, key);
    }
    pair.direct = direct;
    out.push_back(pair);
  }
  return out;
}

double discrete_example_policy(const SwitchingPolicyParams& p, double a0, int i, int j) {
  if (i < 1 || i > 2 || j < 1 || j > 2)
    throw std::domain_error("discrete_example_policy: observation indices must be 1 or 2");
  auto phi_x = [&](int gen) {  // realization probability of x^{i,j} given y^gen
    if (gen != i) return 0.0;
    return j == 1 ? p.tau : 1.0 - p.tau;
  };
  const double m1 = phi_x(1) * (1.0 - a0) * p.q0_y1 + phi_x(2) * a0 * p.q0_y2;
  const double m2 = phi_x(1) * a0 * p.q0_y1 + phi_x(2) * (1.0 - a0) * p.q0_y2;
  const double denom = m1 + m2;
  if (denom <= 0.0)
    throw std::domain_error("discrete_example_policy: observation has zero probability");
  return -p.c_hat * (p.y1_value * m1 + p.y2_value * m2) / (2.0 * denom);
}

}  // namespace dimg
