#include "dimg/deviation.hpp"

#include <algorithm>
#include <cmath>

#include "dimg/rng.hpp"

namespace dimg {

namespace {

void require_q0x(const PomdpModel& model, const char* who) {
  if (!model.initial_observable_law)
    throw std::domain_error(std::string(who) + ": initial observable law required");
}

// Distribution of (x,y) at this node under the unmanipulated process.
DistributionXY true_step_distribution(const PomdpModel& model, const JointHistoryKey& cond) {
  auto ref = manipulation_reference(model, cond);
  if (!ref)
    throw std::domain_error("true_step_distribution: initial observable law required");
  return *ref;
}

struct PathEvaluator {
  const PomdpModel& model;
  const Policy& policy;
  const ManipulationPlan* plan;
  double total = 0.0;

  void walk(int stage, JointHistoryKey& cond, std::vector<int>& obs, double s, double prob) {
    const DistributionXY step = plan ? plan->joint_at(model, stage, cond)
                                     : true_step_distribution(model, cond);
    for (int x = 0; x < model.nx(); ++x) {
      obs.push_back(x);
      const int a = policy.action(obs);
      obs.push_back(a);
      for (int y = 0; y < model.ny(); ++y) {
        const double w = step.at(x, y);
        if (w > 0.0) {
          const double s_next =
              s + std::pow(model.dm_discount, stage) * model.dm_c(x, y, a);
          if (stage == model.horizon - 1) {
            total += prob * w * utility_eval(model.utility, s_next);
          } else {
            cond.push_back(x);
            cond.push_back(y);
            cond.push_back(a);
            walk(stage + 1, cond, obs, s_next, prob * w);
            cond.resize(cond.size() - 3);
          }
        }
      }
      obs.resize(obs.size() - 2);
    }
  }
};

}  // namespace

double evaluate_dm_objective(const PomdpModel& model, const Policy& policy,
                             const ManipulationPlan* plan) {
  require_q0x(model, "evaluate_dm_objective");
  PathEvaluator ev{model, policy, plan, 0.0};
  JointHistoryKey cond;
  std::vector<int> obs;
  ev.walk(0, cond, obs, 0.0, 1.0);
  return ev.total;
}

namespace {

// Lookup of designs by (stage, observable prefix, previous hidden state): the
// form the information-state route needs.  Conflicting entries mean the plan
// genuinely conditions on deeper hidden history and the route is undefined.
class StateRouteIndex {
 public:
  StateRouteIndex(const PomdpModel& model, const ManipulationPlan& plan) {
    for (int stage = 1; stage < plan.horizon; ++stage) {
      for (const auto& cond : stage_keys(plan, stage)) {
        std::vector<int> key{stage, cond[cond.size() - 2]};  // y_{n-1}
        const auto obs = observable_prefix(cond);
        key.insert(key.end(), obs.begin(), obs.end());
        DistributionXY joint = plan.joint_at(model, stage, cond);
        auto [it, inserted] = table_.emplace(std::move(key), joint);
        if (!inserted) {
          for (std::size_t i = 0; i < joint.p.size(); ++i)
            if (std::abs(joint.p[i] - it->second.p[i]) > 1e-9)
              throw std::domain_error(
                  "evaluate_dm_objective_via_states: design depends on hidden "
                  "history beyond the last state");
        }
      }
    }
  }

  const DistributionXY* find(int stage, int y_prev, const std::vector<int>& obs) const {
    std::vector<int> key{stage, y_prev};
    key.insert(key.end(), obs.begin(), obs.end());
    auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

 private:
  static std::vector<JointHistoryKey> stage_keys(const ManipulationPlan& plan, int stage) {
    std::vector<JointHistoryKey> keys;
    if (plan.scheme == ManipulationPlan::Scheme::ex_ante) {
      for (const auto& [k, v] : plan.joint_designs[static_cast<std::size_t>(stage)])
        keys.push_back(k);
    } else {
      for (const auto& [k, v] : plan.conditional_designs[static_cast<std::size_t>(stage)])
        keys.push_back(k);
    }
    return keys;
  }

  std::map<std::vector<int>, DistributionXY> table_;
};

struct StateRouteEvaluator {
  const PomdpModel& model;
  const Policy& policy;
  const ManipulationPlan* plan;
  const StateRouteIndex* index;

  double walk(int stage, const InformationState& mu, std::vector<int>& obs) {
    if (stage == model.horizon) return terminal_value(model.utility, mu);
    if (mu.empty()) return 0.0;
    const int x = obs.back();
    const int a = policy.action(obs);
    const double z = std::pow(model.dm_discount, stage);
    double total = 0.0;
    obs.push_back(a);
    for (int xn = 0; xn < model.nx(); ++xn) {
      InformationState next;
      if (plan && stage + 1 < model.horizon) {
        for (const auto& atom : mu.atoms()) {
          const DistributionXY* design = index->find(stage + 1, atom.y, obs);
          if (!design)
            throw std::domain_error(
                "evaluate_dm_objective_via_states: plan undefined at reachable node");
          const double s_next = atom.s + z * model.dm_c(x, atom.y, a);
          for (int yn = 0; yn < model.ny(); ++yn) {
            const double w = design->at(xn, yn) * atom.w;
            if (w > 0.0) next.add_mass(yn, s_next, w);
          }
        }
      } else {
        next = update(model, x, a, xn, mu, z);
      }
      obs.push_back(xn);
      total += walk(stage + 1, next, obs);
      obs.pop_back();
    }
    obs.pop_back();
    return total;
  }
};

}  // namespace

double evaluate_dm_objective_via_states(const PomdpModel& model, const Policy& policy,
                                        const ManipulationPlan* plan) {
  require_q0x(model, "evaluate_dm_objective_via_states");
  std::optional<StateRouteIndex> index;
  if (plan) index.emplace(model, *plan);

  DistributionXY step0 = plan ? plan->joint_at(model, 0, {})
                              : true_step_distribution(model, {});
  double total = 0.0;
  for (int x0 = 0; x0 < model.nx(); ++x0) {
    InformationState mu0;
    for (int y = 0; y < model.ny(); ++y)
      if (step0.at(x0, y) > 0.0) mu0.add_mass(y, 0.0, step0.at(x0, y));
    std::vector<int> obs{x0};
    StateRouteEvaluator ev{model, policy, plan, index ? &*index : nullptr};
    total += ev.walk(0, mu0, obs);
  }
  return total;
}

namespace {

struct EpsilonWalker {
  const PomdpModel& model;
  const ManipulationPlan& plan;
  std::vector<double> eps;

  // Children are read off the plan's own stored keys, so no policy is needed.
  void walk(int stage, const JointHistoryKey& cond, double w_plan, double w_true) {
    if (stage == plan.horizon) return;
    if (!plan.defined_at(stage, cond)) {
      // A branch only the true chain reaches may be left unspecified; the
      // design there is taken as truthful and contributes no distortion.
      if (w_plan > 0.0)
        throw std::domain_error("epsilon_profile: plan undefined at reachable history");
      return;
    }
    const DistributionXY p = plan.joint_at(model, stage, cond);
    const auto ref = manipulation_reference(model, cond);
    if (w_plan > 0.0 || w_true > 0.0)
      eps[static_cast<std::size_t>(stage)] =
          std::max(eps[static_cast<std::size_t>(stage)], tv_l1_distance(p, *ref));
    if (stage + 1 == plan.horizon) return;
    for (const auto& child : children(stage + 1, cond)) {
      const int x = child[cond.size()];
      const int y = child[cond.size() + 1];
      walk(stage + 1, child, w_plan * p.at(x, y), w_true * ref->at(x, y));
    }
  }

  std::vector<JointHistoryKey> children(int stage, const JointHistoryKey& cond) const {
    std::vector<JointHistoryKey> out;
    const auto lookup = [&](const auto& table) {
      for (auto it = table.lower_bound(cond); it != table.end(); ++it) {
        const auto& key = it->first;
        if (key.size() < cond.size() ||
            !std::equal(cond.begin(), cond.end(), key.begin()))
          break;
        if (key.size() == cond.size() + 3) out.push_back(key);
      }
    };
    if (plan.scheme == ManipulationPlan::Scheme::ex_ante)
      lookup(plan.joint_designs[static_cast<std::size_t>(stage)]);
    else
      lookup(plan.conditional_designs[static_cast<std::size_t>(stage)]);
    return out;
  }
};

}  // namespace

std::vector<double> epsilon_profile(const PomdpModel& model, const ManipulationPlan& plan) {
  require_q0x(model, "epsilon_profile");
  EpsilonWalker walker{model, plan,
                       std::vector<double>(static_cast<std::size_t>(plan.horizon), 0.0)};
  walker.walk(0, {}, 1.0, 1.0);
  return walker.eps;
}

double bound_rhs(const UtilitySpec& u, double c_bar, double beta, int horizon,
                 const std::vector<double>& eps) {
  if (static_cast<int>(eps.size()) != horizon)
    throw std::domain_error("bound_rhs: need one epsilon per stage");
  auto geometric = [&](int k) { return c_bar * (1.0 - std::pow(beta, k)) / (1.0 - beta); };
  double total = eps[0] * utility_eval(u, geometric(horizon));
  for (int k = 1; k < horizon; ++k)
    total += eps[static_cast<std::size_t>(k)] * utility_eval(u, geometric(k));
  return total;
}

DeviationReport check_bound(const PomdpModel& model, const Policy& policy,
                            const ManipulationPlan& plan) {
  DeviationReport rep;
  rep.j_true = evaluate_dm_objective(model, policy, nullptr);
  rep.j_manipulated = evaluate_dm_objective(model, policy, &plan);
  rep.deviation = std::abs(rep.j_manipulated - rep.j_true);
  rep.epsilons = epsilon_profile(model, plan);
  rep.bound = bound_rhs(model.utility, model.max_dm_cost(), model.dm_discount,
                        model.horizon, rep.epsilons);
  rep.slack = rep.bound - rep.deviation;
  rep.bound_holds = rep.slack >= -1e-7;
  return rep;
}

PersistencyResult minimal_persistency(const UtilitySpec& u, double c_bar, double beta,
                                      double eps_bar, double goal, int cap) {
  if (!(eps_bar > 0.0)) throw std::domain_error("minimal_persistency: eps_bar must be positive");
  if (!(goal > 0.0)) throw std::domain_error("minimal_persistency: goal must be positive");
  double sum = 0.0;
  for (int n = 1; n <= cap; ++n) {
    sum += eps_bar * utility_eval(u, c_bar * (1.0 - std::pow(beta, n)) / (1.0 - beta));
    if (sum >= goal) return {true, n};
  }
  return {false, cap};
}

SimulationResult simulate_trajectories(const PomdpModel& model, const Policy& policy,
                                       const ManipulationPlan* plan, int count,
                                       std::uint64_t seed, const SimulationOptions& options) {
  if (count < 1) throw std::domain_error("simulate_trajectories: count must be positive");
  if (!plan) require_q0x(model, "simulate_trajectories");
  const bool interim =
      plan && plan->scheme == ManipulationPlan::Scheme::interim;

  SimulationResult result;
  result.seed = seed;
  double sum = 0.0, sum_sq = 0.0;
  CounterRng root(seed);

  for (int i = 0; i < count; ++i) {
    CounterRng rng = root.substream(static_cast<std::uint64_t>(i));
    Trajectory traj;
    JointHistoryKey cond;
    std::vector<int> obs;
    double s = 0.0;
    for (int stage = 0; stage < model.horizon; ++stage) {
      int x, y;
      if (!plan) {
        const DistributionXY step = true_step_distribution(model, cond);
        const int flat = rng.categorical(step.p);
        x = flat / model.ny();
        y = flat % model.ny();
      } else if (interim) {
        const auto marginal = consistency_marginal(model, cond);
        y = rng.categorical(marginal);
        const auto& rows =
            plan->conditional_designs[static_cast<std::size_t>(stage)].at(cond);
        x = rng.categorical(rows[static_cast<std::size_t>(y)]);
      } else {
        const DistributionXY step = plan->joint_at(model, stage, cond);
        const int flat = rng.categorical(step.p);
        x = flat / model.ny();
        y = flat % model.ny();
      }
      obs.push_back(x);
      const int a = policy.action(obs);
      obs.push_back(a);
      const double stage_cost = model.dm_c(x, y, a);
      s += std::pow(model.dm_discount, stage) * stage_cost;
      if (options.keep_trajectories) traj.push_back({stage, x, y, a, stage_cost, s});
      cond.push_back(x);
      cond.push_back(y);
      cond.push_back(a);
    }
    const double u = utility_eval(model.utility, s);
    sum += u;
    sum_sq += u * u;
    if (options.keep_trajectories) result.trajectories.push_back(std::move(traj));
  }

  result.stats.samples = count;
  result.stats.mean = sum / count;
  if (count > 1) {
    const double var = std::max(0.0, (sum_sq - sum * sum / count) / (count - 1));
    result.stats.std_error = std::sqrt(var / count);
  }
  return result;
}

}  // namespace dimg
