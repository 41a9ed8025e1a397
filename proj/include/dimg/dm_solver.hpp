#pragma once

#include <functional>
#include <map>
#include <vector>

#include "dimg/info_state.hpp"
#include "dimg/model.hpp"

namespace dimg {

// History-indexed deterministic policy.  Keys are encoded observable
// histories [x_0, a_0, x_1, ..., x_n]; the value is the prescribed action.
class Policy {
 public:
  int action(const std::vector<int>& obs_history) const {
    auto it = entries_.find(obs_history);
    if (it == entries_.end())
      throw std::domain_error("Policy: no action recorded for this history");
    return it->second;
  }
  bool defined(const std::vector<int>& obs_history) const {
    return entries_.count(obs_history) > 0;
  }
  void set(std::vector<int> obs_history, int a) { entries_[std::move(obs_history)] = a; }
  const std::map<std::vector<int>, int>& entries() const { return entries_; }

 private:
  std::map<std::vector<int>, int> entries_;
};

// Integral of U(s) against the unnormalized state; the value of a leaf node.
double terminal_value(const UtilitySpec& u, const InformationState& mu);

struct BackupResult {
  double value;
  int action;
};

// Continuation evaluator: value of the successor node reached by taking
// action a and observing x_next, whose state is (x_next, mu_next, z_next).
using ContinuationFn =
    std::function<double(int a, int x_next, const InformationState& mu_next, double z_next)>;

// One dynamic-programming backup: minimize over feasible actions the sum of
// successor values over all next observations.  Ties break to the lowest
// action index.
BackupResult bellman_backup(const PomdpModel& model, int x, const InformationState& mu,
                            double z, const ContinuationFn& value_next);

struct SolveOptions {
  std::size_t node_cap = 2000000;  // observable history tree nodes
};

struct SolveResult {
  Policy policy;
  // Value of every enumerated history node (leaves carry terminal values).
  std::map<std::vector<int>, double> values;
  std::vector<double> j_initial;  // J_N(x) per initial observation
};

// Exact backward induction on the full observable history tree.
SolveResult solve(const PomdpModel& model, const SolveOptions& options = {});

struct CostIterationPair {
  double chained;  // value through iterated backup operators
  double direct;   // expectation of U over enumerated joint paths
};

// Both evaluations of a fixed policy's value, per initial observation.
std::vector<CostIterationPair> cost_iteration_check(const PomdpModel& model,
                                                    const Policy& policy);

// Parameters of the two-point switching scenario's closed-form stage-1 policy.
struct SwitchingPolicyParams {
  double c_hat = 1.0;
  double tau = 0.5;
  double q0_y1 = 0.5, q0_y2 = 0.5;
  double y1_value = -1.0, y2_value = 1.0;
};

// Closed-form optimal stage-1 action after observing x_1 = x^{i,j} (i = index
// of the hidden state that generated the observation, j = noise branch).
double discrete_example_policy(const SwitchingPolicyParams& p, double a0, int i, int j);

}  // namespace dimg
