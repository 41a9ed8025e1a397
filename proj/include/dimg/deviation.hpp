#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dimg/im_designer.hpp"

namespace dimg {

// Exact DM objective with initial observation drawn from Q0X.  With a plan
// the path law chains the designed distributions while the policy stays the
// one computed for the unmanipulated model; without one it chains the kernel.
double evaluate_dm_objective(const PomdpModel& model, const Policy& policy,
                             const ManipulationPlan* plan);

// The same quantity summed through (possibly manipulated) information states
// per observable path.  Requires designs that depend on the joint history
// only through the observable prefix and the last hidden state; solver plans
// have that property by construction.
double evaluate_dm_objective_via_states(const PomdpModel& model, const Policy& policy,
                                        const ManipulationPlan* plan);

// Per-stage greatest information distortion: eps_0 is the L1 distance between
// the stage-0 design and Q0X x Q0Y; eps_n maxes the L1 distance between each
// stage-n design and the kernel row at its own conditioning tuple, over
// histories reachable under either the designed or the true chain.
std::vector<double> epsilon_profile(const PomdpModel& model, const ManipulationPlan& plan);

// eps_0 U(cbar (1-beta^N)/(1-beta)) + sum_{k=1}^{N-1} eps_k U(cbar (1-beta^k)/(1-beta)).
double bound_rhs(const UtilitySpec& u, double c_bar, double beta, int horizon,
                 const std::vector<double>& eps);

struct MonteCarloStats {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

struct DeviationReport {
  double j_true = 0.0;
  double j_manipulated = 0.0;
  double deviation = 0.0;  // |J~ - J|
  std::vector<double> epsilons;
  double bound = 0.0;
  double slack = 0.0;  // bound - deviation
  bool bound_holds = true;
  std::optional<MonteCarloStats> mc_true;
  std::optional<MonteCarloStats> mc_manipulated;
  std::uint64_t seed = 0;
  int samples = 0;
};

// Exact two-sided evaluation plus the bound; slack below -1e-7 marks a
// violation in the report.
DeviationReport check_bound(const PomdpModel& model, const Policy& policy,
                            const ManipulationPlan& plan);

struct PersistencyResult {
  bool achievable = false;
  int stages = 0;  // smallest N meeting the goal when achievable
};

// Smallest horizon over which a constant per-stage distortion budget can
// force the target deviation, by increasing search up to the cap.
PersistencyResult minimal_persistency(const UtilitySpec& u, double c_bar, double beta,
                                      double eps_bar, double goal, int cap = 1000000);

struct TrajectoryStep {
  int stage = 0;
  int x = 0;
  int y = 0;
  int a = 0;
  double cost = 0.0;        // undiscounted stage cost
  double cumulative = 0.0;  // discounted accumulated cost
};

using Trajectory = std::vector<TrajectoryStep>;

struct SimulationOptions {
  bool keep_trajectories = false;
};

struct SimulationResult {
  MonteCarloStats stats;
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;  // populated when requested
};

// Seeded Monte-Carlo rollout of the (possibly manipulated) process under the
// fixed policy.  Each trajectory draws from its own counter substream, so the
// results are independent of batching.
SimulationResult simulate_trajectories(const PomdpModel& model, const Policy& policy,
                                       const ManipulationPlan* plan, int count,
                                       std::uint64_t seed,
                                       const SimulationOptions& options = {});

}  // namespace dimg
