#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dimg/dm_solver.hpp"
#include "dimg/lp.hpp"
#include "dimg/model.hpp"

namespace dimg {

// Conditioning joint history [x_0, y_0, a_0, ..., x_{n-1}, y_{n-1}, a_{n-1}].
// Stage-0 designs condition on the empty history.
using JointHistoryKey = std::vector<int>;

// Observable part of a conditioning history: [x_0, a_0, ..., x_{n-1}, a_{n-1}].
std::vector<int> observable_prefix(const JointHistoryKey& cond);

// The Y-marginal any consistent design at this node must reproduce: Q0Y at
// stage 0, else q^Y(.|last tuple of cond).
std::vector<double> consistency_marginal(const PomdpModel& model,
                                         const JointHistoryKey& cond);

// Distribution the manipulation cost is measured against: the kernel row at
// the last tuple of cond; at stage 0 the product Q0X x Q0Y when Q0X is given,
// otherwise none (stage-0 distortion is then free).
std::optional<DistributionXY> manipulation_reference(const PomdpModel& model,
                                                     const JointHistoryKey& cond);

// Stagewise designs.  Ex ante plans carry one joint distribution over X x Y
// per stage and conditioning history; interim plans carry per-stage,
// per-history conditional rows x -> phi(x|y), one row per hidden state.
struct ManipulationPlan {
  enum class Scheme { ex_ante, interim };
  Scheme scheme = Scheme::ex_ante;
  int horizon = 0;
  std::vector<std::map<JointHistoryKey, DistributionXY>> joint_designs;
  std::vector<std::map<JointHistoryKey, std::vector<std::vector<double>>>> conditional_designs;

  // The joint distribution the plan induces at a node: the stored table for
  // ex ante plans, phi(x|y) * marginal(y) for interim plans.
  DistributionXY joint_at(const PomdpModel& model, int stage,
                          const JointHistoryKey& cond) const;
  bool defined_at(int stage, const JointHistoryKey& cond) const;
};

struct DesignValueTable {
  // stage -> conditioning history -> W_{N-n} (ex ante recursion)
  std::vector<std::map<JointHistoryKey, double>> ex_ante;
  // stage -> conditioning history -> per-y W^Y_{N-n} (NaN where unreachable)
  std::vector<std::map<JointHistoryKey, std::vector<double>>> interim;
};

struct DesignOptions {
  std::size_t lp_cap = 500000;  // stage subproblems across the history tree
};

// Stage design subproblem as a linear program: variables p(x,y) with the mass
// row and |Y| marginal rows, plus one auxiliary and two slack rows per cell
// where the reference is positive (cells with zero reference fold |p-0| = p
// straight into p's cost).  The continuation supplies W_{N-stage-1}(x,y,.).
StageLinearProgram build_stage_lp_ex_ante(
    const PomdpModel& model, const Policy& dm_policy, int stage,
    const JointHistoryKey& cond, const std::function<double(int x, int y)>& continuation);

struct ExAnteSolution {
  ManipulationPlan plan;
  DesignValueTable values;
  double w_total = 0.0;  // W_N, the optimal ex ante manipulation cost
};

struct InterimSolution {
  ManipulationPlan plan;
  DesignValueTable values;
  std::vector<double> root_values;  // W^Y_N per initial hidden state (NaN off-support)
  double w_total = 0.0;             // sum_y Q0Y(y) W^Y_N(y)
};

// Backward recursion over the joint history tree, one LP per node.
ExAnteSolution solve_ex_ante(const PomdpModel& model, const Policy& dm_policy,
                             const DesignOptions& options = {});

// Interim counterpart: per (history, hidden state), an LP over the law of the
// observable state only, with the hidden evolution governed by the true kernel.
InterimSolution solve_interim(const PomdpModel& model, const Policy& dm_policy,
                              const DesignOptions& options = {});

// Factor an ex ante plan into conditional kernels phi(x|y); rows with
// negligible designed marginal are filled from the true-kernel conditional.
ManipulationPlan disintegrate(const ManipulationPlan& ex_ante_plan,
                              const PomdpModel& model);

// Exact forward expectation of sum alpha^k (r + rho_k) under the plan-chained
// path law with the DM's policy fixed.
double evaluate_im_objective(const PomdpModel& model, const Policy& dm_policy,
                             const ManipulationPlan& plan);

// The no-manipulation plan: kernel rows everywhere, Q0X x Q0Y at stage 0
// (requires Q0X).
ManipulationPlan truthful_plan(const PomdpModel& model, const Policy& dm_policy);

struct ConsistencyEntry {
  int stage = 0;
  JointHistoryKey history;
  double violation = 0.0;
};

struct ConsistencyReport {
  std::vector<ConsistencyEntry> entries;
  double max_violation = 0.0;
  bool pass = true;
};

// Max-norm residual of the stagewise-consistency equalities per stage and
// history (interim plans: row-mass residuals).
ConsistencyReport check_consistency(const ManipulationPlan& plan, const PomdpModel& model,
                                    double tol = 1e-8);

}  // namespace dimg
