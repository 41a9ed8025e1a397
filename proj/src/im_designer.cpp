#include "dimg/im_designer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dimg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMarginTol = 1e-12;

int last_tuple_offset(const JointHistoryKey& cond) {
  if (cond.size() % 3 != 0)
    throw std::domain_error("conditioning history must be (x,y,a) triples");
  return static_cast<int>(cond.size()) - 3;
}

std::string cell_name(const char* tag, int x, int y) {
  std::ostringstream os;
  os << tag << "(" << x << "," << y << ")";
  return os.str();
}

// Conditional law of the new observation given the new hidden state under the
// reference distribution; the fallback used when the conditional is 0/0.
std::vector<double> reference_conditional(const PomdpModel& model,
                                          const JointHistoryKey& cond, int y) {
  const int nx = model.nx();
  std::vector<double> row(static_cast<std::size_t>(nx), 1.0 / nx);
  auto ref = manipulation_reference(model, cond);
  if (!ref) return row;  // stage 0 without Q0X: unconstrained, row unused
  double my = 0.0;
  for (int x = 0; x < nx; ++x) my += ref->at(x, y);
  if (my > kMarginTol) {
    for (int x = 0; x < nx; ++x) row[static_cast<std::size_t>(x)] = ref->at(x, y) / my;
  } else {
    row = ref->x_marginal();
    double total = 0.0;
    for (double v : row) total += v;
    if (total > 0.0)
      for (double& v : row) v /= total;
  }
  return row;
}

}  // namespace

std::vector<int> observable_prefix(const JointHistoryKey& cond) {
  std::vector<int> obs;
  for (std::size_t k = 0; k < cond.size(); k += 3) {
    obs.push_back(cond[k]);      // x
    obs.push_back(cond[k + 2]);  // a
  }
  return obs;
}

std::vector<double> consistency_marginal(const PomdpModel& model,
                                         const JointHistoryKey& cond) {
  if (cond.empty()) return model.initial_hidden_law;
  const int off = last_tuple_offset(cond);
  return model.kernel_y_marginal(cond[static_cast<std::size_t>(off)],
                                 cond[static_cast<std::size_t>(off) + 1],
                                 cond[static_cast<std::size_t>(off) + 2]);
}

std::optional<DistributionXY> manipulation_reference(const PomdpModel& model,
                                                     const JointHistoryKey& cond) {
  if (cond.empty()) {
    if (!model.initial_observable_law) return std::nullopt;
    DistributionXY d(model.nx(), model.ny());
    for (int x = 0; x < model.nx(); ++x)
      for (int y = 0; y < model.ny(); ++y)
        d.at(x, y) = (*model.initial_observable_law)[static_cast<std::size_t>(x)] *
                     model.initial_hidden_law[static_cast<std::size_t>(y)];
    return d;
  }
  const int off = last_tuple_offset(cond);
  return kernel_row_distribution(model, cond[static_cast<std::size_t>(off)],
                                 cond[static_cast<std::size_t>(off) + 1],
                                 cond[static_cast<std::size_t>(off) + 2]);
}

DistributionXY ManipulationPlan::joint_at(const PomdpModel& model, int stage,
                                          const JointHistoryKey& cond) const {
  if (scheme == Scheme::ex_ante) {
    const auto& table = joint_designs[static_cast<std::size_t>(stage)];
    auto it = table.find(cond);
    if (it == table.end())
      throw std::domain_error("ManipulationPlan: design undefined at history");
    return it->second;
  }
  const auto& table = conditional_designs[static_cast<std::size_t>(stage)];
  auto it = table.find(cond);
  if (it == table.end())
    throw std::domain_error("ManipulationPlan: design undefined at history");
  const auto marginal = consistency_marginal(model, cond);
  DistributionXY d(model.nx(), model.ny());
  for (int y = 0; y < model.ny(); ++y) {
    const double my = marginal[static_cast<std::size_t>(y)];
    if (my <= 0.0) continue;
    const auto& row = it->second[static_cast<std::size_t>(y)];
    for (int x = 0; x < model.nx(); ++x) d.at(x, y) = row[static_cast<std::size_t>(x)] * my;
  }
  return d;
}

bool ManipulationPlan::defined_at(int stage, const JointHistoryKey& cond) const {
  if (scheme == Scheme::ex_ante)
    return joint_designs[static_cast<std::size_t>(stage)].count(cond) > 0;
  return conditional_designs[static_cast<std::size_t>(stage)].count(cond) > 0;
}

StageLinearProgram build_stage_lp_ex_ante(
    const PomdpModel& model, const Policy& dm_policy, int stage,
    const JointHistoryKey& cond, const std::function<double(int x, int y)>& continuation) {
  const int nx = model.nx();
  const int ny = model.ny();
  const double alpha_n = std::pow(model.im_discount, stage);
  const auto marginal = consistency_marginal(model, cond);
  const auto ref = manipulation_reference(model, cond);

  std::vector<int> obs = observable_prefix(cond);
  std::vector<int> actions(static_cast<std::size_t>(nx));
  obs.push_back(0);
  for (int x = 0; x < nx; ++x) {
    obs.back() = x;
    actions[static_cast<std::size_t>(x)] = dm_policy.action(obs);
  }

  StageLinearProgram lp;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      const int a = actions[static_cast<std::size_t>(x)];
      double coef = alpha_n * model.im_r(x, y, a) + continuation(x, y);
      if (ref && ref->at(x, y) <= 0.0) coef += alpha_n;  // |p - 0| = p
      lp.add_variable(cell_name("p", x, y), 0.0, 1.0, coef);
    }

  // Mass row, then one consistency row per hidden state.
  {
    std::vector<double> row(static_cast<std::size_t>(nx) * ny, 1.0);
    lp.add_row(std::move(row), 1.0);
  }
  for (int y = 0; y < ny; ++y) {
    std::vector<double> row(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int x = 0; x < nx; ++x) row[static_cast<std::size_t>(x) * ny + y] = 1.0;
    lp.add_row(std::move(row), marginal[static_cast<std::size_t>(y)]);
  }

  if (ref) {
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y) {
        const double q0 = ref->at(x, y);
        if (q0 <= 0.0) continue;
        const int p_idx = x * ny + y;
        const int aux = lp.add_variable(cell_name("abs", x, y), 0.0, kInf, alpha_n);
        const int s_hi = lp.add_variable(cell_name("slk+", x, y), 0.0, kInf, 0.0);
        const int s_lo = lp.add_variable(cell_name("slk-", x, y), 0.0, kInf, 0.0);
        // abs >= p - q0  and  abs >= q0 - p
        std::vector<double> row1(static_cast<std::size_t>(lp.num_vars()), 0.0);
        row1[static_cast<std::size_t>(p_idx)] = -1.0;
        row1[static_cast<std::size_t>(aux)] = 1.0;
        row1[static_cast<std::size_t>(s_hi)] = -1.0;
        lp.add_row(std::move(row1), -q0);
        std::vector<double> row2(static_cast<std::size_t>(lp.num_vars()), 0.0);
        row2[static_cast<std::size_t>(p_idx)] = 1.0;
        row2[static_cast<std::size_t>(aux)] = 1.0;
        row2[static_cast<std::size_t>(s_lo)] = -1.0;
        lp.add_row(std::move(row2), q0);
      }
  }
  return lp;
}

namespace {

DistributionXY extract_design(const PomdpModel& model, const LpSolution& sol) {
  DistributionXY d(model.nx(), model.ny());
  for (int x = 0; x < model.nx(); ++x)
    for (int y = 0; y < model.ny(); ++y) {
      double v = sol.point[static_cast<std::size_t>(x) * model.ny() + y];
      d.at(x, y) = v <= 0.0 ? 0.0 : v;
    }
  return d;
}

struct ExAnteSolver {
  const PomdpModel& model;
  const Policy& policy;
  const DesignOptions& options;
  ExAnteSolution out;
  std::size_t lp_count = 0;

  double visit(int stage, JointHistoryKey& cond, std::vector<int>& obs) {
    if (stage == model.horizon) return 0.0;
    if (++lp_count > options.lp_cap)
      throw ResourceCapError("solve_ex_ante: stage LP cap exceeded");

    const auto marginal = consistency_marginal(model, cond);
    std::vector<std::vector<double>> cont(
        static_cast<std::size_t>(model.nx()),
        std::vector<double>(static_cast<std::size_t>(model.ny()), 0.0));
    for (int x = 0; x < model.nx(); ++x) {
      obs.push_back(x);
      const int a = policy.action(obs);
      obs.push_back(a);
      for (int y = 0; y < model.ny(); ++y) {
        if (marginal[static_cast<std::size_t>(y)] <= 0.0) continue;
        cond.push_back(x);
        cond.push_back(y);
        cond.push_back(a);
        cont[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] =
            visit(stage + 1, cond, obs);
        cond.resize(cond.size() - 3);
      }
      obs.resize(obs.size() - 2);
    }

    StageLinearProgram lp = build_stage_lp_ex_ante(
        model, policy, stage, cond, [&](int x, int y) {
          return cont[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
        });
    LpSolution sol = lp_solve(lp);
    if (sol.status != LpStatus::optimal)
      throw std::logic_error("solve_ex_ante: stage LP not optimal (marginals invalid?)");
    out.plan.joint_designs[static_cast<std::size_t>(stage)][cond] =
        extract_design(model, sol);
    out.values.ex_ante[static_cast<std::size_t>(stage)][cond] = sol.value;
    return sol.value;
  }
};

}  // namespace

ExAnteSolution solve_ex_ante(const PomdpModel& model, const Policy& dm_policy,
                             const DesignOptions& options) {
  ExAnteSolver solver{model, dm_policy, options, {}, 0};
  solver.out.plan.scheme = ManipulationPlan::Scheme::ex_ante;
  solver.out.plan.horizon = model.horizon;
  solver.out.plan.joint_designs.resize(static_cast<std::size_t>(model.horizon));
  solver.out.values.ex_ante.resize(static_cast<std::size_t>(model.horizon));
  JointHistoryKey cond;
  std::vector<int> obs;
  solver.out.w_total = solver.visit(0, cond, obs);
  return std::move(solver.out);
}

namespace {

struct InterimSolver {
  const PomdpModel& model;
  const Policy& policy;
  const DesignOptions& options;
  InterimSolution out;
  std::size_t lp_count = 0;

  // W^Y_{N-stage}(cond, .) for hidden states in the marginal's support.
  std::vector<double> visit(int stage, JointHistoryKey& cond, std::vector<int>& obs) {
    const int nx = model.nx();
    const int ny = model.ny();
    if (stage == model.horizon)
      return std::vector<double>(static_cast<std::size_t>(ny), 0.0);

    const auto marginal = consistency_marginal(model, cond);
    std::vector<int> actions(static_cast<std::size_t>(nx));
    obs.push_back(0);
    for (int x = 0; x < nx; ++x) {
      obs.back() = x;
      actions[static_cast<std::size_t>(x)] = policy.action(obs);
    }
    obs.pop_back();

    std::vector<double> values(static_cast<std::size_t>(ny),
                               std::numeric_limits<double>::quiet_NaN());
    auto& rows = out.plan.conditional_designs[static_cast<std::size_t>(stage)][cond];
    rows.assign(static_cast<std::size_t>(ny), {});
    const auto ref = manipulation_reference(model, cond);
    const double alpha_n = std::pow(model.im_discount, stage);

    for (int y = 0; y < ny; ++y) {
      if (marginal[static_cast<std::size_t>(y)] <= 0.0) {
        rows[static_cast<std::size_t>(y)] = reference_conditional(model, cond, y);
        continue;
      }
      if (++lp_count > options.lp_cap)
        throw ResourceCapError("solve_interim: stage LP cap exceeded");

      // Continuation coefficient per candidate observation.
      std::vector<double> cont(static_cast<std::size_t>(nx), 0.0);
      for (int x = 0; x < nx; ++x) {
        const int a = actions[static_cast<std::size_t>(x)];
        const auto next_marginal = model.kernel_y_marginal(x, y, a);
        cond.push_back(x);
        cond.push_back(y);
        cond.push_back(a);
        obs.push_back(x);
        obs.push_back(a);
        std::vector<double> child;
        bool need_child = false;
        for (double w : next_marginal)
          if (w > 0.0) need_child = true;
        if (need_child && stage + 1 < model.horizon) child = visit(stage + 1, cond, obs);
        double k = 0.0;
        if (!child.empty())
          for (int yn = 0; yn < ny; ++yn) {
            const double w = next_marginal[static_cast<std::size_t>(yn)];
            if (w > 0.0) k += w * child[static_cast<std::size_t>(yn)];
          }
        cont[static_cast<std::size_t>(x)] = k;
        obs.resize(obs.size() - 2);
        cond.resize(cond.size() - 3);
      }

      // Conditional reference for this hidden state (none at a free stage 0).
      std::optional<std::vector<double>> psi;
      if (ref) psi = reference_conditional(model, cond, y);

      StageLinearProgram lp;
      for (int x = 0; x < nx; ++x) {
        const int a = actions[static_cast<std::size_t>(x)];
        double coef = alpha_n * model.im_r(x, y, a) + cont[static_cast<std::size_t>(x)];
        if (psi && (*psi)[static_cast<std::size_t>(x)] <= 0.0) coef += alpha_n;
        lp.add_variable(cell_name("q", x, y), 0.0, 1.0, coef);
      }
      lp.add_row(std::vector<double>(static_cast<std::size_t>(nx), 1.0), 1.0);
      if (psi) {
        for (int x = 0; x < nx; ++x) {
          const double q0 = (*psi)[static_cast<std::size_t>(x)];
          if (q0 <= 0.0) continue;
          const int aux = lp.add_variable(cell_name("abs", x, y), 0.0, kInf, alpha_n);
          const int s_hi = lp.add_variable(cell_name("slk+", x, y), 0.0, kInf, 0.0);
          const int s_lo = lp.add_variable(cell_name("slk-", x, y), 0.0, kInf, 0.0);
          std::vector<double> row1(static_cast<std::size_t>(lp.num_vars()), 0.0);
          row1[static_cast<std::size_t>(x)] = -1.0;
          row1[static_cast<std::size_t>(aux)] = 1.0;
          row1[static_cast<std::size_t>(s_hi)] = -1.0;
          lp.add_row(std::move(row1), -q0);
          std::vector<double> row2(static_cast<std::size_t>(lp.num_vars()), 0.0);
          row2[static_cast<std::size_t>(x)] = 1.0;
          row2[static_cast<std::size_t>(aux)] = 1.0;
          row2[static_cast<std::size_t>(s_lo)] = -1.0;
          lp.add_row(std::move(row2), q0);
        }
      }
      LpSolution sol = lp_solve(lp);
      if (sol.status != LpStatus::optimal)
        throw std::logic_error("solve_interim: stage LP not optimal");
      values[static_cast<std::size_t>(y)] = sol.value;
      std::vector<double> row(static_cast<std::size_t>(nx));
      for (int x = 0; x < nx; ++x)
        row[static_cast<std::size_t>(x)] = std::max(sol.point[static_cast<std::size_t>(x)], 0.0);
      rows[static_cast<std::size_t>(y)] = std::move(row);
    }

    out.values.interim[static_cast<std::size_t>(stage)][cond] = values;
    return values;
  }
};

}  // namespace

InterimSolution solve_interim(const PomdpModel& model, const Policy& dm_policy,
                              const DesignOptions& options) {
  InterimSolver solver{model, dm_policy, options, {}, 0};
  solver.out.plan.scheme = ManipulationPlan::Scheme::interim;
  solver.out.plan.horizon = model.horizon;
  solver.out.plan.conditional_designs.resize(static_cast<std::size_t>(model.horizon));
  solver.out.values.interim.resize(static_cast<std::size_t>(model.horizon));
  JointHistoryKey cond;
  std::vector<int> obs;
  solver.out.root_values = solver.visit(0, cond, obs);
  double total = 0.0;
  for (int y = 0; y < model.ny(); ++y) {
    const double w = model.initial_hidden_law[static_cast<std::size_t>(y)];
    if (w > 0.0) total += w * solver.out.root_values[static_cast<std::size_t>(y)];
  }
  solver.out.w_total = total;
  return std::move(solver.out);
}

ManipulationPlan disintegrate(const ManipulationPlan& ex_ante_plan, const PomdpModel& model) {
  if (ex_ante_plan.scheme != ManipulationPlan::Scheme::ex_ante)
    throw std::domain_error("disintegrate: expected an ex ante plan");
  ConsistencyReport rep = check_consistency(ex_ante_plan, model);
  if (!rep.pass)
    throw std::domain_error("disintegrate: plan is not stagewise consistent");

  ManipulationPlan out;
  out.scheme = ManipulationPlan::Scheme::interim;
  out.horizon = ex_ante_plan.horizon;
  out.conditional_designs.resize(ex_ante_plan.joint_designs.size());
  for (std::size_t stage = 0; stage < ex_ante_plan.joint_designs.size(); ++stage) {
    for (const auto& [cond, p] : ex_ante_plan.joint_designs[stage]) {
      std::vector<std::vector<double>> rows(static_cast<std::size_t>(model.ny()));
      const auto p_y = p.y_marginal();
      for (int y = 0; y < model.ny(); ++y) {
        if (p_y[static_cast<std::size_t>(y)] > kMarginTol) {
          std::vector<double> row(static_cast<std::size_t>(model.nx()));
          for (int x = 0; x < model.nx(); ++x)
            row[static_cast<std::size_t>(x)] = p.at(x, y) / p_y[static_cast<std::size_t>(y)];
          rows[static_cast<std::size_t>(y)] = std::move(row);
        } else {
          rows[static_cast<std::size_t>(y)] = reference_conditional(model, cond, y);
        }
      }
      out.conditional_designs[stage][cond] = std::move(rows);
    }
  }
  return out;
}

namespace {

double im_walk(const PomdpModel& model, const Policy& policy, const ManipulationPlan& plan,
               int stage, JointHistoryKey& cond, std::vector<int>& obs) {
  if (stage == model.horizon) return 0.0;
  if (!plan.defined_at(stage, cond))
    throw std::domain_error("evaluate_im_objective: plan undefined at reachable history");
  const DistributionXY p = plan.joint_at(model, stage, cond);
  const auto ref = manipulation_reference(model, cond);
  const double alpha_n = std::pow(model.im_discount, stage);
  double value = ref ? alpha_n * tv_l1_distance(p, *ref) : 0.0;
  for (int x = 0; x < model.nx(); ++x) {
    obs.push_back(x);
    const int a = policy.action(obs);
    obs.push_back(a);
    for (int y = 0; y < model.ny(); ++y) {
      const double w = p.at(x, y);
      if (w > 0.0) {
        cond.push_back(x);
        cond.push_back(y);
        cond.push_back(a);
        value += w * (alpha_n * model.im_r(x, y, a) +
                      im_walk(model, policy, plan, stage + 1, cond, obs));
        cond.resize(cond.size() - 3);
      }
    }
    obs.resize(obs.size() - 2);
  }
  return value;
}

}  // namespace

double evaluate_im_objective(const PomdpModel& model, const Policy& dm_policy,
                             const ManipulationPlan& plan) {
  JointHistoryKey cond;
  std::vector<int> obs;
  return im_walk(model, dm_policy, plan, 0, cond, obs);
}

namespace {

void truthful_fill(const PomdpModel& model, const Policy& policy, ManipulationPlan& plan,
                   int stage, JointHistoryKey& cond, std::vector<int>& obs) {
  if (stage == model.horizon) return;
  auto ref = manipulation_reference(model, cond);
  plan.joint_designs[static_cast<std::size_t>(stage)][cond] = *ref;
  const auto marginal = consistency_marginal(model, cond);
  for (int x = 0; x < model.nx(); ++x) {
    obs.push_back(x);
    const int a = policy.action(obs);
    obs.push_back(a);
    for (int y = 0; y < model.ny(); ++y) {
      if (marginal[static_cast<std::size_t>(y)] <= 0.0) continue;
      cond.push_back(x);
      cond.push_back(y);
      cond.push_back(a);
      truthful_fill(model, policy, plan, stage + 1, cond, obs);
      cond.resize(cond.size() - 3);
    }
    obs.resize(obs.size() - 2);
  }
}

}  // namespace

ManipulationPlan truthful_plan(const PomdpModel& model, const Policy& dm_policy) {
  if (!model.initial_observable_law)
    throw std::domain_error("truthful_plan: initial observable law required");
  ManipulationPlan plan;
  plan.scheme = ManipulationPlan::Scheme::ex_ante;
  plan.horizon = model.horizon;
  plan.joint_designs.resize(static_cast<std::size_t>(model.horizon));
  JointHistoryKey cond;
  std::vector<int> obs;
  truthful_fill(model, dm_policy, plan, 0, cond, obs);
  return plan;
}

ConsistencyReport check_consistency(const ManipulationPlan& plan, const PomdpModel& model,
                                    double tol) {
  ConsistencyReport rep;
  const int stages = plan.scheme == ManipulationPlan::Scheme::ex_ante
                         ? static_cast<int>(plan.joint_designs.size())
                         : static_cast<int>(plan.conditional_designs.size());
  for (int stage = 0; stage < stages; ++stage) {
    if (plan.scheme == ManipulationPlan::Scheme::ex_ante) {
      for (const auto& [cond, p] : plan.joint_designs[static_cast<std::size_t>(stage)]) {
        const auto required = consistency_marginal(model, cond);
        const auto actual = p.y_marginal();
        double v = 0.0;
        for (int y = 0; y < model.ny(); ++y)
          v = std::max(v, std::abs(actual[static_cast<std::size_t>(y)] -
                                   required[static_cast<std::size_t>(y)]));
        rep.entries.push_back({stage, cond, v});
      }
    } else {
      for (const auto& [cond, rows] : plan.conditional_designs[static_cast<std::size_t>(stage)]) {
        const auto marginal = consistency_marginal(model, cond);
        double v = 0.0;
        for (int y = 0; y < model.ny(); ++y) {
          if (marginal[static_cast<std::size_t>(y)] <= 0.0) continue;
          const auto& row = rows[static_cast<std::size_t>(y)];
          double mass = 0.0;
          for (double e : row) mass += e;
          v = std::max(v, std::abs(mass - 1.0));
        }
        rep.entries.push_back({stage, cond, v});
      }
    }
  }
  for (const auto& e : rep.entries) rep.max_violation = std::max(rep.max_violation, e.violation);
  rep.pass = rep.max_violation <= tol;
  return rep;
}

}  // namespace dimg
