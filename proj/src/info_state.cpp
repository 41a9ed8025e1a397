#include "dimg/info_state.hpp"

#include <algorithm>
#include <cmath>

#include "dimg/dm_solver.hpp"

namespace dimg {

void InformationState::add_mass(int y, double s, double w) {
  if (w == 0.0) return;
  if (w < 0.0) throw std::domain_error("InformationState: negative weight");
  auto it = std::lower_bound(
      atoms_.begin(), atoms_.end(), std::pair<int, double>(y, s - merge_tolerance),
      [](const Atom& a, const std::pair<int, double>& key) {
        return a.y < key.first || (a.y == key.first && a.s < key.second);
      });
  if (it != atoms_.end() && it->y == y && std::abs(it->s - s) <= merge_tolerance) {
    double total = it->w + w;
    it->s = (it->s * it->w + s * w) / total;
    it->w = total;
    return;
  }
  atoms_.insert(it, Atom{y, s, w});
}

double InformationState::mass() const {
  double total = 0.0;
  for (const auto& a : atoms_) total += a.w;
  return total;
}

std::vector<double> InformationState::y_marginal(int ny) const {
  std::vector<double> out(static_cast<std::size_t>(ny), 0.0);
  for (const auto& a : atoms_) out[static_cast<std::size_t>(a.y)] += a.w;
  return out;
}

double InformationState::max_s() const {
  double m = 0.0;
  for (const auto& a : atoms_) m = std::max(m, a.s);
  return m;
}

InformationState initial_state(const PomdpModel& model) {
  InformationState mu;
  for (int y = 0; y < model.ny(); ++y) {
    double w = model.initial_hidden_law[static_cast<std::size_t>(y)];
    if (w > 0.0) mu.add_mass(y, 0.0, w);
  }
  return mu;
}

InformationState update(const PomdpModel& model, int x, int a, int x_next,
                        const InformationState& mu, double z) {
  if (!model.action_feasible(x, a))
    throw std::domain_error("update: action infeasible at this state");
  InformationState out;
  for (const auto& atom : mu.atoms()) {
    const double s_next = atom.s + z * model.dm_c(x, atom.y, a);
    for (int yn = 0; yn < model.ny(); ++yn) {
      double w = model.q(x, atom.y, a, x_next, yn) * atom.w;
      if (w > 0.0) out.add_mass(yn, s_next, w);
    }
  }
  return out;
}

double normalization_constant(const PomdpModel& model, const InformationState& mu_prev,
                              int x_prev, int a, int x_next) {
  const double mass = mu_prev.mass();
  if (mass <= 0.0)
    throw std::domain_error("normalization_constant: zero-mass information state");
  if (!model.action_feasible(x_prev, a))
    throw std::domain_error("normalization_constant: action infeasible");
  double d = 0.0;
  for (const auto& atom : mu_prev.atoms()) {
    double qx = 0.0;
    for (int yn = 0; yn < model.ny(); ++yn) qx += model.q(x_prev, atom.y, a, x_next, yn);
    d += qx * atom.w;
  }
  return d / mass;
}

RecursionResult run_recursion(const PomdpModel& model, const Policy* policy,
                              const HistoryRecord& history) {
  const int n = history.length();
  if (history.observations.size() != static_cast<std::size_t>(n) + 1)
    throw std::domain_error("run_recursion: history must alternate states and actions");
  for (int k = 0; k < n; ++k)
    if (!model.action_feasible(history.observations[static_cast<std::size_t>(k)],
                               history.actions[static_cast<std::size_t>(k)]))
      throw std::domain_error("run_recursion: infeasible action in history");
  if (policy) {
    std::vector<int> prefix{history.observations[0]};
    for (int k = 0; k < n; ++k) {
      if (policy->action(prefix) != history.actions[static_cast<std::size_t>(k)])
        throw std::domain_error("run_recursion: history inconsistent with policy");
      prefix.push_back(history.actions[static_cast<std::size_t>(k)]);
      prefix.push_back(history.observations[static_cast<std::size_t>(k) + 1]);
    }
  }

  RecursionResult res;
  res.states.push_back(initial_state(model));
  res.normalizers.push_back(1.0);  // D_0
  double z = 1.0;
  for (int k = 1; k <= n; ++k) {
    const InformationState& prev = res.states.back();
    const int x_prev = history.observations[static_cast<std::size_t>(k) - 1];
    const int a = history.actions[static_cast<std::size_t>(k) - 1];
    const int x_next = history.observations[static_cast<std::size_t>(k)];
    if (prev.empty()) {
      res.states.emplace_back();
      res.normalizers.push_back(0.0);
    } else {
      res.normalizers.push_back(normalization_constant(model, prev, x_prev, a, x_next));
      res.states.push_back(update(model, x_prev, a, x_next, prev, z));
    }
    z *= model.dm_discount;
  }
  return res;
}

JointEnumeration joint_enumeration_oracle(const PomdpModel& model,
                                          const HistoryRecord& history,
                                          std::size_t path_cap) {
  const int n = history.length();
  double paths = 1.0;
  for (int k = 0; k <= n; ++k) paths *= model.ny();
  if (paths > static_cast<double>(path_cap))
    throw ResourceCapError("joint_enumeration_oracle: hidden-path count exceeds cap");

  InformationState joint;
  // Depth-first walk over hidden paths (y_0,...,y_n); probability and cost
  // accumulate along the way, zero-probability branches pruned.
  struct Frame {
    int k;
    int y;
    double prob;
    double s;
  };
  std::vector<Frame> stack;
  for (int y0 = model.ny() - 1; y0 >= 0; --y0) {
    double p0 = model.initial_hidden_law[static_cast<std::size_t>(y0)];
    if (p0 > 0.0) stack.push_back({0, y0, p0, 0.0});
  }
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.k == n) {
      joint.add_mass(f.y, f.s, f.prob);
      continue;
    }
    const int x = history.observations[static_cast<std::size_t>(f.k)];
    const int a = history.actions[static_cast<std::size_t>(f.k)];
    const int x_next = history.observations[static_cast<std::size_t>(f.k) + 1];
    const double s_next = f.s + std::pow(model.dm_discount, f.k) * model.dm_c(x, f.y, a);
    for (int yn = model.ny() - 1; yn >= 0; --yn) {
      double p = model.q(x, f.y, a, x_next, yn) * f.prob;
      if (p > 0.0) stack.push_back({f.k + 1, yn, p, s_next});
    }
  }

  JointEnumeration out;
  out.joint = joint.atoms();
  out.history_probability = joint.mass();
  if (out.history_probability > 0.0) {
    out.conditional = out.joint;
    for (auto& atom : out.conditional) atom.w /= out.history_probability;
  }
  return out;
}

}  // namespace dimg
