#pragma once

#include <optional>
#include <vector>

#include "dimg/model.hpp"

namespace dimg {

struct Atom {
  int y;      // hidden state
  double s;   // accumulated discounted cost
  double w;   // nonnegative weight
};

// Unnormalized measure over (hidden state, accumulated cost), kept as a finite
// atom list sorted by (y, s).  Atoms whose s-keys agree within merge_tolerance
// are merged, the merged key being the weight average of the two.
class InformationState {
 public:
  static constexpr double merge_tolerance = 1e-12;

  void add_mass(int y, double s, double w);

  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  double mass() const;
  std::vector<double> y_marginal(int ny) const;
  double max_s() const;  // 0 when empty

 private:
  std::vector<Atom> atoms_;
};

// Observable history (x_0, a_0, x_1, ..., x_n), optionally carrying the
// realized hidden states alongside.
struct HistoryRecord {
  std::vector<int> observations;          // x_0 .. x_n
  std::vector<int> actions;               // a_0 .. a_{n-1}
  std::optional<std::vector<int>> hidden; // y_0 .. y_{n-1} when recorded

  int length() const { return static_cast<int>(actions.size()); }
};

// Q0Y x delta_0: every hidden state with positive initial mass at cost 0.
InformationState initial_state(const PomdpModel& model);

// One application of the update operator: from the state after observing x
// and choosing a (feasible), condition on the new observation x_next.  The
// discount weight z multiplies the stage cost added to each atom.
InformationState update(const PomdpModel& model, int x, int a, int x_next,
                        const InformationState& mu, double z);

// Normalization constant of the update: the probability of observing x_next
// given the (normalized) current hidden-state marginal.  Equals
// mass(update(...)) / mass(mu_prev).
double normalization_constant(const PomdpModel& model, const InformationState& mu_prev,
                              int x_prev, int a, int x_next);

struct RecursionResult {
  std::vector<InformationState> states;  // mu_0 .. mu_n
  std::vector<double> normalizers;       // D_0 = 1, D_1 .. D_n
};

class Policy;  // dm_solver.hpp

// Chain the update along an observable history.  If a policy is supplied the
// history's actions must match its prescriptions.  A zero-probability
// observation yields an empty state and D = 0 from that point on.
RecursionResult run_recursion(const PomdpModel& model, const Policy* policy,
                              const HistoryRecord& history);

struct JointEnumeration {
  std::vector<Atom> joint;        // P(history, Y_n = y, S_n = s), merged like atoms
  std::vector<Atom> conditional;  // joint / history_probability (empty if prob 0)
  double history_probability = 0.0;
};

// Exact law of (Y_n, S_n) by summing over every hidden-state path consistent
// with the history.  Used as the independent check of the recursion; the path
// count |Y|^(n+1) must stay below the cap.
JointEnumeration joint_enumeration_oracle(const PomdpModel& model,
                                          const HistoryRecord& history,
                                          std::size_t path_cap = 2000000);

}  // namespace dimg
