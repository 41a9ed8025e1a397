#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dimg {

// Thrown when an enumeration would exceed a configured cap.
struct ResourceCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point of a finite labeled space, optionally carrying a real embedding
// (used by scenario cost formulas, e.g. the y-values of the switching model).
struct LabeledPoint {
  std::string label;
  std::optional<double> value;
};

struct UtilitySpec {
  enum class Family { identity, exponential, power };
  Family family = Family::identity;
  // lambda for exponential (nonzero), exponent for power (positive).
  double parameter = 0.0;
};

// U(s) for s >= 0.  The exponential family is (exp(lambda*s)-1)/lambda so the
// lambda -> 0 limit recovers the identity.
double utility_eval(const UtilitySpec& u, double s);

// Finite-space instance of the manipulation game: observable states X, hidden
// states Y, actions A, a transition kernel density table q[x'][y'|x,y,a],
// stage costs for both parties, discounts and horizon.
struct PomdpModel {
  std::vector<LabeledPoint> observable_states;
  std::vector<LabeledPoint> hidden_states;
  std::vector<LabeledPoint> actions;
  std::vector<std::vector<int>> feasible_actions;  // D(x), sorted indices
  std::vector<double> kernel;                      // [x][y][a][x'][y']
  std::vector<double> initial_hidden_law;          // Q0Y
  std::optional<std::vector<double>> initial_observable_law;  // Q0X
  std::vector<double> dm_cost;  // c[x][y][a]
  std::vector<double> im_cost;  // r[x][y][a]
  double dm_discount = 0.9;     // beta in (0,1)
  double im_discount = 1.0;     // alpha in (0,1]
  int horizon = 1;              // N
  UtilitySpec utility;

  int nx() const { return static_cast<int>(observable_states.size()); }
  int ny() const { return static_cast<int>(hidden_states.size()); }
  int na() const { return static_cast<int>(actions.size()); }

  std::size_t kernel_index(int x, int y, int a, int xn, int yn) const {
    return static_cast<std::size_t>(
        (((x * ny() + y) * na() + a) * nx() + xn) * ny() + yn);
  }
  std::size_t cost_index(int x, int y, int a) const {
    return static_cast<std::size_t>((x * ny() + y) * na() + a);
  }

  double q(int x, int y, int a, int xn, int yn) const {
    return kernel[kernel_index(x, y, a, xn, yn)];
  }
  double dm_c(int x, int y, int a) const { return dm_cost[cost_index(x, y, a)]; }
  double im_r(int x, int y, int a) const { return im_cost[cost_index(x, y, a)]; }

  bool action_feasible(int x, int a) const;

  // q^X(.|x,y,a), the new-observation marginal of the kernel row.
  std::vector<double> kernel_x_marginal(int x, int y, int a) const;
  // q^Y(.|x,y,a), the new-hidden-state marginal of the kernel row.
  std::vector<double> kernel_y_marginal(int x, int y, int a) const;

  double max_dm_cost() const;  // c-bar
};

struct ValidationIssue {
  std::string where;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Structural and numerical checks over a model instance.  Violations are
// returned as data, one entry per offending row or field.
ValidationReport validate_model(const PomdpModel& model);

// Probability table over X x Y, stored x-major.
struct DistributionXY {
  int nx = 0;
  int ny = 0;
  std::vector<double> p;

  DistributionXY() = default;
  DistributionXY(int nx_, int ny_)
      : nx(nx_), ny(ny_), p(static_cast<std::size_t>(nx_) * ny_, 0.0) {}

  double& at(int x, int y) { return p[static_cast<std::size_t>(x) * ny + y]; }
  double at(int x, int y) const { return p[static_cast<std::size_t>(x) * ny + y]; }

  double mass() const;
  std::vector<double> x_marginal() const;
  std::vector<double> y_marginal() const;
};

// Kernel row (x,y,a) of the model as a DistributionXY over (x',y').
DistributionXY kernel_row_distribution(const PomdpModel& model, int x, int y, int a);

}  // namespace dimg
