#include "dimg/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dimg {

namespace {
constexpr double kMassTol = 1e-9;

std::string row_name(const PomdpModel& m, int x, int y, int a) {
  std::ostringstream os;
  os << "kernel[x=" << m.observable_states[x].label
     << ",y=" << m.hidden_states[y].label << ",a=" << m.actions[a].label << "]";
  return os.str();
}
}  // namespace

double utility_eval(const UtilitySpec& u, double s) {
  if (!(s >= 0.0)) throw std::domain_error("utility_eval: s must be nonnegative");
  switch (u.family) {
    case UtilitySpec::Family::identity:
      return s;
    case UtilitySpec::Family::exponential:
      if (u.parameter == 0.0)
        throw std::domain_error("utility_eval: exponential curvature must be nonzero");
      return std::expm1(u.parameter * s) / u.parameter;
    case UtilitySpec::Family::power:
      if (!(u.parameter > 0.0))
        throw std::domain_error("utility_eval: power exponent must be positive");
      return std::pow(s, u.parameter);
  }
  throw std::domain_error("utility_eval: unknown family");
}

bool PomdpModel::action_feasible(int x, int a) const {
  if (x < 0 || x >= nx() || a < 0 || a >= na()) return false;
  const auto& d = feasible_actions[static_cast<std::size_t>(x)];
  return std::binary_search(d.begin(), d.end(), a);
}

std::vector<double> PomdpModel::kernel_x_marginal(int x, int y, int a) const {
  if (!action_feasible(x, a))
    throw std::domain_error("kernel_x_marginal: action infeasible at this state");
  std::vector<double> out(static_cast<std::size_t>(nx()), 0.0);
  for (int xn = 0; xn < nx(); ++xn)
    for (int yn = 0; yn < ny(); ++yn) out[static_cast<std::size_t>(xn)] += q(x, y, a, xn, yn);
  return out;
}

std::vector<double> PomdpModel::kernel_y_marginal(int x, int y, int a) const {
  if (!action_feasible(x, a))
    throw std::domain_error("kernel_y_marginal: action infeasible at this state");
  std::vector<double> out(static_cast<std::size_t>(ny()), 0.0);
  for (int xn = 0; xn < nx(); ++xn)
    for (int yn = 0; yn < ny(); ++yn) out[static_cast<std::size_t>(yn)] += q(x, y, a, xn, yn);
  return out;
}

double PomdpModel::max_dm_cost() const {
  double m = 0.0;
  for (double c : dm_cost) m = std::max(m, c);
  return m;
}

namespace {

void check_law(const std::vector<double>& law, const std::string& name,
               std::size_t expected_size, ValidationReport& rep) {
  if (law.size() != expected_size) {
    rep.issues.push_back({name, "wrong length"});
    return;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    if (!(law[i] >= 0.0) || law[i] > 1.0 + 1e-12)
      rep.issues.push_back({name + "[" + std::to_string(i) + "]", "entry outside [0,1]"});
    total += law[i];
  }
  if (std::abs(total - 1.0) > kMassTol)
    rep.issues.push_back({name, "mass " + std::to_string(total) + " != 1"});
}

void check_labels(const std::vector<LabeledPoint>& pts, const std::string& name,
                  ValidationReport& rep) {
  if (pts.empty()) rep.issues.push_back({name, "space is empty"});
  std::set<std::string> seen;
  for (const auto& p : pts)
    if (!seen.insert(p.label).second)
      rep.issues.push_back({name, "duplicate label '" + p.label + "'"});
}

}  // namespace

ValidationReport validate_model(const PomdpModel& m) {
  ValidationReport rep;
  check_labels(m.observable_states, "observable_states", rep);
  check_labels(m.hidden_states, "hidden_states", rep);
  check_labels(m.actions, "actions", rep);
  if (!rep.ok()) return rep;

  const std::size_t n_rows = static_cast<std::size_t>(m.nx()) * m.ny() * m.na();
  if (m.kernel.size() != n_rows * static_cast<std::size_t>(m.nx()) * m.ny()) {
    rep.issues.push_back({"kernel", "wrong table size"});
    return rep;
  }
  if (m.dm_cost.size() != n_rows) rep.issues.push_back({"dm_cost", "wrong table size"});
  if (m.im_cost.size() != n_rows) rep.issues.push_back({"im_cost", "wrong table size"});

  if (m.feasible_actions.size() != static_cast<std::size_t>(m.nx())) {
    rep.issues.push_back({"feasible_actions", "one entry per observable state required"});
  } else {
    for (int x = 0; x < m.nx(); ++x) {
      const auto& d = m.feasible_actions[static_cast<std::size_t>(x)];
      if (d.empty())
        rep.issues.push_back({"feasible_actions[" + m.observable_states[x].label + "]",
                              "empty feasible set"});
      for (int a : d)
        if (a < 0 || a >= m.na())
          rep.issues.push_back({"feasible_actions[" + m.observable_states[x].label + "]",
                                "action index out of range"});
      if (!std::is_sorted(d.begin(), d.end()) ||
          std::adjacent_find(d.begin(), d.end()) != d.end())
        rep.issues.push_back({"feasible_actions[" + m.observable_states[x].label + "]",
                              "indices must be sorted and unique"});
    }
  }

  for (int x = 0; x < m.nx(); ++x)
    for (int y = 0; y < m.ny(); ++y)
      for (int a = 0; a < m.na(); ++a) {
        double row_sum = 0.0;
        bool bad_entry = false;
        for (int xn = 0; xn < m.nx(); ++xn)
          for (int yn = 0; yn < m.ny(); ++yn) {
            double v = m.q(x, y, a, xn, yn);
            if (!(v >= 0.0) || v > 1.0 + 1e-12) bad_entry = true;
            row_sum += v;
          }
        if (bad_entry)
          rep.issues.push_back({row_name(m, x, y, a), "entry outside [0,1]"});
        if (std::abs(row_sum - 1.0) > kMassTol)
          rep.issues.push_back({row_name(m, x, y, a),
                                "row sums to " + std::to_string(row_sum)});
        double c = m.dm_c(x, y, a);
        double r = m.im_r(x, y, a);
        if (!std::isfinite(c) || c < 0.0)
          rep.issues.push_back({"dm_cost" + row_name(m, x, y, a).substr(6),
                                "cost must be finite and nonnegative"});
        if (!std::isfinite(r) || r < 0.0)
          rep.issues.push_back({"im_cost" + row_name(m, x, y, a).substr(6),
                                "cost must be finite and nonnegative"});
      }

  check_law(m.initial_hidden_law, "initial_hidden_law", static_cast<std::size_t>(m.ny()), rep);
  if (m.initial_observable_law)
    check_law(*m.initial_observable_law, "initial_observable_law",
              static_cast<std::size_t>(m.nx()), rep);

  if (!(m.dm_discount > 0.0 && m.dm_discount < 1.0))
    rep.issues.push_back({"dm_discount", "beta must lie in (0,1)"});
  if (!(m.im_discount > 0.0 && m.im_discount <= 1.0))
    rep.issues.push_back({"im_discount", "alpha must lie in (0,1]"});
  if (m.horizon < 1) rep.issues.push_back({"horizon", "must be a positive integer"});

  switch (m.utility.family) {
    case UtilitySpec::Family::identity:
      break;
    case UtilitySpec::Family::exponential:
      if (m.utility.parameter == 0.0)
        rep.issues.push_back({"utility", "exponential curvature must be nonzero"});
      break;
    case UtilitySpec::Family::power:
      if (!(m.utility.parameter > 0.0))
        rep.issues.push_back({"utility", "power exponent must be positive"});
      break;
  }
  return rep;
}

double DistributionXY::mass() const {
  double total = 0.0;
  for (double v : p) total += v;
  return total;
}

std::vector<double> DistributionXY::x_marginal() const {
  std::vector<double> out(static_cast<std::size_t>(nx), 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) out[static_cast<std::size_t>(x)] += at(x, y);
  return out;
}

std::vector<double> DistributionXY::y_marginal() const {
  std::vector<double> out(static_cast<std::size_t>(ny), 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) out[static_cast<std::size_t>(y)] += at(x, y);
  return out;
}

DistributionXY kernel_row_distribution(const PomdpModel& model, int x, int y, int a) {
  DistributionXY d(model.nx(), model.ny());
  for (int xn = 0; xn < model.nx(); ++xn)
    for (int yn = 0; yn < model.ny(); ++yn) d.at(xn, yn) = model.q(x, y, a, xn, yn);
  return d;
}

}  // namespace dimg
