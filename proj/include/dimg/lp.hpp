#pragma once

#include <string>
#include <vector>

#include "dimg/model.hpp"

namespace dimg {

// Dense linear program in equality form:
//   minimize objective . v   subject to  eq_rows v = eq_rhs,  lower <= v <= upper.
// Upper bounds may be +infinity; lower bounds must be finite.  Stage design
// problems are encoded with variable tags p(x,y) for distribution entries,
// abs(x,y) for the absolute-value auxiliaries and slk(...) for slacks.
struct StageLinearProgram {
  std::vector<double> objective;
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> names;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(eq_rows.size()); }

  int add_variable(std::string name, double lo, double hi, double cost);
  void add_row(std::vector<double> coeffs, double rhs);
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
  LpStatus status = LpStatus::optimal;
  double value = 0.0;
  std::vector<double> point;
};

// Two-phase bounded-variable primal simplex with Bland's anti-cycling rule.
// Optimal points satisfy the constraints within 1e-8 on the data scales used
// here; infeasible and unbounded problems are reported as such.
LpSolution lp_solve(const StageLinearProgram& lp);

// Sum of |p - q| over cells (the L1 form; total variation distance is half).
double tv_l1_distance(const DistributionXY& a, const DistributionXY& b);

// Plain-text dump of the program for failure triage.
std::string lp_debug_dump(const StageLinearProgram& lp);

}  // namespace dimg
