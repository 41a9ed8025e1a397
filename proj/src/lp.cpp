#include "dimg/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dimg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDualTol = 1e-9;    // reduced-cost threshold for entering
constexpr double kPivotTol = 1e-9;   // minimum usable pivot magnitude
constexpr double kFeasTol = 1e-8;    // phase-1 residual accepted as feasible
constexpr int kMaxIterations = 50000;
}  // namespace

int StageLinearProgram::add_variable(std::string name, double lo, double hi, double cost) {
  names.push_back(std::move(name));
  lower.push_back(lo);
  upper.push_back(hi);
  objective.push_back(cost);
  for (auto& row : eq_rows) row.push_back(0.0);
  return num_vars() - 1;
}

void StageLinearProgram::add_row(std::vector<double> coeffs, double rhs) {
  coeffs.resize(static_cast<std::size_t>(num_vars()), 0.0);
  eq_rows.push_back(std::move(coeffs));
  eq_rhs.push_back(rhs);
}

namespace {

/*
  Bounded-variable simplex over the shifted program

      min c.t   s.t.  A t = b',  0 <= t_j <= U_j  (U_j possibly infinite),

  where t = v - lower and b' = b - A.lower.  One artificial column per row
  provides the phase-1 starting basis; after phase 1 the artificials are
  pinned to zero (upper bound 0) so redundant rows may keep one basic at
  level zero without harm.

  The tableau holds B^-1 A alongside B^-1 b'.  Basic values are recomputed
  from those every iteration (cheap at these sizes), so no drift accumulates:

      xb_i = (B^-1 b')_i - sum over nonbasic-at-upper j of tab[i][j] * U_j.
*/
class BoundedSimplex {
 public:
  explicit BoundedSimplex(const StageLinearProgram& lp) : lp_(lp) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    total_ = n_ + m_;
    range_.resize(static_cast<std::size_t>(total_));
    for (int j = 0; j < n_; ++j) {
      if (!std::isfinite(lp.lower[static_cast<std::size_t>(j)]))
        throw std::invalid_argument("lp_solve: lower bounds must be finite");
      double r = lp.upper[static_cast<std::size_t>(j)] - lp.lower[static_cast<std::size_t>(j)];
      if (r < -1e-12) throw std::invalid_argument("lp_solve: lower bound above upper bound");
      range_[static_cast<std::size_t>(j)] = std::max(r, 0.0);
    }
    for (int j = n_; j < total_; ++j) range_[static_cast<std::size_t>(j)] = kInf;

    tab_.assign(static_cast<std::size_t>(m_),
                std::vector<double>(static_cast<std::size_t>(total_), 0.0));
    binv_b_.resize(static_cast<std::size_t>(m_));
    basis_.resize(static_cast<std::size_t>(m_));
    at_upper_.assign(static_cast<std::size_t>(total_), false);

    for (int i = 0; i < m_; ++i) {
      double b = lp.eq_rhs[static_cast<std::size_t>(i)];
      for (int j = 0; j < n_; ++j)
        b -= lp.eq_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
             lp.lower[static_cast<std::size_t>(j)];
      const double sign = b < 0.0 ? -1.0 : 1.0;
      for (int j = 0; j < n_; ++j)
        tab_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            sign * lp.eq_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      tab_[static_cast<std::size_t>(i)][static_cast<std::size_t>(n_ + i)] = 1.0;
      binv_b_[static_cast<std::size_t>(i)] = sign * b;
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    }
  }

  LpSolution run() {
    LpSolution sol;
    if (m_ > 0) {
      std::vector<double> phase1_cost(static_cast<std::size_t>(total_), 0.0);
      for (int j = n_; j < total_; ++j) phase1_cost[static_cast<std::size_t>(j)] = 1.0;
      if (!iterate(phase1_cost))
        throw std::runtime_error("lp_solve: phase 1 reported unbounded");
      if (phase_objective(phase1_cost) > kFeasTol) {
        sol.status = LpStatus::infeasible;
        return sol;
      }
      for (int j = n_; j < total_; ++j) range_[static_cast<std::size_t>(j)] = 0.0;
    }

    std::vector<double> cost(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < n_; ++j) cost[static_cast<std::size_t>(j)] = lp_.objective[static_cast<std::size_t>(j)];
    if (!iterate(cost)) {
      sol.status = LpStatus::unbounded;
      return sol;
    }

    sol.status = LpStatus::optimal;
    sol.point.assign(static_cast<std::size_t>(n_), 0.0);
    std::vector<double> xb = basic_values();
    std::vector<double> t(static_cast<std::size_t>(total_), 0.0);
    for (int j = 0; j < total_; ++j)
      if (at_upper_[static_cast<std::size_t>(j)]) t[static_cast<std::size_t>(j)] = range_[static_cast<std::size_t>(j)];
    for (int i = 0; i < m_; ++i)
      t[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = xb[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_; ++j) {
      double v = lp_.lower[static_cast<std::size_t>(j)] + t[static_cast<std::size_t>(j)];
      v = std::min(std::max(v, lp_.lower[static_cast<std::size_t>(j)]), lp_.upper[static_cast<std::size_t>(j)]);
      sol.point[static_cast<std::size_t>(j)] = v;
      sol.value += lp_.objective[static_cast<std::size_t>(j)] * v;
    }
    return sol;
  }

 private:
  bool is_basic(int j) const {
    for (int i = 0; i < m_; ++i)
      if (basis_[static_cast<std::size_t>(i)] == j) return true;
    return false;
  }

  std::vector<double> basic_values() const {
    std::vector<double> xb = binv_b_;
    for (int j = 0; j < total_; ++j) {
      if (!at_upper_[static_cast<std::size_t>(j)]) continue;
      const double uj = range_[static_cast<std::size_t>(j)];
      if (uj == 0.0) continue;
      for (int i = 0; i < m_; ++i)
        xb[static_cast<std::size_t>(i)] -= tab_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * uj;
    }
    return xb;
  }

  double phase_objective(const std::vector<double>& cost) const {
    std::vector<double> xb = basic_values();
    double v = 0.0;
    for (int i = 0; i < m_; ++i)
      v += cost[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] * xb[static_cast<std::size_t>(i)];
    for (int j = 0; j < total_; ++j)
      if (at_upper_[static_cast<std::size_t>(j)] && !is_basic(j))
        v += cost[static_cast<std::size_t>(j)] * range_[static_cast<std::size_t>(j)];
    return v;
  }

  // Returns false on an unbounded direction.
  bool iterate(const std::vector<double>& cost) {
    if (m_ == 0) {
      // Pure bound problem: each variable sits at whichever bound minimizes.
      for (int j = 0; j < n_; ++j) {
        if (cost[static_cast<std::size_t>(j)] < -kDualTol) {
          if (!std::isfinite(range_[static_cast<std::size_t>(j)])) return false;
          at_upper_[static_cast<std::size_t>(j)] = true;
        }
      }
      return true;
    }
    for (int iter = 0; iter < kMaxIterations; ++iter) {
      std::vector<double> xb = basic_values();
      std::vector<double> y(static_cast<std::size_t>(m_));
      for (int i = 0; i < m_; ++i)
        y[static_cast<std::size_t>(i)] = cost[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];

      // Entering: lowest-index eligible column (Bland).
      int entering = -1;
      int dir = 0;
      for (int j = 0; j < total_ && entering < 0; ++j) {
        if (range_[static_cast<std::size_t>(j)] == 0.0) continue;  // pinned
        if (is_basic(j)) continue;
        double d = cost[static_cast<std::size_t>(j)];
        for (int i = 0; i < m_; ++i)
          d -= y[static_cast<std::size_t>(i)] * tab_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (!at_upper_[static_cast<std::size_t>(j)] && d < -kDualTol) {
          entering = j;
          dir = +1;
        } else if (at_upper_[static_cast<std::size_t>(j)] && d > kDualTol) {
          entering = j;
          dir = -1;
        }
      }
      if (entering < 0) return true;  // optimal for this phase

      // Ratio test: how far the entering variable can move before a basic
      // variable hits a bound.  Ties pick the smallest basic index (Bland).
      double best = range_[static_cast<std::size_t>(entering)];  // own opposite bound
      int leave_row = -1;
      bool leave_to_upper = false;
      for (int i = 0; i < m_; ++i) {
        const double alpha = tab_[static_cast<std::size_t>(i)][static_cast<std::size_t>(entering)] * dir;
        double ratio;
        bool to_upper;
        if (alpha > kPivotTol) {  // basic variable decreases toward 0
          ratio = std::max(xb[static_cast<std::size_t>(i)], 0.0) / alpha;
          to_upper = false;
        } else if (alpha < -kPivotTol) {  // basic variable increases toward its range
          const double ub = range_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
          if (!std::isfinite(ub)) continue;
          ratio = std::max(ub - xb[static_cast<std::size_t>(i)], 0.0) / (-alpha);
          to_upper = true;
        } else {
          continue;
        }
        if (ratio < best - 1e-12) {
          best = ratio;
          leave_row = i;
          leave_to_upper = to_upper;
        } else if (ratio <= best + 1e-12 && leave_row >= 0 &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave_row)]) {
          leave_row = i;
          leave_to_upper = to_upper;
        }
      }

      if (!std::isfinite(best)) return false;  // unbounded ray

      if (leave_row < 0) {
        // Bound flip: the entering variable crosses to its other bound.
        at_upper_[static_cast<std::size_t>(entering)] =
            !at_upper_[static_cast<std::size_t>(entering)];
        continue;
      }
      pivot(leave_row, entering, leave_to_upper);
    }
    throw std::runtime_error("lp_solve: iteration cap hit (cycling?)");
  }

  void pivot(int row, int entering, bool leaving_to_upper) {
    const int leaving = basis_[static_cast<std::size_t>(row)];
    at_upper_[static_cast<std::size_t>(leaving)] = leaving_to_upper;
    basis_[static_cast<std::size_t>(row)] = entering;
    at_upper_[static_cast<std::size_t>(entering)] = false;

    auto& prow = tab_[static_cast<std::size_t>(row)];
    const double piv = prow[static_cast<std::size_t>(entering)];
    for (auto& v : prow) v /= piv;
    binv_b_[static_cast<std::size_t>(row)] /= piv;
    prow[static_cast<std::size_t>(entering)] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      auto& irow = tab_[static_cast<std::size_t>(i)];
      const double f = irow[static_cast<std::size_t>(entering)];
      if (f == 0.0) continue;
      for (int j = 0; j < total_; ++j)
        irow[static_cast<std::size_t>(j)] -= f * prow[static_cast<std::size_t>(j)];
      irow[static_cast<std::size_t>(entering)] = 0.0;
      binv_b_[static_cast<std::size_t>(i)] -= f * binv_b_[static_cast<std::size_t>(row)];
    }
  }

  const StageLinearProgram& lp_;
  int n_ = 0, m_ = 0, total_ = 0;
  std::vector<double> range_;  // upper - lower in shifted coordinates
  std::vector<std::vector<double>> tab_;
  std::vector<double> binv_b_;
  std::vector<int> basis_;
  std::vector<bool> at_upper_;
};

}  // namespace

LpSolution lp_solve(const StageLinearProgram& lp) {
  for (const auto& row : lp.eq_rows)
    if (row.size() != static_cast<std::size_t>(lp.num_vars()))
      throw std::invalid_argument("lp_solve: inconsistent row width");
  if (lp.eq_rhs.size() != static_cast<std::size_t>(lp.num_rows()) ||
      lp.lower.size() != static_cast<std::size_t>(lp.num_vars()) ||
      lp.upper.size() != static_cast<std::size_t>(lp.num_vars()))
    throw std::invalid_argument("lp_solve: inconsistent dimensions");
  BoundedSimplex simplex(lp);
  return simplex.run();
}

double tv_l1_distance(const DistributionXY& a, const DistributionXY& b) {
  if (a.nx != b.nx || a.ny != b.ny)
    throw std::domain_error("tv_l1_distance: support shapes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < a.p.size(); ++i) total += std::abs(a.p[i] - b.p[i]);
  return total;
}

std::string lp_debug_dump(const StageLinearProgram& lp) {
  std::ostringstream os;
  os << "minimize:";
  for (int j = 0; j < lp.num_vars(); ++j)
    if (lp.objective[static_cast<std::size_t>(j)] != 0.0)
      os << " " << lp.objective[static_cast<std::size_t>(j)] << "*" << lp.names[static_cast<std::size_t>(j)];
  os << "\n";
  for (int i = 0; i < lp.num_rows(); ++i) {
    os << "row[" << i << "]:";
    for (int j = 0; j < lp.num_vars(); ++j) {
      double v = lp.eq_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (v != 0.0) os << " " << v << "*" << lp.names[static_cast<std::size_t>(j)];
    }
    os << " = " << lp.eq_rhs[static_cast<std::size_t>(i)] << "\n";
  }
  for (int j = 0; j < lp.num_vars(); ++j)
    os << lp.names[static_cast<std::size_t>(j)] << " in [" << lp.lower[static_cast<std::size_t>(j)]
       << ", " << lp.upper[static_cast<std::size_t>(j)] << "]\n";
  return os.str();
}

}  // namespace dimg
