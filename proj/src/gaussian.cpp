#include "dimg/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace dimg {

double iota(double c_hat, double b_tilde, double h) {
  return c_hat * b_tilde * h / (2.0 * (h * h + 1.0));
}

double dm_stage1_policy(const GaussianScenario& sc) {
  return -(sc.c_hat * sc.b_hat / 2.0) * sc.a0 - iota(sc.c_hat, sc.b_tilde, sc.h) * sc.x1;
}

GaussianStage1Design im_stage1_design(const GaussianScenario& sc) {
  GaussianStage1Design d;
  const double i = iota(sc.c_hat, sc.b_tilde, sc.h);
  if (i == 0.0) return d;  // no leverage: the mean term drops out entirely
  d.has_leverage = true;
  const double k = sc.c_hat * sc.b_hat * sc.a0 - sc.r_hat * (sc.b_tilde * sc.y0 + sc.b_hat * sc.a0);
  // The correlation term contributes rh * i * r * v; with v > 0 the optimal r
  // sits at whichever unit value makes it negative, and the v-part becomes
  // i^2 v^2 - |rh i| v.
  d.correlation = (sc.r_hat * i > 0.0) ? -1.0 : 1.0;
  d.std_dev = sc.r_hat / (2.0 * std::abs(i));
  d.mean = k / (-2.0 * i);
  d.objective = stage1_design_objective(sc, d.mean, d.std_dev, d.correlation);
  return d;
}

double coefficient_of_variation(const GaussianScenario& sc) {
  const double denom =
      std::abs(sc.r_hat * (sc.b_tilde * sc.y0 + sc.b_hat * sc.a0) -
               sc.c_hat * sc.b_hat * sc.a0);
  if (denom <= 1e-12)
    throw std::domain_error("coefficient_of_variation: optimal mean vanishes");
  return sc.r_hat / denom;
}

GaussHermiteRule gauss_hermite(int n) {
  // Orthonormal-recurrence Newton iteration; initial guesses follow the
  // standard Stroud-Secrest scheme.
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * rule.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * rule.nodes[1];
    else
      z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i) - 2];
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = z;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = rule.weights[static_cast<std::size_t>(i)];
  }
  // Nodes ascending for reproducible summation order.
  for (int i = 0; i < n / 2; ++i) {
    std::swap(rule.nodes[static_cast<std::size_t>(i)], rule.nodes[static_cast<std::size_t>(n - 1 - i)]);
    std::swap(rule.weights[static_cast<std::size_t>(i)], rule.weights[static_cast<std::size_t>(n - 1 - i)]);
  }
  return rule;
}

double stage1_expected_cost(const GaussianScenario& sc, double a1, int nodes) {
  const GaussHermiteRule rule = gauss_hermite(nodes);
  const double sqrt2 = std::sqrt(2.0);
  auto cost = [&](double y, double a) { return y * y + a * a + sc.c_hat * a * y; };
  double total = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double y0 = sqrt2 * rule.nodes[static_cast<std::size_t>(i)];
    const double like =
        std::exp(-0.5 * (sc.x1 - sc.h * y0) * (sc.x1 - sc.h * y0));
    if (like == 0.0) continue;
    for (int j = 0; j < nodes; ++j) {
      const double y1 =
          sc.b_tilde * y0 + sc.b_hat * sc.a0 + sqrt2 * rule.nodes[static_cast<std::size_t>(j)];
      const double w = rule.weights[static_cast<std::size_t>(i)] *
                       rule.weights[static_cast<std::size_t>(j)];
      total += w * like * (cost(y0, sc.a0) + sc.dm_discount * cost(y1, a1));
    }
  }
  return total;  // common positive factors dropped; the argmin is unaffected
}

double stage1_policy_oracle(const GaussianScenario& sc, int nodes) {
  const double guess_scale =
      std::abs(sc.c_hat * sc.b_hat * sc.a0 / 2.0) +
      std::abs(iota(sc.c_hat, sc.b_tilde, sc.h) * sc.x1) + 5.0;
  double lo = -guess_scale, hi = guess_scale;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = stage1_expected_cost(sc, x1, nodes);
  double f2 = stage1_expected_cost(sc, x2, nodes);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = stage1_expected_cost(sc, x1, nodes);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = stage1_expected_cost(sc, x2, nodes);
    }
  }
  return (lo + hi) / 2.0;
}

double stage1_design_objective(const GaussianScenario& sc, double mean, double std_dev,
                               double correlation) {
  const double i = iota(sc.c_hat, sc.b_tilde, sc.h);
  const double k = sc.c_hat * sc.b_hat * sc.a0 - sc.r_hat * (sc.b_tilde * sc.y0 + sc.b_hat * sc.a0);
  return i * i * (mean * mean + std_dev * std_dev) + k * i * mean +
         sc.r_hat * i * correlation * std_dev;
}

GaussianStage1Design stage1_design_oracle(const GaussianScenario& sc) {
  GaussianStage1Design best;
  const double i = iota(sc.c_hat, sc.b_tilde, sc.h);
  if (i == 0.0) return best;
  best.has_leverage = true;
  // The correlation enters linearly; with v > 0 only the sign-optimal unit
  // value can win, so the grid runs over (mean, std_dev).
  const double r = (sc.r_hat * i > 0.0) ? -1.0 : 1.0;
  const double k = sc.c_hat * sc.b_hat * sc.a0 - sc.r_hat * (sc.b_tilde * sc.y0 + sc.b_hat * sc.a0);
  const double m_scale = std::abs(k / (2.0 * i)) + 2.0;
  const double v_scale = sc.r_hat / (2.0 * std::abs(i)) * 2.0 + 2.0;

  double m_lo = -m_scale, m_hi = m_scale;
  double v_lo = 1e-12, v_hi = v_scale;
  double best_m = 0.0, best_v = v_lo;
  for (int pass = 0; pass < 6; ++pass) {
    const int steps = 80;
    double best_val = 0.0;
    bool first = true;
    for (int im = 0; im <= steps; ++im)
      for (int iv = 0; iv <= steps; ++iv) {
        const double m = m_lo + (m_hi - m_lo) * im / steps;
        const double v = v_lo + (v_hi - v_lo) * iv / steps;
        const double val = stage1_design_objective(sc, m, v, r);
        if (first || val < best_val) {
          first = false;
          best_val = val;
          best_m = m;
          best_v = v;
        }
      }
    const double m_step = (m_hi - m_lo) / steps;
    const double v_step = (v_hi - v_lo) / steps;
    m_lo = best_m - m_step;
    m_hi = best_m + m_step;
    v_lo = std::max(1e-12, best_v - v_step);
    v_hi = best_v + v_step;
  }
  best.mean = best_m;
  best.std_dev = best_v;
  best.correlation = r;
  best.objective = stage1_design_objective(sc, best_m, best_v, r);
  return best;
}

std::vector<std::pair<double, double>> cv_profile(GaussianScenario sc,
                                                  const std::vector<double>& r_hat_grid) {
  std::vector<std::pair<double, double>> out;
  for (double r : r_hat_grid) {
    sc.r_hat = r;
    out.emplace_back(r, coefficient_of_variation(sc));
  }
  return out;
}

}  // namespace dimg
