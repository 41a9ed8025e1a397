#pragma once

#include <optional>
#include <vector>

namespace dimg {

// Two-stage linear-Gaussian instance: x' = h y + w, y' = bt y + bh a + e with
// standard normal noises and quadratic costs c = y^2 + a^2 + ch a y,
// r = y^2 + a^2 + rh a y.  The design happens at stage 1, conditioned on the
// realized (a0, y0, x1).
struct GaussianScenario {
  double h = 1.0;
  double b_tilde = 1.0;  // bt
  double b_hat = 1.0;    // bh
  double c_hat = 1.0;    // ch > 0
  double r_hat = 1.0;    // rh > 0
  double dm_discount = 0.95;
  double im_discount = 1.0;
  double a0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
};

// Leverage of the observation on the stage-1 control: ch bt h / (2 (h^2 + 1)).
double iota(double c_hat, double b_tilde, double h);

// Closed-form optimal stage-1 action: -(ch bh / 2) a0 - iota * x1.
double dm_stage1_policy(const GaussianScenario& sc);

struct GaussianStage1Design {
  bool has_leverage = false;  // false when iota == 0: any mean design ties
  double mean = 0.0;          // m1*
  double std_dev = 0.0;       // v1*
  double correlation = 0.0;   // r1* in {-1, +1}
  double objective = 0.0;     // stage objective at the optimum
};

// Closed-form optimal Gaussian design of the stage-1 observation law.
GaussianStage1Design im_stage1_design(const GaussianScenario& sc);

// v1* / |m1*| = rh / |rh (bt y0 + bh a0) - ch bh a0|.
double coefficient_of_variation(const GaussianScenario& sc);

// --- numeric oracles ---------------------------------------------------

// Nodes and weights for integrating f against exp(-t^2) on the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int n);

// Expected two-stage DM cost as a function of the stage-1 action, by
// Gauss-Hermite quadrature over (y0, y1) with the observation likelihood as
// weight.  Proportional to the objective the closed form minimizes.
double stage1_expected_cost(const GaussianScenario& sc, double a1, int nodes = 64);

// argmin of stage1_expected_cost by golden-section search.
double stage1_policy_oracle(const GaussianScenario& sc, int nodes = 64);

// Stage objective of a candidate design (iota^2 (m^2 + v^2) + K iota m
// + rh iota r v with K = ch bh a0 - rh (bt y0 + bh a0)).
double stage1_design_objective(const GaussianScenario& sc, double mean, double std_dev,
                               double correlation);

// Grid minimization of the stage objective refined to about 1e-4.
GaussianStage1Design stage1_design_oracle(const GaussianScenario& sc);

// CV along a grid of rh values (other parameters fixed).
std::vector<std::pair<double, double>> cv_profile(GaussianScenario sc,
                                                  const std::vector<double>& r_hat_grid);

}  // namespace dimg
