#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lmmsel/dataset.hpp"

namespace lmmsel {

/// Hyperparameters: Gamma(d1, d2) prior on the random-effect precision,
/// N(d3, (d4 I)^{-1}) prior on the shared fixed effects, and per-group
/// Bernoulli(pi_g) priors on the selection indicators (pi for the control
/// group is pinned to 0).
struct HyperParams {
  double d1 = 1e-3;
  double d2 = 1e-3;
  Eigen::VectorXd d3;  // length p_w
  double d4 = 0.01;
  Eigen::VectorXd pi;  // length G, last entry exactly 0

  void validate(int p_w, int n_groups) const;
};

/// Defaults: d1 = d2 = 0.001, pi = 0.5 for treatments and 0 for control,
/// d3 = pooled OLS fit of the control group's responses on W, d4 = 0.01.
HyperParams default_hyperparams(const DesignSet& designs);

/// One full Gibbs state. beta[g] holds only the active coefficients, in
/// X-column order; the control group's gamma row is all zero and its beta
/// is empty.
struct ChainState {
  std::vector<std::vector<int>> gamma;   // G x p_x, 0/1
  std::vector<Eigen::VectorXd> beta;     // per group, length = #active
  Eigen::VectorXd alpha;                 // p_w
  double sigma2 = 1.0;
  Eigen::MatrixXd b;                     // n x p_z, row i = b_i
  double lambda_d = 1.0;

  void validate(const DesignSet& designs) const;
};

/// gamma = 0, beta empty, alpha = d3, b = 0, sigma2 = pooled response
/// variance, lambda_d = d1/d2.
ChainState initial_state(const DesignSet& designs, const HyperParams& hp);

std::vector<int> active_columns(const std::vector<int>& gamma_g);

/// Per-group, per-active-set accumulations behind the fractional prior:
///   A = sum (1/n_i)   X_i(act)' X_i(act)      (prior precision / sigma2)
///   B = sum (1+1/n_i) X_i(act)' X_i(act)      (conditional precision / sigma2)
///   u_a = sum (1/n_i)   X_i(act)' phi_i
///   u_b = sum (1+1/n_i) X_i(act)' phi_i
/// with phi_i = y_i - W_i alpha - Z_i b_i.
struct FractionalPriorStats {
  Eigen::MatrixXd A, B;
  Eigen::VectorXd u_a, u_b;
};

FractionalPriorStats fractional_stats(int g, const std::vector<int>& active,
                                      const ChainState& state, const DesignSet& designs);

struct NormalParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

struct GammaParams {
  double shape = 0.0;
  double rate = 0.0;
};

/// Fractional-prior mean and precision for group g's active coefficients:
/// mean solves A bhat = u_a, precision = A / sigma2.
NormalParams fractional_prior_moments(int g, const std::vector<int>& gamma_g,
                                      const ChainState& state, const DesignSet& designs);

/// Log of the full joint posterior density, up to an additive constant that
/// does not depend on the state. Returns -inf when an indicator is active
/// under a zero prior inclusion probability.
double joint_log_density(const ChainState& state, const DesignSet& designs,
                         const HyperParams& hp);

/// Flat key-value serialization (keys: d1, d2, d3, d4, pi). Keys absent
/// from the file keep their values from `base`.
HyperParams load_hyperparams(const std::string& path, HyperParams base = {});
void save_hyperparams(const HyperParams& hp, const std::string& path);

}  // namespace lmmsel
