#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "lmmsel/dataset.hpp"
#include "lmmsel/trace.hpp"

namespace lmmsel {

/// Relative standard deviation fixed-width stopping rule settings.
struct FwsrConfig {
  double epsilon = 0.124;
  double delta = 0.05;

  void validate() const;
};

/// Effective-sample-size equivalent of the stopping rule: 4 z_{delta/2}^2 / epsilon^2.
/// (0.124, 0.05) gives about 999.3, i.e. the common "ESS of 1000" setting.
double ess_target(const FwsrConfig& cfg);

/// Non-overlapping batch-means estimate of the asymptotic variance,
/// batch size floor(sqrt(n)), computed over the first m*a points.
double batch_means_variance(std::span<const double> x);

/// ESS = n * s^2 / sigma_hat^2. A zero-variance (constant) column is
/// defined to have ESS = n. Requires length >= 10.
double ess(std::span<const double> x);

/// Monte Carlo standard error of the mean: sqrt(batch-means variance / n).
double mcse_mean(std::span<const double> x);

/// True when the CLT confidence-interval width, plus the vanishing 1/n
/// term, drops below epsilon times the sample standard deviation --
/// equivalently when the ESS clears ess_target(cfg). Constant columns pass
/// once n >= ess_target. Sequences shorter than min_window never pass.
bool fwsr_pass(std::span<const double> x, const FwsrConfig& cfg, std::size_t min_window = 100);

struct ReportRow {
  std::string name;
  double mean = 0.0, mcse = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  bool has_inclusion = false;
  double incl_prob = 0.0, incl_mcse = 0.0;
  bool significant = false;
  int group = -1, xcol = -1;  // set for beta rows
};

/// Posterior summary. beta rows are model-averaged: draws where the
/// indicator was off count as exact zeros.
struct PosteriorReport {
  std::vector<ReportRow> rows;
  Eigen::VectorXd alpha_mean;
  Eigen::MatrixXd beta_mean;  // G x p_x, model-averaged
  std::vector<std::string> group_labels;
  std::vector<int> w_degrees, x_degrees;
  TimeRescale rescale{};
  double threshold = 0.8772;
  bool beta_model_averaged = true;
};

/// Means, batch-means MCSEs, equal-tailed 95% credible intervals, and
/// inclusion probabilities (the proportion of retained draws with the
/// indicator on). Requires a non-empty trace.
PosteriorReport summarize(const ChainTrace& trace);

/// Marks Pr(gamma=1|y) > threshold as significant (strict inequality) and
/// returns the per-(group, column) flags. Threshold must lie in [0, 1].
std::vector<std::vector<int>> classify(PosteriorReport& report, double threshold = 0.8772);

struct TrajectoryPoint {
  std::string group;
  double time = 0.0;   // raw units
  double value = 0.0;
};

/// Fitted mean trajectory per group over a raw-time grid, combining the
/// shared fixed effects with each group's model-averaged deviations.
std::vector<TrajectoryPoint> fitted_trajectories(const PosteriorReport& report,
                                                 const DesignConfig& config,
                                                 std::span<const double> raw_times);

}  // namespace lmmsel
