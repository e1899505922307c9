#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lmmsel/dataset.hpp"

namespace lmmsel {

struct SimGroup {
  std::string label;
  int n_subjects = 0;
  Eigen::VectorXd beta;  // deviation per X column; all zero for the control
};

/// Synthetic-data specification: shared fixed effects over the W basis,
/// per-group deviations over the X basis, Gaussian random effects of
/// variance lambda_inv over the Z basis, and i.i.d. noise of variance
/// sigma2 at each listed raw time.
struct SimSpec {
  Eigen::VectorXd alpha;
  double sigma2 = 5.06;
  double lambda_inv = 1.0;
  std::vector<SimGroup> groups;  // control last
  std::vector<double> times;     // raw units
  DesignConfig design{};
  /// Optional per-time retention probabilities (first entry ignored; every
  /// subject keeps its first measurement). Empty means no drop-out.
  std::vector<double> retention;
  std::uint64_t seed = 1;

  void validate() const;
};

/// The simulation design used throughout: 297 control subjects (label 99)
/// plus five 36-subject treatment groups with slope offsets
/// {-2, -0.5, 0, 0.5, 2}, intercept/slope (45.49, -5.75), noise variance
/// 5.06, unit random-effect variance, 15 bimonthly measurement days
/// rescaled by (t - 365)/365.
SimSpec paper_sim_spec(std::uint64_t seed = 1);

/// Deterministic per (seed, subject index); subjects use independent
/// substreams so generation order never matters.
Dataset simulate_dataset(const SimSpec& spec);

}  // namespace lmmsel
