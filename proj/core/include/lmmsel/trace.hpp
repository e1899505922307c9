#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmmsel/dataset.hpp"

namespace lmmsel {

/// Retained MCMC draws, column-major. Fixed column layout:
/// gamma_g_j (group-major), beta_g_j (0.0 when inactive), alpha_k,
/// sigma2, lambda_D, then optional b_i_m columns when b was recorded.
/// Group indices in names are 1-based with the control group last.
struct ChainTrace {
  std::vector<std::string> group_labels;
  int p_w = 0, p_x = 0, p_z = 0;
  std::vector<int> w_degrees, x_degrees, z_degrees;
  TimeRescale rescale{};

  std::uint64_t seed = 0;
  long iterations = 0;  // total Gibbs steps executed
  long burn_in = 0;
  bool converged = false;
  std::string termination;  // "fwsr-converged" or "max-iters"

  std::vector<std::string> column_names;
  std::vector<std::vector<double>> columns;

  int n_groups() const { return static_cast<int>(group_labels.size()); }
  long n_retained() const {
    return columns.empty() ? 0 : static_cast<long>(columns[0].size());
  }

  int gamma_col(int g, int j) const { return g * p_x + j; }
  int beta_col(int g, int j) const { return n_groups() * p_x + g * p_x + j; }
  int alpha_col(int k) const { return 2 * n_groups() * p_x + k; }
  int sigma2_col() const { return 2 * n_groups() * p_x + p_w; }
  int lambda_col() const { return sigma2_col() + 1; }
  int n_core_columns() const { return lambda_col() + 1; }
};

}  // namespace lmmsel
