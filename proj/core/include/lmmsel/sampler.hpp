#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "lmmsel/diagnostics.hpp"
#include "lmmsel/model.hpp"
#include "lmmsel/rng.hpp"
#include "lmmsel/trace.hpp"

namespace lmmsel {

struct GibbsConfig {
  std::uint64_t seed = 1;
  long max_iters = 200000;
  long check_interval = 512;
  long min_iters = 1024;
  long burn_in = -1;  // negative: 10% of min_iters
  bool monitor_beta = true;
  bool record_b = false;
  FwsrConfig fwsr{};

  long effective_burn_in() const { return burn_in >= 0 ? burn_in : min_iters / 10; }
  void validate() const;
};

struct ChainProgress {
  long iter = 0;
  long retained = 0;
  double min_ess = 0.0;
  double target = 0.0;
  std::string worst;  // column with the smallest ESS
};
using ProgressFn = std::function<void(const ChainProgress&)>;

/// Log odds log q(gamma_{g,j}=1 | rest) - log q(gamma_{g,j}=0 | rest) for a
/// treatment group's site, with the coefficients integrated out. Uses the
/// empty-matrix convention (determinant ratio 1, quadratic forms 0) when a
/// candidate active set is empty. Returns +/-inf for pi_g of 1 or 0.
double gamma_site_log_odds(int g, int j, const ChainState& state,
                           const DesignSet& designs, const HyperParams& hp);

/// Normalized probability that the site is active given everything else.
double gamma_site_prob_one(int g, int j, const ChainState& state,
                           const DesignSet& designs, const HyperParams& hp);

/// Draws the site and resizes beta_g consistently (a newly activated column
/// gets a placeholder 0.0 until the next coefficient draw). Consumes no
/// randomness when pi_g is exactly 0 or 1.
int sample_gamma_site(int g, int j, ChainState& state, const DesignSet& designs,
                      const HyperParams& hp, Rng& rng);

/// Full conditional of group g's active coefficients. Empty active set
/// yields empty parameters.
NormalParams beta_conditional(int g, const ChainState& state, const DesignSet& designs);
void sample_beta_group(int g, ChainState& state, const DesignSet& designs, Rng& rng);

NormalParams alpha_conditional(const ChainState& state, const DesignSet& designs,
                               const HyperParams& hp);
void sample_alpha(ChainState& state, const DesignSet& designs, const HyperParams& hp,
                  Rng& rng);

/// Inverse-Gamma parameters (shape, rate) of the sigma2 full conditional.
GammaParams sigma2_conditional(const ChainState& state, const DesignSet& designs);
void sample_sigma2(ChainState& state, const DesignSet& designs, Rng& rng);

NormalParams b_conditional(int subject, const ChainState& state, const DesignSet& designs);
void sample_b_subject(int subject, ChainState& state, const DesignSet& designs, Rng& rng);

/// Gamma parameters (shape, rate) of the lambda_D full conditional.
GammaParams lambda_conditional(const ChainState& state, const DesignSet& designs,
                               const HyperParams& hp);
void sample_lambda(ChainState& state, const DesignSet& designs, const HyperParams& hp,
                   Rng& rng);

/// One sweep in the fixed order: all indicator sites (group-major), all
/// coefficient blocks, alpha, sigma2, all subjects' random effects, lambda.
void gibbs_step(ChainState& state, const DesignSet& designs, const HyperParams& hp,
                Rng& rng);

/// Draw from N(mean, precision^{-1}) via a Cholesky factor of the precision.
Eigen::VectorXd draw_mvn_precision(const NormalParams& params, Rng& rng);

/// Runs the chain until every monitored scalar passes the stopping rule or
/// max_iters is reached; the trace is returned either way, flagged with the
/// termination reason. Monitored: alpha components, sigma2, lambda_D, every
/// treatment indicator, and (optionally) each coefficient's active
/// subsequence once it has at least the minimum window of draws.
ChainTrace run_chain(const Dataset& data, const DesignConfig& config,
                     const HyperParams& hp, const GibbsConfig& gcfg,
                     const ProgressFn& progress = {});

}  // namespace lmmsel
