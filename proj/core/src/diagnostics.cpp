#include "lmmsel/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmmsel/errors.hpp"
#include "lmmsel/mathutil.hpp"

namespace lmmsel {

namespace {

double sample_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

// equal-tailed empirical quantile with linear interpolation
double quantile(std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace

void FwsrConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("fwsr: epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("fwsr: delta must lie in (0, 1)");
}

double ess_target(const FwsrConfig& cfg) {
  cfg.validate();
  const double z = standard_normal_quantile(1.0 - cfg.delta / 2.0);
  return 4.0 * z * z / (cfg.epsilon * cfg.epsilon);
}

double batch_means_variance(std::span<const double> x) {
  const auto n = x.size();
  const auto a = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const auto m = n / a;
  const auto used = m * a;
  double grand = 0.0;
  for (std::size_t i = 0; i < used; ++i) grand += x[i];
  grand /= static_cast<double>(used);

  double ss = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double bm = 0.0;
    for (std::size_t i = k * a; i < (k + 1) * a; ++i) bm += x[i];
    bm /= static_cast<double>(a);
    ss += (bm - grand) * (bm - grand);
  }
  return static_cast<double>(a) * ss / static_cast<double>(m - 1);
}

double ess(std::span<const double> x) {
  if (x.size() < 10) throw ValidationError("ess: need at least 10 draws");
  const double n = static_cast<double>(x.size());
  const double s2 = sample_variance(x);
  if (s2 == 0.0) return n;  // constant column convention
  const double sig2 = batch_means_variance(x);
  if (sig2 == 0.0) return std::numeric_limits<double>::infinity();
  return n * s2 / sig2;
}

double mcse_mean(std::span<const double> x) {
  if (x.size() < 10) throw ValidationError("mcse_mean: need at least 10 draws");
  return std::sqrt(batch_means_variance(x) / static_cast<double>(x.size()));
}

bool fwsr_pass(std::span<const double> x, const FwsrConfig& cfg, std::size_t min_window) {
  cfg.validate();
  const auto n = x.size();
  if (n < min_window || n < 10) return false;
  const double nn = static_cast<double>(n);
  const double s2 = sample_variance(x);
  if (s2 == 0.0) {
    // constant column: ESS = n by convention
    return nn >= ess_target(cfg);
  }
  const double z = standard_normal_quantile(1.0 - cfg.delta / 2.0);
  const double sighat = std::sqrt(batch_means_variance(x));
  const double width = 2.0 * z * sighat / std::sqrt(nn) + 1.0 / nn;
  return width <= cfg.epsilon * std::sqrt(s2);
}

PosteriorReport summarize(const ChainTrace& trace) {
  if (trace.n_retained() == 0) throw ValidationError("summarize: trace is empty");
  const long n = trace.n_retained();
  const int G = trace.n_groups();

  PosteriorReport rep;
  rep.group_labels = trace.group_labels;
  rep.w_degrees = trace.w_degrees;
  rep.x_degrees = trace.x_degrees;
  rep.rescale = trace.rescale;
  rep.alpha_mean.resize(trace.p_w);
  rep.beta_mean = Eigen::MatrixXd::Zero(G, trace.p_x);

  auto column_stats = [&](const std::vector<double>& col, ReportRow& row) {
    row.mean = sample_mean(col);
    row.mcse = n >= 10 ? mcse_mean(col) : 0.0;
    std::vector<double> sorted(col);
    std::sort(sorted.begin(), sorted.end());
    row.ci_lo = quantile(sorted, 0.025);
    row.ci_hi = quantile(sorted, 0.975);
  };

  for (int k = 0; k < trace.p_w; ++k) {
    ReportRow row;
    row.name = "alpha_" + std::to_string(k);
    column_stats(trace.columns[static_cast<std::size_t>(trace.alpha_col(k))], row);
    rep.alpha_mean(k) = row.mean;
    rep.rows.push_back(std::move(row));
  }

  for (int g = 0; g < G; ++g) {
    for (int j = 0; j < trace.p_x; ++j) {
      ReportRow row;
      row.name = "beta_" + std::to_string(g + 1) + "_" + std::to_string(j);
      row.group = g;
      row.xcol = j;
      row.has_inclusion = true;
      column_stats(trace.columns[static_cast<std::size_t>(trace.beta_col(g, j))], row);
      const auto& gcol = trace.columns[static_cast<std::size_t>(trace.gamma_col(g, j))];
      row.incl_prob = sample_mean(gcol);
      row.incl_mcse = n >= 10 ? mcse_mean(gcol) : 0.0;
      rep.beta_mean(g, j) = row.mean;
      rep.rows.push_back(std::move(row));
    }
  }

  {
    ReportRow row;
    row.name = "sigma2";
    column_stats(trace.columns[static_cast<std::size_t>(trace.sigma2_col())], row);
    rep.rows.push_back(std::move(row));
  }
  {
    ReportRow row;
    row.name = "lambda_D";
    column_stats(trace.columns[static_cast<std::size_t>(trace.lambda_col())], row);
    rep.rows.push_back(std::move(row));
  }

  classify(rep, rep.threshold);
  return rep;
}

std::vector<std::vector<int>> classify(PosteriorReport& report, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("classify: threshold must lie in [0, 1]");
  }
  report.threshold = threshold;
  const int G = static_cast<int>(report.group_labels.size());
  const int p_x = static_cast<int>(report.beta_mean.cols());
  std::vector<std::vector<int>> flags(static_cast<std::size_t>(G),
                                      std::vector<int>(static_cast<std::size_t>(p_x), 0));
  for (auto& row : report.rows) {
    if (!row.has_inclusion) continue;
    row.significant = row.incl_prob > threshold;  // strict
    flags[static_cast<std::size_t>(row.group)][static_cast<std::size_t>(row.xcol)] =
        row.significant ? 1 : 0;
  }
  return flags;
}

std::vector<TrajectoryPoint> fitted_trajectories(const PosteriorReport& report,
                                                 const DesignConfig& config,
                                                 std::span<const double> raw_times) {
  auto ipow = [](double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
  };
  std::vector<TrajectoryPoint> out;
  out.reserve(report.group_labels.size() * raw_times.size());
  for (std::size_t g = 0; g < report.group_labels.size(); ++g) {
    for (double t_raw : raw_times) {
      const double t = rescale_time(t_raw, config);
      double v = 0.0;
      for (std::size_t k = 0; k < config.w_degrees.size(); ++k) {
        v += report.alpha_mean(static_cast<Eigen::Index>(k)) * ipow(t, config.w_degrees[k]);
      }
      for (std::size_t j = 0; j < config.x_degrees.size(); ++j) {
        v += report.beta_mean(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) *
             ipow(t, config.x_degrees[j]);
      }
      out.push_back({report.group_labels[g], t_raw, v});
    }
  }
  return out;
}

}  // namespace lmmsel
