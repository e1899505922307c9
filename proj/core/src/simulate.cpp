#include "lmmsel/simulate.hpp"

#include <cmath>
#include <cstdio>

#include "lmmsel/rng.hpp"

namespace lmmsel {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace

void SimSpec::validate() const {
  design.validate();
  if (!(sigma2 >= 0.0)) throw ValidationError("simulate: sigma2 must be non-negative");
  if (!(lambda_inv >= 0.0)) throw ValidationError("simulate: lambda_inv must be non-negative");
  if (alpha.size() != static_cast<Eigen::Index>(design.w_degrees.size())) {
    throw ValidationError("simulate: alpha must match the W degree list");
  }
  if (groups.size() < 2) throw ValidationError("simulate: need at least two groups");
  if (times.empty()) throw ValidationError("simulate: need at least one time point");
  for (const auto& g : groups) {
    if (g.label.empty()) throw ValidationError("simulate: empty group label");
    if (g.n_subjects < 1) throw ValidationError("simulate: every group needs subjects");
    if (g.beta.size() != static_cast<Eigen::Index>(design.x_degrees.size())) {
      throw ValidationError("simulate: group '" + g.label + "' beta must match the X degree list");
    }
  }
  const auto& control = groups.back();
  for (Eigen::Index j = 0; j < control.beta.size(); ++j) {
    if (control.beta(j) != 0.0) {
      throw ValidationError("simulate: the control group's deviations must all be zero");
    }
  }
  if (!retention.empty() && retention.size() != times.size()) {
    throw ValidationError("simulate: retention schedule must match the time grid");
  }
  for (double r : retention) {
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("simulate: retention must lie in [0, 1]");
  }
}

SimSpec paper_sim_spec(std::uint64_t seed) {
  SimSpec spec;
  spec.alpha = Eigen::Vector2d(45.49, -5.75);
  spec.sigma2 = 5.06;
  spec.lambda_inv = 1.0;
  spec.times = {365, 395, 456, 517, 578, 639, 700, 760, 821, 882, 943, 1004, 1065, 1125, 1186};
  spec.design.w_degrees = {0, 1};
  spec.design.x_degrees = {1};
  spec.design.z_degrees = {0, 1};
  spec.design.rescale = {365.0, 365.0};
  const double offsets[] = {-2.0, -0.5, 0.0, 0.5, 2.0};
  for (int g = 0; g < 5; ++g) {
    SimGroup grp;
    grp.label = std::to_string(g + 1);
    grp.n_subjects = 36;
    grp.beta = Eigen::VectorXd::Constant(1, offsets[g]);
    spec.groups.push_back(std::move(grp));
  }
  SimGroup control;
  control.label = "99";
  control.n_subjects = 297;
  control.beta = Eigen::VectorXd::Zero(1);
  spec.groups.push_back(std::move(control));
  spec.seed = seed;
  return spec;
}

Dataset simulate_dataset(const SimSpec& spec) {
  spec.validate();

  Dataset data;
  for (const auto& g : spec.groups) data.groups.push_back(g.label);

  const Rng base(spec.seed);
  const double noise_sd = std::sqrt(spec.sigma2);
  const double reff_sd = std::sqrt(spec.lambda_inv);
  const int p_z = static_cast<int>(spec.design.z_degrees.size());

  int subject_index = 0;
  long total_subjects = 0;
  for (const auto& g : spec.groups) total_subjects += g.n_subjects;
  const int id_width = total_subjects >= 10000 ? 6 : 4;

  for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
    const auto& grp = spec.groups[gi];
    for (int k = 0; k < grp.n_subjects; ++k, ++subject_index) {
      Rng rng = base.split(static_cast<std::uint64_t>(subject_index));

      Subject subj;
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "s%0*d", id_width, subject_index + 1);
      subj.id = idbuf;
      subj.group = static_cast<int>(gi);

      Eigen::VectorXd b(p_z);
      for (int m = 0; m < p_z; ++m) b(m) = reff_sd * rng.normal();

      for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
        if (!spec.retention.empty() && ti > 0) {
          if (rng.uniform() >= spec.retention[ti]) break;  // drop-out
        }
        const double t = rescale_time(spec.times[ti], spec.design);
        double mean = 0.0;
        for (std::size_t c = 0; c < spec.design.w_degrees.size(); ++c) {
          mean += spec.alpha(static_cast<Eigen::Index>(c)) * ipow(t, spec.design.w_degrees[c]);
        }
        for (std::size_t c = 0; c < spec.design.x_degrees.size(); ++c) {
          mean += grp.beta(static_cast<Eigen::Index>(c)) * ipow(t, spec.design.x_degrees[c]);
        }
        for (int m = 0; m < p_z; ++m) mean += b(m) * ipow(t, spec.design.z_degrees[static_cast<std::size_t>(m)]);
        Observation o;
        o.time = spec.times[ti];
        o.response = mean + noise_sd * rng.normal();
        subj.obs.push_back(o);
      }
      data.subjects.push_back(std::move(subj));
    }
  }

  data.validate();
  return data;
}

}  // namespace lmmsel
