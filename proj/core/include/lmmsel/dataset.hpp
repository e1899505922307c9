#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lmmsel/errors.hpp"

namespace lmmsel {

struct Observation {
  double time = 0.0;      // raw units (e.g. days)
  double response = 0.0;  // measurement units
};

struct Subject {
  std::string id;
  int group = -1;  // index into Dataset::groups
  std::vector<Observation> obs;  // non-decreasing in time
};

/// Longitudinal dataset: one control group (always last in `groups`) plus
/// at least one treatment group, each subject with >= 1 observations.
struct Dataset {
  std::vector<std::string> groups;  // control label last
  std::vector<Subject> subjects;

  int n_groups() const { return static_cast<int>(groups.size()); }
  int n_subjects() const { return static_cast<int>(subjects.size()); }
  int control_group() const { return n_groups() - 1; }
  long n_obs_total() const;

  /// Throws ValidationError when any structural invariant is broken.
  void validate() const;
};

struct TimeRescale {
  double offset = 0.0;
  double scale = 1.0;
};

/// Polynomial design specification: column k of each matrix is the rescaled
/// time raised to the listed degree. W carries the shared fixed effects,
/// X the per-group deviations under selection, Z the random effects.
struct DesignConfig {
  std::vector<int> w_degrees{0, 1};
  std::vector<int> x_degrees{1};
  std::vector<int> z_degrees{0, 1};
  TimeRescale rescale{};

  void validate() const;
};

double rescale_time(double t_raw, const DesignConfig& config);

/// Default rescale: offset = min observed time, scale = max - min
/// (keeps polynomial bases well conditioned on arbitrary data).
TimeRescale default_rescale(const Dataset& data);

struct SubjectDesign {
  std::string id;
  int group = -1;
  Eigen::MatrixXd W, X, Z;
  Eigen::VectorXd y;

  // cross products reused throughout the sampler
  Eigen::MatrixXd XtX, XtW, XtZ, WtW, WtZ, ZtZ;
  Eigen::VectorXd Xty, Wty, Zty;

  int n_obs() const { return static_cast<int>(y.size()); }
};

struct DesignSet {
  std::vector<SubjectDesign> subjects;
  std::vector<std::vector<int>> group_members;  // subject indices per group
  std::vector<std::string> group_labels;        // control last
  int p_w = 0, p_x = 0, p_z = 0;
  long n_obs = 0;

  // per-group accumulations over the X design
  std::vector<Eigen::MatrixXd> A_full;  // sum (1/n_i)   X_i' X_i
  std::vector<Eigen::MatrixXd> B_full;  // sum (1+1/n_i) X_i' X_i
  std::vector<Eigen::MatrixXd> S_full;  // sum (1/n_i)   X_i' W_i

  int n_groups() const { return static_cast<int>(group_labels.size()); }
  int n_subjects() const { return static_cast<int>(subjects.size()); }
  int control_group() const { return n_groups() - 1; }
};

/// Recompute per-subject cross products and per-group accumulations from
/// the raw W/X/Z/y members. build_designs calls this; it is exposed so a
/// transformed design (e.g. a re-based X) can be refreshed consistently.
void compute_design_products(DesignSet& designs);

/// Throws IdentifiabilityError naming the group whose (1/n_i)-weighted
/// X Gram accumulation is not positive definite.
void validate_identifiability(const DesignSet& designs);

DesignSet build_designs(const Dataset& data, const DesignConfig& config);

struct CsvSchema {
  std::string subject_col = "subject";
  std::string group_col = "group";
  std::string time_col = "time";
  std::string response_col = "response";
  /// Label of the control group; empty means the lexicographically last label.
  std::string control_group;
};

/// Comma-delimited, header row, UTF-8. Treatment groups are ordered
/// lexicographically, control last; subjects sorted by (group, id);
/// observations sorted by time.
Dataset load_csv(const std::string& path, const CsvSchema& schema = {});

void save_csv(const Dataset& data, const std::string& path);

}  // namespace lmmsel
