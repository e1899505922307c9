#include "lmmsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lmmsel/mathutil.hpp"

namespace lmmsel {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_real(const std::string& field, const std::string& column, long line_no) {
  const std::string t = trim(field);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) {
    throw ValidationError("non-numeric field '" + t + "' in column '" + column +
                          "' at line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

long Dataset::n_obs_total() const {
  long n = 0;
  for (const auto& s : subjects) n += static_cast<long>(s.obs.size());
  return n;
}

void Dataset::validate() const {
  if (groups.size() < 2) {
    throw ValidationError("dataset must contain at least one treatment group and the control (G >= 2)");
  }
  std::set<std::string> labels(groups.begin(), groups.end());
  if (labels.size() != groups.size()) throw ValidationError("duplicate group label");

  std::vector<long> group_counts(groups.size(), 0);
  std::set<std::string> ids;
  for (const auto& s : subjects) {
    if (s.id.empty()) throw ValidationError("subject with empty id");
    if (!ids.insert(s.id).second) {
      throw ValidationError("subject '" + s.id + "' appears in multiple groups or is duplicated");
    }
    if (s.group < 0 || s.group >= n_groups()) {
      throw ValidationError("subject '" + s.id + "' has group index out of range");
    }
    if (s.obs.empty()) throw ValidationError("subject '" + s.id + "' has no observations");
    group_counts[static_cast<std::size_t>(s.group)]++;
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& o : s.obs) {
      if (!std::isfinite(o.time) || !std::isfinite(o.response)) {
        throw ValidationError("subject '" + s.id + "' has a non-finite time or response");
      }
      if (o.time < prev) {
        throw ValidationError("subject '" + s.id + "' observations are not sorted by time");
      }
      prev = o.time;
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (group_counts[g] == 0) {
      throw ValidationError("group '" + groups[g] + "' has zero subjects");
    }
  }
}

void DesignConfig::validate() const {
  auto check_degrees = [](const std::vector<int>& degs, const char* name) {
    if (degs.empty()) throw ValidationError(std::string(name) + " degree list is empty");
    std::set<int> seen;
    for (int d : degs) {
      if (d < 0) throw ValidationError(std::string(name) + " degrees must be non-negative");
      if (!seen.insert(d).second) {
        throw ValidationError(std::string(name) + " degree list has a duplicate");
      }
    }
  };
  check_degrees(w_degrees, "W");
  check_degrees(x_degrees, "X");
  check_degrees(z_degrees, "Z");
  if (rescale.scale == 0.0) throw ValidationError("time rescale: scale must be nonzero");
}

double rescale_time(double t_raw, const DesignConfig& config) {
  return (t_raw - config.rescale.offset) / config.rescale.scale;
}

TimeRescale default_rescale(const Dataset& data) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : data.subjects) {
    for (const auto& o : s.obs) {
      lo = std::min(lo, o.time);
      hi = std::max(hi, o.time);
    }
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  const double span = hi - lo;
  return {lo, span > 0.0 ? span : 1.0};
}

void compute_design_products(DesignSet& designs) {
  const int G = designs.n_groups();
  designs.p_w = designs.subjects.empty() ? 0 : static_cast<int>(designs.subjects[0].W.cols());
  designs.p_x = designs.subjects.empty() ? 0 : static_cast<int>(designs.subjects[0].X.cols());
  designs.p_z = designs.subjects.empty() ? 0 : static_cast<int>(designs.subjects[0].Z.cols());
  designs.n_obs = 0;

  designs.A_full.assign(G, Eigen::MatrixXd::Zero(designs.p_x, designs.p_x));
  designs.B_full.assign(G, Eigen::MatrixXd::Zero(designs.p_x, designs.p_x));
  designs.S_full.assign(G, Eigen::MatrixXd::Zero(designs.p_x, designs.p_w));
  designs.group_members.assign(G, {});

  for (int i = 0; i < designs.n_subjects(); ++i) {
    auto& s = designs.subjects[i];
    s.XtX = s.X.transpose() * s.X;
    s.XtW = s.X.transpose() * s.W;
    s.XtZ = s.X.transpose() * s.Z;
    s.WtW = s.W.transpose() * s.W;
    s.WtZ = s.W.transpose() * s.Z;
    s.ZtZ = s.Z.transpose() * s.Z;
    s.Xty = s.X.transpose() * s.y;
    s.Wty = s.W.transpose() * s.y;
    s.Zty = s.Z.transpose() * s.y;

    designs.n_obs += s.n_obs();
    const double wi = 1.0 / static_cast<double>(s.n_obs());
    designs.A_full[s.group] += wi * s.XtX;
    designs.B_full[s.group] += (1.0 + wi) * s.XtX;
    designs.S_full[s.group] += wi * s.XtW;
    designs.group_members[s.group].push_back(i);
  }
}

void validate_identifiability(const DesignSet& designs) {
  for (int g = 0; g < designs.n_groups(); ++g) {
    if (designs.group_members[g].empty()) {
      throw ValidationError("group '" + designs.group_labels[g] + "' has zero subjects");
    }
    // strict rank check; the sampler's jittered solves must not paper over
    // a genuinely deficient design
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(designs.A_full[g]);
    const double max_eig = es.eigenvalues().maxCoeff();
    if (!(max_eig > 0.0) || es.eigenvalues().minCoeff() <= 1e-10 * max_eig) {
      throw IdentifiabilityError(
          "group '" + designs.group_labels[g] +
          "': the (1/n_i)-weighted X'X accumulation is singular; the X design is not identifiable");
    }
  }
}

DesignSet build_designs(const Dataset& data, const DesignConfig& config) {
  data.validate();
  config.validate();

  DesignSet out;
  out.group_labels = data.groups;
  out.subjects.reserve(data.subjects.size());

  auto fill = [&](const std::vector<int>& degs, const std::vector<double>& t) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(degs.size()));
    for (std::size_t r = 0; r < t.size(); ++r) {
      for (std::size_t c = 0; c < degs.size(); ++c) {
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ipow(t[r], degs[c]);
      }
    }
    return m;
  };

  for (const auto& subj : data.subjects) {
    SubjectDesign d;
    d.id = subj.id;
    d.group = subj.group;
    std::vector<double> t(subj.obs.size());
    d.y.resize(static_cast<Eigen::Index>(subj.obs.size()));
    for (std::size_t k = 0; k < subj.obs.size(); ++k) {
      t[k] = rescale_time(subj.obs[k].time, config);
      d.y(static_cast<Eigen::Index>(k)) = subj.obs[k].response;
    }
    d.W = fill(config.w_degrees, t);
    d.X = fill(config.x_degrees, t);
    d.Z = fill(config.z_degrees, t);
    out.subjects.push_back(std::move(d));
  }

  compute_design_products(out);
  validate_identifiability(out);
  return out;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
  const auto header = split_csv_line(line);

  auto col_index = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return static_cast<int>(k);
    }
    throw ValidationError("missing column '" + name + "' in " + path);
  };
  const int ci_subject = col_index(schema.subject_col);
  const int ci_group = col_index(schema.group_col);
  const int ci_time = col_index(schema.time_col);
  const int ci_response = col_index(schema.response_col);

  struct Raw {
    std::string group;
    std::vector<Observation> obs;
  };
  std::map<std::string, Raw> by_subject;
  std::set<std::string> group_labels;

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const int needed = std::max({ci_subject, ci_group, ci_time, ci_response});
    if (static_cast<int>(fields.size()) <= needed) {
      throw ValidationError("row with too few fields at line " + std::to_string(line_no));
    }
    const std::string& id = fields[static_cast<std::size_t>(ci_subject)];
    const std::string& grp = fields[static_cast<std::size_t>(ci_group)];
    if (id.empty()) throw ValidationError("empty subject id at line " + std::to_string(line_no));
    if (grp.empty()) throw ValidationError("empty group label at line " + std::to_string(line_no));
    Observation o;
    o.time = parse_real(fields[static_cast<std::size_t>(ci_time)], schema.time_col, line_no);
    o.response = parse_real(fields[static_cast<std::size_t>(ci_response)], schema.response_col, line_no);

    auto [it, inserted] = by_subject.try_emplace(id, Raw{grp, {}});
    if (!inserted && it->second.group != grp) {
      throw ValidationError("subject '" + id + "' appears in multiple groups ('" +
                            it->second.group + "' and '" + grp + "')");
    }
    it->second.obs.push_back(o);
    group_labels.insert(grp);
  }
  if (by_subject.empty()) throw ValidationError("no data rows in " + path);

  std::string control = schema.control_group;
  if (control.empty()) {
    control = *group_labels.rbegin();  // lexicographically last
  } else if (group_labels.count(control) == 0) {
    throw ValidationError("unknown control group '" + control + "'");
  }

  Dataset data;
  for (const auto& g : group_labels) {
    if (g != control) data.groups.push_back(g);
  }
  data.groups.push_back(control);

  auto group_index = [&](const std::string& g) {
    for (int k = 0; k < data.n_groups(); ++k) {
      if (data.groups[static_cast<std::size_t>(k)] == g) return k;
    }
    return -1;
  };

  for (auto& [id, raw] : by_subject) {
    Subject s;
    s.id = id;
    s.group = group_index(raw.group);
    std::stable_sort(raw.obs.begin(), raw.obs.end(),
                     [](const Observation& a, const Observation& b) { return a.time < b.time; });
    s.obs = std::move(raw.obs);
    data.subjects.push_back(std::move(s));
  }
  std::stable_sort(data.subjects.begin(), data.subjects.end(),
                   [](const Subject& a, const Subject& b) {
                     return a.group != b.group ? a.group < b.group : a.id < b.id;
                   });

  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "subject,group,time,response\n";
  char buf[64];
  for (const auto& s : data.subjects) {
    const std::string& grp = data.groups[static_cast<std::size_t>(s.group)];
    for (const auto& o : s.obs) {
      out << s.id << ',' << grp << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", o.time);
      out << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", o.response);
      out << buf << '\n';
    }
  }
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace lmmsel
