#include "lmmsel/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "kv.hpp"
#include "lmmsel/errors.hpp"
#include "lmmsel/mathutil.hpp"

namespace lmmsel {

namespace {

std::string real17(double v) { return detail::format_real(v); }

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (k) out += ",";
    out += labels[k];
  }
  return out;
}

std::vector<std::string> split_labels(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::string meta_body(const ChainTrace& trace) {
  std::ostringstream out;
  out << "seed = " << trace.seed << "\n";
  out << "iterations = " << trace.iterations << "\n";
  out << "burn_in = " << trace.burn_in << "\n";
  out << "retained = " << trace.n_retained() << "\n";
  out << "converged = " << (trace.converged ? 1 : 0) << "\n";
  out << "termination = " << trace.termination << "\n";
  out << "groups = " << join_labels(trace.group_labels) << "\n";
  out << "p_w = " << trace.p_w << "\n";
  out << "p_x = " << trace.p_x << "\n";
  out << "p_z = " << trace.p_z << "\n";
  out << "w_degrees = " << detail::join_ints(trace.w_degrees) << "\n";
  out << "x_degrees = " << detail::join_ints(trace.x_degrees) << "\n";
  out << "z_degrees = " << detail::join_ints(trace.z_degrees) << "\n";
  out << "time_offset = " << real17(trace.rescale.offset) << "\n";
  out << "time_scale = " << real17(trace.rescale.scale) << "\n";
  return out.str();
}

}  // namespace

std::string trace_meta_path(const std::string& csv_path) {
  const auto dot = csv_path.rfind('.');
  const auto slash = csv_path.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return csv_path.substr(0, dot) + ".meta";
  }
  return csv_path + ".meta";
}

std::string trace_config_hash(const ChainTrace& trace) {
  return fnv1a64_hex(meta_body(trace));
}

void save_trace(const ChainTrace& trace, const std::string& csv_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw ValidationError("cannot write file: " + csv_path);
    for (std::size_t c = 0; c < trace.column_names.size(); ++c) {
      if (c) out << ',';
      out << trace.column_names[c];
    }
    out << '\n';
    const long n = trace.n_retained();
    for (long r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < trace.columns.size(); ++c) {
        if (c) out << ',';
        out << real17(trace.columns[c][static_cast<std::size_t>(r)]);
      }
      out << '\n';
    }
    if (!out) throw ValidationError("write failed: " + csv_path);
  }
  std::ofstream meta(trace_meta_path(csv_path));
  if (!meta) throw ValidationError("cannot write file: " + trace_meta_path(csv_path));
  const std::string body = meta_body(trace);
  meta << body;
  meta << "config_hash = " << fnv1a64_hex(body) << "\n";
}

ChainTrace load_trace(const std::string& csv_path) {
  ChainTrace trace;

  const auto kv = detail::parse_kv_file(trace_meta_path(csv_path));
  trace.seed = static_cast<std::uint64_t>(detail::parse_long(kv.get("seed"), "seed"));
  trace.iterations = detail::parse_long(kv.get("iterations"), "iterations");
  trace.burn_in = detail::parse_long(kv.get("burn_in"), "burn_in");
  trace.converged = detail::parse_long(kv.get("converged"), "converged") != 0;
  trace.termination = kv.get("termination");
  trace.group_labels = split_labels(kv.get("groups"));
  trace.p_w = static_cast<int>(detail::parse_long(kv.get("p_w"), "p_w"));
  trace.p_x = static_cast<int>(detail::parse_long(kv.get("p_x"), "p_x"));
  trace.p_z = static_cast<int>(detail::parse_long(kv.get("p_z"), "p_z"));
  trace.w_degrees = detail::parse_int_list(kv.get("w_degrees"), "w_degrees");
  trace.x_degrees = detail::parse_int_list(kv.get("x_degrees"), "x_degrees");
  trace.z_degrees = detail::parse_int_list(kv.get("z_degrees"), "z_degrees");
  trace.rescale.offset = detail::parse_real(kv.get("time_offset"), "time_offset");
  trace.rescale.scale = detail::parse_real(kv.get("time_scale"), "time_scale");

  std::ifstream in(csv_path);
  if (!in) throw ValidationError("cannot open file: " + csv_path);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) trace.column_names.push_back(tok);
  }
  const std::size_t ncols = trace.column_names.size();
  if (ncols < static_cast<std::size_t>(trace.n_core_columns())) {
    throw ParseError("header has fewer columns than the metadata implies", 1);
  }
  trace.columns.assign(ncols, {});

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::size_t c = 0;
    while (std::getline(ss, tok, ',')) {
      if (c >= ncols) throw ParseError("row has too many fields", line_no);
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (tok.empty() || end != tok.c_str() + tok.size()) {
        throw ParseError("non-numeric value '" + tok + "'", line_no);
      }
      trace.columns[c++].push_back(v);
    }
    if (c != ncols) throw ParseError("row has too few fields", line_no);
  }

  const long expected = detail::parse_long(kv.get("retained"), "retained");
  if (trace.n_retained() != expected) {
    throw ParseError("trace has " + std::to_string(trace.n_retained()) +
                         " rows but the metadata records " + std::to_string(expected),
                     line_no);
  }
  return trace;
}

void save_report_csv(const PosteriorReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "parameter,mean,mcse,ci_lo,ci_hi,incl_prob,incl_mcse,significant\n";
  for (const auto& row : report.rows) {
    out << row.name << ',' << real17(row.mean) << ',' << real17(row.mcse) << ','
        << real17(row.ci_lo) << ',' << real17(row.ci_hi) << ',';
    if (row.has_inclusion) {
      out << real17(row.incl_prob) << ',' << real17(row.incl_mcse) << ','
          << (row.significant ? 1 : 0);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

std::string format_report_table(const PosteriorReport& report) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "significance threshold: %g\n", report.threshold);
  out << buf;
  if (report.beta_model_averaged) {
    out << "beta summaries are model-averaged (inactive draws count as 0)\n";
  }
  std::snprintf(buf, sizeof(buf), "%-12s %12s %12s %12s %12s %10s %10s  %s\n", "parameter",
                "mean", "mcse", "2.5%", "97.5%", "incl.prob", "incl.mcse", "sig");
  out << buf;
  for (const auto& row : report.rows) {
    std::string label = row.name;
    if (row.group >= 0) {
      label += " [" + report.group_labels[static_cast<std::size_t>(row.group)] + "]";
    }
    std::snprintf(buf, sizeof(buf), "%-12s %12.4f %12.6f %12.4f %12.4f", label.c_str(), row.mean,
                  row.mcse, row.ci_lo, row.ci_hi);
    out << buf;
    if (row.has_inclusion) {
      std::snprintf(buf, sizeof(buf), " %10.4f %10.2e  %s", row.incl_prob, row.incl_mcse,
                    row.significant ? "*" : "");
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

void save_trajectories(std::span<const TrajectoryPoint> points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "group,t,value\n";
  for (const auto& p : points) {
    out << p.group << ',' << real17(p.time) << ',' << real17(p.value) << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace lmmsel
