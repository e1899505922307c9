#pragma once

#include <span>
#include <string>
#include <vector>

#include "lmmsel/diagnostics.hpp"
#include "lmmsel/trace.hpp"

namespace lmmsel {

/// Writes the retained draws as CSV plus a "key = value" metadata sidecar
/// (seed, iteration counts, termination reason, design, config hash) at
/// the trace path with its extension replaced by ".meta".
void save_trace(const ChainTrace& trace, const std::string& csv_path);

std::string trace_meta_path(const std::string& csv_path);

/// Hash of the trace's identifying configuration (seed, counts, design);
/// recorded in the metadata sidecar and the run manifest.
std::string trace_config_hash(const ChainTrace& trace);

/// Rebuilds a trace from its CSV and metadata sidecar. Malformed content
/// raises ParseError with the offending line number.
ChainTrace load_trace(const std::string& csv_path);

/// Machine-readable report: columns parameter, mean, mcse, ci_lo, ci_hi,
/// incl_prob, incl_mcse, significant (inclusion fields empty for rows
/// without an indicator).
void save_report_csv(const PosteriorReport& report, const std::string& path);

/// Human-readable aligned table, threshold in the header.
std::string format_report_table(const PosteriorReport& report);

/// Delimited (group, t, value) rows for external plotting.
void save_trajectories(std::span<const TrajectoryPoint> points, const std::string& path);

}  // namespace lmmsel
