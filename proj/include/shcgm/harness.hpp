#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "shcgm/solvers.hpp"

namespace shcgm {

// Flat "key = value" run configuration. '#' starts a comment, blank lines are
// skipped, keys must come from the known set, duplicates are rejected.
// serialize_config emits keys in canonical order, so parse-serialize-parse is
// an identity on the stored map.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(const std::string& text);
ConfigMap load_config_file(const std::string& path);
std::string serialize_config(const ConfigMap& cfg);

// Structural check without building anything: key applicability per problem,
// value types, enum members, ranges, oracle-delta coherence. Throws
// std::invalid_argument naming the offending key.
void validate_config(const ConfigMap& cfg);

// Everything run_command needs, assembled from a validated config. The
// descriptor identifies the problem instance only (no solver fields) and keys
// the reference cache; id_comment heads the trace CSV.
struct BuiltRun {
  ProblemSpec spec;
  SolverConfig solver;
  std::string out_path;
  std::string descriptor;
  std::string id_comment;
  std::vector<std::pair<std::string, std::string>> dataset_notes;
};

BuiltRun build_run(const ConfigMap& cfg);

// Default directories, overridable through the environment.
std::string out_dir();    // SHCGM_OUT_DIR, else "."
std::string cache_dir();  // SHCGM_CACHE_DIR, else "<out_dir>/refcache"
std::string data_dir();   // SHCGM_DATA_DIR, else "."

// Trace CSV: optional leading '#' identity comment, then a header naming the
// populated columns, then one row per record. Numbers are written with
// std::to_chars, so files are locale-independent and reruns of the same
// config differ at most in wall_time_ms.
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace,
                     const std::string& id_comment = "");

struct TraceTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // rows[i].size() == columns.size()

  bool has_column(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;  // throws if absent
};

TraceTable read_trace_csv(const std::string& path);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::int64_t used = 0;
  std::int64_t skipped = 0;  // nonpositive or non-finite values inside the window
};

// Least squares of log(value) on log(k) over rows with k in [k_min, k_max].
// Fewer than 10 usable rows is an error.
SlopeFit fit_loglog_slope(const TraceTable& trace, const std::string& column,
                          double k_min, double k_max);

// Loads, validates, builds, runs, writes the trace, prints a one-line
// summary. Returns 0 on success, 2 on config errors, 1 on runtime failures;
// a partial trace is still flushed when the run aborts midway.
int run_command(const std::string& config_path, std::ostream& out,
                std::ostream& err);

}  // namespace shcgm
