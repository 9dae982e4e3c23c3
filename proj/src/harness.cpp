#include "shcgm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "shcgm/problems.hpp"
#include "shcgm/reference_solve.hpp"

namespace shcgm {
namespace {

// Canonical serialization order; doubles as the registry of known keys.
constexpr const char* kKeys[] = {
    "problem",
    "algorithm",
    "oracle",
    "delta",
    "iterations",
    "seed",
    "beta0",
    "batch",
    "trace_dense_until",
    "trace_thin_factor",
    "record_estimator_mse",
    "out",
    "noise",
    "dim",
    "l1_weight",
    "n",
    "clusters",
    "blob_dim",
    "spread",
    "data_seed",
    "blocks",
    "rows",
    "cols",
    "rank",
    "observed_fraction",
    "nuclear_radius",
    "data_file",
    "test_file",
    "test_fraction",
};

bool known_key(const std::string& k) {
  for (const char* key : kKeys)
    if (k == key) return true;
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& val) {
  double out = 0.0;
  const char* b = val.data();
  const char* e = b + val.size();
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e)
    fail("config key '" + key + "': expected a number, got '" + val + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& val) {
  std::int64_t out = 0;
  const char* b = val.data();
  const char* e = b + val.size();
  const auto res = std::from_chars(b, e, out);
  if (res.ec != std::errc() || res.ptr != e)
    fail("config key '" + key + "': expected an integer, got '" + val + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& val) {
  if (val == "1" || val == "true") return true;
  if (val == "0" || val == "false") return false;
  fail("config key '" + key + "': expected a boolean, got '" + val + "'");
}

bool has(const ConfigMap& cfg, const std::string& key) {
  return cfg.find(key) != cfg.end();
}

std::string get_string(const ConfigMap& cfg, const std::string& key,
                       const std::string& def) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? def : it->second;
}

std::int64_t get_int(const ConfigMap& cfg, const std::string& key,
                     std::int64_t def) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? def : to_int(key, it->second);
}

double get_double(const ConfigMap& cfg, const std::string& key, double def) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? def : to_double(key, it->second);
}

bool get_bool(const ConfigMap& cfg, const std::string& key, bool def) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? def : to_bool(key, it->second);
}

std::string env_or(const char* name, const std::string& def) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : def;
}

const std::set<std::string>& problem_keys(const std::string& problem) {
  static const std::set<std::string> common = {
      "problem",           "algorithm",
      "oracle",            "delta",
      "iterations",        "seed",
      "beta0",             "batch",
      "trace_dense_until", "trace_thin_factor",
      "record_estimator_mse", "out"};
  static const auto with = [](std::initializer_list<const char*> extra) {
    std::set<std::string> s = common;
    for (const char* k : extra) s.insert(k);
    return s;
  };
  static const std::set<std::string> analytic = [] {
    auto s = with({"noise"});
    s.erase("batch");
    return s;
  }();
  static const std::set<std::string> lasso = [] {
    auto s = with({"noise", "dim", "l1_weight", "data_seed"});
    s.erase("batch");
    return s;
  }();
  static const std::set<std::string> clustering =
      with({"n", "clusters", "blob_dim", "spread", "data_seed"});
  static const std::set<std::string> covariance =
      with({"dim", "blocks", "data_seed"});
  static const std::set<std::string> completion =
      with({"rows", "cols", "rank", "observed_fraction", "nuclear_radius",
            "test_fraction", "data_seed"});
  static const std::set<std::string> movielens = with(
      {"data_file", "test_file", "test_fraction", "nuclear_radius", "data_seed"});
  if (problem == "analytic1d") return analytic;
  if (problem == "lasso") return lasso;
  if (problem == "clustering") return clustering;
  if (problem == "covariance") return covariance;
  if (problem == "completion") return completion;
  if (problem == "movielens") return movielens;
  fail("config key 'problem': unknown problem '" + problem + "'");
}

void check_range(const ConfigMap& cfg, const std::string& key, double lo,
                 double hi, bool lo_strict, bool hi_strict) {
  if (!has(cfg, key)) return;
  const double v = to_double(key, cfg.at(key));
  const bool ok = (lo_strict ? v > lo : v >= lo) && (hi_strict ? v < hi : v <= hi);
  if (!ok) fail("config key '" + key + "': value " + cfg.at(key) + " out of range");
}

void check_int_min(const ConfigMap& cfg, const std::string& key,
                   std::int64_t min) {
  if (!has(cfg, key)) return;
  if (to_int(key, cfg.at(key)) < min)
    fail("config key '" + key + "': must be at least " + std::to_string(min));
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string val = trim(stripped.substr(eq + 1));
    if (key.empty() || val.empty())
      fail("config line " + std::to_string(lineno) + ": empty key or value");
    if (!known_key(key))
      fail("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!cfg.emplace(key, val).second)
      fail("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ConfigMap& cfg) {
  for (const auto& [k, v] : cfg) {
    if (!known_key(k)) fail("serialize_config: unknown key '" + k + "'");
    if (v.find('\n') != std::string::npos)
      fail("serialize_config: value of '" + k + "' spans lines");
  }
  std::string out;
  for (const char* key : kKeys) {
    const auto it = cfg.find(key);
    if (it != cfg.end()) out += std::string(key) + " = " + it->second + "\n";
  }
  return out;
}

void validate_config(const ConfigMap& cfg) {
  if (!has(cfg, "problem")) fail("config key 'problem' is required");
  const std::string problem = cfg.at("problem");
  const auto& allowed = problem_keys(problem);
  for (const auto& [k, v] : cfg)
    if (allowed.find(k) == allowed.end())
      fail("config key '" + k + "' does not apply to problem '" + problem + "'");

  if (!has(cfg, "iterations")) fail("config key 'iterations' is required");
  check_int_min(cfg, "iterations", 0);

  const std::string algorithm = get_string(cfg, "algorithm", "shcgm");
  if (algorithm != "shcgm" && algorithm != "hcgm" && algorithm != "sfw")
    fail("config key 'algorithm': unknown algorithm '" + algorithm + "'");

  const std::string oracle = get_string(cfg, "oracle", "exact");
  const double delta = get_double(cfg, "delta", 0.0);
  if (oracle == "exact") {
    if (delta != 0.0) fail("config key 'delta': exact oracle takes no delta");
  } else if (oracle == "additive") {
    if (delta < 0.0) fail("config key 'delta': additive delta must be >= 0");
  } else if (oracle == "multiplicative") {
    if (!(delta > 0.0 && delta <= 1.0))
      fail("config key 'delta': multiplicative delta must be in (0, 1]");
  } else {
    fail("config key 'oracle': unknown oracle mode '" + oracle + "'");
  }

  check_int_min(cfg, "seed", 0);
  check_int_min(cfg, "data_seed", 0);
  check_range(cfg, "beta0", 0.0, std::numeric_limits<double>::infinity(), true, true);
  check_int_min(cfg, "batch", problem == "clustering" ? 2 : 1);
  check_int_min(cfg, "trace_dense_until", 0);
  check_range(cfg, "trace_thin_factor", 1.0, 16.0, false, false);
  if (has(cfg, "record_estimator_mse"))
    to_bool("record_estimator_mse", cfg.at("record_estimator_mse"));

  check_range(cfg, "noise", 0.0, std::numeric_limits<double>::infinity(), false, true);
  check_int_min(cfg, "dim", 1);
  check_range(cfg, "l1_weight", 0.0, std::numeric_limits<double>::infinity(), true, true);
  check_int_min(cfg, "n", 2);
  check_int_min(cfg, "clusters", 1);
  check_int_min(cfg, "blob_dim", 1);
  check_range(cfg, "spread", 0.0, std::numeric_limits<double>::infinity(), true, true);
  check_int_min(cfg, "blocks", 1);
  check_int_min(cfg, "rows", 1);
  check_int_min(cfg, "cols", 1);
  check_int_min(cfg, "rank", 1);
  check_range(cfg, "observed_fraction", 0.0, 1.0, true, false);
  check_range(cfg, "nuclear_radius", 0.0, std::numeric_limits<double>::infinity(), true, true);
  check_range(cfg, "test_fraction", 0.0, 1.0, false, true);

  if (problem == "covariance") {
    const std::int64_t dim = get_int(cfg, "dim", 50);
    const std::int64_t blocks = get_int(cfg, "blocks", 10);
    if (dim % blocks != 0)
      fail("config key 'blocks': must divide dim (" + std::to_string(dim) + ")");
  }
  if (problem == "clustering") {
    const std::int64_t n = get_int(cfg, "n", 30);
    if (get_int(cfg, "clusters", 3) > n)
      fail("config key 'clusters': more clusters than points");
    if (get_int(cfg, "batch", 3) > n)
      fail("config key 'batch': larger than the point count");
  }
  if (problem == "movielens" && !has(cfg, "data_file"))
    fail("config key 'data_file' is required for movielens");
}

std::string out_dir() { return env_or("SHCGM_OUT_DIR", "."); }
std::string cache_dir() { return env_or("SHCGM_CACHE_DIR", out_dir() + "/refcache"); }
std::string data_dir() { return env_or("SHCGM_DATA_DIR", "."); }

BuiltRun build_run(const ConfigMap& cfg) {
  validate_config(cfg);

  const std::string problem = cfg.at("problem");
  const std::string algorithm = get_string(cfg, "algorithm", "shcgm");
  const std::string oracle = get_string(cfg, "oracle", "exact");
  const std::uint64_t data_seed =
      static_cast<std::uint64_t>(get_int(cfg, "data_seed", 0));

  ProblemSpec spec{Domain(BoxDomain{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)})};
  std::string descriptor;
  double default_beta0 = 1.0;
  std::vector<std::pair<std::string, std::string>> notes;

  if (problem == "analytic1d") {
    const double noise = get_double(cfg, "noise", 0.5);
    spec = build_analytic_1d(noise).spec;
    descriptor = "analytic1d noise=" + fmt_double(noise);
  } else if (problem == "lasso") {
    const std::int64_t dim = get_int(cfg, "dim", 20);
    const double weight = get_double(cfg, "l1_weight", 0.3);
    const double noise = get_double(cfg, "noise", 0.5);
    Rng rng(data_seed);
    Eigen::VectorXd center(dim);
    for (Eigen::Index i = 0; i < dim; ++i) center[i] = rng.uniform(-1.5, 1.5);
    spec = build_lasso(center, weight, noise).spec;
    descriptor = "lasso dim=" + std::to_string(dim) +
                 " l1_weight=" + fmt_double(weight) + " noise=" + fmt_double(noise) +
                 " data_seed=" + std::to_string(data_seed);
  } else if (problem == "clustering") {
    const std::int64_t n = get_int(cfg, "n", 30);
    const std::int64_t clusters = get_int(cfg, "clusters", 3);
    const std::int64_t blob_dim = get_int(cfg, "blob_dim", 2);
    const double spread = get_double(cfg, "spread", 0.5);
    const std::int64_t batch = get_int(cfg, "batch", 3);
    Rng rng(data_seed);
    const Eigen::MatrixXd pts = generate_blobs(n, clusters, blob_dim, spread, rng);
    spec = build_clustering_sdp(pts, clusters, batch).spec;
    descriptor = "clustering n=" + std::to_string(n) +
                 " clusters=" + std::to_string(clusters) +
                 " blob_dim=" + std::to_string(blob_dim) +
                 " spread=" + fmt_double(spread) +
                 " data_seed=" + std::to_string(data_seed);
    default_beta0 = algorithm == "hcgm" ? 1.0 : 10.0;
    notes.emplace_back("points", std::to_string(n));
  } else if (problem == "covariance") {
    const std::int64_t dim = get_int(cfg, "dim", 50);
    const std::int64_t blocks = get_int(cfg, "blocks", 10);
    const std::int64_t batch = get_int(cfg, "batch", 1);
    Rng rng(data_seed);
    const Eigen::MatrixXd f = generate_covariance_factors(dim, blocks, rng);
    spec = build_covariance_stream(f, batch).spec;
    descriptor = "covariance dim=" + std::to_string(dim) +
                 " blocks=" + std::to_string(blocks) +
                 " data_seed=" + std::to_string(data_seed);
    notes.emplace_back("dim", std::to_string(dim));
  } else if (problem == "completion" || problem == "movielens") {
    RatingsData data;
    if (problem == "completion") {
      const std::int64_t rows = get_int(cfg, "rows", 50);
      const std::int64_t cols = get_int(cfg, "cols", 50);
      const std::int64_t rank = get_int(cfg, "rank", 3);
      const double frac = get_double(cfg, "observed_fraction", 0.3);
      const double test_frac = get_double(cfg, "test_fraction", 0.2);
      const auto observed = static_cast<Eigen::Index>(std::llround(
          frac * static_cast<double>(rows) * static_cast<double>(cols)));
      Rng rng(data_seed);
      data = generate_ratings(rows, cols, rank, std::max<Eigen::Index>(observed, 1),
                              test_frac, rng);
      descriptor = "completion rows=" + std::to_string(rows) +
                   " cols=" + std::to_string(cols) + " rank=" + std::to_string(rank) +
                   " observed_fraction=" + fmt_double(frac) +
                   " test_fraction=" + fmt_double(test_frac) +
                   " data_seed=" + std::to_string(data_seed);
    } else {
      std::string file = cfg.at("data_file");
      if (!std::filesystem::exists(file)) file = data_dir() + "/" + file;
      std::string test_file = get_string(cfg, "test_file", "");
      if (!test_file.empty() && !std::filesystem::exists(test_file))
        test_file = data_dir() + "/" + test_file;
      const double test_frac = get_double(cfg, "test_fraction", 0.2);
      data = load_movielens(file, test_file, test_frac, data_seed);
      descriptor = "movielens data_file=" + cfg.at("data_file") +
                   (has(cfg, "test_file") ? " test_file=" + cfg.at("test_file") : "") +
                   " test_fraction=" + fmt_double(test_frac) +
                   " data_seed=" + std::to_string(data_seed);
    }
    const double default_radius =
        4.0 * std::sqrt(static_cast<double>(data.rows) * static_cast<double>(data.cols));
    const double radius = get_double(cfg, "nuclear_radius", default_radius);
    const std::int64_t batch =
        get_int(cfg, "batch", problem == "movielens" ? 1000 : 100);
    if (batch > static_cast<std::int64_t>(data.train.size()))
      fail("config key 'batch': larger than the train set (" +
           std::to_string(data.train.size()) + ")");
    spec = build_matrix_completion(data, radius, batch).spec;
    descriptor += " nuclear_radius=" + fmt_double(radius);
    default_beta0 = 10.0;
    notes.emplace_back("train_size", std::to_string(data.train.size()));
    notes.emplace_back("test_size", std::to_string(data.test.size()));
  }

  BuiltRun run{std::move(spec), SolverConfig{}, "", std::move(descriptor), "", std::move(notes)};

  run.solver.algorithm = algorithm == "hcgm"    ? Algorithm::Hcgm
                         : algorithm == "sfw"   ? Algorithm::Sfw
                                                : Algorithm::Shcgm;
  run.solver.schedules.mode = oracle == "additive"       ? OracleMode::Additive
                              : oracle == "multiplicative" ? OracleMode::Multiplicative
                                                           : OracleMode::Exact;
  run.solver.schedules.beta0 = get_double(cfg, "beta0", default_beta0);
  run.solver.schedules.delta = get_double(cfg, "delta", 0.0);
  run.solver.iterations = get_int(cfg, "iterations", 0);
  run.solver.seed = static_cast<std::uint64_t>(get_int(cfg, "seed", 0));
  run.solver.trace_dense_until = get_int(cfg, "trace_dense_until", 1000);
  run.solver.trace_thin_factor = get_double(cfg, "trace_thin_factor", 1.02);
  run.solver.record_estimator_mse = get_bool(cfg, "record_estimator_mse", true);

  // A cached reference turns the residual column on for problems without a
  // closed-form objective value.
  if (!run.spec.reference_objective.has_value()) {
    if (const auto hit = load_reference_cache(cache_dir(), run.descriptor);
        hit.has_value() && !hit->low_confidence)
      run.spec.reference_objective = hit->f_star;
  }

  const std::string default_name = problem + "_" + algorithm + "_seed" +
                                   std::to_string(run.solver.seed) + ".csv";
  run.out_path = get_string(cfg, "out", out_dir() + "/" + default_name);

  run.id_comment = run.descriptor + " algorithm=" + algorithm + " oracle=" + oracle +
                   " delta=" + fmt_double(run.solver.schedules.delta) +
                   " beta0=" + fmt_double(run.solver.schedules.beta0) +
                   " iterations=" + std::to_string(run.solver.iterations) +
                   " seed=" + std::to_string(run.solver.seed);
  return run;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace,
                     const std::string& id_comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_trace_csv: cannot write '" + path + "'");
  if (!id_comment.empty()) out << "# " << id_comment << "\n";

  const bool has_residual = !trace.empty() && trace.front().residual.has_value();
  const bool has_mse = !trace.empty() && trace.front().estimator_mse.has_value();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  out << "k,objective";
  if (has_residual) out << ",residual";
  out << ",feasibility";
  if (has_mse) out << ",estimator_mse";
  out << ",beta_k,wall_time_ms\n";

  for (const TraceRecord& r : trace) {
    out << r.k << ',' << fmt_double(r.objective);
    if (has_residual) out << ',' << fmt_double(r.residual.value_or(nan));
    out << ',' << fmt_double(r.feasibility);
    if (has_mse) out << ',' << fmt_double(r.estimator_mse.value_or(nan));
    out << ',' << fmt_double(r.beta) << ',' << fmt_double(r.wall_ms) << '\n';
  }
  if (!out.flush())
    throw std::runtime_error("write_trace_csv: write failed for '" + path + "'");
}

bool TraceTable::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::vector<double> TraceTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw std::runtime_error("trace has no column '" + name + "'");
  const auto idx = static_cast<size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[idx]);
  return out;
}

TraceTable read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open '" + path + "'");

  const auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        return fields;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
  };

  TraceTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (t.columns.empty()) {
      t.columns = split(stripped);
      continue;
    }
    const auto fields = split(stripped);
    if (fields.size() != t.columns.size())
      throw std::runtime_error("read_trace_csv: line " + std::to_string(lineno) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(t.columns.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw std::runtime_error("read_trace_csv: bad number '" + f + "' on line " +
                                 std::to_string(lineno));
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty())
    throw std::runtime_error("read_trace_csv: '" + path + "' has no header");
  return t;
}

SlopeFit fit_loglog_slope(const TraceTable& trace, const std::string& column,
                          double k_min, double k_max) {
  if (!(k_min > 0.0) || !(k_max >= k_min))
    throw std::invalid_argument("fit_loglog_slope: need 0 < k_min <= k_max");
  const std::vector<double> ks = trace.column("k");
  const std::vector<double> vs = trace.column(column);

  SlopeFit fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < k_min || ks[i] > k_max) continue;
    if (!(vs[i] > 0.0) || !std::isfinite(vs[i])) {
      ++fit.skipped;
      continue;
    }
    const double x = std::log(ks[i]);
    const double y = std::log(vs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++fit.used;
  }
  if (fit.used < 10)
    throw std::runtime_error("fit_loglog_slope: only " + std::to_string(fit.used) +
                             " usable rows in [" + fmt_double(k_min) + ", " +
                             fmt_double(k_max) + "], need 10");

  const double n = static_cast<double>(fit.used);
  const double denom = n * sxx - sx * sx;
  if (denom <= 0.0)
    throw std::runtime_error("fit_loglog_slope: degenerate abscissa");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double ss_tot = syy - sy * sy / n;
  const double ss_res =
      syy - 2.0 * (fit.slope * sxy + fit.intercept * sy) +
      fit.slope * fit.slope * sxx + 2.0 * fit.slope * fit.intercept * sx +
      n * fit.intercept * fit.intercept;
  fit.r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  return fit;
}

int run_command(const std::string& config_path, std::ostream& out,
                std::ostream& err) {
  BuiltRun run{ProblemSpec{Domain(BoxDomain{Eigen::VectorXd::Zero(1),
                                            Eigen::VectorXd::Ones(1)})},
               SolverConfig{}, "", "", "", {}};
  try {
    run = build_run(load_config_file(config_path));
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  RunResult res;
  try {
    res = run_solver(run.spec, run.solver);
  } catch (const std::exception& e) {
    err << "run error: " << e.what() << "\n";
    return 1;
  }

  try {
    write_trace_csv(run.out_path, res.trace, run.id_comment);
  } catch (const std::exception& e) {
    err << "trace error: " << e.what() << "\n";
    return 1;
  }

  if (res.error.has_value()) {
    err << "run error: " << *res.error << " (partial trace in " << run.out_path
        << ")\n";
    return 1;
  }

  const TraceRecord& last = res.trace.back();
  out << run.id_comment << " final_k=" << last.k
      << " objective=" << fmt_double(last.objective);
  if (last.residual.has_value())
    out << " residual=" << fmt_double(*last.residual);
  out << " feasibility=" << fmt_double(last.feasibility);
  for (const auto& [name, metric] : run.spec.metrics)
    out << " " << name << "=" << fmt_double(metric(res.x));
  for (const auto& [k, v] : run.dataset_notes) out << " " << k << "=" << v;
  out << " lmo_calls=" << res.stats.lmo_calls << " trace_rows=" << res.trace.size()
      << " out=" << run.out_path << "\n";
  return 0;
}

}  // namespace shcgm
