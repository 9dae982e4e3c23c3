#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "doctest.h"
#include "shcgm/harness.hpp"
#include "shcgm/reference_solve.hpp"

using namespace shcgm;

namespace {

struct TempDir {
  std::string path;
  explicit TempDir(const char* name) : path(std::string("./") + name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

struct EnvGuard {
  std::string name;
  std::optional<std::string> old;
  explicit EnvGuard(const char* n) : name(n) {
    if (const char* v = std::getenv(n)) old = v;
  }
  ~EnvGuard() {
    if (old.has_value())
      setenv(name.c_str(), old->c_str(), 1);
    else
      unsetenv(name.c_str());
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

}  // namespace

TEST_CASE("config text parses, serializes canonically, and round-trips") {
  const std::string text =
      "# a comment line\n"
      "\n"
      "seed = 7\n"
      "problem = clustering\n"
      "   iterations =   500\t\n"
      "n = 12\n";
  const ConfigMap cfg = parse_config(text);
  CHECK(cfg.size() == 4);
  CHECK(cfg.at("problem") == "clustering");
  CHECK(cfg.at("iterations") == "500");

  const std::string canon = serialize_config(cfg);
  CHECK(canon == "problem = clustering\niterations = 500\nseed = 7\nn = 12\n");
  CHECK(parse_config(canon) == cfg);
}

TEST_CASE("config syntax errors carry line numbers and key names") {
  CHECK_THROWS_WITH_AS(parse_config("problem clustering\n"),
                       doctest::Contains("line 1"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("problem = lasso\nwibble = 3\n"),
                       doctest::Contains("unknown key 'wibble'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\nseed = 2\n"),
                       doctest::Contains("duplicate key 'seed'"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_config("seed =\n"), std::invalid_argument);
  CHECK_THROWS_AS(serialize_config(ConfigMap{{"nonsense", "1"}}),
                  std::invalid_argument);
}

TEST_CASE("validate_config rejects structural mistakes by key") {
  const auto bad = [](const std::string& text, const char* needle) {
    CAPTURE(text);
    CHECK_THROWS_WITH_AS(validate_config(parse_config(text)),
                         doctest::Contains(needle), std::invalid_argument);
  };
  bad("iterations = 5\n", "'problem'");
  bad("problem = analytic1d\n", "'iterations'");
  bad("problem = analytic1d\niterations = -2\n", "iterations");
  bad("problem = pagerank\niterations = 5\n", "unknown problem");
  bad("problem = analytic1d\niterations = 5\nalgorithm = sgd\n", "algorithm");
  bad("problem = analytic1d\niterations = 5\noracle = fuzzy\n", "oracle");
  bad("problem = analytic1d\niterations = 5\ndelta = 0.5\n", "delta");
  bad("problem = analytic1d\niterations = 5\noracle = multiplicative\n", "delta");
  bad("problem = analytic1d\niterations = 5\noracle = multiplicative\ndelta = 1.5\n",
      "delta");
  bad("problem = analytic1d\niterations = 5\noracle = additive\ndelta = -1\n",
      "delta");
  bad("problem = analytic1d\niterations = 5\nbeta0 = 0\n", "beta0");
  bad("problem = analytic1d\niterations = 5\ntrace_thin_factor = 0.5\n",
      "trace_thin_factor");
  bad("problem = analytic1d\niterations = 5\niterations2 = 5\n", "iterations2");
  bad("problem = clustering\niterations = 5\nrows = 3\n", "does not apply");
  bad("problem = analytic1d\niterations = 5\nbatch = 2\n", "does not apply");
  bad("problem = covariance\niterations = 5\ndim = 50\nblocks = 7\n", "blocks");
  bad("problem = clustering\niterations = 5\nn = 30\nclusters = 40\n", "clusters");
  bad("problem = clustering\niterations = 5\nn = 30\nbatch = 31\n", "batch");
  bad("problem = completion\niterations = 5\nobserved_fraction = 0\n",
      "observed_fraction");
  bad("problem = completion\niterations = 5\ntest_fraction = 1\n", "test_fraction");
  bad("problem = movielens\niterations = 5\n", "data_file");
  bad("problem = analytic1d\niterations = ten\n", "expected an integer");
  bad("problem = analytic1d\niterations = 5\nnoise = loud\n", "expected a number");
  bad("problem = analytic1d\niterations = 5\nrecord_estimator_mse = maybe\n",
      "boolean");

  // The presets that ship with the repo all validate.
  for (const char* name : {"analytic1d", "lasso", "clustering", "covariance",
                           "completion", "movielens"}) {
    const auto cfg =
        load_config_file(std::string(SHCGM_SOURCE_DIR "/configs/") + name + ".cfg");
    CHECK_NOTHROW(validate_config(cfg));
  }
}

TEST_CASE("build_run resolves per-problem defaults") {
  auto cfg = parse_config("problem = clustering\niterations = 10\n");
  const auto run = build_run(cfg);
  CHECK(run.spec.name == "clustering");
  CHECK(run.solver.schedules.beta0 == 10.0);
  CHECK(run.solver.iterations == 10);
  CHECK(run.descriptor ==
        "clustering n=30 clusters=3 blob_dim=2 spread=0.5 data_seed=0");

  cfg["algorithm"] = "hcgm";
  CHECK(build_run(cfg).solver.schedules.beta0 == 1.0);
  CHECK(build_run(cfg).solver.algorithm == Algorithm::Hcgm);
  cfg["beta0"] = "2.5";
  CHECK(build_run(cfg).solver.schedules.beta0 == 2.5);

  const auto cov = build_run(
      parse_config("problem = covariance\niterations = 1\ndim = 20\nblocks = 4\n"));
  CHECK(cov.solver.schedules.beta0 == 1.0);
  CHECK(cov.descriptor == "covariance dim=20 blocks=4 data_seed=0");

  const auto comp = build_run(parse_config(
      "problem = completion\niterations = 1\nrows = 10\ncols = 8\nbatch = 5\n"));
  CHECK(comp.solver.schedules.beta0 == 10.0);
  CHECK(comp.spec.metrics.size() == 2);

  const auto mult = build_run(parse_config(
      "problem = analytic1d\niterations = 1\noracle = multiplicative\ndelta = 0.5\n"));
  CHECK(mult.solver.schedules.mode == OracleMode::Multiplicative);
  CHECK(mult.solver.schedules.delta == 0.5);
}

TEST_CASE("default output paths honor the environment") {
  EnvGuard guard("SHCGM_OUT_DIR");
  const auto cfg = parse_config("problem = analytic1d\niterations = 1\nseed = 3\n");

  setenv("SHCGM_OUT_DIR", "/tmp/shcgm_out_test", 1);
  CHECK(build_run(cfg).out_path == "/tmp/shcgm_out_test/analytic1d_shcgm_seed3.csv");

  unsetenv("SHCGM_OUT_DIR");
  CHECK(build_run(cfg).out_path == "./analytic1d_shcgm_seed3.csv");

  auto with_out = cfg;
  with_out["out"] = "./somewhere/else.csv";
  CHECK(build_run(with_out).out_path == "./somewhere/else.csv");
}

TEST_CASE("a cached reference turns the residual column on") {
  TempDir dir("harness_cache");
  EnvGuard guard("SHCGM_CACHE_DIR");
  setenv("SHCGM_CACHE_DIR", dir.path.c_str(), 1);

  const auto cfg = parse_config(
      "problem = clustering\niterations = 5\nn = 12\nclusters = 3\nbatch = 4\n"
      "spread = 0.3\ndata_seed = 4\n");
  const auto before = build_run(cfg);
  CHECK_FALSE(before.spec.reference_objective.has_value());

  ReferenceCacheEntry e;
  e.descriptor = before.descriptor;
  e.f_star = 93.0;
  e.provenance = "hcgm iterations=1 beta0=1 seed=0";
  store_reference_cache(dir.path, e);

  const auto after = build_run(cfg);
  REQUIRE(after.spec.reference_objective.has_value());
  CHECK(*after.spec.reference_objective == 93.0);

  // Low-confidence records are not trusted as references.
  e.low_confidence = true;
  store_reference_cache(dir.path, e);
  CHECK_FALSE(build_run(cfg).spec.reference_objective.has_value());
}

TEST_CASE("run_command writes the trace and a summary line") {
  TempDir dir("harness_run");
  const std::string cfg_path = dir.path + "/run.cfg";
  write_file(cfg_path,
             "problem = analytic1d\nnoise = 0.5\niterations = 300\nseed = 1\n"
             "out = " + dir.path + "/trace.csv\n");

  std::ostringstream out, err;
  const int rc = run_command(cfg_path, out, err);
  CHECK(rc == 0);
  CHECK(err.str().empty());
  CHECK(out.str().find("final_k=300") != std::string::npos);
  CHECK(out.str().find("objective=") != std::string::npos);
  CHECK(out.str().find("out=" + dir.path + "/trace.csv") != std::string::npos);

  const TraceTable t = read_trace_csv(dir.path + "/trace.csv");
  const std::vector<std::string> expect = {"k",        "objective", "residual",
                                           "feasibility", "estimator_mse",
                                           "beta_k",   "wall_time_ms"};
  CHECK(t.columns == expect);
  CHECK(t.rows.front()[0] == 0.0);
  CHECK(t.column("k").back() == 300.0);
  // Dense tracing below k = 1000: rows are 0..300, one per iteration.
  CHECK(t.rows.size() == 301);
}

TEST_CASE("run_command with zero iterations emits the initial row only") {
  TempDir dir("harness_zero");
  const std::string cfg_path = dir.path + "/run.cfg";
  write_file(cfg_path, "problem = analytic1d\niterations = 0\nout = " + dir.path +
                           "/t.csv\n");
  std::ostringstream out, err;
  CHECK(run_command(cfg_path, out, err) == 0);
  const TraceTable t = read_trace_csv(dir.path + "/t.csv");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == 0.0);
}

TEST_CASE("same config twice differs only in wall time") {
  TempDir dir("harness_repeat");
  const std::string base =
      "problem = covariance\ndim = 10\nblocks = 2\niterations = 40\nseed = 9\n";
  write_file(dir.path + "/a.cfg", base + "out = " + dir.path + "/a.csv\n");
  write_file(dir.path + "/b.cfg", base + "out = " + dir.path + "/b.csv\n");

  std::ostringstream out, err;
  REQUIRE(run_command(dir.path + "/a.cfg", out, err) == 0);
  REQUIRE(run_command(dir.path + "/b.cfg", out, err) == 0);

  const TraceTable a = read_trace_csv(dir.path + "/a.csv");
  const TraceTable b = read_trace_csv(dir.path + "/b.csv");
  REQUIRE(a.columns == b.columns);
  REQUIRE(a.rows.size() == b.rows.size());
  for (const auto& col : a.columns) {
    if (col == "wall_time_ms") continue;
    const auto va = a.column(col);
    const auto vb = b.column(col);
    for (size_t i = 0; i < va.size(); ++i) {
      if (va[i] != vb[i]) {
        CAPTURE(col);
        CAPTURE(i);
        REQUIRE(va[i] == vb[i]);
      }
    }
  }
}

TEST_CASE("run_command classifies config errors and runtime failures") {
  TempDir dir("harness_err");
  std::ostringstream out, err;

  CHECK(run_command(dir.path + "/missing.cfg", out, err) == 2);
  CHECK(err.str().find("config error") != std::string::npos);

  write_file(dir.path + "/bad.cfg", "problem = analytic1d\nbanana = 1\n");
  err.str("");
  CHECK(run_command(dir.path + "/bad.cfg", out, err) == 2);
  CHECK(err.str().find("banana") != std::string::npos);

  // An unwritable output path is a runtime failure, not a config one.
  write_file(dir.path + "/nowrite.cfg",
             "problem = analytic1d\niterations = 1\nout = /nonexistent_dir_zz/t.csv\n");
  err.str("");
  CHECK(run_command(dir.path + "/nowrite.cfg", out, err) == 1);
  CHECK(err.str().find("trace error") != std::string::npos);
}

TEST_CASE("a diverging run flushes its partial trace and exits nonzero") {
  TempDir dir("harness_abort");
  // eta_1 = 1 jumps straight to a nuclear-ball vertex of weight 1e200; the
  // squared entries overflow and the k = 1 record is non-finite.
  write_file(dir.path + "/div.cfg",
             "problem = completion\nrows = 6\ncols = 6\nrank = 1\n"
             "observed_fraction = 1\nbatch = 10\nnuclear_radius = 1e200\n"
             "iterations = 50\nout = " + dir.path + "/div.csv\n");
  std::ostringstream out, err;
  CHECK(run_command(dir.path + "/div.cfg", out, err) == 1);
  CHECK(err.str().find("non-finite iterate at k=1") != std::string::npos);
  CHECK(err.str().find("partial trace") != std::string::npos);

  const TraceTable t = read_trace_csv(dir.path + "/div.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.column("k") == std::vector<double>{0.0, 1.0});
}

TEST_CASE("trace CSV round-trips doubles exactly") {
  TempDir dir("harness_csv");
  std::vector<TraceRecord> trace(3);
  trace[0] = {0, 0.1, 1e-300, 3.141592653589793, 1.44, 10.0, 0.25};
  trace[1] = {7, -123456.78901234567, 0.0, 2.2250738585072014e-308, 0.5, 1.0, 1.5};
  trace[2] = {9, 5e306, 17.0, 0.0, 0.0, 0.125, 2.75};
  write_trace_csv(dir.path + "/t.csv", trace, "hand-built");

  const TraceTable t = read_trace_csv(dir.path + "/t.csv");
  REQUIRE(t.rows.size() == 3);
  CHECK(t.column("objective") ==
        std::vector<double>{0.1, -123456.78901234567, 5e306});
  CHECK(t.column("residual") == std::vector<double>{1e-300, 0.0, 17.0});
  CHECK(t.column("feasibility") ==
        std::vector<double>{3.141592653589793, 2.2250738585072014e-308, 0.0});
  CHECK(t.column("beta_k") == std::vector<double>{10.0, 1.0, 0.125});

  CHECK_THROWS_AS(t.column("no_such_column"), std::runtime_error);
  CHECK(t.has_column("estimator_mse"));
  CHECK_FALSE(t.has_column("zebra"));
}

TEST_CASE("read_trace_csv rejects malformed files") {
  TempDir dir("harness_badcsv");
  CHECK_THROWS_AS(read_trace_csv(dir.path + "/none.csv"), std::runtime_error);

  write_file(dir.path + "/ragged.csv", "k,objective\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_trace_csv(dir.path + "/ragged.csv"),
                       doctest::Contains("line 3"), std::runtime_error);

  write_file(dir.path + "/alpha.csv", "k,objective\n1,abc\n");
  CHECK_THROWS_WITH_AS(read_trace_csv(dir.path + "/alpha.csv"),
                       doctest::Contains("abc"), std::runtime_error);

  write_file(dir.path + "/empty.csv", "# only a comment\n");
  CHECK_THROWS_WITH_AS(read_trace_csv(dir.path + "/empty.csv"),
                       doctest::Contains("no header"), std::runtime_error);
}

TEST_CASE("log-log slope fitting recovers exact power laws") {
  TraceTable t;
  t.columns = {"k", "v"};
  for (int k = 1; k <= 200; ++k)
    t.rows.push_back({static_cast<double>(k), 3.7 * std::pow(k, -1.0)});

  const SlopeFit fit = fit_loglog_slope(t, "v", 1.0, 200.0);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.7)).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.used == 200);
  CHECK(fit.skipped == 0);

  const SlopeFit window = fit_loglog_slope(t, "v", 10.0, 50.0);
  CHECK(window.used == 41);
  CHECK(window.slope == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("slope fitting skips nonpositive values and demands 10 rows") {
  TraceTable t;
  t.columns = {"k", "v"};
  for (int k = 1; k <= 30; ++k)
    t.rows.push_back({static_cast<double>(k),
                      k % 3 == 0 ? 0.0 : 2.0 * std::pow(k, -0.5)});

  const SlopeFit fit = fit_loglog_slope(t, "v", 1.0, 30.0);
  CHECK(fit.used == 20);
  CHECK(fit.skipped == 10);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-10));

  CHECK_THROWS_WITH_AS(fit_loglog_slope(t, "v", 1.0, 12.0),
                       doctest::Contains("need 10"), std::runtime_error);
  CHECK_THROWS_AS(fit_loglog_slope(t, "w", 1.0, 30.0), std::runtime_error);
  CHECK_THROWS_AS(fit_loglog_slope(t, "v", 0.0, 30.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog_slope(t, "v", 30.0, 1.0), std::invalid_argument);
}
