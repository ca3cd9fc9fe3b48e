#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "guardcache/harness.hpp"

namespace guardcache {
namespace {

namespace fs = std::filesystem;

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("bad sweep value '" + item + "'");
    }
  }
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  return grid;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"Trace-driven cache simulator for prediction-augmented eviction policies"};
  app.set_version_flag("--version", "guardcache 0.1.0");

  std::string config_path, trace, format, sweep, out, table, opt_cache;
  std::size_t k = 0, seeds = 1, jobs = 1, min_distinct = 0;
  std::vector<std::string> policies, predictors;
  std::string station_column;
  std::uint64_t cache_bytes = 0, line_bytes = 0, ways = 0;
  bool list = false;

  app.add_option("--config", config_path, "JSON file with the same keys as the flags");
  app.add_option("--trace", trace, "Input trace file");
  app.add_option("--format", format, "plain | brightkite | citi | addr");
  app.add_option("--k", k, "Cache size in pages");
  app.add_option("--policy", policies,
                 "Policy spec, repeatable: lru, marker, belady, blind_oracle, lrb, fitf, "
                 "switch_det(a,b,bound), switch_rand(a,b,beta), with optional guard: prefix");
  app.add_option("--pred", predictors,
                 "Prediction spec, repeatable: none, lognormal, flip, fitf, inverted, popu, "
                 "pleco[:alpha,offset,horizon], binary(popu|pleco|lognormal)[:boundary]");
  app.add_option("--sweep", sweep, "Comma-separated noise levels for lognormal, flip and fitf");
  app.add_option("--seeds", seeds, "Seeds per sweep point");
  app.add_option("--out", out, "Result CSV (default: $GUARDCACHE_OUT_DIR/results.csv)");
  app.add_option("--table", table, "Also write a policy x predictor table of mean ratios");
  app.add_option("--opt-cache", opt_cache, "Directory for cached OPT costs");
  app.add_option("--jobs", jobs, "Worker threads");
  auto* phase_flag = app.add_flag("--phase-stats", "Write per-phase Guard counters");
  auto* assert_flag =
      app.add_flag("--assert-invariants", "Check invariants; exit 2 on a violation");
  auto* timing_flag = app.add_flag("--timing", "Record wall-clock time per run");
  app.add_option("--min-distinct", min_distinct,
                 "BrightKite: minimum distinct locations per user (default 2k)");
  app.add_option("--station-column", station_column, "Citi: station column header");
  app.add_option("--cache-bytes", cache_bytes, "addr: cache capacity in bytes");
  app.add_option("--line-bytes", line_bytes, "addr: line size in bytes");
  app.add_option("--ways", ways, "addr: associativity");
  app.add_flag("--list-policies", list, "Print registered policy names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (list) {
    for (const auto& name : PolicyRegistry::global().names()) std::cout << name << '\n';
    return 0;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config '" + config_path + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = config_from_json(buf.str());
    }
    // Explicit flags override the config file.
    if (app.count("--trace")) cfg.trace_path = trace;
    if (app.count("--format")) cfg.format = parse_format(format);
    if (app.count("--k")) cfg.k = k;
    if (app.count("--policy")) cfg.policies = policies;
    if (app.count("--pred")) cfg.predictors = predictors;
    if (app.count("--sweep")) cfg.sweep = parse_grid(sweep);
    if (app.count("--seeds")) cfg.seeds = seeds;
    if (app.count("--out")) cfg.out = out;
    if (app.count("--table")) cfg.table_out = table;
    if (app.count("--opt-cache")) cfg.opt_cache_dir = opt_cache;
    if (app.count("--jobs")) cfg.jobs = jobs;
    if (phase_flag->count()) cfg.phase_stats = true;
    if (assert_flag->count()) cfg.assert_invariants = true;
    if (timing_flag->count()) cfg.timing = true;
    if (app.count("--min-distinct")) cfg.min_distinct = min_distinct;
    if (app.count("--station-column")) cfg.citi.station_column = station_column;
    if (app.count("--cache-bytes")) cfg.address.capacity_bytes = cache_bytes;
    if (app.count("--line-bytes")) cfg.address.line_bytes = line_bytes;
    if (app.count("--ways")) cfg.address.ways = ways;

    if (cfg.out.empty()) {
      const char* env = std::getenv("GUARDCACHE_OUT_DIR");
      cfg.out = (fs::path(env != nullptr && *env != '\0' ? env : ".") / "results.csv").string();
    }
    if (cfg.opt_cache_dir.empty()) {
      cfg.opt_cache_dir = (fs::path(cfg.out).parent_path() / ".opt-cache").string();
    }

    const RunTable result = run(cfg);

    auto csv = open_output(cfg.out);
    write_run_csv(csv, result);
    if (cfg.phase_stats) {
      fs::path phases = cfg.out;
      phases.replace_extension(".phases.csv");
      auto phase_csv = open_output(phases);
      write_phase_rows_csv(phase_csv, result);
    }
    if (!cfg.table_out.empty()) {
      auto table_csv = open_output(cfg.table_out);
      write_compare_csv(table_csv, compare({result}));
    }

    for (const auto& a : result.aggregates) {
      std::cout << a.policy << "  " << a.predictor;
      if (a.swept) std::cout << '=' << a.param;
      std::cout << "  ratio " << a.ratio << "  (misses " << a.misses << ", opt " << a.opt
                << ")\n";
    }
    return 0;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace guardcache
