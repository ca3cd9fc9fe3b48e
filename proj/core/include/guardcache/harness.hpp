#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "guardcache/phase_stats.hpp"
#include "guardcache/policy.hpp"
#include "guardcache/predict.hpp"
#include "guardcache/trace.hpp"

namespace guardcache {

/// Bad flags, unknown names, malformed specs. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Policies

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

/// Named leaf policies. Specs are parsed as
///   spec  := ["guard:"] leaf | ["guard:"] combo
///   combo := ("switch_det" | "switch_rand") "(" spec "," spec "," number ")"
class PolicyRegistry {
 public:
  /// Registry preloaded with lru, marker, belady, blind_oracle, lrb, fitf.
  static PolicyRegistry& global();

  void add(std::string name, PolicyFactory make);
  bool remove(const std::string& name);
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Throws ConfigError on unknown names or bad syntax.
  std::unique_ptr<Policy> make(std::string_view spec) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, PolicyFactory, std::less<>> factories_;
};

std::unique_ptr<Policy> make_policy(std::string_view spec);

// ---------------------------------------------------------------------------
// Predictors

/// Parsed prediction spec. Accepted forms:
///   none | lognormal | flip | fitf | inverted | popu | pleco[:alpha,offset,horizon]
///   binary(popu | pleco[...] | lognormal)[:boundary]
/// lognormal, flip, fitf and binary(lognormal) take their noise level from
/// the sweep grid; the rest ignore it.
struct PredictorSpec {
  enum class Source { kNone, kLognormal, kFlip, kFitf, kInverted, kPopu, kPleco };

  std::string text;
  Source source = Source::kNone;
  bool binary = false;                 // threshold the NRT source into labels
  std::optional<double> boundary;      // default: Belady gap percentile
  PlecoParams pleco;

  bool sweeps() const;
  /// Same output for every seed.
  bool deterministic() const;
  PredictionKind kind() const;
};

PredictorSpec parse_predictor(std::string_view spec);

PredictionBundle build_bundle(const PredictorSpec& spec, const Trace& trace, std::size_t k,
                              double param, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiments

enum class TraceFormat { kPlain, kBrightKite, kCiti, kAddress };

TraceFormat parse_format(std::string_view name);
std::string_view to_string(TraceFormat format);

struct ExperimentConfig {
  std::string trace_path;
  TraceFormat format = TraceFormat::kPlain;
  std::optional<std::size_t> k;  // defaults depend on the format
  std::vector<std::string> policies{"lru"};
  std::vector<std::string> predictors{"none"};
  std::vector<double> sweep{0.0};
  std::size_t seeds = 1;
  std::string out;
  std::string table_out;
  std::string opt_cache_dir;  // empty: keep OPT in memory only
  bool phase_stats = false;
  bool assert_invariants = false;
  bool timing = false;  // record wall-clock time; off keeps CSVs byte-stable
  std::size_t jobs = 1;

  /// BrightKite users with fewer distinct locations are dropped; default 2k.
  std::optional<std::size_t> min_distinct;
  CitiOptions citi;
  SetAssociativeConfig address;

  /// k, or the format default (BrightKite 10, Citi 100, address ways).
  std::size_t cache_size() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Loads a JSON object whose keys mirror the CLI flags.
ExperimentConfig config_from_json(std::string_view json_text);

struct NamedTrace {
  std::string label;
  Trace trace;
};

/// One input may expand to several traces (BrightKite users, cache sets).
std::vector<NamedTrace> load_traces(const ExperimentConfig& config);

/// Belady misses per (trace fingerprint, k), optionally persisted in a
/// directory so repeated experiments skip the offline pass.
class OptCache {
 public:
  explicit OptCache(std::string dir = {});
  std::size_t get(const Trace& trace, std::size_t k);
  std::size_t computed() const noexcept { return computed_; }

 private:
  std::string dir_;
  std::mutex mu_;
  std::map<std::pair<std::uint64_t, std::size_t>, std::size_t> memo_;
  std::size_t computed_ = 0;
};

struct PhaseRecord {
  std::string trace;
  std::vector<PhaseStats> phases;
};

/// One (policy, predictor, param, seed) run summed over all traces.
struct RunRow {
  std::string policy;
  std::string predictor;
  double param = 0.0;
  bool swept = false;  // param is a sweep point rather than unused
  std::uint64_t seed = 0;
  std::size_t misses = 0;
  std::size_t opt = 0;
  double ratio = 1.0;
  PredictionError eta;
  double wall_ms = 0.0;
  std::size_t guard_events = 0;
  std::size_t max_guarded = 0;
  std::vector<PhaseRecord> phases;  // guard runs only
  /// Failed per-phase and lower-bound checks.
  std::vector<std::string> phase_violations;
  /// Traces where OPT exceeded the sum of n_q_old. Informational only.
  std::size_t upper_bound_misses = 0;
};

/// Mean over seeds for one (policy, predictor, param).
struct AggregateRow {
  std::string policy;
  std::string predictor;
  double param = 0.0;
  bool swept = false;
  double misses = 0.0;
  std::size_t opt = 0;
  double ratio = 1.0;
  double eta_t = 0.0;
  double eta_b = 0.0;
  double eta_f = 0.0;
  double wall_ms = 0.0;
};

struct RunTable {
  std::size_t k = 0;
  std::vector<std::string> traces;
  std::vector<RunRow> rows;  // config order: policy, predictor, param, seed
  std::vector<AggregateRow> aggregates;

  const AggregateRow* find(std::string_view policy, std::string_view predictor,
                           double param) const;
};

/// Runs every (policy, predictor, sweep point, seed) on the given traces.
/// Rows come back in config order regardless of `jobs`.
RunTable run(const ExperimentConfig& config, const std::vector<NamedTrace>& traces,
             OptCache* opt_cache = nullptr);
RunTable run(const ExperimentConfig& config);

/// `policy,predictor,param,seed,misses,opt,ratio,eta_t,eta_b,eta_f,wall_ms`
void write_run_csv(std::ostream& out, const RunTable& table);
/// `policy,predictor,param,seed,trace,phase,c_q,n_q,o_q,n_q_new,n_q_old`
void write_phase_rows_csv(std::ostream& out, const RunTable& table);

/// Policies as rows, predictor/sweep points as columns, mean ratio in each
/// cell averaged across the given tables (one per dataset).
struct CompareTable {
  std::vector<std::string> columns;
  std::vector<std::string> policies;
  std::vector<std::vector<double>> cells;  // NaN where a policy lacks a column
};

/// Throws ConfigError if the tables disagree on k.
CompareTable compare(const std::vector<RunTable>& tables);
void write_compare_csv(std::ostream& out, const CompareTable& table);

/// Entry point for the command-line tool. 0 success, 1 configuration or
/// input error, 2 invariant violation.
int cli(int argc, char** argv);

}  // namespace guardcache
