#include "guardcache/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "guardcache/guard.hpp"
#include "guardcache/oracle.hpp"
#include "guardcache/simulator.hpp"
#include "guardcache/switching.hpp"

namespace guardcache {
namespace {

namespace fs = std::filesystem;

std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view text, std::string_view what) {
  text = strip(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw ConfigError("bad " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      parts.push_back(strip(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return parts;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string format_param(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// RFC 4180 quoting, only when needed.
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Recursive-descent parser over a policy spec; the caller holds the
// registry lock.
class PolicySpecParser {
 public:
  PolicySpecParser(std::string_view text,
                   const std::map<std::string, PolicyFactory, std::less<>>& factories)
      : text_(text), factories_(factories) {}

  std::unique_ptr<Policy> parse_all() {
    auto policy = parse();
    skip_space();
    if (pos_ != text_.size()) error("unexpected '" + std::string(text_.substr(pos_)) + "'");
    return policy;
  }

 private:
  std::unique_ptr<Policy> parse() {
    skip_space();
    constexpr std::string_view kGuard = "guard:";
    if (text_.substr(pos_, kGuard.size()) == kGuard) {
      pos_ += kGuard.size();
      return guard_wrap(parse());
    }
    const std::string name = identifier();
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      auto a = parse();
      expect(',');
      auto b = parse();
      expect(',');
      const std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != ')') ++pos_;
      const double param = parse_number(text_.substr(start, pos_ - start), "switching parameter");
      expect(')');
      try {
        if (name == "switch_det") {
          return std::make_unique<SwitchDeterministic>(std::move(a), std::move(b), param);
        }
        if (name == "switch_rand") {
          return std::make_unique<SwitchRandomized>(std::move(a), std::move(b), param);
        }
      } catch (const std::invalid_argument& e) {
        error(e.what());
      }
      error("unknown combinator '" + name + "'");
    }
    auto it = factories_.find(name);
    if (it == factories_.end()) error("unknown policy '" + name + "'");
    return it->second();
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (pos_ == start) error("expected a policy name");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void error(const std::string& what) const {
    throw ConfigError("policy spec '" + std::string(text_) + "': " + what);
  }

  std::string_view text_;
  const std::map<std::string, PolicyFactory, std::less<>>& factories_;
  std::size_t pos_ = 0;
};

PredictorSpec::Source parse_source(std::string_view name, PredictorSpec& spec) {
  using Source = PredictorSpec::Source;
  std::string_view args;
  if (const auto colon = name.find(':'); colon != std::string_view::npos) {
    args = name.substr(colon + 1);
    name = strip(name.substr(0, colon));
  }
  Source source;
  if (name == "none") {
    source = Source::kNone;
  } else if (name == "lognormal") {
    source = Source::kLognormal;
  } else if (name == "flip") {
    source = Source::kFlip;
  } else if (name == "fitf") {
    source = Source::kFitf;
  } else if (name == "inverted") {
    source = Source::kInverted;
  } else if (name == "popu") {
    source = Source::kPopu;
  } else if (name == "pleco") {
    source = Source::kPleco;
  } else {
    throw ConfigError("unknown predictor '" + std::string(name) + "'");
  }
  if (!args.empty()) {
    if (source != Source::kPleco) {
      throw ConfigError("predictor '" + std::string(name) + "' takes no arguments");
    }
    const auto parts = split_commas(args);
    if (parts.size() > 3) throw ConfigError("pleco takes at most alpha,offset,horizon");
    spec.pleco.alpha = parse_number(parts[0], "pleco alpha");
    if (parts.size() > 1) spec.pleco.offset = parse_number(parts[1], "pleco offset");
    if (parts.size() > 2) {
      const double h = parse_number(parts[2], "pleco horizon");
      if (h < 0 || h != std::floor(h)) throw ConfigError("pleco horizon must be a count");
      spec.pleco.horizon = static_cast<std::size_t>(h);
    }
    if (!(spec.pleco.alpha > 0) || !(spec.pleco.offset > 0)) {
      throw ConfigError("pleco alpha and offset must be positive");
    }
  }
  return source;
}

}  // namespace

// ---------------------------------------------------------------------------
// Policies

PolicyRegistry& PolicyRegistry::global() {
  static PolicyRegistry* registry = [] {
    auto* r = new PolicyRegistry;
    r->add("lru", [] { return std::make_unique<LruPolicy>(); });
    r->add("marker", [] { return std::make_unique<MarkerPolicy>(); });
    r->add("belady", [] { return std::make_unique<BeladyPolicy>(); });
    r->add("blind_oracle", [] { return std::make_unique<BlindOraclePolicy>(); });
    r->add("lrb", [] { return std::make_unique<LrbFollowerPolicy>(); });
    r->add("fitf", [] { return std::make_unique<FitfFollowerPolicy>(); });
    return r;
  }();
  return *registry;
}

void PolicyRegistry::add(std::string name, PolicyFactory make) {
  if (name.empty() || !make) throw std::invalid_argument("policy needs a name and a factory");
  std::lock_guard lock(mu_);
  factories_[std::move(name)] = std::move(make);
}

bool PolicyRegistry::remove(const std::string& name) {
  std::lock_guard lock(mu_);
  return factories_.erase(name) > 0;
}

bool PolicyRegistry::contains(const std::string& name) const {
  std::lock_guard lock(mu_);
  return factories_.contains(name);
}

std::vector<std::string> PolicyRegistry::names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, make] : factories_) out.push_back(name);
  return out;
}

std::unique_ptr<Policy> PolicyRegistry::make(std::string_view spec) const {
  std::lock_guard lock(mu_);
  return PolicySpecParser(spec, factories_).parse_all();
}

std::unique_ptr<Policy> make_policy(std::string_view spec) {
  return PolicyRegistry::global().make(spec);
}

// ---------------------------------------------------------------------------
// Predictors

bool PredictorSpec::sweeps() const {
  return source == Source::kLognormal || source == Source::kFlip || source == Source::kFitf;
}

bool PredictorSpec::deterministic() const { return !sweeps(); }

PredictionKind PredictorSpec::kind() const {
  if (binary) return PredictionKind::kBinary;
  switch (source) {
    case Source::kNone: return PredictionKind::kNone;
    case Source::kFlip: return PredictionKind::kBinary;
    case Source::kFitf: return PredictionKind::kFitf;
    default: return PredictionKind::kNrt;
  }
}

PredictorSpec parse_predictor(std::string_view text) {
  PredictorSpec spec;
  text = strip(text);
  spec.text = std::string(text);
  constexpr std::string_view kBinary = "binary(";
  if (text.substr(0, kBinary.size()) == kBinary) {
    const auto close = text.find(')');
    if (close == std::string_view::npos) throw ConfigError("unclosed binary( in '" + spec.text + "'");
    spec.binary = true;
    spec.source = parse_source(strip(text.substr(kBinary.size(), close - kBinary.size())), spec);
    if (spec.source != PredictorSpec::Source::kPopu &&
        spec.source != PredictorSpec::Source::kPleco &&
        spec.source != PredictorSpec::Source::kLognormal) {
      throw ConfigError("binary() wraps popu, pleco or lognormal, got '" + spec.text + "'");
    }
    auto rest = strip(text.substr(close + 1));
    if (!rest.empty()) {
      if (rest.front() != ':') throw ConfigError("unexpected '" + std::string(rest) + "'");
      spec.boundary = parse_number(rest.substr(1), "binary boundary");
      if (!(*spec.boundary > 0)) throw ConfigError("binary boundary must be positive");
    }
    return spec;
  }
  spec.source = parse_source(text, spec);
  return spec;
}

PredictionBundle build_bundle(const PredictorSpec& spec, const Trace& trace, std::size_t k,
                              double param, std::uint64_t seed) {
  using Source = PredictorSpec::Source;
  PredictionBundle bundle;
  switch (spec.source) {
    case Source::kNone: return bundle;
    case Source::kLognormal: bundle = synthetic_nrt(trace, param, seed); break;
    case Source::kFlip: return flip_labels(trace, k, param, seed);
    case Source::kFitf: return noisy_fitf(trace, param, seed);
    case Source::kInverted: bundle = inverted_nrt(trace); break;
    case Source::kPopu: bundle = popu(trace); break;
    case Source::kPleco: bundle = pleco(trace, spec.pleco); break;
  }
  if (!spec.binary) return bundle;
  const double boundary = spec.boundary ? *spec.boundary : default_belady_boundary(trace, k);
  return binary_from_nrt(bundle, trace, boundary);
}

// ---------------------------------------------------------------------------
// Configuration

TraceFormat parse_format(std::string_view name) {
  if (name == "plain") return TraceFormat::kPlain;
  if (name == "brightkite") return TraceFormat::kBrightKite;
  if (name == "citi") return TraceFormat::kCiti;
  if (name == "addr") return TraceFormat::kAddress;
  throw ConfigError("unknown trace format '" + std::string(name) + "'");
}

std::string_view to_string(TraceFormat format) {
  switch (format) {
    case TraceFormat::kPlain: return "plain";
    case TraceFormat::kBrightKite: return "brightkite";
    case TraceFormat::kCiti: return "citi";
    case TraceFormat::kAddress: return "addr";
  }
  return "?";
}

std::size_t ExperimentConfig::cache_size() const {
  if (k) return *k;
  switch (format) {
    case TraceFormat::kBrightKite: return 10;
    case TraceFormat::kCiti: return 100;
    case TraceFormat::kAddress: return static_cast<std::size_t>(address.ways);
    case TraceFormat::kPlain: break;
  }
  throw ConfigError("--k is required for plain traces");
}

void ExperimentConfig::validate() const {
  if (cache_size() < 1) throw ConfigError("cache size must be at least 1");
  if (policies.empty()) throw ConfigError("no policy given");
  if (predictors.empty()) throw ConfigError("no predictor given");
  if (sweep.empty()) throw ConfigError("sweep grid is empty");
  if (seeds < 1) throw ConfigError("need at least one seed");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (format == TraceFormat::kAddress) {
    try {
      address.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  for (const auto& text : predictors) {
    const auto spec = parse_predictor(text);
    if (!spec.sweeps()) continue;
    for (double v : sweep) {
      if (!std::isfinite(v) || v < 0) throw ConfigError("sweep values must be finite and >= 0");
      if (spec.source != PredictorSpec::Source::kLognormal && v > 1) {
        throw ConfigError("predictor '" + text + "' takes probabilities in [0,1]");
      }
    }
  }
  for (const auto& text : policies) {
    const auto needed = make_policy(text)->required_prediction();
    if (needed == PredictionKind::kNone) continue;
    for (const auto& pred : predictors) {
      const auto have = parse_predictor(pred).kind();
      if (have != needed) {
        throw ConfigError("policy '" + text + "' needs " + std::string(to_string(needed)) +
                          " predictions but '" + pred + "' provides " +
                          std::string(to_string(have)));
      }
    }
  }
}

ExperimentConfig config_from_json(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  auto strings = [](const json& v) {
    std::vector<std::string> out;
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else {
      for (const auto& item : v) out.push_back(item.get<std::string>());
    }
    return out;
  };

  ExperimentConfig cfg;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "trace") {
        cfg.trace_path = v.get<std::string>();
      } else if (key == "format") {
        cfg.format = parse_format(v.get<std::string>());
      } else if (key == "k") {
        cfg.k = v.get<std::size_t>();
      } else if (key == "policy") {
        cfg.policies = strings(v);
      } else if (key == "pred") {
        cfg.predictors = strings(v);
      } else if (key == "sweep") {
        cfg.sweep.clear();
        if (v.is_string()) {
          for (auto part : split_commas(v.get<std::string>())) {
            cfg.sweep.push_back(parse_number(part, "sweep value"));
          }
        } else {
          for (const auto& item : v) cfg.sweep.push_back(item.get<double>());
        }
      } else if (key == "seeds") {
        cfg.seeds = v.get<std::size_t>();
      } else if (key == "out") {
        cfg.out = v.get<std::string>();
      } else if (key == "table") {
        cfg.table_out = v.get<std::string>();
      } else if (key == "opt_cache") {
        cfg.opt_cache_dir = v.get<std::string>();
      } else if (key == "phase_stats") {
        cfg.phase_stats = v.get<bool>();
      } else if (key == "assert_invariants") {
        cfg.assert_invariants = v.get<bool>();
      } else if (key == "timing") {
        cfg.timing = v.get<bool>();
      } else if (key == "jobs") {
        cfg.jobs = v.get<std::size_t>();
      } else if (key == "min_distinct") {
        cfg.min_distinct = v.get<std::size_t>();
      } else if (key == "station_column") {
        cfg.citi.station_column = v.get<std::string>();
      } else if (key == "cache_bytes") {
        cfg.address.capacity_bytes = v.get<std::uint64_t>();
      } else if (key == "line_bytes") {
        cfg.address.line_bytes = v.get<std::uint64_t>();
      } else if (key == "ways") {
        cfg.address.ways = v.get<std::uint64_t>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
  return cfg;
}

std::vector<NamedTrace> load_traces(const ExperimentConfig& config) {
  if (config.trace_path.empty()) throw ConfigError("no trace file given");
  const std::string text = read_file(config.trace_path);
  std::vector<NamedTrace> traces;
  try {
    switch (config.format) {
      case TraceFormat::kPlain:
        traces.push_back({fs::path(config.trace_path).stem().string(), parse_plain_trace(text)});
        break;
      case TraceFormat::kCiti:
        traces.push_back(
            {fs::path(config.trace_path).stem().string(), ingest_citibike(text, config.citi)});
        break;
      case TraceFormat::kBrightKite: {
        BrightKiteOptions opts;
        opts.min_distinct = config.min_distinct.value_or(2 * config.cache_size());
        for (auto& user : ingest_brightkite(text, opts)) {
          traces.push_back({"user" + user.user, std::move(user.trace)});
        }
        break;
      }
      case TraceFormat::kAddress:
        for (auto& [set, trace] : ingest_address_trace(text, config.address)) {
          traces.push_back({"set" + std::to_string(set), std::move(trace)});
        }
        break;
    }
  } catch (const ParseError& e) {
    throw ConfigError(config.trace_path + ":" + std::to_string(e.line()) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(config.trace_path + ": " + e.what());
  }
  if (traces.empty()) throw ConfigError(config.trace_path + ": no usable trace");
  return traces;
}

// ---------------------------------------------------------------------------
// OPT cache

OptCache::OptCache(std::string dir) : dir_(std::move(dir)) {}

std::size_t OptCache::get(const Trace& trace, std::size_t k) {
  const auto key = std::make_pair(trace_fingerprint(trace), k);
  std::lock_guard lock(mu_);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  fs::path file;
  if (!dir_.empty()) {
    char name[64];
    std::snprintf(name, sizeof name, "opt-%016llx-k%zu.txt",
                  static_cast<unsigned long long>(key.first), k);
    file = fs::path(dir_) / name;
    std::ifstream in(file);
    std::size_t stored = 0;
    if (in >> stored) {
      memo_[key] = stored;
      return stored;
    }
  }
  const std::size_t opt = opt_cost(trace, k);
  ++computed_;
  memo_[key] = opt;
  if (!file.empty()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
    // Write-then-rename so a concurrent reader never sees a partial number.
    const fs::path tmp = file.string() + ".tmp";
    {
      std::ofstream out(tmp);
      out << opt << '\n';
    }
    fs::rename(tmp, file, ec);
  }
  return opt;
}

// ---------------------------------------------------------------------------
// Running

const AggregateRow* RunTable::find(std::string_view policy, std::string_view predictor,
                                   double param) const {
  for (const auto& row : aggregates) {
    if (row.policy == policy && row.predictor == predictor && (!row.swept || row.param == param)) {
      return &row;
    }
  }
  return nullptr;
}

namespace {

struct WorkItem {
  std::size_t policy = 0;
  std::size_t predictor = 0;
  double param = 0.0;
  std::uint64_t seed = 0;
};

RunRow execute(const ExperimentConfig& config, const WorkItem& item,
               const std::vector<PredictorSpec>& predictors,
               const std::vector<NamedTrace>& traces, const std::vector<std::size_t>& opts,
               const std::map<std::pair<std::size_t, std::size_t>, PredictionBundle>& shared) {
  const std::size_t k = config.cache_size();
  const auto& spec = predictors[item.predictor];
  RunRow row;
  row.predictor = spec.text;
  row.param = item.param;
  row.swept = spec.sweeps();
  row.seed = item.seed;

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Trace& trace = traces[i].trace;
    auto policy = make_policy(config.policies[item.policy]);
    if (row.policy.empty()) row.policy = policy->name();
    const std::uint64_t run_seed = derive_seed(item.seed, i);
    PredictionBundle bundle =
        spec.deterministic()
            ? shared.at({item.predictor, i})
            : build_bundle(spec, trace, k, item.param, derive_seed(run_seed, 0xb0d1e));

    SimulationOptions options;
    options.check_invariants = config.assert_invariants;
    options.opt_misses = opts[i];
    const RunResult r = simulate(*policy, trace, k, bundle, run_seed, options);

    row.misses += r.misses;
    row.opt += r.opt_misses;
    row.eta.eta_t += r.eta.eta_t;
    row.eta.eta_b += r.eta.eta_b;
    row.eta.eta_f += r.eta.eta_f;
    if (config.timing) row.wall_ms += r.wall_ms;
    if (r.guard) {
      row.guard_events += r.guard->guard_events;
      row.max_guarded = std::max(row.max_guarded, r.guard->max_guarded);
      const PhaseReport report = phase_report(*r.guard, r.opt_misses);
      for (const auto& v : report.violations) {
        row.phase_violations.push_back(traces[i].label + ": " + v);
      }
      if (!report.upper_bound_ok) ++row.upper_bound_misses;
      if (config.phase_stats) row.phases.push_back({traces[i].label, r.guard->phases});
    }
  }
  row.ratio = row.opt == 0 ? 1.0 : static_cast<double>(row.misses) / static_cast<double>(row.opt);
  if (config.assert_invariants && !row.phase_violations.empty()) {
    throw InvariantViolation(row.policy + ": " + row.phase_violations.front());
  }
  return row;
}

}  // namespace

RunTable run(const ExperimentConfig& config, const std::vector<NamedTrace>& traces,
             OptCache* opt_cache) {
  config.validate();
  if (traces.empty()) throw ConfigError("no traces to run");
  const std::size_t k = config.cache_size();

  std::vector<PredictorSpec> predictors;
  for (const auto& text : config.predictors) predictors.push_back(parse_predictor(text));

  OptCache local;
  OptCache& cache = opt_cache != nullptr ? *opt_cache : local;
  std::vector<std::size_t> opts;
  for (const auto& t : traces) opts.push_back(cache.get(t.trace, k));

  // Seed-independent bundles are built once and copied into each run.
  std::map<std::pair<std::size_t, std::size_t>, PredictionBundle> shared;
  for (std::size_t p = 0; p < predictors.size(); ++p) {
    if (!predictors[p].deterministic()) continue;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      shared.emplace(std::make_pair(p, i), build_bundle(predictors[p], traces[i].trace, k, 0.0, 0));
    }
  }

  std::vector<WorkItem> items;
  for (std::size_t pol = 0; pol < config.policies.size(); ++pol) {
    for (std::size_t pred = 0; pred < predictors.size(); ++pred) {
      const std::vector<double> points =
          predictors[pred].sweeps() ? config.sweep : std::vector<double>{0.0};
      for (double param : points) {
        for (std::size_t s = 1; s <= config.seeds; ++s) items.push_back({pol, pred, param, s});
      }
    }
  }

  std::vector<RunRow> rows(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        rows[i] = execute(config, items[i], predictors, traces, opts, shared);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, items.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunTable table;
  table.k = k;
  for (const auto& t : traces) table.traces.push_back(t.label);
  table.rows = std::move(rows);

  // Consecutive rows that differ only in seed form one aggregate.
  for (std::size_t begin = 0; begin < table.rows.size();) {
    std::size_t end = begin;
    while (end < table.rows.size() && items[end].policy == items[begin].policy &&
           items[end].predictor == items[begin].predictor &&
           items[end].param == items[begin].param) {
      ++end;
    }
    const auto& first = table.rows[begin];
    AggregateRow agg;
    agg.policy = first.policy;
    agg.predictor = first.predictor;
    agg.param = first.param;
    agg.swept = first.swept;
    agg.opt = first.opt;
    const double count = static_cast<double>(end - begin);
    std::size_t miss_sum = 0, eta_b_sum = 0, eta_f_sum = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = table.rows[i];
      miss_sum += r.misses;
      eta_b_sum += r.eta.eta_b;
      eta_f_sum += r.eta.eta_f;
      agg.eta_t += r.eta.eta_t / count;
      agg.wall_ms += r.wall_ms / count;
    }
    // Integer sums divided once, so an all-optimal group has ratio exactly 1.
    agg.misses = static_cast<double>(miss_sum) / count;
    agg.eta_b = static_cast<double>(eta_b_sum) / count;
    agg.eta_f = static_cast<double>(eta_f_sum) / count;
    agg.ratio = agg.opt == 0 ? 1.0 : agg.misses / static_cast<double>(agg.opt);
    table.aggregates.push_back(std::move(agg));
    begin = end;
  }
  return table;
}

RunTable run(const ExperimentConfig& config) {
  config.validate();
  OptCache cache(config.opt_cache_dir);
  return run(config, load_traces(config), &cache);
}

// ---------------------------------------------------------------------------
// Output

void write_run_csv(std::ostream& out, const RunTable& table) {
  out << "policy,predictor,param,seed,misses,opt,ratio,eta_t,eta_b,eta_f,wall_ms\n";
  auto param = [](bool swept, double v) { return swept ? format_param(v) : std::string(); };
  std::size_t next_agg = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << quote(r.policy) << ',' << quote(r.predictor) << ',' << param(r.swept, r.param) << ','
        << r.seed << ',' << r.misses << ',' << r.opt << ',' << format_fixed(r.ratio) << ','
        << format_fixed(r.eta.eta_t) << ',' << r.eta.eta_b << ',' << r.eta.eta_f << ','
        << format_fixed(r.wall_ms) << '\n';
    const bool group_ends = i + 1 == table.rows.size() || table.rows[i + 1].policy != r.policy ||
                            table.rows[i + 1].predictor != r.predictor ||
                            table.rows[i + 1].param != r.param;
    if (group_ends && next_agg < table.aggregates.size()) {
      const auto& a = table.aggregates[next_agg++];
      out << quote(a.policy) << ',' << quote(a.predictor) << ',' << param(a.swept, a.param)
          << ",mean," << format_fixed(a.misses) << ',' << a.opt << ',' << format_fixed(a.ratio)
          << ',' << format_fixed(a.eta_t) << ',' << format_fixed(a.eta_b) << ','
          << format_fixed(a.eta_f) << ',' << format_fixed(a.wall_ms) << '\n';
    }
  }
}

void write_phase_rows_csv(std::ostream& out, const RunTable& table) {
  out << "policy,predictor,param,seed,trace,phase,c_q,n_q,o_q,n_q_new,n_q_old\n";
  for (const auto& r : table.rows) {
    for (const auto& rec : r.phases) {
      for (const auto& s : rec.phases) {
        out << quote(r.policy) << ',' << quote(r.predictor) << ','
            << (r.swept ? format_param(r.param) : std::string()) << ',' << r.seed << ','
            << quote(rec.trace) << ',' << s.q << ',' << s.c << ',' << s.n << ',' << s.o << ','
            << s.n_new << ',' << s.n_old << '\n';
      }
    }
  }
}

CompareTable compare(const std::vector<RunTable>& tables) {
  CompareTable result;
  if (tables.empty()) return result;
  for (const auto& t : tables) {
    if (t.k != tables.front().k) throw ConfigError("compared runs use different cache sizes");
  }
  auto column_of = [](const AggregateRow& a) {
    return a.swept ? a.predictor + "=" + format_param(a.param) : a.predictor;
  };
  auto index_of = [](std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(s);
    return v.size() - 1;
  };
  std::vector<std::vector<double>> sums;
  std::vector<std::vector<std::size_t>> counts;
  for (const auto& t : tables) {
    for (const auto& a : t.aggregates) {
      const std::size_t row = index_of(result.policies, a.policy);
      const std::size_t col = index_of(result.columns, column_of(a));
      sums.resize(result.policies.size());
      counts.resize(result.policies.size());
      for (std::size_t r = 0; r < sums.size(); ++r) {
        sums[r].resize(result.columns.size(), 0.0);
        counts[r].resize(result.columns.size(), 0);
      }
      sums[row][col] += a.ratio;
      ++counts[row][col];
    }
  }
  result.cells.assign(result.policies.size(),
                      std::vector<double>(result.columns.size(),
                                          std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t r = 0; r < result.policies.size(); ++r) {
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
      if (counts[r][c] > 0) result.cells[r][c] = sums[r][c] / static_cast<double>(counts[r][c]);
    }
  }
  return result;
}

void write_compare_csv(std::ostream& out, const CompareTable& table) {
  out << "policy";
  for (const auto& c : table.columns) out << ',' << quote(c);
  out << '\n';
  for (std::size_t r = 0; r < table.policies.size(); ++r) {
    out << quote(table.policies[r]);
    for (double v : table.cells[r]) {
      out << ',';
      if (!std::isnan(v)) out << format_fixed(v);
    }
    out << '\n';
  }
}

}  // namespace guardcache
