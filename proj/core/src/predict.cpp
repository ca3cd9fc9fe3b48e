#include "guardcache/predict.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "guardcache/oracle.hpp"

namespace guardcache {
namespace {

// Predicted times are integers no earlier than t+1.
double clamp_prediction(Time t, double value) {
  constexpr double kFar = 1e15;
  if (!(value < kFar)) value = kFar;  // also catches NaN and inf
  return std::max(static_cast<double>(t + 1), std::round(value));
}

double gap_from_probability(double p) {
  return std::max(1.0, std::round(1.0 / p));
}

}  // namespace

std::string_view to_string(PredictionKind kind) {
  switch (kind) {
    case PredictionKind::kNone: return "none";
    case PredictionKind::kNrt: return "nrt";
    case PredictionKind::kBinary: return "binary";
    case PredictionKind::kFitf: return "fitf";
  }
  return "?";
}

PagePositions::PagePositions(const Trace& trace) : sentinel_(trace.sentinel()) {
  for (const auto& r : trace.requests()) positions_[r.page].push_back(r.index);
}

Time PagePositions::next_after(PageId page, Time now) const {
  auto it = positions_.find(page);
  if (it == positions_.end()) return sentinel_;
  const auto& times = it->second;
  auto pos = std::upper_bound(times.begin(), times.end(), now);
  return pos == times.end() ? sentinel_ : *pos;
}

Time PagePositions::last_at_or_before(PageId page, Time now) const {
  auto it = positions_.find(page);
  if (it == positions_.end()) return 0;
  const auto& times = it->second;
  auto pos = std::upper_bound(times.begin(), times.end(), now);
  return pos == times.begin() ? 0 : *std::prev(pos);
}

FitfOracle::FitfOracle(const Trace& trace, double epsilon, std::uint64_t seed)
    : positions_(std::make_shared<const PagePositions>(trace)),
      epsilon_(epsilon),
      rng_(seed) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("fitf error rate must lie in [0,1]");
  }
}

PageId FitfOracle::true_fitf(std::span<const PageId> candidates, Time now) const {
  return fitf_page(candidates, [&](PageId p) {
    return FitfKey{positions_->next_after(p, now), positions_->last_at_or_before(p, now)};
  });
}

PageId FitfOracle::choose(std::span<const PageId> candidates, Time now) {
  if (candidates.empty()) throw std::invalid_argument("fitf query with no candidates");
  const PageId truth = true_fitf(candidates, now);
  ++queries_;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  if (u >= epsilon_ || candidates.size() == 1) return truth;

  // Reuse the same draw to pick among the m-1 wrong answers.
  const std::size_t others = candidates.size() - 1;
  auto slot = static_cast<std::size_t>(u / epsilon_ * static_cast<double>(others));
  slot = std::min(slot, others - 1);
  for (PageId p : candidates) {
    if (p == truth) continue;
    if (slot-- == 0) {
      ++wrong_;
      return p;
    }
  }
  return truth;  // unreachable with distinct candidates
}

PredictionBundle PredictionBundle::from_nrt(std::vector<double> nrt) {
  PredictionBundle b;
  b.payload_ = std::move(nrt);
  return b;
}

PredictionBundle PredictionBundle::from_labels(std::vector<std::uint8_t> labels) {
  PredictionBundle b;
  b.payload_ = std::move(labels);
  return b;
}

PredictionBundle PredictionBundle::from_fitf(FitfOracle oracle) {
  PredictionBundle b;
  b.payload_ = std::move(oracle);
  return b;
}

PredictionKind PredictionBundle::kind() const noexcept {
  switch (payload_.index()) {
    case 1: return PredictionKind::kNrt;
    case 2: return PredictionKind::kBinary;
    case 3: return PredictionKind::kFitf;
    default: return PredictionKind::kNone;
  }
}

std::size_t PredictionBundle::size() const noexcept {
  if (auto* v = std::get_if<std::vector<double>>(&payload_)) return v->size();
  if (auto* v = std::get_if<std::vector<std::uint8_t>>(&payload_)) return v->size();
  return 0;
}

std::span<const double> PredictionBundle::nrt_values() const {
  if (auto* v = std::get_if<std::vector<double>>(&payload_)) return *v;
  throw std::logic_error("prediction bundle carries no next-request times");
}

std::span<const std::uint8_t> PredictionBundle::label_values() const {
  if (auto* v = std::get_if<std::vector<std::uint8_t>>(&payload_)) return *v;
  throw std::logic_error("prediction bundle carries no binary labels");
}

FitfOracle& PredictionBundle::fitf() {
  if (auto* v = std::get_if<FitfOracle>(&payload_)) return *v;
  throw std::logic_error("prediction bundle carries no FitF oracle");
}

const FitfOracle& PredictionBundle::fitf() const {
  if (auto* v = std::get_if<FitfOracle>(&payload_)) return *v;
  throw std::logic_error("prediction bundle carries no FitF oracle");
}

PredictionBundle synthetic_nrt(const Trace& trace, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise scale must be non-negative");
  std::vector<double> nrt(trace.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Time t = 1; t <= trace.size(); ++t) {
    const double gap = static_cast<double>(trace.next(t) - t);
    const double factor = sigma == 0.0 ? 1.0 : std::exp(sigma * normal(rng));
    nrt[t - 1] = clamp_prediction(t, static_cast<double>(t) + gap * factor);
  }
  return PredictionBundle::from_nrt(std::move(nrt));
}

PredictionBundle inverted_nrt(const Trace& trace) {
  std::vector<double> nrt(trace.size());
  const double top = static_cast<double>(trace.sentinel());
  for (Time t = 1; t <= trace.size(); ++t) {
    nrt[t - 1] = clamp_prediction(t, top - static_cast<double>(trace.next(t)));
  }
  return PredictionBundle::from_nrt(std::move(nrt));
}

PredictionBundle flip_labels(const Trace& trace, std::size_t k, double p_flip,
                             std::uint64_t seed) {
  if (!(p_flip >= 0.0 && p_flip <= 1.0)) {
    throw std::invalid_argument("flip probability must lie in [0,1]");
  }
  auto labels = belady_labels(trace, k);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(p_flip);
  for (auto& y : labels) {
    if (flip(rng)) y ^= 1;
  }
  return PredictionBundle::from_labels(std::move(labels));
}

PredictionBundle pleco(const Trace& trace, const PlecoParams& params) {
  if (!(params.alpha > 0.0) || !(params.offset > 0.0)) {
    throw std::invalid_argument("PLECO parameters must be positive");
  }
  const std::size_t n = trace.size();
  // weight[g] for gap g >= 1, prefix[g] = weight[1] + ... + weight[g].
  std::vector<double> weight(n + 1, 0.0);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t g = 1; g <= n; ++g) {
    weight[g] = std::pow(static_cast<double>(g) + params.offset, -params.alpha);
    prefix[g] = prefix[g - 1] + weight[g];
  }
  std::unordered_map<PageId, std::vector<Time>> history;
  std::vector<double> nrt(n);
  for (Time t = 1; t <= n; ++t) {
    auto& past = history[trace.page(t)];
    double p = 1.0;
    if (!past.empty()) {
      const std::size_t reach = params.horizon == 0 ? t - 1 : std::min(t - 1, params.horizon);
      double own = 0.0;
      for (auto it = past.rbegin(); it != past.rend() && t - *it <= reach; ++it) {
        own += weight[t - *it];
      }
      p = own / prefix[reach];  // 0 when the whole history is past the horizon
    }
    nrt[t - 1] = clamp_prediction(t, static_cast<double>(t) + gap_from_probability(p));
    past.push_back(t);
  }
  return PredictionBundle::from_nrt(std::move(nrt));
}

PredictionBundle popu(const Trace& trace) {
  std::unordered_map<PageId, std::size_t> counts;
  std::vector<double> nrt(trace.size());
  for (Time t = 1; t <= trace.size(); ++t) {
    const std::size_t c = ++counts[trace.page(t)];
    const double p = static_cast<double>(c) / static_cast<double>(t);
    nrt[t - 1] = clamp_prediction(t, static_cast<double>(t) + gap_from_probability(p));
  }
  return PredictionBundle::from_nrt(std::move(nrt));
}

PredictionBundle noisy_fitf(const Trace& trace, double epsilon, std::uint64_t seed) {
  return PredictionBundle::from_fitf(FitfOracle(trace, epsilon, seed));
}

double default_belady_boundary(const Trace& trace, std::size_t k) {
  const auto outcome = belady_simulate(trace, k);
  const PagePositions positions(trace);
  const Time warmup = std::max<Time>(1, trace.size() / 10);
  std::vector<double> warm;
  std::vector<double> all;
  for (const auto& e : outcome.evictions) {
    const double gap = static_cast<double>(positions.next_after(e.page, e.at) - e.at);
    all.push_back(gap);
    if (e.at <= warmup) warm.push_back(gap);
  }
  auto& gaps = warm.empty() ? all : warm;
  if (gaps.empty()) return static_cast<double>(trace.size());
  std::sort(gaps.begin(), gaps.end());
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(gaps.size())));
  return gaps[std::max<std::size_t>(rank, 1) - 1];
}

PredictionBundle binary_from_nrt(const PredictionBundle& nrt, const Trace& trace,
                                 double boundary) {
  if (!(boundary > 0.0)) throw std::invalid_argument("boundary must be positive");
  const auto values = nrt.nrt_values();
  if (values.size() != trace.size()) throw std::invalid_argument("bundle/trace length mismatch");
  std::vector<std::uint8_t> labels(values.size());
  for (Time t = 1; t <= values.size(); ++t) {
    labels[t - 1] = values[t - 1] - static_cast<double>(t) > boundary ? 1 : 0;
  }
  return PredictionBundle::from_labels(std::move(labels));
}

PredictionError measure_error(const PredictionBundle& bundle, const Trace& trace,
                              std::size_t k) {
  PredictionError err;
  switch (bundle.kind()) {
    case PredictionKind::kNone:
      break;
    case PredictionKind::kNrt: {
      const auto values = bundle.nrt_values();
      for (Time t = 1; t <= trace.size(); ++t) {
        err.eta_t += std::abs(values[t - 1] - static_cast<double>(trace.next(t)));
      }
      break;
    }
    case PredictionKind::kBinary: {
      const auto truth = belady_labels(trace, k);
      const auto values = bundle.label_values();
      for (std::size_t i = 0; i < truth.size(); ++i) {
        if ((values[i] != 0) != (truth[i] != 0)) ++err.eta_b;
      }
      break;
    }
    case PredictionKind::kFitf:
      err.eta_f = bundle.fitf().wrong();
      break;
  }
  return err;
}

void write_bundle_csv(std::ostream& out, const PredictionBundle& bundle) {
  switch (bundle.kind()) {
    case PredictionKind::kNrt: {
      out << "index,predicted_nrt\n";
      const auto values = bundle.nrt_values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        out << (i + 1) << ',' << static_cast<long long>(values[i]) << '\n';
      }
      break;
    }
    case PredictionKind::kBinary: {
      out << "index,label\n";
      const auto values = bundle.label_values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        out << (i + 1) << ',' << static_cast<int>(values[i]) << '\n';
      }
      break;
    }
    default:
      throw std::invalid_argument("only NRT and binary bundles can be exported");
  }
}

PredictionBundle read_bundle_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty prediction file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool is_nrt = line == "index,predicted_nrt";
  if (!is_nrt && line != "index,label") throw ParseError("unknown prediction header", 1);

  std::vector<double> nrt;
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::size_t index = 0;
    char comma = 0;
    double value = 0;
    if (!(row >> index >> comma >> value) || comma != ',') {
      throw ParseError("malformed prediction row", line_no);
    }
    const std::size_t expected = (is_nrt ? nrt.size() : labels.size()) + 1;
    if (index != expected) throw ParseError("indices must be consecutive from 1", line_no);
    if (is_nrt) {
      if (!(value > static_cast<double>(index))) {
        throw ParseError("predicted time must lie after its request", line_no);
      }
      nrt.push_back(value);
    } else {
      if (value != 0.0 && value != 1.0) throw ParseError("label must be 0 or 1", line_no);
      labels.push_back(static_cast<std::uint8_t>(value));
    }
  }
  return is_nrt ? PredictionBundle::from_nrt(std::move(nrt))
                : PredictionBundle::from_labels(std::move(labels));
}

}  // namespace guardcache
