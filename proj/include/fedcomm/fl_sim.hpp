#pragma once

// Federated averaging: participant selection, per-update clipping,
// aggregation, and the three sources of participant updates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fedcomm/cdma_channel.hpp"
#include "fedcomm/detection.hpp"
#include "fedcomm/nn_model.hpp"
#include "fedcomm/rng.hpp"

namespace fedcomm {

enum class SelectionPolicy { Random, RoundRobin };

struct RoundSchedule {
  std::size_t n = 1;
  double fraction = 1.0;
  SelectionPolicy policy = SelectionPolicy::Random;
  Seed seed = 0;

  // round-half-up of fraction * n, kept within [1, n]
  std::size_t cohort_size() const {
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
    return std::clamp<std::size_t>(k, 1, n);
  }
  void validate() const {
    if (n == 0) throw std::invalid_argument("RoundSchedule: need at least one participant");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("RoundSchedule: fraction must be in (0, 1]");
  }
};

// Participant ids for a round, ascending. Random selection is a pure
// function of (seed, round); round-robin walks consecutive blocks of n'.
inline std::vector<std::size_t> select_participants(const RoundSchedule& s, std::size_t round) {
  s.validate();
  const std::size_t k = s.cohort_size();
  std::vector<std::size_t> ids;
  ids.reserve(k);
  if (k == s.n) {
    ids.resize(s.n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    return ids;
  }
  if (s.policy == SelectionPolicy::RoundRobin) {
    const std::size_t start = (round * k) % s.n;
    for (std::size_t i = 0; i < k; ++i) ids.push_back((start + i) % s.n);
  } else {
    std::vector<std::size_t> all(s.n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    CounterStream rng(derive_seed(s.seed, {stream::selection, round}));
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(s.n - i));
      std::swap(all[i], all[j]);
    }
    ids.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct AggregatorConfig {
  double alpha = 1.0;
  std::optional<double> clip_norm;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("AggregatorConfig: alpha must be positive");
    if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("AggregatorConfig: clip norm must be positive");
  }
};

inline UpdateVector clip_update(std::span<const double> u, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip_update: max_norm must be positive");
  UpdateVector out(u.begin(), u.end());
  const double norm = frobenius_norm(u);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& v : out) v *= scale;
  }
  return out;
}

// W + (alpha / n') * sum(updates), clipping each update first when configured.
// Updates are summed in the order given.
inline ParamVector aggregate(std::span<const double> w_t, std::span<const UpdateVector> updates,
                             const AggregatorConfig& cfg) {
  cfg.validate();
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
  std::vector<double> sum(w_t.size(), 0.0);
  for (const auto& u : updates) {
    if (u.size() != w_t.size()) throw std::invalid_argument("aggregate: update length mismatch");
    if (cfg.clip_norm) {
      const auto c = clip_update(u, *cfg.clip_norm);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c[i];
    } else {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += u[i];
    }
  }
  const double scale = cfg.alpha / static_cast<double>(updates.size());
  ParamVector out(w_t.begin(), w_t.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * sum[i];
  return out;
}

// Per-(round, participant) standard deviation of submitted updates.
class VarianceTrace {
 public:
  void record(std::size_t round, std::size_t participant, double std_dev) { entries_[{round, participant}] = std_dev; }

  double std_dev(std::size_t round, std::size_t participant) const {
    auto it = entries_.find({round, participant});
    if (it == entries_.end()) {
      std::ostringstream msg;
      msg << "variance trace has no entry for round " << round << ", participant " << participant;
      throw std::out_of_range(msg.str());
    }
    return it->second;
  }
  std::size_t size() const noexcept { return entries_.size(); }
  const auto& entries() const noexcept { return entries_; }
  bool operator==(const VarianceTrace&) const = default;

  // CSV: round,participant_id,std
  void write_csv(std::ostream& out) const {
    out << "round,participant_id,std\n" << std::setprecision(17);
    for (const auto& [key, v] : entries_) out << key.first << ',' << key.second << ',' << v << '\n';
  }
  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write variance trace: " + path);
    write_csv(f);
  }
  static VarianceTrace read_csv(std::istream& in) {
    VarianceTrace t;
    std::string line;
    if (!std::getline(in, line) || line != "round,participant_id,std")
      throw std::runtime_error("variance trace: unexpected header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string a, b, c;
      if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
        throw std::runtime_error("variance trace: malformed line " + std::to_string(lineno));
      t.record(std::stoull(a), std::stoull(b), std::stod(c));
    }
    return t;
  }
  static VarianceTrace load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read variance trace: " + path);
    return read_csv(f);
  }

 private:
  std::map<std::pair<std::size_t, std::size_t>, double> entries_;
};

// Population standard deviation of every entry of an update.
inline double update_std(std::span<const double> u) {
  if (u.empty()) return 0.0;
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
  double ss = 0.0;
  for (double v : u) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(u.size()));
}

struct SubmittedUpdate {
  std::size_t participant = 0;
  UpdateVector update;
};
using RoundSubmissions = std::vector<SubmittedUpdate>;

// Trace of a finished run; rounds are numbered from 1.
inline VarianceTrace record_variance_trace(std::span<const RoundSubmissions> run) {
  VarianceTrace t;
  for (std::size_t r = 0; r < run.size(); ++r)
    for (const auto& s : run[r]) t.record(r + 1, s.participant, update_std(s.update));
  return t;
}

struct RealGradients {};
struct RecordedVarianceGaussian {
  VarianceTrace trace;
};
struct FixedGaussian {
  double sigma = 1.0;
};
using GradientMode = std::variant<RealGradients, RecordedVarianceGaussian, FixedGaussian>;

// Everything Real mode needs to train a participant locally.
struct TrainingSetup {
  MlpArchitecture arch;
  std::vector<Shard> shards;  // one per participant
  double lr = 0.05;
  int local_epochs = 1;
  std::size_t batch_size = 32;
  double weight_decay = 0.0;
};

inline Seed participant_seed(Seed seed, std::size_t round, std::size_t participant) {
  return derive_seed(seed, {stream::gaussian_update, round, participant});
}

inline UpdateVector gaussian_update(std::size_t length, double sigma, Seed seed) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian update: sigma must be positive");
  auto eng = make_engine(seed);
  std::normal_distribution<double> nd(0.0, sigma);
  UpdateVector u(length);
  for (auto& v : u) v = nd(eng);
  return u;
}

// The update one participant submits in one round, before any embedding.
inline UpdateVector produce_update(const GradientMode& mode, std::size_t participant, std::span<const double> w_t,
                                   std::size_t round, Seed seed, const TrainingSetup* training = nullptr) {
  const Seed s = participant_seed(seed, round, participant);
  return std::visit(
      [&](const auto& m) -> UpdateVector {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FixedGaussian>) {
          return gaussian_update(w_t.size(), m.sigma, s);
        } else if constexpr (std::is_same_v<M, RecordedVarianceGaussian>) {
          return gaussian_update(w_t.size(), m.trace.std_dev(round, participant), s);
        } else {
          if (!training) throw std::invalid_argument("produce_update: real mode needs a training setup");
          if (participant >= training->shards.size()) throw std::out_of_range("produce_update: no shard for participant");
          return local_update(w_t, training->arch, training->shards[participant], training->lr, training->local_epochs,
                              training->batch_size, s, training->weight_decay);
        }
      },
      mode);
}

}  // namespace fedcomm
