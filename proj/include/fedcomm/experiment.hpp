#pragma once

// Experiment configuration, the round loop, and round-log I/O.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedcomm/cdma_channel.hpp"
#include "fedcomm/detection.hpp"
#include "fedcomm/fl_sim.hpp"
#include "fedcomm/ldpc_codec.hpp"
#include "fedcomm/nn_model.hpp"
#include "fedcomm/payload_framing.hpp"

namespace fedcomm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModeKind { Real, RecordedVariance, FixedGaussian };

// A further set of senders transmitting its own payload under its own
// shared and pilot seeds. Unset seeds derive from the top-level ones and
// the group index.
struct SenderGroup {
  std::vector<std::size_t> senders;
  std::string payload;
  std::optional<Seed> shared_seed;
  std::optional<Seed> pilot_seed;
};

struct ExperimentConfig {
  std::size_t n = 100;
  double fraction = 1.0;
  SelectionPolicy selection = SelectionPolicy::Random;
  std::size_t rounds = 100;
  std::optional<std::size_t> stop_grace;  // stop this many rounds after delivery

  ModeKind mode = ModeKind::FixedGaussian;
  double sigma = 1.0;
  std::string variance_trace;  // recorded-variance replay input

  MlpArchitecture arch{{784, 28, 10}};
  std::size_t samples = 6000;
  std::size_t test_samples = 1000;
  std::size_t shards_per_user = 2;
  SyntheticSpec data;
  double lr = 0.05;
  int local_epochs = 1;
  std::size_t batch_size = 32;
  double weight_decay = 0.0;

  std::vector<std::size_t> senders{0};
  std::size_t receiver = 1;
  double delta = 1.0;
  std::string payload = "hello world!";
  std::string payload_file;
  std::optional<std::size_t> carriers;  // R; defaults to the parameter count
  std::map<std::size_t, SenderGroup> groups;  // extra sender groups, keyed by index >= 2

  Seed shared_seed = 1;
  Seed pilot_seed = 2;
  Seed seed = 3;

  double alpha = 1.0;
  std::optional<double> clip_norm;
  bool eve_logging = false;
  int bp_iterations = kDefaultBpIterations;

  std::size_t param_count() const { return arch.param_count(); }
  Seed group_shared_seed(std::size_t g) const {
    const auto& grp = groups.at(g);
    return grp.shared_seed.value_or(derive_seed(shared_seed, {g}));
  }
  Seed group_pilot_seed(std::size_t g) const {
    const auto& grp = groups.at(g);
    return grp.pilot_seed.value_or(derive_seed(pilot_seed, {g}));
  }
  std::size_t carrier_count() const { return carriers.value_or(param_count()); }

  Payload load_payload() const {
    if (payload_file.empty()) return Payload::from_text(payload);
    std::ifstream f(payload_file, std::ios::binary);
    if (!f) throw ConfigError("cannot read payload file: " + payload_file);
    Payload p;
    p.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    if (p.bytes.empty()) throw ConfigError("payload file is empty: " + payload_file);
    return p;
  }

  void validate() const {
    if (n == 0) throw ConfigError("n must be positive");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must be in (0, 1]");
    if (rounds == 0) throw ConfigError("rounds must be positive");
    try {
      arch.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must be in (0, 1]");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
    if (receiver >= n) throw ConfigError("receiver id must be a participant");
    std::set<std::size_t> seen;
    for (auto s : senders) {
      if (s >= n) throw ConfigError("sender id " + std::to_string(s) + " is not a participant");
      if (!seen.insert(s).second) throw ConfigError("duplicate sender id " + std::to_string(s));
    }
    if (carrier_count() == 0 || carrier_count() > param_count())
      throw ConfigError("carriers must be in [1, parameter count]");
    if (bp_iterations < 1) throw ConfigError("bp_iterations must be positive");
    if (lr < 0.0 || local_epochs < 1 || batch_size == 0 || weight_decay < 0.0) throw ConfigError("invalid local training settings");
    if (mode == ModeKind::RecordedVariance && variance_trace.empty())
      throw ConfigError("recorded_variance mode needs variance_trace");
    if (mode == ModeKind::Real) {
      if (samples % (n * shards_per_user) != 0)
        throw ConfigError("samples must be a multiple of n * shards_per_user");
      if (test_samples == 0) throw ConfigError("test_samples must be positive");
    }
    const auto p = frame_length(payload_file.empty() ? payload.size() : load_payload().bytes.size());
    if (payload_file.empty() && payload.empty()) throw ConfigError("payload must be nonempty");
    if (p >= carrier_count())
      throw ConfigError("payload frame of " + std::to_string(p) + " bits does not fit in " +
                        std::to_string(carrier_count()) + " carriers");
    std::set<Seed> channel_seeds{shared_seed};
    for (const auto& [g, grp] : groups) {
      const auto name = "group" + std::to_string(g);
      if (g < 2) throw ConfigError("sender group indices start at 2");
      if (grp.senders.empty()) throw ConfigError(name + " has no senders");
      if (grp.payload.empty()) throw ConfigError(name + " has no payload");
      for (auto s : grp.senders) {
        if (s >= n) throw ConfigError(name + ": sender id " + std::to_string(s) + " is not a participant");
        if (!seen.insert(s).second) throw ConfigError(name + ": sender id " + std::to_string(s) + " is in two groups");
      }
      if (frame_length(grp.payload.size()) >= carrier_count()) throw ConfigError(name + ": payload frame does not fit");
      if (!channel_seeds.insert(group_shared_seed(g)).second)
        throw ConfigError(name + ": shared_seed must differ from every other group's");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::size_t> parse_id_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(std::stoull(item));
  }
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("not a boolean: " + v);
}

}  // namespace detail

// Flat `key = value` lines; `#` starts a comment line. Unknown keys are errors.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(t.substr(0, eq));
    const auto val = detail::trim(t.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
    try {
      if (key == "n") c.n = std::stoull(val);
      else if (key == "fraction") c.fraction = std::stod(val);
      else if (key == "selection") {
        if (val == "random") c.selection = SelectionPolicy::Random;
        else if (val == "round_robin") c.selection = SelectionPolicy::RoundRobin;
        else throw ConfigError("selection must be random or round_robin");
      } else if (key == "rounds") c.rounds = std::stoull(val);
      else if (key == "stop_grace") c.stop_grace = std::stoull(val);
      else if (key == "mode") {
        if (val == "real") c.mode = ModeKind::Real;
        else if (val == "fixed_gaussian") c.mode = ModeKind::FixedGaussian;
        else if (val == "recorded_variance") c.mode = ModeKind::RecordedVariance;
        else throw ConfigError("mode must be real, fixed_gaussian or recorded_variance");
      } else if (key == "sigma") c.sigma = std::stod(val);
      else if (key == "variance_trace") c.variance_trace = val;
      else if (key == "arch") c.arch.layer_sizes = detail::parse_id_list(val);
      else if (key == "samples") c.samples = std::stoull(val);
      else if (key == "test_samples") c.test_samples = std::stoull(val);
      else if (key == "shards_per_user") c.shards_per_user = std::stoull(val);
      else if (key == "separation") c.data.separation = std::stod(val);
      else if (key == "noise") c.data.noise = std::stod(val);
      else if (key == "latent_dim") c.data.latent_dim = std::stoull(val);
      else if (key == "lr") c.lr = std::stod(val);
      else if (key == "local_epochs") c.local_epochs = std::stoi(val);
      else if (key == "batch_size") c.batch_size = std::stoull(val);
      else if (key == "weight_decay") c.weight_decay = std::stod(val);
      else if (key == "senders") c.senders = detail::parse_id_list(val);
      else if (key == "receiver") c.receiver = std::stoull(val);
      else if (key == "delta") c.delta = std::stod(val);
      else if (key == "payload") c.payload = val;
      else if (key == "payload_file") c.payload_file = val;
      else if (key == "carriers") c.carriers = std::stoull(val);
      else if (key == "shared_seed") c.shared_seed = std::stoull(val);
      else if (key == "pilot_seed") c.pilot_seed = std::stoull(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "alpha") c.alpha = std::stod(val);
      else if (key == "clip_norm") c.clip_norm = std::stod(val);
      else if (key == "eve_logging") c.eve_logging = detail::parse_bool(val);
      else if (key == "bp_iterations") c.bp_iterations = std::stoi(val);
      else if (key.rfind("group", 0) == 0 && key.find('.') != std::string::npos) {
        const auto dot = key.find('.');
        const auto idx = key.substr(5, dot - 5);
        const auto field = key.substr(dot + 1);
        if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
          throw ConfigError("unknown key: " + key);
        auto& grp = c.groups[std::stoull(idx)];
        if (field == "senders") grp.senders = detail::parse_id_list(val);
        else if (field == "payload") grp.payload = val;
        else if (field == "shared_seed") grp.shared_seed = std::stoull(val);
        else if (field == "pilot_seed") grp.pilot_seed = std::stoull(val);
        else throw ConfigError("unknown key: " + key);
      } else throw ConfigError("unknown key: " + key);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad value for " + key + ": " + val);
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_config(f);
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RoundRecord {
  std::size_t round = 0;
  double accuracy = kNaN;  // Real mode only
  double loss = kNaN;
  bool delivered = false;
  ReceiveStatus status = ReceiveStatus::NotYetDecodable;
  double prefec_ber = kNaN;
  double sender_norm = kNaN;  // first selected sender
  double cohort_norm_mean = kNaN;
  double cohort_norm_std = kNaN;
  double ks_d = kNaN;  // sender vs lowest-id selected regular participant
  double ks_p = kNaN;
  double wall_clock_ms = 0.0;  // not written to the log
};

struct EveRow {
  std::size_t round = 0;
  std::size_t participant = 0;
  double norm = 0.0;
  double z = 0.0;
  double ks_d = kNaN;
  double ks_p = kNaN;
};

struct DeliveryReport {
  bool delivered = false;
  std::size_t t_observed = 0;  // first round with an exact decode, 0 if none
  double t_predicted = kNaN;
  double accuracy_gap = kNaN;  // final accuracy minus baseline final accuracy
  std::size_t false_accepts = 0;  // zero-syndrome decodes that did not match the payload
  std::optional<Payload> decoded;
  std::size_t frame_bits = 0;
};

struct RunResult {
  std::vector<RoundRecord> records;
  DeliveryReport report;
  VarianceTrace trace;  // std of every submitted update
  std::vector<EveRow> eve;
  std::vector<DeliveryReport> group_reports;  // one per extra sender group, in index order
};

// Theory bound for the config: nP / (M^2 delta^2 (R - P)), stretched by n / n'
// when only a cohort of n' participants is averaged each round.
inline double predicted_rounds(const ExperimentConfig& cfg) {
  if (cfg.senders.empty()) return kNaN;
  const auto p = static_cast<double>(frame_length(cfg.load_payload().bytes.size()));
  const RoundSchedule sched{cfg.n, cfg.fraction, cfg.selection, cfg.seed};
  const double stretch = static_cast<double>(cfg.n) / static_cast<double>(sched.cohort_size());
  return predict(static_cast<double>(cfg.n), p, static_cast<double>(cfg.carrier_count()), cfg.delta,
                 static_cast<double>(cfg.senders.size()), 1.0, 1.0)
             .t_min *
         stretch;
}

namespace detail {

// One covert channel: a sender group, its frame, and the receiver's view.
struct Channel {
  Payload payload;
  Seed pilot_seed = 0;
  LdpcCode code;
  Frame tx;
  SpreadingPlan plan;
  std::vector<double> spread_signal;
  std::set<std::size_t> senders;
  DeliveryReport report;
};

inline Channel make_channel(const ExperimentConfig& cfg, const Payload& payload, const std::vector<std::size_t>& senders,
                            Seed shared_seed, Seed pilot_seed) {
  CodeBook book(derive_seed(shared_seed, {stream::ldpc}));
  const auto& code = book.for_payload(payload);
  Frame tx = frame(payload, code, pilot_seed);
  auto plan = build_plan(shared_seed, cfg.param_count(), cfg.carrier_count());
  auto s = spread(tx.bits, plan);
  Channel ch{payload, pilot_seed, code, std::move(tx), std::move(plan), std::move(s), {senders.begin(), senders.end()}, {}};
  ch.report.frame_bits = ch.tx.size();
  return ch;
}

inline RunResult run_rounds(const ExperimentConfig& cfg, bool embedding) {
  cfg.validate();
  const std::size_t params = cfg.param_count();

  // Channel 0 is the top-level sender set; further groups follow in index order.
  std::vector<Channel> channels;
  channels.push_back(make_channel(cfg, cfg.load_payload(), cfg.senders, cfg.shared_seed, cfg.pilot_seed));
  channels.front().report.t_predicted = predicted_rounds(cfg);
  for (const auto& [g, grp] : cfg.groups) {
    channels.push_back(make_channel(cfg, Payload::from_text(grp.payload), grp.senders, cfg.group_shared_seed(g),
                                    cfg.group_pilot_seed(g)));
    auto sub = cfg;
    sub.payload = grp.payload;
    sub.payload_file.clear();
    sub.senders = grp.senders;
    channels.back().report.t_predicted = predicted_rounds(sub);
  }
  std::set<std::size_t> all_senders;
  for (const auto& ch : channels) all_senders.insert(ch.senders.begin(), ch.senders.end());
  // Channels with senders are the ones whose delivery can end the run early.
  std::size_t live_channels = 0;
  for (const auto& ch : channels) live_channels += ch.senders.empty() ? 0 : 1;

  GradientMode mode;
  std::optional<TrainingSetup> training;
  std::optional<Dataset> test_set;
  ParamVector w0;
  switch (cfg.mode) {
    case ModeKind::FixedGaussian:
      mode = FixedGaussian{cfg.sigma};
      break;
    case ModeKind::RecordedVariance:
      mode = RecordedVarianceGaussian{VarianceTrace::load(cfg.variance_trace)};
      break;
    case ModeKind::Real: {
      mode = RealGradients{};
      const auto classes = cfg.arch.class_count();
      const auto dim = cfg.arch.input_dim();
      // One draw, split into train and test, so both share the class means.
      const auto all = make_synthetic_dataset(classes, cfg.samples + cfg.test_samples, dim, cfg.seed, cfg.data);
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < all.size(); ++i) (i < cfg.samples ? train_rows : test_rows).push_back(i);
      const auto train = all.subset(train_rows);
      test_set = all.subset(test_rows);
      training = TrainingSetup{cfg.arch, partition_non_iid(train, cfg.n, cfg.shards_per_user, cfg.seed), cfg.lr,
                               cfg.local_epochs, cfg.batch_size, cfg.weight_decay};
      break;
    }
  }
  if (cfg.mode == ModeKind::Real) w0 = init_model(cfg.arch, cfg.seed);
  else w0.assign(params, 0.0);

  const RoundSchedule schedule{cfg.n, cfg.fraction, cfg.selection, cfg.seed};
  const AggregatorConfig agg{cfg.alpha, cfg.clip_norm};

  RunResult result;
  ParamVector w = w0;
  std::vector<UpdateVector> updates;
  std::optional<std::size_t> stop_at;

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    const auto t_start = std::chrono::steady_clock::now();
    const auto ids = select_participants(schedule, round);
    updates.clear();
    updates.reserve(ids.size());
    for (auto id : ids) {
      auto u = produce_update(mode, id, w, round, cfg.seed, training ? &*training : nullptr);
      if (embedding) {
        for (const auto& ch : channels) {
          if (!ch.senders.count(id)) continue;
          const auto gains = GainParams::from_delta(cfg.delta, estimate_sigma(u, ch.plan), ch.tx.size());
          u = embed_spread(u, ch.spread_signal, gains, ch.plan);
          break;
        }
      }
      result.trace.record(round, id, update_std(u));
      updates.push_back(std::move(u));
    }

    RoundRecord rec;
    rec.round = round;
    // Observer statistics on the submitted (pre-clipping) updates.
    std::optional<std::size_t> first_sender, first_regular;
    std::vector<double> cohort;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (all_senders.count(ids[i])) {
        if (!first_sender) {
          first_sender = i;
          rec.sender_norm = frobenius_norm(updates[i]);
        }
      } else {
        if (!first_regular) first_regular = i;
        cohort.push_back(frobenius_norm(updates[i]));
      }
    }
    if (!cohort.empty()) {
      double m = 0.0;
      for (double v : cohort) m += v;
      m /= static_cast<double>(cohort.size());
      double var = 0.0;
      for (double v : cohort) var += (v - m) * (v - m);
      rec.cohort_norm_mean = m;
      rec.cohort_norm_std = std::sqrt(var / static_cast<double>(cohort.size()));
    }
    if (cfg.eve_logging) {
      if (first_sender && first_regular) {
        const auto ks = ks_two_sample(updates[*first_sender], updates[*first_regular]);
        rec.ks_d = ks.d_statistic;
        rec.ks_p = ks.p_value;
      }
      std::vector<ParticipantUpdate> views;
      for (std::size_t i = 0; i < ids.size(); ++i) views.push_back({ids[i], updates[i]});
      const auto norms = norm_report(views, round);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        EveRow row{round, ids[i], norms[i].norm, norms[i].z, kNaN, kNaN};
        if (first_regular) {
          const auto ks = ks_two_sample(updates[i], updates[*first_regular]);
          row.ks_d = ks.d_statistic;
          row.ks_p = ks.p_value;
        }
        result.eve.push_back(row);
      }
    }

    w = aggregate(w, updates, agg);

    std::size_t delivered_channels = 0;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      auto& ch = channels[c];
      const auto y = correlate(w, w0, ch.plan, ch.tx.size());
      const auto rx = deframe(y, ch.code, ch.pilot_seed, &ch.tx.bits, cfg.bp_iterations);
      auto status = rx.status;
      if (rx.status == ReceiveStatus::Delivered) {
        if (rx.payload && *rx.payload == ch.payload) {
          if (!ch.report.delivered) {
            ch.report.delivered = true;
            ch.report.t_observed = round;
            ch.report.decoded = rx.payload;
          }
        } else {
          ++ch.report.false_accepts;
          status = ReceiveStatus::Undecoded;
        }
      }
      if (ch.report.delivered) {
        status = ReceiveStatus::Delivered;
        delivered_channels += ch.senders.empty() ? 0 : 1;
      }
      if (c == 0) {
        rec.prefec_ber = rx.prefec_ber.value_or(kNaN);
        rec.status = status;
        rec.delivered = ch.report.delivered;
      }
    }
    if (cfg.stop_grace && !stop_at && live_channels > 0 && delivered_channels == live_channels)
      stop_at = round + *cfg.stop_grace;

    if (training) {
      const auto ev = evaluate(w, cfg.arch, *test_set);
      rec.accuracy = ev.accuracy;
      rec.loss = ev.loss;
    }
    rec.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    result.records.push_back(rec);
    if (stop_at && round >= *stop_at) break;
  }
  result.report = channels.front().report;
  for (std::size_t c = 1; c < channels.size(); ++c) result.group_reports.push_back(channels[c].report);
  return result;
}

}  // namespace detail

// Full run: senders embed the frame every round they are selected and the
// receiver attempts a decode after every aggregation.
inline RunResult run_experiment(const ExperimentConfig& cfg) { return detail::run_rounds(cfg, true); }

// Same seeds and selection with embedding disabled (beta = 1, gamma = 0).
inline RunResult run_baseline(const ExperimentConfig& cfg) { return detail::run_rounds(cfg, false); }

// Final-accuracy gap against a baseline, compared at the last round both runs reached.
inline double accuracy_gap(const std::vector<RoundRecord>& run, const std::vector<RoundRecord>& baseline) {
  const std::size_t last = std::min(run.size(), baseline.size());
  if (last == 0) return kNaN;
  return run[last - 1].accuracy - baseline[last - 1].accuracy;
}

inline constexpr const char* kRoundLogHeader =
    "round,accuracy,loss,delivered,prefec_ber,sender_norm,cohort_norm_mean,cohort_norm_std,ks_d,ks_p";

namespace detail {
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_round_log(const std::vector<RoundRecord>& records, std::ostream& out) {
  out << kRoundLogHeader << '\n';
  for (const auto& r : records) {
    out << r.round << ',' << detail::fmt_double(r.accuracy) << ',' << detail::fmt_double(r.loss) << ','
        << (r.delivered ? 1 : 0) << ',' << detail::fmt_double(r.prefec_ber) << ',' << detail::fmt_double(r.sender_norm)
        << ',' << detail::fmt_double(r.cohort_norm_mean) << ',' << detail::fmt_double(r.cohort_norm_std) << ','
        << detail::fmt_double(r.ks_d) << ',' << detail::fmt_double(r.ks_p) << '\n';
  }
}

inline void write_round_log(const std::vector<RoundRecord>& records, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write round log: " + path);
  write_round_log(records, f);
}

inline std::vector<RoundRecord> read_round_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kRoundLogHeader)
    throw std::runtime_error("round log: unexpected header");
  std::vector<RoundRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) f.push_back(detail::trim(cell));
    if (f.size() != 10) throw std::runtime_error("round log: wrong column count on line " + std::to_string(lineno));
    RoundRecord r;
    try {
      r.round = std::stoull(f[0]);
      r.accuracy = std::strtod(f[1].c_str(), nullptr);
      r.loss = std::strtod(f[2].c_str(), nullptr);
      r.delivered = f[3] == "1";
      r.status = r.delivered ? ReceiveStatus::Delivered : ReceiveStatus::Undecoded;
      r.prefec_ber = std::strtod(f[4].c_str(), nullptr);
      r.sender_norm = std::strtod(f[5].c_str(), nullptr);
      r.cohort_norm_mean = std::strtod(f[6].c_str(), nullptr);
      r.cohort_norm_std = std::strtod(f[7].c_str(), nullptr);
      r.ks_d = std::strtod(f[8].c_str(), nullptr);
      r.ks_p = std::strtod(f[9].c_str(), nullptr);
    } catch (const std::logic_error&) {
      throw std::runtime_error("round log: bad value on line " + std::to_string(lineno));
    }
    out.push_back(r);
  }
  return out;
}

inline std::vector<RoundRecord> read_round_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read round log: " + path);
  return read_round_log(f);
}

inline void write_eve_report(const std::vector<EveRow>& rows, std::ostream& out) {
  out << "round,participant,norm,z,ks_d,ks_p\n";
  for (const auto& r : rows)
    out << r.round << ',' << r.participant << ',' << detail::fmt_double(r.norm) << ',' << detail::fmt_double(r.z) << ','
        << detail::fmt_double(r.ks_d) << ',' << detail::fmt_double(r.ks_p) << '\n';
}

}  // namespace fedcomm
