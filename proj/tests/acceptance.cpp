// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "fedcomm/fedcomm.hpp"

using namespace fedcomm;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<Seed> kMasterSeeds{1, 2, 3, 4, 5};

// n = 100, full participation, FixedGaussian(1), R = P_model = 22,270.
ExperimentConfig gaussian_config(double delta, std::size_t senders, Seed seed, std::size_t cap) {
  ExperimentConfig c;
  c.n = 100;
  c.fraction = 1.0;
  c.mode = ModeKind::FixedGaussian;
  c.sigma = 1.0;
  c.arch = MlpArchitecture{{784, 28, 10}};
  c.delta = delta;
  c.senders.clear();
  for (std::size_t i = 0; i < senders; ++i) c.senders.push_back(i);
  c.receiver = 99;
  c.payload = "hello world!";
  c.seed = seed;
  c.rounds = cap;
  c.stop_grace = 0;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + fmt("%g", x);
  return s;
}

// 1. FixedGaussian, delta = 1, M = 1: delivered at T in {2, 3} for each master seed.
void theory_check(std::vector<double>& t_unclipped) {
  bool ok = true;
  for (Seed s : kMasterSeeds) {
    const auto r = run_experiment(gaussian_config(1.0, 1, s, 10));
    const double t = r.report.delivered ? static_cast<double>(r.report.t_observed) : NAN;
    t_unclipped.push_back(t);
    ok = ok && r.report.delivered && (r.report.t_observed == 2 || r.report.t_observed == 3);
  }
  report(1, ok, fmt("T_observed per seed = {%s}, required each in {2,3} (theory 1.33)", join(t_unclipped).c_str()));
}

// 2. Variance of the normalized correlator against (P-1)/R + n sigma^2 / (T R gamma^2).
void variance_law() {
  const std::size_t n = 10, trials = 200, params = 22270;
  const double delta = 0.5, sigma = 1.0;
  const std::vector<std::size_t> checkpoints{1, 2, 5, 10};
  const auto payload = Payload::from_text("hello world!");
  CodeBook book(derive_seed(1, {stream::ldpc}));
  const Frame tx = frame(payload, book.for_payload(payload), 2);
  const std::size_t p = tx.size();

  std::vector<double> sum_sq(checkpoints.size(), 0.0);
  std::vector<double> gamma_sum(checkpoints.size(), 0.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Seed seed = derive_seed(2026, {trial});
    const auto plan = build_plan(seed, params, params);
    const auto s = spread(tx.bits, plan);
    ParamVector w0(params, 0.0), w = w0;
    double gamma_acc = 0.0;
    std::size_t next = 0;
    for (std::size_t t = 1; t <= checkpoints.back(); ++t) {
      std::vector<UpdateVector> ups;
      for (std::size_t id = 0; id < n; ++id) {
        auto u = produce_update(FixedGaussian{sigma}, id, w, t, seed);
        if (id == 0) {
          const auto g = GainParams::from_delta(delta, estimate_sigma(u, plan), p);
          gamma_acc += g.gamma;
          u = embed_spread(u, s, g, plan);
        }
        ups.push_back(std::move(u));
      }
      w = aggregate(w, ups, {});
      if (t == checkpoints[next]) {
        const auto y = correlate(w, w0, plan, p);
        // The scale uses the mean realized gamma; sigma-hat differs from sigma by ~1e-2.
        const double g_mean = gamma_acc / static_cast<double>(t);
        const auto yn = normalize_correlation(y, 1.0, n, 1.0, static_cast<double>(t), g_mean, params);
        for (std::size_t i = 0; i < p; ++i) sum_sq[next] += (yn[i] - tx.bits[i]) * (yn[i] - tx.bits[i]);
        gamma_sum[next] += g_mean;
        ++next;
      }
    }
  }
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    const double empirical = sum_sq[k] / static_cast<double>(trials * p);
    const double predicted =
        predict(n, p, params, delta, 1.0, sigma, static_cast<double>(checkpoints[k])).y_variance;
    const double rel = std::fabs(empirical - predicted) / predicted;
    ok = ok && rel <= 0.15;
    detail += fmt("T=%zu emp=%.4f pred=%.4f rel=%.3f; ", checkpoints[k], empirical, predicted, rel);
  }
  report(2, ok, detail + "tolerance 15%");
}

// 3. delta = 0.1: median T over the master seeds for M = 1, 2, 4.
void m_squared_speedup() {
  const std::vector<std::size_t> ms{1, 2, 4};
  std::vector<double> med;
  std::string detail;
  bool all_delivered = true;
  for (auto m : ms) {
    std::vector<double> ts;
    for (Seed s : kMasterSeeds) {
      const auto r = run_experiment(gaussian_config(0.1, m, s, 400));
      all_delivered = all_delivered && r.report.delivered;
      ts.push_back(r.report.delivered ? static_cast<double>(r.report.t_observed) : NAN);
    }
    med.push_back(median(ts));
    detail += fmt("M=%zu T={%s} median=%g; ", m, join(ts).c_str(), med.back());
  }
  const double r2 = med[1] / med[0], r4 = med[2] / med[0];
  const bool ok = all_delivered && med[0] >= 100 && med[0] <= 170 && r2 >= 1.0 / 8 && r2 <= 1.0 / 2 &&
                  r4 >= 1.0 / 32 && r4 <= 1.0 / 8;
  report(3, ok,
         detail + fmt("theory T(M=1)=%.1f; need median T(M=1) in [100,170], T2/T1=%.3f in [0.125,0.5], "
                      "T4/T1=%.3f in [0.03125,0.125]",
                      predict(100, 292, 22270, 0.1, 1, 1, 1).t_min, r2, r4));
}

// 4. Real training, delta = 0.1, ten senders: delivery and an accuracy gap of at most 2 points.
// The synthetic task has overlapping classes on a 20-dimensional latent space,
// so the training set cannot be memorized and the global model settles; on
// well-separated blobs the model keeps drifting and swamps the correlator.
void real_training() {
  ExperimentConfig c;
  c.n = 100;
  c.fraction = 1.0;
  c.mode = ModeKind::Real;
  c.arch = MlpArchitecture{{784, 28, 10}};
  c.samples = 6000;
  c.test_samples = 1000;
  c.data.latent_dim = 20;
  c.data.noise = 2.0;
  c.delta = 0.1;
  c.senders = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  c.receiver = 99;
  c.rounds = 600;
  c.seed = 1;
  const auto treat = run_experiment(c);
  const auto base = run_baseline(c);
  const double gap = accuracy_gap(treat.records, base.records);
  const bool ok = treat.report.delivered && std::fabs(gap) <= 0.02;
  report(4, ok,
         fmt("latent_dim=20 noise=2: delivered=%d T_observed=%zu (cap 600, theory %.2f); final accuracy %.4f vs baseline %.4f at round %zu, "
             "gap %.2f pts (limit 2)",
             treat.report.delivered ? 1 : 0, treat.report.t_observed, treat.report.t_predicted,
             treat.records.back().accuracy, base.records.back().accuracy,
             std::min(treat.records.size(), base.records.size()), 100.0 * gap));
}

// 5. KS test of a sender update vs a regular update on a transmitting round.
void stealth_detection() {
  auto count = [](double delta, bool want_reject) {
    int hits = 0;
    for (Seed trial = 0; trial < 20; ++trial) {
      auto c = gaussian_config(delta, 1, 1000 + trial, 1);
      c.eve_logging = true;
      const auto r = run_experiment(c);
      const double p = r.records.front().ks_p;
      hits += want_reject ? (p < 0.01) : (p > 0.05);
    }
    return hits;
  };
  const int loud = count(1.0, true);
  const int quiet = count(0.1, false);
  report(5, loud >= 18 && quiet >= 18,
         fmt("delta=1: p<0.01 in %d/20; delta=0.1: p>0.05 in %d/20 (each needs >= 18)", loud, quiet));
}

// 6. LDPC: exhaustive k = 8 clean round trip; k = 96 at 2% raw BER.
void ldpc_codec() {
  const auto small = construct_code(8, 6);
  int exact8 = 0;
  for (unsigned v = 0; v < 256; ++v) {
    Bits m(8);
    for (int i = 0; i < 8; ++i) m[i] = (v >> i) & 1U;
    const auto cw = encode(small, m);
    LlrVector llr(cw.size());
    for (std::size_t i = 0; i < cw.size(); ++i) llr[i] = cw[i] ? -10.0 : 10.0;
    const auto r = bp_decode(small, llr);
    exact8 += (r.converged && r.message == m) ? 1 : 0;
  }

  const auto code = construct_code(96, 6);
  const double sd = 1.0 / 2.0537489;  // Q(1/sd) = 0.02
  auto eng = make_engine(derive_seed(6, {stream::test_set}));
  std::normal_distribution<double> nd(0.0, sd);
  std::bernoulli_distribution coin(0.5);
  int exact96 = 0;
  std::size_t raw = 0;
  for (int t = 0; t < 200; ++t) {
    Bits m(96);
    for (auto& b : m) b = coin(eng);
    const auto cw = encode(code, m);
    LlrVector llr(cw.size());
    for (std::size_t i = 0; i < cw.size(); ++i) {
      const double y = (cw[i] ? -1.0 : 1.0) + nd(eng);
      raw += (y < 0.0) != (cw[i] == 1);
      llr[i] = 2.0 * y / (sd * sd);
    }
    const auto r = bp_decode(code, llr);
    exact96 += (r.converged && r.message == m) ? 1 : 0;
  }
  report(6, exact8 == 256 && exact96 >= 190,
         fmt("k=8 exact %d/256; k=96 exact %d/200 at measured raw BER %.4f (need 256 and >= 190)", exact8, exact96,
             static_cast<double>(raw) / (200.0 * 192.0)));
}

// 7. Criterion 1 under per-update clipping.
void clipping(const std::vector<double>& t_unclipped) {
  bool ok = true;
  std::string detail;
  for (int ci = 5; ci <= 10; ++ci) {
    const double clip = ci / 10.0;
    std::vector<double> ts;
    for (std::size_t k = 0; k < kMasterSeeds.size(); ++k) {
      auto c = gaussian_config(1.0, 1, kMasterSeeds[k], 10);
      c.clip_norm = clip;
      const auto r = run_experiment(c);
      const double t = r.report.delivered ? static_cast<double>(r.report.t_observed) : NAN;
      ts.push_back(t);
      ok = ok && r.report.delivered && t <= 2.0 * t_unclipped[k];
    }
    detail += fmt("clip %.1f T={%s}; ", clip, join(ts).c_str());
  }
  report(7, ok, detail + "need delivered and T <= 2x unclipped {" + join(t_unclipped) + "}");
}

// 8. Norm of the embedded update vs the original at delta = 0.5.
void power_preservation() {
  const std::size_t params = 22270;
  const auto plan = build_plan(8, params, params);
  SignVector frame_bits(292);
  CounterStream bits(8);
  for (auto& b : frame_bits) b = (bits.next() & 1U) ? -1 : 1;
  const auto s = spread(frame_bits, plan);
  double total = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto u = gaussian_update(params, 0.01 * (1 + t % 7), derive_seed(8, {static_cast<std::uint64_t>(t)}));
    const auto e = embed_spread(u, s, GainParams::from_delta(0.5, estimate_sigma(u, plan), frame_bits.size()), plan);
    total += std::fabs(frobenius_norm(e) - frobenius_norm(u)) / frobenius_norm(u);
  }
  const double mean = total / 100.0;
  report(8, mean <= 0.05, fmt("mean relative norm change %.5f (limit 0.05)", mean));
}

// 9. Frame lengths.
void frame_arithmetic() {
  CodeBook book(9);
  const auto a = Payload::from_text("hello world!");
  const auto b = Payload::from_text("The answer is 42!");
  const auto la = frame(a, book.for_payload(a), 1).size();
  const auto lb = frame(b, book.for_payload(b), 1).size();
  report(9, la == 292 && lb == 372, fmt("'hello world!' -> %zu, 'The answer is 42!' -> %zu (need 292, 372)", la, lb));
}

template <typename F>
void timed(const char* name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  (%s: %.1f s)\n", name, s);
}

}  // namespace

int main() {
  std::vector<double> t_unclipped;
  timed("theory check", [&] { theory_check(t_unclipped); });
  timed("variance law", variance_law);
  timed("M^2 speedup", m_squared_speedup);
  timed("real training", real_training);
  timed("stealth detection", stealth_detection);
  timed("ldpc codec", ldpc_codec);
  timed("clipping", [&] { clipping(t_unclipped); });
  timed("power preservation", power_preservation);
  timed("frame arithmetic", frame_arithmetic);
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
