#pragma once

// Direct-sequence spread-spectrum channel over a flat parameter vector.
//
// The sender and receiver share one 64-bit seed. From it both sides derive
//   * the carrier indices: the first R entries of a Fisher-Yates permutation
//     of [0, param_count) driven by CounterStream(derive_seed(seed, {carriers})),
//   * the spreading code: chip j of bit i is bit (j % 64) of
//     mix64(derive_seed(seed, {code_chips, i}) + golden * (j / 64)), with a set
//     bit meaning -1 and a clear bit +1.
// Code columns are regenerated on demand, so the R x P matrix is never stored.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fedcomm/rng.hpp"

namespace fedcomm {

using ParamVector = std::vector<double>;
using UpdateVector = std::vector<double>;
using SignVector = std::vector<int>;  // entries are +1 or -1

class SpreadingPlan {
 public:
  SpreadingPlan(Seed shared_seed, std::size_t param_count, std::size_t carriers)
      : seed_(shared_seed), param_count_(param_count) {
    if (carriers == 0) throw std::invalid_argument("build_plan: need at least one carrier");
    if (carriers > param_count) throw std::invalid_argument("build_plan: carrier count exceeds parameter count");
    std::vector<std::size_t> perm(param_count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    CounterStream rng(derive_seed(shared_seed, {stream::carriers}));
    // Partial Fisher-Yates: position i receives a uniform pick from the tail.
    for (std::size_t i = 0; i < carriers; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(param_count - i));
      std::swap(perm[i], perm[j]);
    }
    perm.resize(carriers);
    carriers_ = std::move(perm);
  }

  Seed shared_seed() const noexcept { return seed_; }
  std::size_t param_count() const noexcept { return param_count_; }
  std::size_t carrier_count() const noexcept { return carriers_.size(); }
  const std::vector<std::size_t>& carrier_indices() const noexcept { return carriers_; }

  // Calls f(j, chip) for every chip of code column `bit`, chip in {+1, -1}.
  template <typename F>
  void for_each_chip(std::size_t bit, F&& f) const {
    const Seed key = derive_seed(seed_, {stream::code_chips, bit});
    const std::size_t r = carriers_.size();
    for (std::size_t block = 0; block * 64 < r; ++block) {
      const std::uint64_t word = mix64(key + 0x9E3779B97F4A7C15ULL * block);
      const std::size_t end = std::min<std::size_t>(64, r - block * 64);
      for (std::size_t b = 0; b < end; ++b) f(block * 64 + b, ((word >> b) & 1U) ? -1 : 1);
    }
  }

  std::vector<int> code_column(std::size_t bit) const {
    std::vector<int> col(carriers_.size());
    for_each_chip(bit, [&](std::size_t j, int chip) { col[j] = chip; });
    return col;
  }

 private:
  Seed seed_;
  std::size_t param_count_;
  std::vector<std::size_t> carriers_;
};

inline SpreadingPlan build_plan(Seed shared_seed, std::size_t param_count, std::size_t carriers) {
  return SpreadingPlan(shared_seed, param_count, carriers);
}

// Stealth gains: gamma scales the spread payload, beta attenuates the
// genuine update. `from_delta` ties them so the embedded update keeps the
// power of the original one.
struct GainParams {
  double delta = 0.0;
  double beta = 1.0;
  double gamma = 0.0;
  double sigma_hat = 0.0;

  static GainParams from_delta(double delta, double sigma_hat, std::size_t payload_bits) {
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("GainParams: delta must be in (0, 1]");
    if (!(sigma_hat > 0.0)) throw std::invalid_argument("GainParams: sigma must be positive");
    if (payload_bits == 0) throw std::invalid_argument("GainParams: payload must be nonempty");
    return {delta, std::sqrt(1.0 - delta * delta), delta * sigma_hat / std::sqrt(static_cast<double>(payload_bits)),
            sigma_hat};
  }

  // Explicit gains; used for the no-embedding baseline (beta = 1, gamma = 0).
  static GainParams raw(double beta, double gamma) { return {0.0, beta, gamma, 0.0}; }
};

// Sample standard deviation of the update restricted to the carriers.
inline double estimate_sigma(std::span<const double> update, const SpreadingPlan& plan) {
  if (update.size() != plan.param_count()) throw std::invalid_argument("estimate_sigma: update length mismatch");
  const auto& idx = plan.carrier_indices();
  if (idx.size() < 2) throw std::invalid_argument("estimate_sigma: need at least two carriers");
  double mean = 0.0;
  for (auto i : idx) mean += update[i];
  mean /= static_cast<double>(idx.size());
  double ss = 0.0;
  for (auto i : idx) ss += (update[i] - mean) * (update[i] - mean);
  const double sigma = std::sqrt(ss / static_cast<double>(idx.size() - 1));
  if (!(sigma > 0.0)) throw std::domain_error("estimate_sigma: update has zero variance on the carriers");
  return sigma;
}

// s = C b, one entry per carrier.
inline std::vector<double> spread(std::span<const int> frame_bits, const SpreadingPlan& plan) {
  if (frame_bits.size() > plan.carrier_count()) throw std::invalid_argument("spread: frame longer than carrier count");
  std::vector<double> s(plan.carrier_count(), 0.0);
  for (std::size_t i = 0; i < frame_bits.size(); ++i) {
    const int b = frame_bits[i];
    plan.for_each_chip(i, [&](std::size_t j, int chip) { s[j] += chip * b; });
  }
  return s;
}

// beta * update everywhere, plus gamma * (C b) on the carriers.
inline UpdateVector embed_spread(std::span<const double> update, std::span<const double> spread_signal,
                                 const GainParams& gains, const SpreadingPlan& plan) {
  if (update.size() != plan.param_count()) throw std::invalid_argument("embed: update length mismatch");
  if (spread_signal.size() != plan.carrier_count()) throw std::invalid_argument("embed: spread length mismatch");
  UpdateVector out(update.size());
  for (std::size_t i = 0; i < update.size(); ++i) out[i] = gains.beta * update[i];
  if (gains.gamma != 0.0) {
    const auto& idx = plan.carrier_indices();
    for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] += gains.gamma * spread_signal[j];
  }
  return out;
}

inline UpdateVector embed(std::span<const double> update, std::span<const int> frame_bits, const GainParams& gains,
                          const SpreadingPlan& plan) {
  if (update.size() != plan.param_count()) throw std::invalid_argument("embed: update length mismatch");
  const auto s = spread(frame_bits, plan);
  return embed_spread(update, s, gains, plan);
}

// y_i = c_i^T (W_T - W_0) over the carriers, for bits 0..P-1.
inline std::vector<double> correlate(std::span<const double> w_t, std::span<const double> w_0,
                                     const SpreadingPlan& plan, std::size_t payload_bits) {
  if (w_t.size() != plan.param_count() || w_0.size() != plan.param_count())
    throw std::invalid_argument("correlate: weight vector length mismatch");
  if (payload_bits > plan.carrier_count()) throw std::invalid_argument("correlate: frame longer than carrier count");
  const auto& idx = plan.carrier_indices();
  std::vector<double> diff(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) diff[j] = w_t[idx[j]] - w_0[idx[j]];
  std::vector<double> y(payload_bits, 0.0);
  for (std::size_t i = 0; i < payload_bits; ++i) {
    double acc = 0.0;
    plan.for_each_chip(i, [&](std::size_t j, int chip) { acc += chip * diff[j]; });
    y[i] = acc;
  }
  return y;
}

// sign(y), with sign(0) = +1.
inline SignVector hard_decision(std::span<const double> y) {
  SignVector out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] < 0.0 ? -1 : 1;
  return out;
}

struct TheoryPrediction {
  double t_min = 0.0;       // minimum global rounds before the payload is visible
  double y_variance = 0.0;  // variance of the normalized correlator after T rounds
  double gamma = 0.0;
};

// Delivery bound nP / (M^2 delta^2 (R - P)) and the variance of
// y_i / (M T gamma R): (P-1)/R + n sigma^2 / (M^2 T R gamma^2), gamma = delta sigma / sqrt(P).
inline TheoryPrediction predict(double n, double payload_bits, double carriers, double delta, double senders,
                                double sigma, double rounds) {
  if (!(carriers > payload_bits)) throw std::invalid_argument("predict: carrier count must exceed payload bits");
  if (!(n > 0 && payload_bits > 0 && sigma > 0 && rounds > 0))
    throw std::invalid_argument("predict: n, P, sigma and T must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("predict: delta must be in (0, 1]");
  if (!(senders >= 1.0)) throw std::invalid_argument("predict: need at least one sender");
  TheoryPrediction p;
  p.gamma = delta * sigma / std::sqrt(payload_bits);
  p.t_min = n * payload_bits / (senders * senders * delta * delta * (carriers - payload_bits));
  p.y_variance = (payload_bits - 1.0) / carriers +
                 n * sigma * sigma / (senders * senders * rounds * carriers * p.gamma * p.gamma);
  return p;
}

// Rescales raw correlations so that y_i ~ N(b_i, variance) under the
// Gaussian model: divide by (alpha / n') * M * T * gamma * R.
inline std::vector<double> normalize_correlation(std::span<const double> y, double alpha, double cohort,
                                                 double senders, double rounds, double gamma, double carriers) {
  const double scale = alpha / cohort * senders * rounds * gamma * carriers;
  std::vector<double> out(y.begin(), y.end());
  for (auto& v : out) v /= scale;
  return out;
}

}  // namespace fedcomm
