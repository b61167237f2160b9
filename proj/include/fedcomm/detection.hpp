#pragma once

// Observer-side statistics: two-sample Kolmogorov-Smirnov test and
// update-norm screening.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fedcomm {

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

inline constexpr std::size_t kMinKsSample = 8;

// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
// The alternating series is summed until terms vanish; if it does not
// settle (tiny lambda) the answer is 1.
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  const double a2 = -2.0 * lambda * lambda;
  double fac = 2.0;
  double sum = 0.0;
  double prev = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = fac * std::exp(a2 * j * j);
    sum += term;
    if (std::fabs(term) <= 1e-3 * prev || std::fabs(term) <= 1e-10 * sum) return std::clamp(sum, 0.0, 1.0);
    fac = -fac;
    prev = std::fabs(term);
  }
  return 1.0;
}

inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < kMinKsSample || b.size() < kMinKsSample)
    throw std::invalid_argument("ks_two_sample: both samples need at least 8 values");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());

  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  // Step through distinct values; ties in either sample advance together.
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }

  KsResult r;
  r.d_statistic = d;
  r.n1 = x.size();
  r.n2 = y.size();
  const double ne = n1 * n2 / (n1 + n2);
  const double root = std::sqrt(ne);
  r.p_value = kolmogorov_q((root + 0.12 + 0.11 / root) * d);
  return r;
}

inline double frobenius_norm(std::span<const double> u) {
  double ss = 0.0;
  for (double v : u) ss += v * v;
  return std::sqrt(ss);
}

struct NormRow {
  std::size_t round = 0;
  std::size_t participant = 0;
  double norm = 0.0;
  double z = 0.0;  // (norm - cohort mean) / cohort std; 0 when the cohort std is 0
};

struct ParticipantUpdate {
  std::size_t participant = 0;
  std::span<const double> update;
};

// One row per submitted update. Cohort statistics use the population
// standard deviation over every update of the round.
inline std::vector<NormRow> norm_report(std::span<const ParticipantUpdate> updates, std::size_t round) {
  std::vector<NormRow> rows;
  rows.reserve(updates.size());
  double mean = 0.0;
  for (const auto& u : updates) {
    rows.push_back({round, u.participant, frobenius_norm(u.update), 0.0});
    mean += rows.back().norm;
  }
  if (rows.empty()) return rows;
  mean /= static_cast<double>(rows.size());
  double var = 0.0;
  for (const auto& r : rows) var += (r.norm - mean) * (r.norm - mean);
  const double sd = std::sqrt(var / static_cast<double>(rows.size()));
  // Relative guard so bit-identical norms summed in different orders still read as a zero spread.
  if (sd > 1e-12 * std::max(1.0, std::fabs(mean)))
    for (auto& r : rows) r.z = (r.norm - mean) / sd;
  return rows;
}

}  // namespace fedcomm
