#include "fedcomm/detection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedcomm/cdma_channel.hpp"
#include "fedcomm/rng.hpp"

using namespace fedcomm;

namespace {

std::vector<double> gaussian(std::size_t n, double sd, Engine& eng) {
  std::normal_distribution<double> nd(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(eng);
  return v;
}

}  // namespace

TEST(KolmogorovQ, KnownValues) {
  EXPECT_DOUBLE_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967, 1e-6);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);  // the classic 5% point
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 5e-4);  // the classic 1% point
  EXPECT_LT(kolmogorov_q(5.0), 1e-20);
}

TEST(KsTwoSample, IdenticalSamples) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  const auto r = ks_two_sample(a, a);
  EXPECT_DOUBLE_EQ(r.d_statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(KsTwoSample, DisjointSamples) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> b{11, 12, 13, 14, 15, 16, 17, 18};
  const auto r = ks_two_sample(a, b);
  EXPECT_DOUBLE_EQ(r.d_statistic, 1.0);
  EXPECT_LT(r.p_value, 0.01);
}

TEST(KsTwoSample, HandComputedShift) {
  // Interleaved samples: the ECDFs differ by at most one step of 1/8.
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> b{1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).d_statistic, 0.125);
  // Shifting b by two positions doubles the gap.
  const std::vector<double> c{2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 9.5};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, c).d_statistic, 0.25);
}

TEST(KsTwoSample, TiesAdvanceTogether) {
  const std::vector<double> a{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<double> b{0, 0, 1, 1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).d_statistic, 0.25);
}

TEST(KsTwoSample, SymmetricAndMonotoneInvariant) {
  auto eng = make_engine(1);
  const auto a = gaussian(500, 1.0, eng);
  const auto b = gaussian(700, 1.3, eng);
  const auto ab = ks_two_sample(a, b);
  const auto ba = ks_two_sample(b, a);
  EXPECT_DOUBLE_EQ(ab.d_statistic, ba.d_statistic);
  EXPECT_DOUBLE_EQ(ab.p_value, ba.p_value);

  std::vector<double> ta(a.size()), tb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ta[i] = std::exp(3.0 * a[i]) + 1.0;
  for (std::size_t i = 0; i < b.size(); ++i) tb[i] = std::exp(3.0 * b[i]) + 1.0;
  EXPECT_DOUBLE_EQ(ks_two_sample(ta, tb).d_statistic, ab.d_statistic);
}

TEST(KsTwoSample, PValueDecreasesWithD) {
  double prev = 2.0;
  for (double d = 0.0; d <= 1.0; d += 0.01) {
    const double p = kolmogorov_q((std::sqrt(250.0) + 0.12 + 0.11 / std::sqrt(250.0)) * d);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(KsTwoSample, SmallSamplesRejected) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_THROW(ks_two_sample(a, b), std::invalid_argument);
}

TEST(KsTwoSample, CalibratedUnderTheNull) {
  auto eng = make_engine(2026);
  const int trials = 500;
  int rejected = 0;
  for (int t = 0; t < trials; ++t) {
    const auto a = gaussian(22270, 1.0, eng);
    const auto b = gaussian(22270, 1.0, eng);
    rejected += ks_two_sample(a, b).p_value < 0.05 ? 1 : 0;
  }
  const double rate = static_cast<double>(rejected) / trials;
  EXPECT_GE(rate, 0.03);
  EXPECT_LE(rate, 0.07);
}

TEST(FrobeniusNorm, Basics) {
  EXPECT_DOUBLE_EQ(frobenius_norm(std::vector<double>{3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(std::vector<double>{}), 0.0);
}

TEST(NormReport, IdenticalUpdatesHaveZeroScores) {
  const std::vector<double> u{1, 2, 3};
  std::vector<ParticipantUpdate> ups{{0, u}, {1, u}, {2, u}};
  for (const auto& row : norm_report(ups, 4)) {
    EXPECT_EQ(row.round, 4u);
    EXPECT_DOUBLE_EQ(row.z, 0.0);
    EXPECT_DOUBLE_EQ(row.norm, std::sqrt(14.0));
  }
}

TEST(NormReport, ScaledUpdateStandsOut) {
  auto eng = make_engine(3);
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 10; ++i) raw.push_back(gaussian(1000, 1.0, eng));
  for (auto& v : raw[6]) v *= 10.0;
  std::vector<ParticipantUpdate> ups;
  for (std::size_t i = 0; i < raw.size(); ++i) ups.push_back({i, raw[i]});
  const auto rows = norm_report(ups, 1);
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].z > rows[best].z) best = i;
  EXPECT_EQ(rows[best].participant, 6u);
  // One outlier among ten with population std: z = (10 - 1) / 3 = 3 exactly in the limit.
  EXPECT_NEAR(rows[best].z, 3.0, 0.02);
}

TEST(NormReport, StealthySenderBlendsIntoTheCohort) {
  const std::size_t params = 22270, cohort = 20;
  const auto plan = build_plan(1, params, params);
  SignVector frame(292);
  CounterStream bits(7);
  for (auto& b : frame) b = (bits.next() & 1U) ? -1 : 1;
  const auto s = spread(frame, plan);
  auto eng = make_engine(8);
  int quiet = 0;
  const int rounds = 100;
  for (int r = 0; r < rounds; ++r) {
    std::vector<std::vector<double>> raw;
    for (std::size_t i = 0; i < cohort; ++i) raw.push_back(gaussian(params, 1.0, eng));
    const auto g = GainParams::from_delta(0.1, estimate_sigma(raw[0], plan), frame.size());
    raw[0] = embed_spread(raw[0], s, g, plan);
    std::vector<ParticipantUpdate> ups;
    for (std::size_t i = 0; i < cohort; ++i) ups.push_back({i, raw[i]});
    quiet += std::fabs(norm_report(ups, r).front().z) <= 3.0 ? 1 : 0;
  }
  EXPECT_GE(quiet, 95);
}
