#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles/emi_oracle.hpp"
#include "trackmine/cluster_eval.hpp"
#include "trackmine/error.hpp"
#include "trackmine/hdbscan.hpp"
#include "trackmine/rng.hpp"

using namespace trackmine;

namespace {

const double kLn2 = std::log(2.0);

// Exact E[MI] by enumerating every distinct arrangement of u against fixed v. Every
// distinct arrangement of a multiset is equally likely under a uniform shuffle.
double exhaustive_emi(std::vector<int> u, const std::vector<int>& v) {
  std::sort(u.begin(), u.end());
  double sum = 0;
  long count = 0;
  do {
    sum += oracle::plugin_mi(u, v);
    ++count;
  } while (std::next_permutation(u.begin(), u.end()));
  return sum / static_cast<double>(count);
}

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> out(n);
  for (auto& x : out) x = static_cast<int>(rng.below(k));
  return out;
}

double entropy_of(const std::vector<int>& labels) {
  return entropy(contingency(labels, std::vector<int>(labels.size(), 0)).row_sums, labels.size());
}

}  // namespace

TEST(Contingency, CountsCells) {
  const auto t = contingency(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1});
  EXPECT_EQ(t.rows, 2u);
  EXPECT_EQ(t.cols, 2u);
  EXPECT_EQ(t.counts, (std::vector<std::uint64_t>{1, 1, 0, 2}));
  EXPECT_EQ(t.row_sums, (std::vector<std::uint64_t>{2, 2}));
  EXPECT_EQ(t.col_sums, (std::vector<std::uint64_t>{1, 3}));
  EXPECT_EQ(t.total, 4u);

  const auto diag = contingency(std::vector<int>{7, 3, 7, 5}, std::vector<int>{7, 3, 7, 5});
  EXPECT_EQ(diag.counts, (std::vector<std::uint64_t>{2, 0, 0, 0, 1, 0, 0, 0, 1}));
  const auto one = contingency(std::vector<int>{0, 1, 1, 2}, std::vector<int>{9, 9, 9, 9});
  EXPECT_EQ(one.cols, 1u);
  EXPECT_EQ(one.counts, (std::vector<std::uint64_t>{1, 2, 1}));
}

TEST(Contingency, LengthMismatch) {
  try {
    contingency(std::vector<int>{0, 1}, std::vector<int>{0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(MutualInformation, Examples) {
  EXPECT_EQ(mutual_information(table_from_counts(2, 2, {1, 1, 1, 1})), 0.0);
  EXPECT_NEAR(mutual_information(table_from_counts(2, 2, {2, 0, 0, 2})), kLn2, 1e-12 * kLn2);
  // Plug-in formula for [[1,1],[0,2]] written out cell by cell.
  const double by_hand = 0.25 * std::log(4.0 / 2.0) + 0.25 * std::log(4.0 / 6.0) + 0.5 * std::log(8.0 / 6.0);
  EXPECT_NEAR(mutual_information(table_from_counts(2, 2, {1, 1, 0, 2})), by_hand, 1e-15);
}

TEST(MutualInformation, BoundedByEntropies) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(60);
    const auto u = random_labels(rng, n, 1 + rng.below(5));
    const auto v = random_labels(rng, n, 1 + rng.below(5));
    const auto t = contingency(u, v);
    const double mi = mutual_information(t);
    EXPECT_GE(mi, 0.0);
    EXPECT_LE(mi, std::min(entropy(t.row_sums, t.total), entropy(t.col_sums, t.total)) + 1e-12);
    EXPECT_NEAR(mi, oracle::plugin_mi(u, v), 1e-12);
  }
}

TEST(ExpectedMi, SingleClusterIsZero) {
  EXPECT_EQ(expected_mutual_information(std::vector<std::uint64_t>{5}, std::vector<std::uint64_t>{2, 3}), 0.0);
  EXPECT_EQ(expected_mutual_information(std::vector<std::uint64_t>{1, 4}, std::vector<std::uint64_t>{5}), 0.0);
}

TEST(ExpectedMi, TwoByTwoMatchesPermutationEstimate) {
  const std::vector<std::uint64_t> m{2, 2};
  const double emi = expected_mutual_information(m, m);
  const auto mc = oracle::shuffled_mi({0, 0, 1, 1}, {0, 0, 1, 1}, 100'000, 42);
  EXPECT_LE(std::abs(emi - mc.mean), 3 * mc.standard_error);
  // Exhaustively: of the 6 arrangements, 2 give ln 2 and 4 give 0.
  EXPECT_NEAR(emi, kLn2 / 3.0, 1e-15);
  EXPECT_NEAR(emi, 0.23104906018664825, 1e-15);
}

TEST(ExpectedMi, MatchesExhaustiveEnumeration) {
  Rng rng(2);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 2 + rng.below(8);
    const auto u = random_labels(rng, n, 1 + rng.below(4));
    const auto v = random_labels(rng, n, 1 + rng.below(4));
    const auto t = contingency(u, v);
    EXPECT_NEAR(expected_mutual_information(t), exhaustive_emi(u, v), 1e-12);
  }
}

TEST(ExpectedMi, MatchesPermutationEstimatesUpToThirty) {
  Rng rng(3);
  int outside = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const std::size_t n = 10 + rng.below(21);
    const auto u = random_labels(rng, n, 2 + rng.below(4));
    const auto v = random_labels(rng, n, 2 + rng.below(4));
    const double emi = expected_mutual_information(contingency(u, v));
    const auto mc = oracle::shuffled_mi(u, v, 20'000, rng.next());
    if (std::abs(emi - mc.mean) > 3 * mc.standard_error) ++outside;
    EXPECT_GE(emi, 0.0);
    EXPECT_LE(emi, std::min(entropy_of(u), entropy_of(v)) + 1e-12);
  }
  // A 3-sigma band misses about 0.3% of the time; allow one miss in twenty.
  EXPECT_LE(outside, 1);
}

TEST(Ami, HandComputedTable) {
  // For [[1,1],[0,2]] the plug-in MI equals its expectation over arrangements, so AMI is 0.
  const auto t = table_from_counts(2, 2, {1, 1, 0, 2});
  EXPECT_NEAR(expected_mutual_information(t), exhaustive_emi({0, 0, 1, 1}, {0, 1, 1, 1}), 1e-15);
  EXPECT_NEAR(expected_mutual_information(t), mutual_information(t), 1e-15);
  for (auto norm : {Normalizer::Arithmetic, Normalizer::Max, Normalizer::Min, Normalizer::Geometric}) {
    EXPECT_NEAR(ami(t, norm), 0.0, 1e-12) << to_string(norm);
  }
}

TEST(Ami, PerfectAgreementIsExactlyOne) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    auto u = random_labels(rng, 50, 2 + rng.below(5));
    u[0] = 0;
    u[1] = 1;
    std::vector<int> renamed(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) renamed[i] = 100 - 3 * u[i];
    const auto t = contingency(u, renamed);
    for (auto norm : {Normalizer::Arithmetic, Normalizer::Max, Normalizer::Min, Normalizer::Geometric}) {
      EXPECT_EQ(ami(t, norm), 1.0);
    }
    const auto hc = homogeneity_completeness(t);
    EXPECT_EQ(hc.homogeneity, 1.0);
    EXPECT_EQ(hc.completeness, 1.0);
  }
}

TEST(Ami, DegenerateTablesScoreOne) {
  EXPECT_EQ(ami(table_from_counts(1, 1, {5})), 1.0);
}

TEST(Ami, RandomLabelsScoreNearZero) {
  Rng rng(5);
  const auto u = random_labels(rng, 1000, 5);
  const auto v = random_labels(rng, 1000, 5);
  EXPECT_LE(std::abs(ami(contingency(u, v))), 0.05);
}

TEST(Ami, NormalizerNames) {
  EXPECT_EQ(parse_normalizer("arithmetic"), Normalizer::Arithmetic);
  EXPECT_EQ(parse_normalizer("max"), Normalizer::Max);
  EXPECT_EQ(parse_normalizer("min"), Normalizer::Min);
  EXPECT_EQ(parse_normalizer("sqrt"), Normalizer::Geometric);
  EXPECT_THROW(parse_normalizer("median"), Error);
}

TEST(HomogeneityCompleteness, Extremes) {
  const std::vector<int> truth{0, 0, 1, 1};
  const auto single = homogeneity_completeness(contingency(truth, std::vector<int>{0, 0, 0, 0}));
  EXPECT_EQ(single.homogeneity, 0.0);
  EXPECT_EQ(single.completeness, 1.0);
  const auto split = homogeneity_completeness(contingency(truth, std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(split.homogeneity, 1.0);
  // 1 - H(K|C)/H(K) = 1 - ln 2 / ln 4
  EXPECT_NEAR(split.completeness, 0.5, 1e-15);
}

TEST(Metrics, InvariantUnderRelabelling) {
  Rng rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto u = random_labels(rng, 40, 4);
    const auto v = random_labels(rng, 40, 3);
    std::vector<int> pu{0, 1, 2, 3}, pv{0, 1, 2};
    rng.shuffle(pu.begin(), pu.end());
    rng.shuffle(pv.begin(), pv.end());
    std::vector<int> u2, v2;
    for (int x : u) u2.push_back(10 + pu[static_cast<std::size_t>(x)]);
    for (int x : v) v2.push_back(-5 - pv[static_cast<std::size_t>(x)]);
    const auto a = contingency(u, v), b = contingency(u2, v2);
    EXPECT_NEAR(ami(a), ami(b), 1e-12);
    EXPECT_NEAR(homogeneity_completeness(a).homogeneity, homogeneity_completeness(b).homogeneity, 1e-12);
    EXPECT_NEAR(homogeneity_completeness(a).completeness, homogeneity_completeness(b).completeness, 1e-12);
    const auto hc = homogeneity_completeness(a);
    EXPECT_GE(hc.homogeneity, 0.0);
    EXPECT_LE(hc.homogeneity, 1.0);
    EXPECT_GE(hc.completeness, 0.0);
    EXPECT_LE(hc.completeness, 1.0);
    EXPECT_LE(ami(a), 1.0);
  }
}

TEST(Metrics, DoubledTable) {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto u = random_labels(rng, 12, 3);
    const auto v = random_labels(rng, 12, 3);
    auto u2 = u, v2 = v;
    u2.insert(u2.end(), u.begin(), u.end());
    v2.insert(v2.end(), v.begin(), v.end());
    const auto a = contingency(u, v), b = contingency(u2, v2);
    EXPECT_NEAR(mutual_information(a), mutual_information(b), 1e-12);
    EXPECT_NEAR(homogeneity_completeness(a).homogeneity, homogeneity_completeness(b).homogeneity, 1e-12);
    EXPECT_NEAR(homogeneity_completeness(a).completeness, homogeneity_completeness(b).completeness, 1e-12);
    // Only E[MI] moves; AMI follows from the plug-in formula with the new expectation.
    const double h = 0.5 * (entropy(b.row_sums, b.total) + entropy(b.col_sums, b.total));
    const double emi = expected_mutual_information(b);
    const double denom = h - emi;
    if (std::abs(denom) > 1e-9) { EXPECT_NEAR(ami(b), (mutual_information(b) - emi) / denom, 1e-12); }
  }
  // Reference values for [[1,1],[0,2]] doubled.
  const auto d = table_from_counts(2, 2, {2, 2, 0, 4});
  EXPECT_NEAR(expected_mutual_information(d), 0.09246923757378642, 1e-14);
  EXPECT_NEAR(ami(d), 0.2303358554840291, 1e-12);
}

TEST(Sweep, RetainedCount) {
  EXPECT_EQ(retained_count(1000, 0.05), 950u);
  EXPECT_EQ(retained_count(10, 0.0), 10u);
  EXPECT_EQ(retained_count(10, 0.25), 8u);  // ceil(7.5)
  EXPECT_EQ(retained_count(3, 0.3), 3u);    // ceil(2.1)
  for (std::size_t n = 1; n < 200; n += 7) {
    for (double f : {0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.9}) {
      EXPECT_EQ(retained_count(n, f), static_cast<std::size_t>(std::ceil((1 - f) * static_cast<double>(n) - 1e-9)));
    }
  }
}

TEST(Sweep, ZeroFractionMatchesUnswept) {
  Rng rng(8);
  const auto u = random_labels(rng, 100, 4);
  const auto v = random_labels(rng, 100, 4);
  std::vector<double> scores(100);
  for (auto& s : scores) s = rng.uniform();
  const std::vector<double> fractions{0.0};
  const auto sweep = outlier_sweep(v, scores, u, fractions);
  ASSERT_EQ(sweep.size(), 1u);
  const auto t = contingency(u, v);
  EXPECT_EQ(sweep[0].retained, 100u);
  EXPECT_EQ(sweep[0].ami, ami(t));
  EXPECT_EQ(sweep[0].homogeneity, homogeneity_completeness(t).homogeneity);
  EXPECT_EQ(sweep[0].completeness, homogeneity_completeness(t).completeness);
}

TEST(Sweep, DroppingMislabelledPointsImprovesAmi) {
  // 90 points correctly clustered into 3 classes, 10 mislabelled points carry the top scores.
  Rng rng(9);
  std::vector<int> truth, pred;
  std::vector<double> scores;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(i % 3);
    const bool wrong = i % 10 == 0;
    pred.push_back(wrong ? (i + 1) % 3 : i % 3);
    scores.push_back(wrong ? 0.9 + 0.01 * rng.uniform() : 0.5 * rng.uniform());
  }
  const std::vector<double> fractions{0.0, 0.02, 0.05, 0.08, 0.1, 0.2, 0.3};
  const auto sweep = outlier_sweep(pred, scores, truth, fractions);
  ASSERT_EQ(sweep.size(), fractions.size());
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_GE(sweep[i].ami, sweep[i - 1].ami - 1e-12);
    EXPECT_LT(sweep[i].retained, sweep[i - 1].retained);
  }
  EXPECT_LT(sweep[0].ami, 1.0);
  EXPECT_EQ(sweep[4].ami, 1.0);
}

TEST(Sweep, NoiseExcludedUnlessRequested) {
  const std::vector<int> truth{0, 0, 0, 1, 1, 1};
  const std::vector<int> pred{0, 0, kNoise, 1, 1, kNoise};
  const std::vector<double> scores{0.1, 0.2, 0.9, 0.1, 0.2, 0.8};
  const std::vector<double> f0{0.0};
  const auto excluded = outlier_sweep(pred, scores, truth, f0);
  EXPECT_EQ(excluded[0].retained, 4u);
  EXPECT_EQ(excluded[0].ami, 1.0);
  SweepOptions opt;
  opt.include_noise = true;
  const auto included = outlier_sweep(pred, scores, truth, f0, opt);
  EXPECT_EQ(included[0].retained, 6u);
  EXPECT_LT(included[0].ami, 1.0);
}

TEST(Sweep, TiesDropTheSmallerIndexFirst) {
  const std::vector<int> truth{0, 1, 0, 1};
  const std::vector<int> pred{1, 1, 0, 1};
  const std::vector<double> scores{0.5, 0.5, 0.1, 0.1};
  const std::vector<double> f{0.25};
  // Dropping point 0 leaves truth {1,0,1} vs pred {1,0,1}: perfect.
  const auto s = outlier_sweep(pred, scores, truth, f);
  EXPECT_EQ(s[0].retained, 3u);
  EXPECT_EQ(s[0].ami, 1.0);
}

TEST(Sweep, WithoutScoresReturnsSinglePoint) {
  const std::vector<int> truth{0, 0, 1, 1};
  const std::vector<int> pred{0, 0, 1, 1};
  const std::vector<double> fractions{0.0, 0.1, 0.5};
  const auto s = outlier_sweep(pred, {}, truth, fractions);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].fraction, 0.0);
  EXPECT_EQ(s[0].retained, 4u);
}

TEST(Sweep, Errors) {
  const std::vector<int> truth{0, 1};
  const std::vector<int> noise{kNoise, kNoise};
  const std::vector<double> scores{0.1, 0.2};
  const std::vector<double> f0{0.0};
  try {
    outlier_sweep(noise, scores, truth, f0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyRemainder);
  }
  const std::vector<double> descending{0.2, 0.1};
  EXPECT_THROW(outlier_sweep(truth, scores, truth, descending), Error);
  const std::vector<double> one{1.0};
  EXPECT_THROW(outlier_sweep(truth, scores, truth, one), Error);
  EXPECT_THROW(outlier_sweep(truth, scores, std::vector<int>{0}, f0), Error);
}
