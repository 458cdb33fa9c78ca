#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "gistage/metrics.hpp"

using namespace gistage;

namespace {

// Straightforward two-pass R^2 written independently of the library version.
double naive_r2(const StageSeq& pred, const StageSeq& truth) {
  std::vector<double> y, f;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    y.push_back(static_cast<double>(static_cast<int>(truth[i])));
    f.push_back(static_cast<double>(static_cast<int>(pred[i])));
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double res = 0.0, tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    res += (y[i] - f[i]) * (y[i] - f[i]);
    tot += (y[i] - mean) * (y[i] - mean);
  }
  if (tot == 0.0) return res == 0.0 ? 1.0 : 0.0;
  return 1.0 - res / tot;
}

StageSeq random_seq(std::mt19937_64& rng, std::size_t n) {
  StageSeq s(n);
  for (Stage& x : s) x = stage_at(rng() % 4);
  return s;
}

TransitionEvent event(int stage, std::uint64_t frame) {
  return TransitionEvent{stage_from_int(stage), frame, std::nullopt, std::nullopt};
}

}  // namespace

TEST(Accuracy, Examples) {
  const StageSeq t = to_stages({0, 1, 1, 1});
  EXPECT_EQ(accuracy(t, t), 1.0);
  EXPECT_EQ(accuracy(to_stages({0, 0, 1, 1}), t), 0.75);
}

TEST(Accuracy, Errors) {
  try {
    accuracy(to_stages({0}), to_stages({0, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::length_mismatch);
  }
  try {
    accuracy(StageSeq{}, StageSeq{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty);
  }
}

TEST(Mae, Examples) {
  const StageSeq t = to_stages({0, 1, 2, 3});
  EXPECT_EQ(mae(t, t), 0.0);
  EXPECT_EQ(mae(to_stages({2, 2}), to_stages({1, 3})), 1.0);
}

TEST(Mae, BoundedByErrorRate) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const StageSeq a = random_seq(rng, 1 + rng() % 50);
    const StageSeq b = random_seq(rng, a.size());
    const double acc = accuracy(a, b);
    const double err = mae(a, b);
    EXPECT_LE(err, 3.0 * (1.0 - acc) + 1e-12);
    EXPECT_EQ(err == 0.0, acc == 1.0);
  }
}

TEST(R2, Examples) {
  const StageSeq t = to_stages({0, 1, 2, 3});
  EXPECT_EQ(r2(t, t), 1.0);
  EXPECT_EQ(r2(to_stages({1, 1, 2}), to_stages({1, 1, 1})), 0.0);
  EXPECT_EQ(r2(to_stages({1, 1, 1}), to_stages({1, 1, 1})), 1.0);
}

TEST(R2, MatchesIndependentImplementation) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const StageSeq a = random_seq(rng, 1 + rng() % 300);
    const StageSeq b = random_seq(rng, a.size());
    const double got = r2(a, b);
    EXPECT_NEAR(got, naive_r2(a, b), 1e-12);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Confusion, CountsAndTotals) {
  const StageSeq t = to_stages({0, 1, 1, 2, 3, 3});
  const ConfusionMatrix same = confusion(t, t);
  std::uint64_t diag = 0;
  for (std::size_t i = 0; i < kNumStages; ++i) diag += same[i][i];
  EXPECT_EQ(diag, t.size());

  const ConfusionMatrix m = confusion(to_stages({0, 2, 1, 2, 2, 3}), t);
  EXPECT_EQ(m[1][2], 1u);
  EXPECT_EQ(m[3][2], 1u);
  EXPECT_EQ(total_count(m), t.size());
  EXPECT_THROW(confusion(to_stages({0}), t), Error);
}

TEST(Confusion, AccuracyPlusOffDiagonalMassIsOne) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const StageSeq a = random_seq(rng, 1 + rng() % 80);
    const StageSeq b = random_seq(rng, a.size());
    const ConfusionMatrix m = confusion(a, b);
    std::uint64_t off = 0;
    for (std::size_t r = 0; r < kNumStages; ++r) {
      for (std::size_t c = 0; c < kNumStages; ++c) off += r == c ? 0 : m[r][c];
    }
    EXPECT_NEAR(accuracy(a, b) + static_cast<double>(off) / static_cast<double>(a.size()), 1.0, 1e-12);
  }
}

TEST(TransitionDelays, SignedDelays) {
  StageSeq truth(1000, Stage::stomach);
  truth.insert(truth.end(), 500, Stage::small_intestine);
  truth.insert(truth.begin(), 10, Stage::esophagus);
  // Small intestine starts at frame 1010 here.
  const std::vector<TransitionEvent> late{event(2, 1029)};
  EXPECT_EQ(transition_delays(late, truth)[2], 19);
  const std::vector<TransitionEvent> early{event(2, 1000)};
  EXPECT_EQ(transition_delays(early, truth)[2], -10);
  const auto none = transition_delays({}, truth);
  EXPECT_FALSE(none[2]);
  StudyMetrics m;
  m.delays = none;
  EXPECT_EQ(m.undetected_stages(truth), (std::vector<Stage>{Stage::stomach, Stage::small_intestine}));
}

TEST(TransitionDelays, RejectsNonMonotoneTruth) {
  try {
    transition_delays({}, to_stages({0, 1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::truth_not_monotone);
  }
}

TEST(EventsFromLabels, FirstFrames) {
  const auto ev = events_from_labels(to_stages({0, 0, 1, 1, 3}));
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0].detection_frame, 2u);
  EXPECT_EQ(ev[1].stage_entered, Stage::small_intestine);
  EXPECT_EQ(ev[1].detection_frame, 4u);
  EXPECT_EQ(ev[2].detection_frame, 4u);
}

TEST(Aggregate, SingleStudyEqualsItself) {
  const StageSeq t = to_stages({0, 1, 1, 2, 2, 3});
  const StageSeq p = to_stages({0, 1, 2, 2, 2, 3});
  const StudyMetrics m = evaluate_study("a", p, t, events_from_labels(p));
  const AggregateMetrics agg = aggregate(std::vector<StudyMetrics>{m});
  EXPECT_EQ(agg.mean_accuracy, m.accuracy);
  EXPECT_EQ(agg.mean_mae, m.mae);
  EXPECT_EQ(agg.mean_r2, m.r2);
  EXPECT_EQ(agg.pooled_confusion, m.confusion);
  EXPECT_EQ(agg.pooled_accuracy, m.accuracy);
  EXPECT_NEAR(agg.pooled_r2, m.r2, 1e-12);
  ASSERT_TRUE(agg.delay_stats);
  EXPECT_EQ(agg.delay_stats->mean, -1.0);
}

TEST(Aggregate, UnweightedMeanAndPooledConfusion) {
  StudyMetrics a, b;
  a.accuracy = 0.9;
  b.accuracy = 1.0;
  a.confusion[0][0] = 9;
  a.confusion[0][1] = 1;
  b.confusion[2][2] = 1000;
  const AggregateMetrics agg = aggregate(std::vector<StudyMetrics>{a, b});
  EXPECT_DOUBLE_EQ(agg.mean_accuracy, 0.95);
  EXPECT_EQ(agg.pooled_confusion[0][0], 9u);
  EXPECT_EQ(agg.pooled_confusion[0][1], 1u);
  EXPECT_EQ(agg.pooled_confusion[2][2], 1000u);
  EXPECT_NEAR(agg.pooled_accuracy, 1009.0 / 1010.0, 1e-15);
}

TEST(Aggregate, OrderInvariant) {
  std::mt19937_64 rng(4);
  std::vector<StudyMetrics> studies;
  for (int i = 0; i < 40; ++i) {
    StageSeq t(100);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = stage_at(std::min<std::size_t>(k / 25, 3));
    StageSeq p = t;
    for (Stage& s : p) {
      if (rng() % 7 == 0) s = stage_at(rng() % 4);
    }
    studies.push_back(evaluate_study("s" + std::to_string(i), p, t, events_from_labels(p)));
  }
  const AggregateMetrics a = aggregate(studies);
  std::shuffle(studies.begin(), studies.end(), rng);
  const AggregateMetrics b = aggregate(studies);
  EXPECT_EQ(a.mean_accuracy, b.mean_accuracy);
  EXPECT_EQ(a.mean_mae, b.mean_mae);
  EXPECT_EQ(a.mean_r2, b.mean_r2);
  EXPECT_EQ(a.pooled_confusion, b.pooled_confusion);
  EXPECT_EQ(a.delay_stats->mean, b.delay_stats->mean);
}

TEST(Aggregate, DelayQuartiles) {
  const auto st = delay_stats({4, -2, 10, 0, 3});
  ASSERT_TRUE(st);
  EXPECT_EQ(st->count, 5u);
  EXPECT_DOUBLE_EQ(st->mean, 3.0);
  EXPECT_EQ(st->min, -2);
  EXPECT_EQ(st->max, 10);
  EXPECT_DOUBLE_EQ(st->median, 3.0);
  EXPECT_DOUBLE_EQ(st->q1, 0.0);
  EXPECT_DOUBLE_EQ(st->q3, 4.0);
  const auto even = delay_stats({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(even->median, 2.5);
  EXPECT_DOUBLE_EQ(even->q1, 1.75);
  EXPECT_FALSE(delay_stats({}));
}

TEST(Aggregate, EmptyIsError) {
  try {
    aggregate(std::vector<StudyMetrics>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty);
  }
}
