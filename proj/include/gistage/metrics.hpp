#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gistage/error.hpp"
#include "gistage/stage.hpp"
#include "gistage/streaming_decoder.hpp"

// Evaluation of decoded label streams. MAE and R^2 treat the stage labels as
// ordinal values 0..3. Aggregates are unweighted means over studies.

namespace gistage {

using ConfusionMatrix = std::array<std::array<std::uint64_t, kNumStages>, kNumStages>;
using StageDelays = std::array<std::optional<std::int64_t>, kNumStages>;

namespace detail {

inline void check_pair(std::span<const Stage> pred, std::span<const Stage> truth) {
  if (pred.size() != truth.size()) {
    throw Error(Errc::length_mismatch, "prediction has " + std::to_string(pred.size()) +
                                           " frames, truth " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw Error(Errc::empty, "no frames to evaluate");
}

inline double label_value(Stage s) { return static_cast<double>(index(s)); }

/// Sum in ascending order so the result does not depend on input order.
inline double ordered_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace detail

inline double accuracy(std::span<const Stage> pred, std::span<const Stage> truth) {
  detail::check_pair(pred, truth);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) hits += pred[t] == truth[t];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline double mae(std::span<const Stage> pred, std::span<const Stage> truth) {
  detail::check_pair(pred, truth);
  std::uint64_t total = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const auto a = static_cast<std::int64_t>(index(pred[t]));
    const auto b = static_cast<std::int64_t>(index(truth[t]));
    total += static_cast<std::uint64_t>(a > b ? a - b : b - a);
  }
  return static_cast<double>(total) / static_cast<double>(pred.size());
}

/// Coefficient of determination 1 - SS_res / SS_tot. A constant truth gives
/// 1 when the prediction is exact and 0 otherwise.
inline double r2(std::span<const Stage> pred, std::span<const Stage> truth) {
  detail::check_pair(pred, truth);
  const double n = static_cast<double>(truth.size());
  double mean = 0.0;
  for (Stage s : truth) mean += detail::label_value(s);
  mean /= n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const double y = detail::label_value(truth[t]);
    const double e = y - detail::label_value(pred[t]);
    ss_res += e * e;
    ss_tot += (y - mean) * (y - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

/// counts[true][pred]
inline ConfusionMatrix confusion(std::span<const Stage> pred, std::span<const Stage> truth) {
  if (pred.size() != truth.size()) {
    throw Error(Errc::length_mismatch, "prediction has " + std::to_string(pred.size()) +
                                           " frames, truth " + std::to_string(truth.size()));
  }
  ConfusionMatrix counts{};
  for (std::size_t t = 0; t < pred.size(); ++t) ++counts[index(truth[t])][index(pred[t])];
  return counts;
}

inline std::uint64_t total_count(const ConfusionMatrix& m) {
  std::uint64_t n = 0;
  for (const auto& row : m) {
    for (std::uint64_t c : row) n += c;
  }
  return n;
}

/// Signed detection delay per entered stage (indices 1..3; index 0 unused).
/// A stage with no event stays empty.
inline StageDelays transition_delays(std::span<const TransitionEvent> events,
                                     std::span<const Stage> truth) {
  if (!is_monotone(truth)) throw Error(Errc::truth_not_monotone, "truth labels decrease");
  StageDelays delays{};
  for (const TransitionEvent& e : events) {
    const auto start = first_frame_reaching(truth, e.stage_entered);
    if (!start) continue;
    delays[index(e.stage_entered)] =
        static_cast<std::int64_t>(e.detection_frame) - static_cast<std::int64_t>(*start);
  }
  return delays;
}

/// Transition events inferred from a finished label sequence: the first frame
/// at or beyond each stage. Used when no detector event log is available.
inline std::vector<TransitionEvent> events_from_labels(std::span<const Stage> labels) {
  std::vector<TransitionEvent> events;
  for (std::size_t s = 1; s < kNumStages; ++s) {
    if (const auto f = first_frame_reaching(labels, stage_at(s))) {
      events.push_back(TransitionEvent{stage_at(s), *f, std::nullopt, std::nullopt});
    }
  }
  return events;
}

struct StudyMetrics {
  std::string study_id;
  double accuracy = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  ConfusionMatrix confusion{};
  StageDelays delays{};

  /// Stages present in the truth for which no transition was detected.
  std::vector<Stage> undetected_stages(std::span<const Stage> truth) const {
    std::vector<Stage> out;
    for (std::size_t s = 1; s < kNumStages; ++s) {
      if (!delays[s] && first_frame_reaching(truth, stage_at(s))) out.push_back(stage_at(s));
    }
    return out;
  }
};

inline StudyMetrics evaluate_study(std::string study_id, std::span<const Stage> pred,
                                   std::span<const Stage> truth,
                                   std::span<const TransitionEvent> events) {
  StudyMetrics m;
  m.study_id = std::move(study_id);
  m.accuracy = accuracy(pred, truth);
  m.mae = mae(pred, truth);
  m.r2 = r2(pred, truth);
  m.confusion = confusion(pred, truth);
  m.delays = transition_delays(events, truth);
  return m;
}

struct DelayStats {
  std::size_t count = 0;
  double mean = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  std::int64_t min = 0;
  std::int64_t max = 0;
};

/// Linear-interpolation quantile on sorted data.
inline double quantile_sorted(std::span<const std::int64_t> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * static_cast<double>(sorted[hi] - sorted[lo]);
}

inline std::optional<DelayStats> delay_stats(std::vector<std::int64_t> delays) {
  if (delays.empty()) return std::nullopt;
  std::sort(delays.begin(), delays.end());
  DelayStats st;
  st.count = delays.size();
  std::int64_t sum = 0;
  for (std::int64_t d : delays) sum += d;
  st.mean = static_cast<double>(sum) / static_cast<double>(delays.size());
  st.q1 = quantile_sorted(delays, 0.25);
  st.median = quantile_sorted(delays, 0.5);
  st.q3 = quantile_sorted(delays, 0.75);
  st.min = delays.front();
  st.max = delays.back();
  return st;
}

struct AggregateMetrics {
  std::size_t studies = 0;
  double mean_accuracy = 0.0;
  double mean_mae = 0.0;
  double mean_r2 = 0.0;
  ConfusionMatrix pooled_confusion{};
  /// Small-intestine entry delays.
  std::optional<DelayStats> delay_stats;
  /// Delays of every detected transition.
  std::optional<DelayStats> all_delay_stats;
  /// Frame-pooled alternatives computed from the pooled confusion matrix.
  double pooled_accuracy = 0.0;
  double pooled_mae = 0.0;
  double pooled_r2 = 0.0;
};

/// Metrics of the pooled confusion matrix, treating all frames as one study.
inline void pooled_from_confusion(const ConfusionMatrix& m, double& acc, double& mae_out,
                                  double& r2_out) {
  const double n = static_cast<double>(total_count(m));
  double hits = 0.0;
  double abs_err = 0.0;
  double ss_res = 0.0;
  double truth_sum = 0.0;
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) {
      const double c = static_cast<double>(m[i][j]);
      const double d = static_cast<double>(i) - static_cast<double>(j);
      if (i == j) hits += c;
      abs_err += c * std::abs(d);
      ss_res += c * d * d;
      truth_sum += c * static_cast<double>(i);
    }
  }
  const double mean = truth_sum / n;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < kNumStages; ++i) {
    double row = 0.0;
    for (std::uint64_t c : m[i]) row += static_cast<double>(c);
    ss_tot += row * (static_cast<double>(i) - mean) * (static_cast<double>(i) - mean);
  }
  acc = hits / n;
  mae_out = abs_err / n;
  r2_out = ss_tot == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
}

inline AggregateMetrics aggregate(std::span<const StudyMetrics> studies) {
  if (studies.empty()) throw Error(Errc::empty, "no studies to aggregate");
  AggregateMetrics agg;
  agg.studies = studies.size();
  std::vector<double> acc, err, det;
  std::vector<std::int64_t> si_delays, all_delays;
  for (const StudyMetrics& m : studies) {
    acc.push_back(m.accuracy);
    err.push_back(m.mae);
    det.push_back(m.r2);
    for (std::size_t i = 0; i < kNumStages; ++i) {
      for (std::size_t j = 0; j < kNumStages; ++j) agg.pooled_confusion[i][j] += m.confusion[i][j];
    }
    for (std::size_t s = 1; s < kNumStages; ++s) {
      if (m.delays[s]) all_delays.push_back(*m.delays[s]);
    }
    if (m.delays[index(Stage::small_intestine)]) {
      si_delays.push_back(*m.delays[index(Stage::small_intestine)]);
    }
  }
  agg.mean_accuracy = detail::ordered_mean(std::move(acc));
  agg.mean_mae = detail::ordered_mean(std::move(err));
  agg.mean_r2 = detail::ordered_mean(std::move(det));
  agg.delay_stats = delay_stats(std::move(si_delays));
  agg.all_delay_stats = delay_stats(std::move(all_delays));
  pooled_from_confusion(agg.pooled_confusion, agg.pooled_accuracy, agg.pooled_mae, agg.pooled_r2);
  return agg;
}

}  // namespace gistage
