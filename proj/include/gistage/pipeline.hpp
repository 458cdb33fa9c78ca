#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gistage/csv_io.hpp"
#include "gistage/detail/parallel.hpp"
#include "gistage/metrics.hpp"
#include "gistage/model.hpp"
#include "gistage/stage.hpp"
#include "gistage/streaming_decoder.hpp"

// Corpus-level decoding and evaluation shared by the command-line tools.

namespace gistage {

struct CorpusDecode {
  std::vector<StageSeq> labels;
  std::vector<std::vector<TransitionEvent>> events;
};

inline CorpusDecode decode_corpus(const HmmModel& model, const DecoderConfig& config,
                                  std::span<const Study> studies, unsigned threads = 1) {
  CorpusDecode out;
  out.labels.resize(studies.size());
  out.events.resize(studies.size());
  detail::parallel_for(studies.size(), threads, [&](std::size_t i) {
    const Study& s = studies[i];
    std::optional<std::span<const Stage>> truth;
    if (s.truth) truth = std::span<const Stage>(*s.truth);
    DecodedStudy d;
    try {
      d = decode_study(model, config, s.observed, truth);
    } catch (const Error& e) {
      throw Error(e.code(), "study '" + s.id + "': " + e.what());
    }
    out.labels[i] = std::move(d.labels);
    out.events[i] = std::move(d.events);
  });
  return out;
}

/// Metrics of the raw observations and of the decoded labels against the
/// truth, over every study that carries truth labels.
struct EvaluationReport {
  std::vector<StudyMetrics> raw_studies;
  std::vector<StudyMetrics> decoded_studies;
  std::vector<std::vector<Stage>> undetected;
  AggregateMetrics raw;
  AggregateMetrics decoded;
};

inline EvaluationReport evaluate_corpus(std::span<const Study> studies,
                                        std::span<const StageSeq> decoded,
                                        std::span<const std::vector<TransitionEvent>> events) {
  if (decoded.size() != studies.size() || events.size() != studies.size()) {
    throw Error(Errc::length_mismatch, "decoded output does not match the study count");
  }
  EvaluationReport report;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const Study& s = studies[i];
    if (!s.truth) continue;
    report.raw_studies.push_back(evaluate_study(s.id, s.observed, *s.truth, {}));
    report.decoded_studies.push_back(evaluate_study(s.id, decoded[i], *s.truth, events[i]));
    report.undetected.push_back(report.decoded_studies.back().undetected_stages(*s.truth));
  }
  if (report.decoded_studies.empty()) {
    throw Error(Errc::no_truth, "no study carries true_label values");
  }
  report.raw = aggregate(report.raw_studies);
  report.decoded = aggregate(report.decoded_studies);
  return report;
}

inline SweepRow sweep_row(std::size_t window, const AggregateMetrics& m) {
  SweepRow row;
  row.window = window;
  row.mean_accuracy = m.mean_accuracy;
  if (m.delay_stats) {
    row.mean_delay = m.delay_stats->mean;
    row.delay_q1 = m.delay_stats->q1;
    row.delay_median = m.delay_stats->median;
    row.delay_q3 = m.delay_stats->q3;
    row.delay_min = m.delay_stats->min;
    row.delay_max = m.delay_stats->max;
  }
  return row;
}

namespace detail {

inline std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline void print_row(std::ostream& out, const char* name, const std::string& raw,
                      const std::string& decoded) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-26s %12s %12s\n", name, raw.c_str(), decoded.c_str());
  out << buf;
}

inline void print_confusion(std::ostream& out, const char* title, const ConfusionMatrix& m) {
  out << title << " (rows: true stage, columns: predicted stage)\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%8s %10s %10s %10s %10s\n", "", "0", "1", "2", "3");
  out << buf;
  for (std::size_t i = 0; i < kNumStages; ++i) {
    std::snprintf(buf, sizeof buf, "%8zu %10llu %10llu %10llu %10llu\n", i,
                  static_cast<unsigned long long>(m[i][0]), static_cast<unsigned long long>(m[i][1]),
                  static_cast<unsigned long long>(m[i][2]), static_cast<unsigned long long>(m[i][3]));
    out << buf;
  }
}

inline std::string delay_text(const std::optional<std::int64_t>& d) {
  return d ? std::to_string(*d) : std::string("--");
}

}  // namespace detail

/// Table-style summary; raw = classifier labels, decoded = HMM output.
inline void print_report(std::ostream& out, const EvaluationReport& r, bool per_study) {
  using detail::fixed;
  if (per_study) {
    out << "study                       raw_acc  decoded_acc   mae      r2     d(1)   d(2)   d(3)\n";
    for (std::size_t i = 0; i < r.decoded_studies.size(); ++i) {
      const StudyMetrics& m = r.decoded_studies[i];
      char buf[256];
      std::snprintf(buf, sizeof buf, "%-26s %8s %12s %7s %7s %6s %6s %6s", m.study_id.c_str(),
                    fixed(100.0 * r.raw_studies[i].accuracy, 2).c_str(),
                    fixed(100.0 * m.accuracy, 2).c_str(), fixed(m.mae, 4).c_str(),
                    fixed(m.r2, 4).c_str(), detail::delay_text(m.delays[1]).c_str(),
                    detail::delay_text(m.delays[2]).c_str(), detail::delay_text(m.delays[3]).c_str());
      out << buf;
      if (!r.undetected[i].empty()) {
        out << "  undetected:";
        for (Stage s : r.undetected[i]) out << ' ' << index(s);
      }
      out << '\n';
    }
    out << '\n';
  }

  out << "studies evaluated: " << r.decoded.studies << '\n';
  detail::print_row(out, "Metric", "Raw", "Decoded");
  detail::print_row(out, "Accuracy [%]", fixed(100.0 * r.raw.mean_accuracy, 4),
                    fixed(100.0 * r.decoded.mean_accuracy, 4));
  detail::print_row(out, "Averaged MAE", fixed(r.raw.mean_mae, 6), fixed(r.decoded.mean_mae, 6));
  detail::print_row(out, "Averaged R2-Score", fixed(r.raw.mean_r2, 6), fixed(r.decoded.mean_r2, 6));
  detail::print_row(out, "Average Delay (# Frames)", "--",
                    r.decoded.delay_stats ? fixed(r.decoded.delay_stats->mean, 4) : "--");
  detail::print_row(out, "Pooled accuracy [%]", fixed(100.0 * r.raw.pooled_accuracy, 4),
                    fixed(100.0 * r.decoded.pooled_accuracy, 4));
  detail::print_row(out, "Pooled MAE", fixed(r.raw.pooled_mae, 6), fixed(r.decoded.pooled_mae, 6));
  detail::print_row(out, "Pooled R2-Score", fixed(r.raw.pooled_r2, 6), fixed(r.decoded.pooled_r2, 6));

  auto print_delays = [&](const char* label, const std::optional<DelayStats>& st) {
    out << label;
    if (!st) {
      out << " none\n";
      return;
    }
    out << " n=" << st->count << " mean=" << fixed(st->mean, 4) << " q1=" << fixed(st->q1, 2)
        << " median=" << fixed(st->median, 2) << " q3=" << fixed(st->q3, 2) << " min=" << st->min
        << " max=" << st->max << '\n';
  };
  print_delays("small-intestine delays:", r.decoded.delay_stats);
  print_delays("all transition delays:", r.decoded.all_delay_stats);

  std::size_t missing = 0;
  for (const auto& u : r.undetected) missing += u.size();
  if (missing > 0) out << "undetected transitions: " << missing << '\n';

  detail::print_confusion(out, "raw confusion", r.raw.pooled_confusion);
  detail::print_confusion(out, "decoded confusion", r.decoded.pooled_confusion);
}

}  // namespace gistage
