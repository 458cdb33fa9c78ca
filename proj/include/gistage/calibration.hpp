#pragma once

#include <span>
#include <string>
#include <vector>

#include "gistage/detail/parallel.hpp"
#include "gistage/error.hpp"
#include "gistage/metrics.hpp"
#include "gistage/model.hpp"
#include "gistage/stage.hpp"
#include "gistage/streaming_decoder.hpp"

// Grid search over the shared transition self-loop probability d and the
// emission correct-label probability c.

namespace gistage {

struct GridSpec {
  std::vector<double> transition_diag_candidates{0.9, 0.99, 0.999, 0.9999};
  std::vector<double> emission_correct_candidates{0.85, 0.90, 0.95, 0.97};
  std::size_t window = 300;
  /// Decoder lock-in confirmation used while scoring candidates.
  std::size_t commit_confirmation = 1;
};

struct GridPoint {
  double transition_diag = 0.0;
  double emission_correct = 0.0;
  double mean_accuracy = 0.0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct CalibrationResult {
  double best_transition_diag = 0.0;
  double best_emission_correct = 0.0;
  double best_mean_accuracy = 0.0;
  /// Diagonal candidates in the outer loop, emission candidates inner, in
  /// the order they were given.
  std::vector<GridPoint> full_table;
};

inline HmmModel build_model(double transition_diag, double emission_correct) {
  auto open_unit = [](double v, const char* what) {
    if (!(v > 0.0 && v < 1.0)) {
      throw Error(Errc::out_of_range,
                  std::string(what) + " = " + detail::fmt_double(v) + " is not in (0,1)");
    }
  };
  open_unit(transition_diag, "transition_diag");
  open_unit(emission_correct, "emission_correct");
  HmmModel m;
  m.pi = {1.0, 0.0, 0.0, 0.0};
  m.transition = bidiagonal(transition_diag);
  m.emission = confusion_matrix(emission_correct);
  return validate_model(m);
}

/// Mean per-study accuracy of smoothed decoding with `model`.
inline double mean_study_accuracy(const HmmModel& model, const DecoderConfig& config,
                                  std::span<const Study> studies, unsigned threads = 1) {
  std::vector<double> acc(studies.size());
  detail::parallel_for(studies.size(), threads, [&](std::size_t i) {
    const Study& s = studies[i];
    const DecodedStudy d = decode_study(model, config, s.observed, *s.truth);
    acc[i] = accuracy(d.labels, *s.truth);
  });
  return detail::ordered_mean(std::move(acc));
}

inline CalibrationResult grid_search(const GridSpec& grid, std::span<const Study> studies,
                                     unsigned threads = 1) {
  if (grid.transition_diag_candidates.empty() || grid.emission_correct_candidates.empty()) {
    throw Error(Errc::empty_grid, "both candidate lists must be non-empty");
  }
  if (studies.empty()) throw Error(Errc::no_labeled_studies, "no studies given");
  for (const Study& s : studies) {
    if (!s.truth) throw Error(Errc::no_labeled_studies, "study '" + s.id + "' has no truth labels");
  }

  DecoderConfig config;
  config.window = grid.window;
  config.commit_confirmation = grid.commit_confirmation;
  config.emit_mode = EmitMode::smoothed;
  config.validate();

  CalibrationResult result;
  for (double d : grid.transition_diag_candidates) {
    for (double c : grid.emission_correct_candidates) {
      result.full_table.push_back(GridPoint{d, c, 0.0});
    }
  }
  // Validate every candidate before spending time decoding.
  for (const GridPoint& p : result.full_table) build_model(p.transition_diag, p.emission_correct);

  for (GridPoint& p : result.full_table) {
    p.mean_accuracy = mean_study_accuracy(build_model(p.transition_diag, p.emission_correct),
                                          config, studies, threads);
  }

  const GridPoint* best = &result.full_table.front();
  for (const GridPoint& p : result.full_table) {
    const bool better =
        p.mean_accuracy > best->mean_accuracy ||
        (p.mean_accuracy == best->mean_accuracy &&
         (p.transition_diag > best->transition_diag ||
          (p.transition_diag == best->transition_diag &&
           p.emission_correct > best->emission_correct)));
    if (better) best = &p;
  }
  result.best_transition_diag = best->transition_diag;
  result.best_emission_correct = best->emission_correct;
  result.best_mean_accuracy = best->mean_accuracy;
  return result;
}

}  // namespace gistage
