#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gistage/error.hpp"
#include "gistage/model.hpp"
#include "gistage/stage.hpp"

// Offline (whole-sequence) decoding.
//
// Tie rule shared by every decoder in this library: when two candidates score
// the same (see beats()), the lower state index wins, both for the final
// argmax and for each backpointer. Among several optimal paths this selects
// the one that is smallest when compared from the last frame towards the
// first.

namespace gistage {

inline constexpr std::size_t kBruteForceMaxLength = 12;

namespace detail {

inline std::size_t argmax_lowest(const Vec4& v) noexcept {
  std::size_t best = 0;
  for (std::size_t j = 1; j < kNumStages; ++j) {
    if (beats(v[j], v[best])) best = j;
  }
  return best;
}

}  // namespace detail

/// Viterbi decoding over the full sequence. The log model is not validated.
inline StageSeq viterbi_decode(const LogModel& lm, std::span<const Stage> obs) {
  if (obs.empty()) throw Error(Errc::empty_observations, "cannot decode an empty sequence");
  const std::size_t n = obs.size();

  std::vector<std::array<std::uint8_t, kNumStages>> back(n);
  Vec4 delta{};
  for (std::size_t j = 0; j < kNumStages; ++j) {
    delta[j] = lm.log_pi[j] + lm.log_emission[j][index(obs[0])];
  }
  for (std::size_t t = 1; t < n; ++t) {
    Vec4 next{};
    const std::size_t o = index(obs[t]);
    for (std::size_t j = 0; j < kNumStages; ++j) {
      double best = kNegInf;
      std::uint8_t arg = 0;
      for (std::size_t i = 0; i < kNumStages; ++i) {
        const double v = delta[i] + lm.log_transition[i][j];
        if (beats(v, best)) {
          best = v;
          arg = static_cast<std::uint8_t>(i);
        }
      }
      next[j] = best + lm.log_emission[j][o];
      back[t][j] = arg;
    }
    delta = next;
  }

  std::size_t state = detail::argmax_lowest(delta);
  if (delta[state] == kNegInf) {
    throw Error(Errc::impossible_observation, "every state path has zero probability");
  }
  StageSeq path(n);
  for (std::size_t t = n; t-- > 0;) {
    path[t] = stage_at(state);
    state = back[t][state];
  }
  return path;
}

inline StageSeq viterbi_decode(const HmmModel& model, std::span<const Stage> obs) {
  return viterbi_decode(LogModel::from(validate_model(model)), obs);
}

/// Joint log-probability of a state path and the observations, accumulated
/// frame by frame in the same order as the Viterbi recursion.
inline double path_log_likelihood(const LogModel& lm, std::span<const Stage> path,
                                  std::span<const Stage> obs) {
  if (path.size() != obs.size()) {
    throw Error(Errc::length_mismatch, "path has " + std::to_string(path.size()) +
                                           " frames, observations " + std::to_string(obs.size()));
  }
  if (obs.empty()) throw Error(Errc::empty_observations, "empty sequence");
  double s = lm.log_pi[index(path[0])] + lm.log_emission[index(path[0])][index(obs[0])];
  for (std::size_t t = 1; t < obs.size(); ++t) {
    const std::size_t i = index(path[t - 1]);
    const std::size_t j = index(path[t]);
    s = (s + lm.log_transition[i][j]) + lm.log_emission[j][index(obs[t])];
  }
  return s;
}

inline double path_log_likelihood(const HmmModel& model, std::span<const Stage> path,
                                  std::span<const Stage> obs) {
  return path_log_likelihood(LogModel::from(validate_model(model)), path, obs);
}

/// Exhaustive search over all 4^T state sequences. Test oracle for
/// viterbi_decode; same tie rule.
inline StageSeq brute_force_decode(const LogModel& lm, std::span<const Stage> obs) {
  if (obs.empty()) throw Error(Errc::empty_observations, "cannot decode an empty sequence");
  const std::size_t n = obs.size();
  if (n > kBruteForceMaxLength) {
    throw Error(Errc::sequence_too_long, std::to_string(n) + " frames exceeds the limit of " +
                                             std::to_string(kBruteForceMaxLength));
  }

  // Enumerate with the last frame as the most significant digit, so the first
  // strict maximum found is the smallest path compared last-frame-first.
  std::uint64_t total = 1;
  for (std::size_t t = 0; t < n; ++t) total *= kNumStages;

  StageSeq candidate(n);
  StageSeq best_path;
  double best = kNegInf;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    for (std::size_t t = 0; t < n; ++t) {
      candidate[t] = stage_at(c % kNumStages);
      c /= kNumStages;
    }
    const double s = path_log_likelihood(lm, candidate, obs);
    if (beats(s, best)) {
      best = s;
      best_path = candidate;
    }
  }
  if (best == kNegInf) {
    throw Error(Errc::impossible_observation, "every state path has zero probability");
  }
  return best_path;
}

inline StageSeq brute_force_decode(const HmmModel& model, std::span<const Stage> obs) {
  return brute_force_decode(LogModel::from(validate_model(model)), obs);
}

}  // namespace gistage
