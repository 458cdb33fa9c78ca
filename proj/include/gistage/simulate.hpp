#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gistage/error.hpp"
#include "gistage/model.hpp"
#include "gistage/stage.hpp"

// Synthetic capsule studies: monotone ground truth with uniformly drawn
// per-stage durations, and observed labels drawn frame by frame from the
// emission row of the true stage.

namespace gistage {

struct DurationRange {
  std::uint64_t min = 1;
  std::uint64_t max = 1;

  friend bool operator==(const DurationRange&, const DurationRange&) = default;
};

struct SimConfig {
  std::array<DurationRange, kNumStages> stage_duration_ranges{{
      {20, 100},
      {2'000, 8'000},
      {8'000, 20'000},
      {2'000, 10'000},
  }};
  Mat4 emission = confusion_matrix(0.97);
  std::uint64_t seed = 1;
  std::size_t studies = 85;
  /// Frames within this distance of a true transition use `burst_emission`
  /// instead. Zero disables burst noise.
  std::uint64_t burst_radius = 0;
  Mat4 burst_emission = confusion_matrix(0.7);

  void validate() const {
    for (std::size_t s = 0; s < kNumStages; ++s) {
      const DurationRange& r = stage_duration_ranges[s];
      if (r.min < 1 || r.min > r.max) {
        throw Error(Errc::config_invalid, "duration range for stage " + std::to_string(s) +
                                              " must satisfy 1 <= min <= max");
      }
    }
    if (studies < 1) throw Error(Errc::config_invalid, "studies must be positive");
    auto check = [](const Mat4& m, const std::string& what) {
      for (std::size_t i = 0; i < kNumStages; ++i) {
        double sum = 0.0;
        for (double v : m[i]) {
          if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(Errc::config_invalid, what + " row " + std::to_string(i) +
                                                  " has an entry outside [0,1]");
          }
          sum += v;
        }
        if (std::abs(sum - 1.0) > kStochasticTolerance) {
          throw Error(Errc::config_invalid, what + " row " + std::to_string(i) + " sums to " +
                                                detail::fmt_double(sum));
        }
      }
    };
    check(emission, "emission");
    if (burst_radius > 0) check(burst_emission, "burst emission");
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// The std distributions are implementation-defined; these mappings keep the
// corpus identical across standard libraries.
inline std::uint64_t uniform_int(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo;
  if (span == ~0ull) return rng();
  const std::uint64_t range = span + 1;
  const std::uint64_t limit = ~0ull - (~0ull % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + x % range;
}

inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t sample_row(std::mt19937_64& rng, const Vec4& row) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < kNumStages; ++k) {
    acc += row[k];
    if (u < acc) return k;
  }
  // Rounding can leave u just above the final cumulative sum.
  for (std::size_t k = kNumStages; k-- > 0;) {
    if (row[k] > 0.0) return k;
  }
  return kNumStages - 1;
}

inline std::string study_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim-%03zu", i);
  return buf;
}

}  // namespace detail

inline SyntheticStudy generate_study(const SimConfig& config, std::size_t study_index) {
  config.validate();
  std::mt19937_64 rng(detail::splitmix64(config.seed ^ detail::splitmix64(study_index)));

  std::array<std::uint64_t, kNumStages> durations{};
  std::uint64_t total = 0;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const DurationRange& r = config.stage_duration_ranges[s];
    durations[s] = detail::uniform_int(rng, r.min, r.max);
    total += durations[s];
  }

  SyntheticStudy study;
  study.id = detail::study_id(study_index);
  StageSeq truth;
  truth.reserve(total);
  std::array<std::uint64_t, kNumStages> starts{};
  for (std::size_t s = 0; s < kNumStages; ++s) {
    starts[s] = truth.size();
    truth.insert(truth.end(), durations[s], stage_at(s));
  }

  study.observed.reserve(total);
  for (std::uint64_t t = 0; t < total; ++t) {
    bool burst = false;
    if (config.burst_radius > 0) {
      for (std::size_t s = 1; s < kNumStages; ++s) {
        const std::uint64_t b = starts[s];
        const std::uint64_t dist = t >= b ? t - b : b - t;
        if (dist < config.burst_radius) burst = true;
      }
    }
    const Mat4& emission = burst ? config.burst_emission : config.emission;
    study.observed.push_back(stage_at(detail::sample_row(rng, emission[index(truth[t])])));
  }
  study.truth = std::move(truth);
  return study;
}

inline std::vector<SyntheticStudy> generate_corpus(const SimConfig& config) {
  config.validate();
  std::vector<SyntheticStudy> corpus;
  corpus.reserve(config.studies);
  for (std::size_t i = 0; i < config.studies; ++i) corpus.push_back(generate_study(config, i));
  return corpus;
}

}  // namespace gistage
