#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gistage/error.hpp"

namespace gistage {

inline constexpr std::size_t kNumStages = 4;

/// Anatomical stage of the capsule. The ordering is the order of transit,
/// and the same alphabet is used for the classifier's observed labels.
enum class Stage : std::uint8_t {
  esophagus = 0,
  stomach = 1,
  small_intestine = 2,
  colon = 3,
};

constexpr std::size_t index(Stage s) noexcept { return static_cast<std::size_t>(s); }

constexpr Stage stage_at(std::size_t i) noexcept { return static_cast<Stage>(i); }

/// Checked conversion from an integer label; throws UnknownLabel.
inline Stage stage_from_int(long long value) {
  if (value < 0 || value >= static_cast<long long>(kNumStages)) {
    throw Error(Errc::unknown_label, "label " + std::to_string(value) + " is not in 0..3");
  }
  return static_cast<Stage>(value);
}

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::esophagus: return "esophagus";
    case Stage::stomach: return "stomach";
    case Stage::small_intestine: return "small intestine";
    case Stage::colon: return "colon";
  }
  return "?";
}

using StageSeq = std::vector<Stage>;

inline bool is_monotone(std::span<const Stage> seq) {
  return std::is_sorted(seq.begin(), seq.end());
}

inline StageSeq to_stages(std::initializer_list<int> values) {
  StageSeq out;
  out.reserve(values.size());
  for (int v : values) out.push_back(stage_from_int(v));
  return out;
}

/// One capsule study: the observed classifier labels and, when known,
/// the ground-truth stage of every frame.
struct Study {
  std::string id;
  StageSeq observed;
  std::optional<StageSeq> truth;
};

using SyntheticStudy = Study;

}  // namespace gistage
