#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gistage {

enum class Errc {
  row_not_stochastic,
  structure_violation,
  out_of_range_entry,
  empty_observations,
  impossible_observation,
  sequence_too_long,
  length_mismatch,
  config_invalid,
  decoder_finished,
  truth_not_monotone,
  no_labeled_studies,
  out_of_range,
  malformed_row,
  malformed_model,
  non_contiguous_frames,
  unknown_label,
  mixed_truth_presence,
  io_failure,
  no_truth,
  empty_grid,
  empty,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::row_not_stochastic: return "RowNotStochastic";
    case Errc::structure_violation: return "StructureViolation";
    case Errc::out_of_range_entry: return "OutOfRangeEntry";
    case Errc::empty_observations: return "EmptyObservations";
    case Errc::impossible_observation: return "ImpossibleObservation";
    case Errc::sequence_too_long: return "SequenceTooLong";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::decoder_finished: return "DecoderFinished";
    case Errc::truth_not_monotone: return "TruthNotMonotone";
    case Errc::no_labeled_studies: return "NoLabeledStudies";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::malformed_row: return "MalformedRow";
    case Errc::malformed_model: return "MalformedModel";
    case Errc::non_contiguous_frames: return "NonContiguousFrames";
    case Errc::unknown_label: return "UnknownLabel";
    case Errc::mixed_truth_presence: return "MixedTruthPresence";
    case Errc::io_failure: return "IoFailure";
    case Errc::no_truth: return "NoTruth";
    case Errc::empty_grid: return "EmptyGrid";
    case Errc::empty: return "Empty";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
/// The message is prefixed with the code name, e.g. "UnknownLabel: line 4: ...".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace gistage
