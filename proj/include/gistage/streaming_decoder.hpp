#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gistage/error.hpp"
#include "gistage/model.hpp"
#include "gistage/stage.hpp"
#include "gistage/viterbi.hpp"

// Online fixed-lag Viterbi decoding with bounded memory.
//
// The decoder keeps the most recent `window` columns of the log-likelihood
// matrix in a ring buffer. Every new frame appends a column; once the buffer
// is full the oldest column is evicted and the label it carries on the
// current best path becomes final.
//
// With lock-in enabled only two states are live at any time, {floor,
// floor+1}. The floor is raised permanently once the per-frame decision
// has sat on floor+1 for `commit_confirmation` consecutive frames, which
// records a TransitionEvent at the first frame of that run.

namespace gistage {

enum class EmitMode { instantaneous, smoothed };

inline std::string_view emit_mode_name(EmitMode m) {
  return m == EmitMode::instantaneous ? "instantaneous" : "smoothed";
}

inline EmitMode parse_emit_mode(std::string_view text) {
  if (text == "instantaneous") return EmitMode::instantaneous;
  if (text == "smoothed") return EmitMode::smoothed;
  throw Error(Errc::config_invalid,
              "emit_mode '" + std::string(text) + "' is not 'instantaneous' or 'smoothed'");
}

struct DecoderConfig {
  std::size_t window = 300;
  EmitMode emit_mode = EmitMode::smoothed;
  std::size_t commit_confirmation = 1;
  /// Restrict the recursion to {floor, floor+1} and raise the floor on
  /// detection. When false the decoder is a plain fixed-lag smoother over all
  /// four states and records no transition events.
  bool lock_in = true;
  /// Subtract the column maximum after every step.
  bool renormalize = true;

  void validate() const {
    if (window < 2) {
      throw Error(Errc::config_invalid, "window must be >= 2, got " + std::to_string(window));
    }
    if (commit_confirmation < 1 || commit_confirmation > window) {
      throw Error(Errc::config_invalid, "commit_confirmation must be in [1, window=" +
                                            std::to_string(window) + "], got " +
                                            std::to_string(commit_confirmation));
    }
  }

  friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

struct LabeledFrame {
  std::uint64_t frame_index = 0;
  Stage stage = Stage::esophagus;

  friend bool operator==(const LabeledFrame&, const LabeledFrame&) = default;
};

struct FrameDecision {
  std::uint64_t frame_index = 0;
  Stage instantaneous_stage = Stage::esophagus;
  /// Final label of the frame that left the window on this step.
  std::optional<LabeledFrame> evicted_frame_label;
};

struct TransitionEvent {
  Stage stage_entered = Stage::stomach;
  std::uint64_t detection_frame = 0;
  std::optional<std::uint64_t> true_transition_frame;
  std::optional<std::int64_t> delay_frames;

  friend bool operator==(const TransitionEvent&, const TransitionEvent&) = default;
};

class StreamingDecoder {
 public:
  struct Column {
    Vec4 score{};
    std::array<std::uint8_t, kNumStages> back{};
    /// State of this frame on the path backtraced from the newest column.
    std::uint8_t path = 0;
    /// Lock-in floor in force when the column was computed.
    std::uint8_t floor = 0;
  };

  StreamingDecoder(const HmmModel& model, DecoderConfig config)
      : log_model_(LogModel::from(validate_model(model))), config_(config) {
    config_.validate();
    ring_.resize(config_.window);
  }

  const DecoderConfig& config() const noexcept { return config_; }
  Stage floor() const noexcept { return stage_at(floor_); }
  std::uint64_t frame_count() const noexcept { return frame_count_; }
  std::size_t buffered() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return ring_.size(); }
  bool finished() const noexcept { return finished_; }
  const std::vector<TransitionEvent>& events() const noexcept { return events_; }
  /// Number of emitted labels that had to be raised to the previously
  /// emitted label to keep the output monotone.
  std::uint64_t clamped_labels() const noexcept { return clamped_; }

  /// Buffered columns, oldest first.
  template <class Fn>
  void for_each_column(Fn&& fn) const {
    for (std::size_t k = 0; k < size_; ++k) fn(ring_[slot(k)]);
  }

  FrameDecision step(Stage observation) {
    if (finished_) throw Error(Errc::decoder_finished, "step() called after finish()");

    const std::size_t o = index(observation);
    const std::size_t lo = config_.lock_in ? floor_ : 0;
    const std::size_t hi = config_.lock_in ? std::min<std::size_t>(floor_ + 1, kNumStages - 1)
                                           : kNumStages - 1;

    Column col;
    col.score.fill(kNegInf);
    col.floor = static_cast<std::uint8_t>(floor_);
    if (size_ == 0) {
      for (std::size_t j = lo; j <= hi; ++j) {
        col.score[j] = log_model_.log_pi[j] + log_model_.log_emission[j][o];
        col.back[j] = static_cast<std::uint8_t>(j);
      }
    } else {
      const Vec4& prev = ring_[slot(size_ - 1)].score;
      for (std::size_t j = lo; j <= hi; ++j) {
        double best = kNegInf;
        std::uint8_t arg = static_cast<std::uint8_t>(lo);
        for (std::size_t i = lo; i <= hi; ++i) {
          const double v = prev[i] + log_model_.log_transition[i][j];
          if (beats(v, best)) {
            best = v;
            arg = static_cast<std::uint8_t>(i);
          }
        }
        col.score[j] = best + log_model_.log_emission[j][o];
        col.back[j] = arg;
      }
    }

    const std::size_t top = detail::argmax_lowest(col.score);
    const double peak = col.score[top];
    if (peak == kNegInf) {
      throw Error(Errc::impossible_observation,
                  "frame " + std::to_string(frame_count_) + ": observation " +
                      std::to_string(o) + " has zero probability under every live state");
    }
    if (config_.renormalize) {
      for (double& s : col.score) s -= peak;
    }
    col.path = static_cast<std::uint8_t>(top);

    // Re-trace the stored best path from the new column until it rejoins
    // the previous one; older frames share that survivor and are unchanged.
    if (size_ > 0) {
      std::uint8_t s = col.back[top];
      for (std::size_t k = size_; k-- > 0;) {
        Column& c = ring_[slot(k)];
        if (c.path == s) break;
        c.path = s;
        s = c.back[s];
      }
    }

    FrameDecision decision;
    decision.frame_index = frame_count_;
    decision.instantaneous_stage = stage_at(top);

    if (size_ == ring_.size()) {
      const std::uint64_t oldest_frame = frame_count_ - size_;
      decision.evicted_frame_label = LabeledFrame{oldest_frame, emit(ring_[head_].path)};
      head_ = (head_ + 1) % ring_.size();
      --size_;
    }
    ring_[slot(size_)] = col;
    ++size_;

    if (config_.lock_in) update_floor(top);
    ++frame_count_;
    return decision;
  }

  /// Final labels for every frame still in the window, oldest first. The
  /// decoder cannot be stepped afterwards.
  std::vector<LabeledFrame> finish() {
    std::vector<LabeledFrame> out;
    if (finished_) return out;
    out.reserve(size_);
    const std::uint64_t first = frame_count_ - size_;
    for (std::size_t k = 0; k < size_; ++k) {
      out.push_back(LabeledFrame{first + k, emit(ring_[slot(k)].path)});
    }
    size_ = 0;
    finished_ = true;
    return out;
  }

 private:
  std::size_t slot(std::size_t k) const noexcept { return (head_ + k) % ring_.size(); }

  Stage emit(std::uint8_t state) {
    if (state < last_emitted_) {
      ++clamped_;
      state = last_emitted_;
    }
    last_emitted_ = state;
    return stage_at(state);
  }

  void update_floor(std::size_t decided) {
    if (floor_ + 1 < kNumStages && decided == floor_ + 1) {
      if (run_length_ == 0) run_start_ = frame_count_;
      if (++run_length_ >= config_.commit_confirmation) {
        ++floor_;
        events_.push_back(TransitionEvent{stage_at(floor_), run_start_, std::nullopt, std::nullopt});
        run_length_ = 0;
      }
    } else {
      run_length_ = 0;
    }
  }

  LogModel log_model_;
  DecoderConfig config_;
  std::vector<Column> ring_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::size_t floor_ = 0;
  std::uint64_t frame_count_ = 0;
  std::size_t run_length_ = 0;
  std::uint64_t run_start_ = 0;
  std::uint8_t last_emitted_ = 0;
  std::uint64_t clamped_ = 0;
  bool finished_ = false;
  std::vector<TransitionEvent> events_;
};

inline StreamingDecoder new_decoder(const HmmModel& model, const DecoderConfig& config) {
  return StreamingDecoder(model, config);
}

struct DecodedStudy {
  StageSeq labels;
  std::vector<TransitionEvent> events;
};

/// First frame whose true stage is at or beyond `stage`. A stage skipped in
/// the truth is therefore timed against the start of the next present stage.
inline std::optional<std::uint64_t> first_frame_reaching(std::span<const Stage> truth, Stage stage) {
  const auto it = std::find_if(truth.begin(), truth.end(), [&](Stage s) { return s >= stage; });
  if (it == truth.end()) return std::nullopt;
  return static_cast<std::uint64_t>(it - truth.begin());
}

/// Runs a fresh decoder over a whole study.
inline DecodedStudy decode_study(const HmmModel& model, const DecoderConfig& config,
                                 std::span<const Stage> observations,
                                 std::optional<std::span<const Stage>> truth = std::nullopt) {
  if (truth) {
    if (truth->size() != observations.size()) {
      throw Error(Errc::length_mismatch, "truth has " + std::to_string(truth->size()) +
                                             " frames, observations " +
                                             std::to_string(observations.size()));
    }
    if (!is_monotone(*truth)) throw Error(Errc::truth_not_monotone, "truth labels decrease");
  }

  StreamingDecoder decoder(model, config);
  DecodedStudy out;
  out.labels.reserve(observations.size());
  for (Stage o : observations) {
    FrameDecision d = decoder.step(o);
    if (config.emit_mode == EmitMode::instantaneous) {
      out.labels.push_back(d.instantaneous_stage);
    } else if (d.evicted_frame_label) {
      out.labels.push_back(d.evicted_frame_label->stage);
    }
  }
  for (const LabeledFrame& f : decoder.finish()) {
    if (config.emit_mode == EmitMode::smoothed) out.labels.push_back(f.stage);
  }

  out.events = decoder.events();
  if (truth) {
    for (TransitionEvent& e : out.events) {
      e.true_transition_frame = first_frame_reaching(*truth, e.stage_entered);
      if (e.true_transition_frame) {
        e.delay_frames = static_cast<std::int64_t>(e.detection_frame) -
                         static_cast<std::int64_t>(*e.true_transition_frame);
      }
    }
  }
  return out;
}

}  // namespace gistage
