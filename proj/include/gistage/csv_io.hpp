#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gistage/error.hpp"
#include "gistage/stage.hpp"
#include "gistage/streaming_decoder.hpp"

// Line-oriented CSV formats. All files carry a mandatory header, use LF line
// endings and plain integers for labels; no field is ever quoted.
//
//   studies:  study_id,frame_index,observed_label[,true_label]
//   decoded:  study_id,frame_index,observed_label,decoded_label[,true_label]
//   events:   study_id,stage_entered,detection_frame,true_transition_frame,delay
//   sweep:    window,mean_accuracy,mean_delay,delay_q1,delay_median,delay_q3,delay_min,delay_max

namespace gistage {

inline constexpr std::string_view kStudiesHeader = "study_id,frame_index,observed_label";
inline constexpr std::string_view kStudiesHeaderTruth = "study_id,frame_index,observed_label,true_label";
inline constexpr std::string_view kDecodedHeader = "study_id,frame_index,observed_label,decoded_label";
inline constexpr std::string_view kDecodedHeaderTruth =
    "study_id,frame_index,observed_label,decoded_label,true_label";
inline constexpr std::string_view kEventsHeader =
    "study_id,stage_entered,detection_frame,true_transition_frame,delay";
inline constexpr std::string_view kSweepHeader =
    "window,mean_accuracy,mean_delay,delay_q1,delay_median,delay_q3,delay_min,delay_max";

/// A study together with its decoded labels, as stored in a decoded CSV.
struct DecodedRecord {
  Study study;
  StageSeq decoded;
};

struct SweepRow {
  std::size_t window = 0;
  double mean_accuracy = 0.0;
  std::optional<double> mean_delay, delay_q1, delay_median, delay_q3;
  std::optional<std::int64_t> delay_min, delay_max;
};

namespace detail {

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class Int>
std::optional<Int> parse_int(std::string_view text) {
  Int v{};
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) return std::nullopt;
  return v;
}

inline Stage parse_label(std::string_view text, std::size_t line, std::string_view column) {
  const auto v = parse_int<long long>(text);
  if (!v) {
    throw Error(Errc::malformed_row, at_line(line) + std::string(column) + " '" +
                                         std::string(text) + "' is not an integer");
  }
  if (*v < 0 || *v >= static_cast<long long>(kNumStages)) {
    throw Error(Errc::unknown_label, at_line(line) + std::string(column) + " " +
                                         std::to_string(*v) + " is not in 0..3");
  }
  return stage_at(static_cast<std::size_t>(*v));
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// Reads lines, tolerating a trailing CR and a missing final newline.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::size_t number() const noexcept { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::io_failure, "failed writing '" + path.string() + "'");
}

/// Groups frame rows by study and enforces contiguous frame numbering.
/// `label_columns` is the number of label fields after frame_index.
struct RowGrouper {
  struct Group {
    std::string id;
    std::vector<std::vector<Stage>> columns;
    std::vector<bool> optional_present;  // for the trailing optional column
    std::size_t first_line = 0;
  };

  std::vector<Group> groups;
  std::map<std::string, std::size_t, std::less<>> seen;

  Group& group_for(std::string_view id, std::uint64_t frame, std::size_t line,
                   std::size_t columns) {
    if (groups.empty() || groups.back().id != id) {
      if (seen.count(id)) {
        throw Error(Errc::non_contiguous_frames,
                    at_line(line) + "rows of study '" + std::string(id) +
                        "' are interleaved with another study");
      }
      seen.emplace(std::string(id), groups.size());
      groups.push_back(Group{std::string(id), std::vector<std::vector<Stage>>(columns), {}, line});
    }
    Group& g = groups.back();
    const std::size_t expected = g.columns[0].size();
    if (frame != expected) {
      throw Error(Errc::non_contiguous_frames,
                  at_line(line) + "study '" + g.id + "' expected frame_index " +
                      std::to_string(expected) + ", got " + std::to_string(frame));
    }
    return g;
  }
};

/// Shared parser for the studies and decoded formats. `fixed` is the number
/// of mandatory label columns, and a trailing optional true_label column is
/// allowed when `with_truth` is set by the header.
inline std::vector<std::pair<Study, StageSeq>> parse_frames(std::istream& in,
                                                            std::string_view plain_header,
                                                            std::string_view truth_header,
                                                            std::size_t fixed) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw Error(Errc::malformed_row, "line 1: missing header");
  bool with_truth = false;
  if (line == truth_header) {
    with_truth = true;
  } else if (line != plain_header) {
    throw Error(Errc::malformed_row, "line 1: expected header '" + std::string(plain_header) +
                                         "' or '" + std::string(truth_header) + "', got '" +
                                         line + "'");
  }
  const std::size_t field_count = 2 + fixed + (with_truth ? 1 : 0);

  RowGrouper grouper;
  while (reader.next(line)) {
    const std::size_t n = reader.number();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != field_count) {
      throw Error(Errc::malformed_row, at_line(n) + "expected " + std::to_string(field_count) +
                                           " fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw Error(Errc::malformed_row, at_line(n) + "empty study_id");
    const auto frame = parse_int<std::uint64_t>(fields[1]);
    if (!frame) {
      throw Error(Errc::malformed_row,
                  at_line(n) + "frame_index '" + std::string(fields[1]) + "' is not an integer");
    }
    auto& g = grouper.group_for(fields[0], *frame, n, fixed + 1);
    for (std::size_t c = 0; c < fixed; ++c) {
      g.columns[c].push_back(parse_label(fields[2 + c], n, c == 0 ? "observed_label" : "decoded_label"));
    }
    if (with_truth) {
      const std::string_view tf = fields[2 + fixed];
      const bool present = !tf.empty();
      if (!g.optional_present.empty() && g.optional_present.front() != present) {
        throw Error(Errc::mixed_truth_presence,
                    at_line(n) + "study '" + g.id +
                        "' has true_label on some rows but not on others");
      }
      g.optional_present.push_back(present);
      if (present) g.columns[fixed].push_back(parse_label(tf, n, "true_label"));
    }
  }

  std::vector<std::pair<Study, StageSeq>> out;
  out.reserve(grouper.groups.size());
  for (auto& g : grouper.groups) {
    Study s;
    s.id = g.id;
    s.observed = std::move(g.columns[0]);
    if (with_truth && !g.optional_present.empty() && g.optional_present.front()) {
      s.truth = std::move(g.columns[fixed]);
    }
    StageSeq decoded = fixed > 1 ? std::move(g.columns[1]) : StageSeq{};
    out.emplace_back(std::move(s), std::move(decoded));
  }
  return out;
}

inline char digit(Stage s) { return static_cast<char>('0' + index(s)); }

inline bool any_truth(std::span<const Study> studies) {
  for (const Study& s : studies) {
    if (s.truth) return true;
  }
  return false;
}

}  // namespace detail

// ---- studies -------------------------------------------------------------

inline std::vector<Study> parse_studies_csv(std::istream& in) {
  std::vector<Study> out;
  for (auto& [study, unused] : detail::parse_frames(in, kStudiesHeader, kStudiesHeaderTruth, 1)) {
    out.push_back(std::move(study));
  }
  return out;
}

inline std::vector<Study> parse_studies_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return parse_studies_csv(in);
}

inline void write_studies_csv(std::ostream& out, std::span<const Study> studies) {
  const bool truth = detail::any_truth(studies);
  out << (truth ? kStudiesHeaderTruth : kStudiesHeader) << '\n';
  std::string row;
  for (const Study& s : studies) {
    if (s.truth && s.truth->size() != s.observed.size()) {
      throw Error(Errc::length_mismatch, "study '" + s.id + "' truth length differs");
    }
    for (std::size_t t = 0; t < s.observed.size(); ++t) {
      row.clear();
      row += s.id;
      row += ',';
      row += std::to_string(t);
      row += ',';
      row += detail::digit(s.observed[t]);
      if (truth) {
        row += ',';
        if (s.truth) row += detail::digit((*s.truth)[t]);
      }
      row += '\n';
      out << row;
    }
  }
}

inline void write_studies_csv(const std::filesystem::path& path, std::span<const Study> studies) {
  auto out = detail::open_out(path);
  write_studies_csv(out, studies);
  detail::finish_write(out, path);
}

// ---- decoded + events ----------------------------------------------------

/// Sibling events file of a decoded CSV: "out.csv" -> "out.events.csv".
inline std::filesystem::path events_path_for(const std::filesystem::path& decoded_path) {
  std::filesystem::path p = decoded_path;
  p.replace_extension();
  p += ".events.csv";
  return p;
}

inline void write_decoded_csv(std::ostream& out, std::span<const Study> studies,
                              std::span<const StageSeq> decoded) {
  if (studies.size() != decoded.size()) {
    throw Error(Errc::length_mismatch, std::to_string(studies.size()) + " studies but " +
                                           std::to_string(decoded.size()) + " decoded sequences");
  }
  const bool truth = detail::any_truth(studies);
  out << (truth ? kDecodedHeaderTruth : kDecodedHeader) << '\n';
  std::string row;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const Study& s = studies[i];
    if (decoded[i].size() != s.observed.size()) {
      throw Error(Errc::length_mismatch, "study '" + s.id + "' has " +
                                             std::to_string(s.observed.size()) + " frames but " +
                                             std::to_string(decoded[i].size()) + " decoded labels");
    }
    for (std::size_t t = 0; t < s.observed.size(); ++t) {
      row.clear();
      row += s.id;
      row += ',';
      row += std::to_string(t);
      row += ',';
      row += detail::digit(s.observed[t]);
      row += ',';
      row += detail::digit(decoded[i][t]);
      if (truth) {
        row += ',';
        if (s.truth) row += detail::digit((*s.truth)[t]);
      }
      row += '\n';
      out << row;
    }
  }
}

inline void write_events_csv(std::ostream& out, std::span<const Study> studies,
                             std::span<const std::vector<TransitionEvent>> events) {
  if (studies.size() != events.size()) {
    throw Error(Errc::length_mismatch, "events do not match the study count");
  }
  out << kEventsHeader << '\n';
  for (std::size_t i = 0; i < studies.size(); ++i) {
    for (const TransitionEvent& e : events[i]) {
      out << studies[i].id << ',' << index(e.stage_entered) << ',' << e.detection_frame << ',';
      if (e.true_transition_frame) out << *e.true_transition_frame;
      out << ',';
      if (e.delay_frames) out << *e.delay_frames;
      out << '\n';
    }
  }
}

/// Writes the decoded CSV at `path` and its sibling events file.
inline void write_decoded_csv(const std::filesystem::path& path, std::span<const Study> studies,
                              std::span<const StageSeq> decoded,
                              std::span<const std::vector<TransitionEvent>> events) {
  {
    auto out = detail::open_out(path);
    write_decoded_csv(out, studies, decoded);
    detail::finish_write(out, path);
  }
  const auto ep = events_path_for(path);
  auto out = detail::open_out(ep);
  write_events_csv(out, studies, events);
  detail::finish_write(out, ep);
}

inline std::vector<DecodedRecord> parse_decoded_csv(std::istream& in) {
  std::vector<DecodedRecord> out;
  for (auto& [study, decoded] : detail::parse_frames(in, kDecodedHeader, kDecodedHeaderTruth, 2)) {
    out.push_back(DecodedRecord{std::move(study), std::move(decoded)});
  }
  return out;
}

inline std::vector<DecodedRecord> parse_decoded_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return parse_decoded_csv(in);
}

/// Events keyed by study id, in file order.
inline std::map<std::string, std::vector<TransitionEvent>> parse_events_csv(std::istream& in) {
  detail::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != kEventsHeader) {
    throw Error(Errc::malformed_row, "line 1: expected header '" + std::string(kEventsHeader) + "'");
  }
  std::map<std::string, std::vector<TransitionEvent>> out;
  while (reader.next(line)) {
    const std::size_t n = reader.number();
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    if (f.size() != 5 || f[0].empty()) {
      throw Error(Errc::malformed_row, detail::at_line(n) + "expected 5 fields");
    }
    TransitionEvent e;
    e.stage_entered = detail::parse_label(f[1], n, "stage_entered");
    const auto det = detail::parse_int<std::uint64_t>(f[2]);
    if (!det) throw Error(Errc::malformed_row, detail::at_line(n) + "bad detection_frame");
    e.detection_frame = *det;
    if (!f[3].empty()) {
      e.true_transition_frame = detail::parse_int<std::uint64_t>(f[3]);
      if (!e.true_transition_frame) {
        throw Error(Errc::malformed_row, detail::at_line(n) + "bad true_transition_frame");
      }
    }
    if (!f[4].empty()) {
      e.delay_frames = detail::parse_int<std::int64_t>(f[4]);
      if (!e.delay_frames) throw Error(Errc::malformed_row, detail::at_line(n) + "bad delay");
    }
    out[std::string(f[0])].push_back(e);
  }
  return out;
}

inline std::map<std::string, std::vector<TransitionEvent>> parse_events_csv(
    const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return parse_events_csv(in);
}

// ---- sweep ---------------------------------------------------------------

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepHeader << '\n';
  auto opt = [&](const auto& v) {
    out << ',';
    if (v) {
      if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
        out << detail::format_double(*v);
      } else {
        out << *v;
      }
    }
  };
  for (const SweepRow& r : rows) {
    out << r.window << ',' << detail::format_double(r.mean_accuracy);
    opt(r.mean_delay);
    opt(r.delay_q1);
    opt(r.delay_median);
    opt(r.delay_q3);
    opt(r.delay_min);
    opt(r.delay_max);
    out << '\n';
  }
}

inline void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  auto out = detail::open_out(path);
  write_sweep_csv(out, rows);
  detail::finish_write(out, path);
}

}  // namespace gistage
