#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "gistage/csv_io.hpp"
#include "gistage/model_file.hpp"
#include "gistage/simulate.hpp"

using namespace gistage;

namespace {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::empty;
}

std::vector<Study> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_studies_csv(in);
}

}  // namespace

TEST(StudiesCsv, ParsesWithAndWithoutTruth) {
  const auto plain = parse("study_id,frame_index,observed_label\na,0,0\na,1,1\nb,0,2\n");
  ASSERT_EQ(plain.size(), 2u);
  EXPECT_EQ(plain[0].id, "a");
  EXPECT_EQ(plain[0].observed, to_stages({0, 1}));
  EXPECT_FALSE(plain[0].truth);
  EXPECT_EQ(plain[1].observed, to_stages({2}));

  const auto labeled =
      parse("study_id,frame_index,observed_label,true_label\r\na,0,0,0\r\na,1,1,0\r\nb,0,2,\r\n");
  ASSERT_EQ(labeled.size(), 2u);
  EXPECT_EQ(*labeled[0].truth, to_stages({0, 0}));
  EXPECT_FALSE(labeled[1].truth);
}

TEST(StudiesCsv, RoundTrip) {
  SimConfig c;
  c.stage_duration_ranges = {{{3, 5}, {10, 20}, {10, 20}, {5, 9}}};
  c.studies = 4;
  std::vector<Study> corpus = generate_corpus(c);
  corpus[2].truth.reset();
  std::ostringstream out;
  write_studies_csv(out, corpus);
  const auto back = parse(out.str());
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].observed, corpus[i].observed);
    EXPECT_EQ(back[i].truth, corpus[i].truth);
  }
  std::ostringstream again;
  write_studies_csv(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(StudiesCsv, Errors) {
  EXPECT_EQ(code_of([] { parse(""); }), Errc::malformed_row);
  EXPECT_EQ(code_of([] { parse("id,frame,label\n"); }), Errc::malformed_row);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,0\n"); }), Errc::malformed_row);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,x,0\n"); }), Errc::malformed_row);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,0,x\n"); }), Errc::malformed_row);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,0,4\n"); }), Errc::unknown_label);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,0,-1\n"); }), Errc::unknown_label);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,1,0\n"); }),
            Errc::non_contiguous_frames);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,0,0\na,2,0\n"); }),
            Errc::non_contiguous_frames);
  EXPECT_EQ(code_of([] { parse("study_id,frame_index,observed_label\na,0,0\nb,0,0\na,1,0\n"); }),
            Errc::non_contiguous_frames);
  EXPECT_EQ(code_of([] {
              parse("study_id,frame_index,observed_label,true_label\na,0,0,0\na,1,0,\n");
            }),
            Errc::mixed_truth_presence);
  EXPECT_EQ(code_of([] { parse_studies_csv(std::filesystem::path("/nonexistent/dir/x.csv")); }),
            Errc::io_failure);
}

TEST(StudiesCsv, ErrorsNameTheLine) {
  try {
    parse("study_id,frame_index,observed_label\na,0,0\na,1,7\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(DecodedCsv, RoundTripWithEvents) {
  std::vector<Study> studies(2);
  studies[0] = Study{"x", to_stages({0, 1, 1}), to_stages({0, 0, 1})};
  studies[1] = Study{"y", to_stages({2, 2}), to_stages({2, 3})};
  const std::vector<StageSeq> decoded{to_stages({0, 1, 1}), to_stages({2, 3})};
  std::vector<std::vector<TransitionEvent>> events(2);
  events[0].push_back(TransitionEvent{Stage::stomach, 1, 2, -1});
  events[1].push_back(TransitionEvent{Stage::colon, 1, std::nullopt, std::nullopt});

  std::ostringstream out;
  write_decoded_csv(out, studies, decoded);
  EXPECT_EQ(out.str(),
            "study_id,frame_index,observed_label,decoded_label,true_label\n"
            "x,0,0,0,0\nx,1,1,1,0\nx,2,1,1,1\ny,0,2,2,2\ny,1,2,3,3\n");
  std::istringstream in(out.str());
  const auto back = parse_decoded_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].decoded, decoded[0]);
  EXPECT_EQ(back[1].study.truth, studies[1].truth);

  std::ostringstream ev;
  write_events_csv(ev, studies, events);
  EXPECT_EQ(ev.str(),
            "study_id,stage_entered,detection_frame,true_transition_frame,delay\n"
            "x,1,1,2,-1\ny,3,1,,\n");
  std::istringstream ein(ev.str());
  const auto parsed = parse_events_csv(ein);
  EXPECT_EQ(parsed.at("x"), events[0]);
  EXPECT_EQ(parsed.at("y"), events[1]);
}

TEST(DecodedCsv, WritesSiblingEventsFile) {
  const auto dir = std::filesystem::temp_directory_path() / "gistage_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  std::vector<Study> studies{Study{"s", to_stages({0, 1}), std::nullopt}};
  const std::vector<StageSeq> decoded{to_stages({0, 1})};
  const std::vector<std::vector<TransitionEvent>> events{{TransitionEvent{Stage::stomach, 1, {}, {}}}};
  write_decoded_csv(path, studies, decoded, events);
  EXPECT_EQ(events_path_for(path), dir / "out.events.csv");
  EXPECT_TRUE(std::filesystem::exists(dir / "out.events.csv"));
  EXPECT_EQ(parse_decoded_csv(path)[0].decoded, decoded[0]);
  std::filesystem::remove_all(dir);
}

TEST(DecodedCsv, LengthMismatch) {
  std::vector<Study> studies{Study{"s", to_stages({0, 1}), std::nullopt}};
  const std::vector<StageSeq> decoded{to_stages({0})};
  std::ostringstream out;
  EXPECT_EQ(code_of([&] { write_decoded_csv(out, studies, decoded); }), Errc::length_mismatch);
}

TEST(EventsCsv, Errors) {
  auto p = [](const std::string& text) {
    std::istringstream in(text);
    return parse_events_csv(in);
  };
  EXPECT_EQ(code_of([&] { p("bad\n"); }), Errc::malformed_row);
  EXPECT_EQ(code_of([&] {
              p("study_id,stage_entered,detection_frame,true_transition_frame,delay\na,1,x,,\n");
            }),
            Errc::malformed_row);
  EXPECT_EQ(code_of([&] {
              p("study_id,stage_entered,detection_frame,true_transition_frame,delay\na,9,1,,\n");
            }),
            Errc::unknown_label);
}

TEST(SweepCsv, FormatsOptionalFields) {
  SweepRow full;
  full.window = 300;
  full.mean_accuracy = 0.5;
  full.mean_delay = 12.25;
  full.delay_q1 = 10.0;
  full.delay_median = 12.0;
  full.delay_q3 = 14.5;
  full.delay_min = -3;
  full.delay_max = 40;
  SweepRow empty;
  empty.window = 25;
  empty.mean_accuracy = 1.0;
  std::ostringstream out;
  write_sweep_csv(out, std::vector<SweepRow>{full, empty});
  EXPECT_EQ(out.str(), std::string(kSweepHeader) + "\n300,0.5,12.25,10,12,14.5,-3,40\n25,1,,,,,,\n");
}

TEST(ModelFile, RoundTrip) {
  ModelFile mf;
  mf.model.transition = bidiagonal(0.999);
  mf.model.emission = confusion_matrix(0.97);
  mf.config.window = 123;
  mf.config.emit_mode = EmitMode::instantaneous;
  mf.config.commit_confirmation = 3;
  const ModelFile back = parse_model_file(format_model_file(mf));
  EXPECT_EQ(back.model, mf.model);
  EXPECT_EQ(back.config.window, 123u);
  EXPECT_EQ(back.config.emit_mode, EmitMode::instantaneous);
  EXPECT_EQ(back.config.commit_confirmation, 3u);
}

TEST(ModelFile, DefaultsAndErrors) {
  const std::string core =
      R"("pi":[1,0,0,0],"transition":[[0.9,0.1,0,0],[0,0.9,0.1,0],[0,0,0.9,0.1],[0,0,0,1]],)"
      R"("emission":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]])";
  const ModelFile mf = parse_model_file("{" + core + "}");
  EXPECT_EQ(mf.config.window, DecoderConfig{}.window);
  EXPECT_EQ(mf.config.emit_mode, EmitMode::smoothed);

  EXPECT_EQ(code_of([] { parse_model_file("{"); }), Errc::malformed_model);
  EXPECT_EQ(code_of([] { parse_model_file("[]"); }), Errc::malformed_model);
  EXPECT_EQ(code_of([&] { parse_model_file("{" + core + R"(,"extra":1})"); }), Errc::malformed_model);
  EXPECT_EQ(code_of([&] { parse_model_file(R"({"pi":[1,0,0,0]})"); }), Errc::malformed_model);
  EXPECT_EQ(code_of([&] { parse_model_file("{" + core + R"(,"window":-1})"); }), Errc::malformed_model);
  EXPECT_EQ(code_of([&] { parse_model_file("{" + core + R"(,"window":0})"); }), Errc::config_invalid);
  EXPECT_EQ(code_of([&] { parse_model_file("{" + core + R"(,"emit_mode":"fast"})"); }),
            Errc::config_invalid);
  std::string bad = core;
  bad.replace(bad.find("0.9,0.1,0,0"), 11, "0.8,0.1,0,0");
  EXPECT_EQ(code_of([&] { parse_model_file("{" + bad + "}"); }), Errc::row_not_stochastic);
  EXPECT_EQ(code_of([] { read_model_file("/nonexistent/model.json"); }), Errc::io_failure);
}
