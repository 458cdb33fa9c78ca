#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "gistage/calibration.hpp"
#include "gistage/csv_io.hpp"
#include "gistage/error.hpp"
#include "gistage/model_file.hpp"
#include "gistage/pipeline.hpp"
#include "gistage/simulate.hpp"

// Command-line surface. Exit codes: 0 success, 1 decode/metric failure,
// 2 usage, I/O or parse failure.

namespace gistage {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::impossible_observation:
    case Errc::truth_not_monotone:
    case Errc::no_truth:
    case Errc::no_labeled_studies:
    case Errc::empty:
    case Errc::decoder_finished:
      return kExitFailure;
    default:
      return kExitUsage;
  }
}

struct DecodeArgs {
  std::filesystem::path model, input, output;
  std::optional<std::size_t> window;
  std::optional<std::string> emit_mode;
  bool per_study = false;
  unsigned threads = 1;
};

struct SweepArgs {
  std::filesystem::path model, input, output;
  std::vector<std::size_t> windows;
  unsigned threads = 1;
};

struct CalibrateArgs {
  std::filesystem::path input, output_model;
  std::optional<std::filesystem::path> table;
  GridSpec grid;
  unsigned threads = 1;
};

struct SimulateArgs {
  std::filesystem::path output;
  SimConfig config;
  std::optional<double> correct;
  std::vector<double> emission;
  std::vector<std::string> durations;
  double burst_correct = 0.7;
};

struct EvaluateArgs {
  std::filesystem::path input;
  std::optional<std::filesystem::path> events;
  bool per_study = false;
};

namespace detail {

inline void require_truth(std::span<const Study> studies) {
  if (studies.empty()) throw Error(Errc::no_truth, "input holds no studies");
  for (const Study& s : studies) {
    if (!s.truth) throw Error(Errc::no_truth, "study '" + s.id + "' has no true_label values");
  }
}

inline DurationRange parse_duration(const std::string& text) {
  const auto dash = text.find('-');
  const auto lo = dash == std::string::npos ? std::nullopt
                                            : parse_int<std::uint64_t>(std::string_view(text).substr(0, dash));
  const auto hi = dash == std::string::npos ? std::nullopt
                                            : parse_int<std::uint64_t>(std::string_view(text).substr(dash + 1));
  if (!lo || !hi) throw Error(Errc::config_invalid, "duration '" + text + "' is not MIN-MAX");
  return DurationRange{*lo, *hi};
}

}  // namespace detail

inline int cmd_decode(const DecodeArgs& args, std::ostream& out) {
  ModelFile mf = read_model_file(args.model);
  if (args.window) mf.config.window = *args.window;
  if (args.emit_mode) mf.config.emit_mode = parse_emit_mode(*args.emit_mode);
  mf.config.validate();

  const std::vector<Study> studies = parse_studies_csv(args.input);
  const CorpusDecode decoded = decode_corpus(mf.model, mf.config, studies, args.threads);
  write_decoded_csv(args.output, studies, decoded.labels, decoded.events);

  std::size_t frames = 0;
  for (const Study& s : studies) frames += s.observed.size();
  out << "decoded " << studies.size() << " studies (" << frames << " frames), window "
      << mf.config.window << ", emit_mode " << emit_mode_name(mf.config.emit_mode) << '\n';
  if (detail::any_truth(studies)) {
    print_report(out, evaluate_corpus(studies, decoded.labels, decoded.events), args.per_study);
  }
  return kExitOk;
}

inline int cmd_sweep_window(const SweepArgs& args, std::ostream& out) {
  if (args.windows.empty()) throw Error(Errc::config_invalid, "no window sizes given");
  const ModelFile mf = read_model_file(args.model);
  const std::vector<Study> studies = parse_studies_csv(args.input);
  detail::require_truth(studies);

  std::vector<SweepRow> rows;
  for (std::size_t w : args.windows) {
    DecoderConfig config = mf.config;
    config.window = w;
    config.validate();
    const CorpusDecode d = decode_corpus(mf.model, config, studies, args.threads);
    const EvaluationReport r = evaluate_corpus(studies, d.labels, d.events);
    rows.push_back(sweep_row(w, r.decoded));
    out << "window " << w << ": mean accuracy " << detail::fixed(100.0 * r.decoded.mean_accuracy, 4)
        << "%, mean delay "
        << (r.decoded.delay_stats ? detail::fixed(r.decoded.delay_stats->mean, 4) : "--") << '\n';
  }
  write_sweep_csv(args.output, rows);
  return kExitOk;
}

inline void write_calibration_table(const std::filesystem::path& path, const CalibrationResult& r) {
  auto out = detail::open_out(path);
  out << "transition_diag,emission_correct,mean_accuracy\n";
  for (const GridPoint& p : r.full_table) {
    out << detail::format_double(p.transition_diag) << ',' << detail::format_double(p.emission_correct)
        << ',' << detail::format_double(p.mean_accuracy) << '\n';
  }
  detail::finish_write(out, path);
}

inline int cmd_calibrate(const CalibrateArgs& args, std::ostream& out) {
  const std::vector<Study> studies = parse_studies_csv(args.input);
  detail::require_truth(studies);
  const CalibrationResult r = grid_search(args.grid, studies, args.threads);

  ModelFile mf;
  mf.model = build_model(r.best_transition_diag, r.best_emission_correct);
  mf.config.window = args.grid.window;
  mf.config.commit_confirmation = args.grid.commit_confirmation;
  write_model_file(args.output_model, mf);
  std::filesystem::path table = args.table.value_or([&] {
    std::filesystem::path p = args.output_model;
    p.replace_extension();
    p += ".table.csv";
    return p;
  }());
  write_calibration_table(table, r);

  out << "grid points: " << r.full_table.size() << ", studies: " << studies.size() << '\n'
      << "best transition_diag " << detail::format_double(r.best_transition_diag)
      << ", emission_correct " << detail::format_double(r.best_emission_correct)
      << ", mean accuracy " << detail::fixed(100.0 * r.best_mean_accuracy, 4) << "%\n";
  return kExitOk;
}

inline int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  SimConfig config = args.config;
  if (!args.emission.empty()) {
    if (args.correct) throw Error(Errc::config_invalid, "--correct and --emission are exclusive");
    if (args.emission.size() != kNumStages * kNumStages) {
      throw Error(Errc::config_invalid, "--emission needs 16 values, row-major");
    }
    for (std::size_t i = 0; i < kNumStages; ++i) {
      for (std::size_t j = 0; j < kNumStages; ++j) {
        config.emission[i][j] = args.emission[i * kNumStages + j];
      }
    }
  } else if (args.correct) {
    if (!(*args.correct > 0.0 && *args.correct <= 1.0)) {
      throw Error(Errc::config_invalid, "--correct must be in (0,1]");
    }
    config.emission = confusion_matrix(*args.correct);
  }
  if (!args.durations.empty()) {
    if (args.durations.size() != kNumStages) {
      throw Error(Errc::config_invalid, "--durations needs four MIN-MAX ranges");
    }
    for (std::size_t s = 0; s < kNumStages; ++s) {
      config.stage_duration_ranges[s] = detail::parse_duration(args.durations[s]);
    }
  }
  if (config.burst_radius > 0) {
    if (!(args.burst_correct > 0.0 && args.burst_correct <= 1.0)) {
      throw Error(Errc::config_invalid, "--burst-correct must be in (0,1]");
    }
    config.burst_emission = confusion_matrix(args.burst_correct);
  }
  config.validate();

  const std::vector<Study> corpus = generate_corpus(config);
  write_studies_csv(args.output, corpus);
  std::size_t frames = 0;
  for (const Study& s : corpus) frames += s.observed.size();
  out << "wrote " << corpus.size() << " studies (" << frames << " frames) to "
      << args.output.string() << '\n';
  return kExitOk;
}

/// Recomputes metrics from a decoded CSV. Delays come from the sibling
/// events file when it exists, otherwise from the first frame of each stage
/// in the decoded labels.
inline int cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const std::vector<DecodedRecord> records = parse_decoded_csv(args.input);
  std::optional<std::map<std::string, std::vector<TransitionEvent>>> events_by_id;
  if (args.events) {
    events_by_id = parse_events_csv(*args.events);
  } else if (const auto sibling = events_path_for(args.input); std::filesystem::exists(sibling)) {
    events_by_id = parse_events_csv(sibling);
  }

  std::vector<Study> studies;
  std::vector<StageSeq> decoded;
  std::vector<std::vector<TransitionEvent>> events;
  for (const DecodedRecord& r : records) {
    studies.push_back(r.study);
    decoded.push_back(r.decoded);
    if (events_by_id) {
      const auto it = events_by_id->find(r.study.id);
      events.push_back(it == events_by_id->end() ? std::vector<TransitionEvent>{} : it->second);
    } else {
      events.push_back(events_from_labels(r.decoded));
    }
  }
  print_report(out, evaluate_corpus(studies, decoded, events), args.per_study);
  return kExitOk;
}

/// Entry point shared by the gistage executable and the tests. `args`
/// excludes the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stage decoding for capsule endoscopy label streams", "gistage"};
  app.require_subcommand(1);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());

  DecodeArgs dec;
  dec.threads = hw;
  auto* decode = app.add_subcommand("decode", "Decode studies with a model file");
  decode->add_option("--model", dec.model, "Model file (JSON)")->required();
  decode->add_option("--input", dec.input, "Studies CSV")->required();
  decode->add_option("--output", dec.output, "Decoded CSV; events go to <output>.events.csv")->required();
  decode->add_option("--window", dec.window, "Override the model file window");
  decode->add_option("--emit-mode", dec.emit_mode, "smoothed or instantaneous");
  decode->add_flag("--per-study", dec.per_study, "Print one metrics line per study");
  decode->add_option("--threads", dec.threads, "Worker threads");

  SweepArgs sw;
  sw.threads = hw;
  auto* sweep = app.add_subcommand("sweep", "Accuracy and delay over several window sizes");
  sweep->add_option("--model", sw.model, "Model file (JSON)")->required();
  sweep->add_option("--input", sw.input, "Studies CSV with true_label")->required();
  sweep->add_option("--windows", sw.windows, "Comma-separated window sizes")
      ->required()
      ->delimiter(',');
  sweep->add_option("--output", sw.output, "Sweep CSV")->required();
  sweep->add_option("--threads", sw.threads, "Worker threads");

  CalibrateArgs cal;
  cal.threads = hw;
  auto* calibrate = app.add_subcommand("calibrate", "Grid search transition/emission parameters");
  calibrate->add_option("--input", cal.input, "Studies CSV with true_label")->required();
  calibrate->add_option("--output-model", cal.output_model, "Best model file")->required();
  calibrate->add_option("--table", cal.table, "Full grid CSV (default <model>.table.csv)");
  calibrate->add_option("--diag", cal.grid.transition_diag_candidates, "Transition diagonal candidates")
      ->delimiter(',');
  calibrate->add_option("--correct", cal.grid.emission_correct_candidates,
                        "Emission correct-label candidates")
      ->delimiter(',');
  calibrate->add_option("--window", cal.grid.window, "Decoder window");
  calibrate->add_option("--confirmation", cal.grid.commit_confirmation,
                        "Consecutive frames required to raise the lock-in floor");
  calibrate->add_option("--threads", cal.threads, "Worker threads");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic studies CSV");
  simulate->add_option("--output", sim.output, "Studies CSV")->required();
  simulate->add_option("--studies", sim.config.studies, "Number of studies");
  simulate->add_option("--seed", sim.config.seed, "Random seed");
  simulate->add_option("--correct", sim.correct, "Correct-label probability of the confusion noise");
  simulate->add_option("--emission", sim.emission, "Full 4x4 emission matrix, 16 values row-major")
      ->delimiter(',');
  simulate->add_option("--durations", sim.durations, "Four MIN-MAX frame ranges, e.g. 20-100,2000-8000,...")
      ->delimiter(',');
  simulate->add_option("--burst-radius", sim.config.burst_radius,
                       "Frames around each true transition with elevated noise (0 = off)");
  simulate->add_option("--burst-correct", sim.burst_correct, "Correct-label probability inside bursts");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Recompute metrics from a decoded CSV");
  evaluate->add_option("--input", ev.input, "Decoded CSV with true_label")->required();
  evaluate->add_option("--events", ev.events, "Events CSV (default <input>.events.csv if present)");
  evaluate->add_flag("--per-study", ev.per_study, "Print one metrics line per study");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gistage: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (decode->parsed()) return cmd_decode(dec, out);
    if (sweep->parsed()) return cmd_sweep_window(sw, out);
    if (calibrate->parsed()) return cmd_calibrate(cal, out);
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (evaluate->parsed()) return cmd_evaluate(ev, out);
  } catch (const Error& e) {
    err << "gistage: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "gistage: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace gistage
