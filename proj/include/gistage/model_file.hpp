#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gistage/error.hpp"
#include "gistage/model.hpp"
#include "gistage/streaming_decoder.hpp"

// Model files are JSON documents:
//
//   {
//     "pi": [1, 0, 0, 0],
//     "transition": [[...], [...], [...], [...]],
//     "emission":   [[...], [...], [...], [...]],
//     "window": 300,
//     "emit_mode": "smoothed",
//     "commit_confirmation": 1
//   }
//
// pi, transition and emission are required; the decoder keys fall back to
// the DecoderConfig defaults. Unknown keys are rejected.

namespace gistage {

struct ModelFile {
  HmmModel model;
  DecoderConfig config;
};

namespace detail {

inline Vec4 read_vec4(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != kNumStages) {
    throw Error(Errc::malformed_model, "'" + what + "' must be an array of 4 numbers");
  }
  Vec4 v{};
  for (std::size_t i = 0; i < kNumStages; ++i) {
    if (!j[i].is_number()) throw Error(Errc::malformed_model, "'" + what + "' holds a non-number");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Mat4 read_mat4(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != kNumStages) {
    throw Error(Errc::malformed_model, "'" + what + "' must be a 4x4 array");
  }
  Mat4 m{};
  for (std::size_t i = 0; i < kNumStages; ++i) {
    m[i] = read_vec4(j[i], what + "[" + std::to_string(i) + "]");
  }
  return m;
}

inline std::size_t read_count(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number_unsigned()) {
    throw Error(Errc::malformed_model, "'" + what + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

}  // namespace detail

/// Parses and validates a model document.
inline ModelFile parse_model_file(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::malformed_model, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::malformed_model, "model file must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "pi" && key != "transition" && key != "emission" && key != "window" &&
        key != "emit_mode" && key != "commit_confirmation") {
      throw Error(Errc::malformed_model, "unknown key '" + key + "' in model file");
    }
  }
  for (const char* key : {"pi", "transition", "emission"}) {
    if (!doc.contains(key)) throw Error(Errc::malformed_model, std::string("missing key '") + key + "'");
  }

  ModelFile mf;
  mf.model.pi = detail::read_vec4(doc["pi"], "pi");
  mf.model.transition = detail::read_mat4(doc["transition"], "transition");
  mf.model.emission = detail::read_mat4(doc["emission"], "emission");
  if (doc.contains("window")) mf.config.window = detail::read_count(doc["window"], "window");
  if (doc.contains("commit_confirmation")) {
    mf.config.commit_confirmation =
        detail::read_count(doc["commit_confirmation"], "commit_confirmation");
  }
  if (doc.contains("emit_mode")) {
    if (!doc["emit_mode"].is_string()) {
      throw Error(Errc::malformed_model, "'emit_mode' must be a string");
    }
    mf.config.emit_mode = parse_emit_mode(doc["emit_mode"].get<std::string>());
  }
  validate_model(mf.model);
  mf.config.validate();
  return mf;
}

inline ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_file(buf.str());
}

/// One matrix row per line; numbers round-trip exactly.
inline std::string format_model_file(const ModelFile& mf) {
  using nlohmann::json;
  auto matrix = [](const Mat4& m) {
    std::string out = "[\n";
    for (std::size_t i = 0; i < kNumStages; ++i) {
      out += "    " + json(m[i]).dump() + (i + 1 < kNumStages ? ",\n" : "\n");
    }
    return out + "  ]";
  };
  std::string out = "{\n";
  out += "  \"pi\": " + json(mf.model.pi).dump() + ",\n";
  out += "  \"transition\": " + matrix(mf.model.transition) + ",\n";
  out += "  \"emission\": " + matrix(mf.model.emission) + ",\n";
  out += "  \"window\": " + std::to_string(mf.config.window) + ",\n";
  out += "  \"emit_mode\": " + json(std::string(emit_mode_name(mf.config.emit_mode))).dump() + ",\n";
  out += "  \"commit_confirmation\": " + std::to_string(mf.config.commit_confirmation) + "\n}\n";
  return out;
}

inline void write_model_file(const std::filesystem::path& path, const ModelFile& mf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
  out << format_model_file(mf);
  out.flush();
  if (!out) throw Error(Errc::io_failure, "failed writing '" + path.string() + "'");
}

}  // namespace gistage
