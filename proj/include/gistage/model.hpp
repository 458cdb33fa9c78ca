#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "gistage/error.hpp"
#include "gistage/stage.hpp"

namespace gistage {

using Vec4 = std::array<double, kNumStages>;
using Mat4 = std::array<Vec4, kNumStages>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kStochasticTolerance = 1e-9;

/// True when log score `a` beats `b` by more than accumulated rounding noise.
/// Scores closer than that count as tied, so the tie rule decides instead of
/// the last few bits, independently of how the column was normalized.
inline bool beats(double a, double b) noexcept {
  if (b == -std::numeric_limits<double>::infinity()) return a > b;
  return a > b + (1e-9 + 1e-12 * std::abs(b));
}

/// Left-to-right hidden Markov model over the four stages.
///
/// transition[i][j] = P(stage j at t+1 | stage i at t)
/// emission[j][k]   = P(observed label k | stage j)
struct HmmModel {
  Vec4 pi{1.0, 0.0, 0.0, 0.0};
  Mat4 transition{};
  Mat4 emission{};

  friend bool operator==(const HmmModel&, const HmmModel&) = default;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void check_entries(const Vec4& row, const std::string& what) {
  for (std::size_t k = 0; k < kNumStages; ++k) {
    const double v = row[k];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(Errc::out_of_range_entry,
                  what + "[" + std::to_string(k) + "] = " + fmt_double(v) + " is outside [0,1]");
    }
  }
}

inline void check_stochastic(const Vec4& row, const std::string& what) {
  double sum = 0.0;
  for (double v : row) sum += v;
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    throw Error(Errc::row_not_stochastic, what + " sums to " + fmt_double(sum));
  }
}

}  // namespace detail

/// Returns the model unchanged if it is a valid left-to-right model:
/// entries in [0,1], stochastic rows, and a transition matrix with
/// nonzero entries only on the diagonal and superdiagonal.
inline HmmModel validate_model(HmmModel model) {
  detail::check_entries(model.pi, "pi");
  for (std::size_t i = 0; i < kNumStages; ++i) {
    detail::check_entries(model.transition[i], "transition row " + std::to_string(i));
    detail::check_entries(model.emission[i], "emission row " + std::to_string(i));
  }
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) {
      if ((j < i || j > i + 1) && model.transition[i][j] != 0.0) {
        throw Error(Errc::structure_violation,
                    "transition[" + std::to_string(i) + "][" + std::to_string(j) +
                        "] = " + detail::fmt_double(model.transition[i][j]) +
                        " lies outside the diagonal/superdiagonal");
      }
    }
  }
  detail::check_stochastic(model.pi, "pi");
  for (std::size_t i = 0; i < kNumStages; ++i) {
    detail::check_stochastic(model.transition[i], "transition row " + std::to_string(i));
    detail::check_stochastic(model.emission[i], "emission row " + std::to_string(i));
  }
  return model;
}

/// Natural log with log(0) mapped to negative infinity.
inline double safe_log(double p) noexcept { return p > 0.0 ? std::log(p) : kNegInf; }

struct LogModel {
  Vec4 log_pi{};
  Mat4 log_transition{};
  Mat4 log_emission{};

  /// Element-wise log of an already validated model. No validation here, so
  /// tests can feed deliberately non-stochastic emissions.
  static LogModel from(const HmmModel& m) noexcept {
    LogModel out;
    for (std::size_t i = 0; i < kNumStages; ++i) {
      out.log_pi[i] = safe_log(m.pi[i]);
      for (std::size_t j = 0; j < kNumStages; ++j) {
        out.log_transition[i][j] = safe_log(m.transition[i][j]);
        out.log_emission[i][j] = safe_log(m.emission[i][j]);
      }
    }
    return out;
  }
};

/// Transition matrix with a shared self-loop probability `stay` on the
/// diagonal, 1 - stay on the superdiagonal, and an absorbing colon.
inline Mat4 bidiagonal(double stay) {
  Mat4 a{};
  for (std::size_t i = 0; i + 1 < kNumStages; ++i) {
    a[i][i] = stay;
    a[i][i + 1] = 1.0 - stay;
  }
  a[kNumStages - 1][kNumStages - 1] = 1.0;
  return a;
}

/// Symmetric confusion matrix: `correct` on the diagonal, the remainder
/// spread uniformly over the other three labels.
inline Mat4 confusion_matrix(double correct) {
  const double off = (1.0 - correct) / static_cast<double>(kNumStages - 1);
  Mat4 b{};
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) b[i][j] = i == j ? correct : off;
  }
  return b;
}

inline Mat4 identity_matrix() { return confusion_matrix(1.0); }

}  // namespace gistage
