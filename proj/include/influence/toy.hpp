#pragma once

// Two interacting binary chains whose influence matrix switches from a
// self-driven pattern to a cross-driven one part-way through the sequence.
// Used to check parameter recovery, switch detection and convergence.

#include <cstdint>
#include <vector>

#include "influence/inference.hpp"
#include "influence/model.hpp"

namespace influence::toy {

struct Truth {
  ModelSpec spec;
  ModelParams params;
  std::vector<int> schedule;  // pattern per step, 0-based
};

// Ground truth with R(1) = (0.90 0.10; 0.10 0.90), R(2) = (0.05 0.95; 0.95 0.05);
// R(1) is active for the first switch_at steps.
Truth truth(std::size_t length = 600, std::size_t switch_at = 200);

struct RunConfig {
  std::size_t length = 600;
  std::size_t switch_at = 200;
  std::size_t patterns = 3;
  double prior_exponent = 1.0;
  std::uint64_t seed = 1;
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;
  std::size_t restarts = 4;
  bool track_reference = true;
};

struct SwitchAnalysis {
  std::size_t before = 0;     // dominant pattern ahead of the window
  std::size_t after = 0;      // dominant pattern past the window
  bool crossed = false;       // lambda hands over through 0.5 inside the window
  std::size_t crossing = 0;   // 1-based step at which `after` first exceeds 0.5
  double max_unused = 0.0;    // largest posterior of any third pattern
};

// Scans lambda for the hand-over between the dominant patterns on either side
// of [lo, hi] (1-based, inclusive).
SwitchAnalysis analyze_switch(const Matrix& lambda, std::size_t lo, std::size_t hi);

// Smallest, over injective matchings of truth patterns to learned patterns,
// of the largest elementwise |R_learned - R_true|. matching receives the
// learned index of each true pattern.
double influence_recovery_error(const ModelParams& learned, const ModelParams& truth,
                                std::vector<std::size_t>* matching = nullptr);

struct Outcome {
  Truth truth;
  Sample data;
  FitResult fit;
  double recovery_error = 0.0;
  std::vector<std::size_t> matching;
  SwitchAnalysis switching;
};

Outcome run(const RunConfig& config);

inline constexpr double kRecoveryTolerance = 0.1;
inline constexpr std::size_t kSwitchWindowLo = 180;
inline constexpr std::size_t kSwitchWindowHi = 220;
inline constexpr double kUnusedPatternCeiling = 0.05;

bool recovered(const Outcome& o);
bool switch_detected(const Outcome& o);

// One labelled pair for the change detector: a sample whose first half uses
// R(1) and second half R(2), against a sample of equal length that stays in
// one regime throughout.
struct ChangePair {
  double concatenated = 0.0;
  double single = 0.0;
  bool correct = false;  // the concatenated sample was labelled Changed
};

ChangePair change_detection_pair(std::uint64_t seed, std::size_t length = 400,
                                 std::size_t patterns = 2, double prior_exponent = 1.0);

}  // namespace influence::toy
