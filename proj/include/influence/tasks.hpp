#pragma once

// Downstream procedures on fitted models: turn-taking prediction with a
// nearest-neighbour baseline, structural-change detection, and the
// thresholding used to turn raw signals into speaking/silent symbols.

#include <cstdint>
#include <string>
#include <vector>

#include "influence/inference.hpp"
#include "influence/model.hpp"

namespace influence {

// Symbol 0 ("1" on disk) is silent, symbol 1 ("2") is speaking.
inline constexpr int kSilent = 0;
inline constexpr int kSpeaking = 1;

// value > threshold -> speaking, else silent.
ObservationSet binarize(const ObservationSet& raw, double threshold);

struct TurnTakingEvent {
  std::size_t t = 0;  // 0-based step at which next_speaker has taken over
  std::size_t previous_speaker = 0;
  std::size_t next_speaker = 0;
  bool operator==(const TurnTakingEvent&) const = default;
};

// One event per step where a lone speaker at t-1 falls silent at t and a
// different lone speaker starts at t.
std::vector<TurnTakingEvent> extract_turn_events(const ObservationSet& obs);

// Lone speaker at step t, or -1.
int lone_speaker(const ObservationSet& obs, std::size_t t);

inline constexpr std::size_t kMinPredictionWindow = 20;

struct SpeakerPrediction {
  std::size_t speaker = 0;
  std::vector<double> speaking_probability;  // per chain; 0 for the current speaker
  FitResult fit;
};

// Fits on history and returns the non-current chain most likely to emit the
// speaking symbol at the next step. Ties go to the lowest index.
SpeakerPrediction predict_next_speaker(const ModelSpec& spec, const ObservationSet& history,
                                       std::size_t current_speaker, const FitConfig& config,
                                       std::size_t min_window = kMinPredictionWindow);

// Same decision rule for an already fitted model.
SpeakerPrediction predict_with_params(const ModelParams& params, const ModelSpec& spec,
                                      const ObservationSet& history,
                                      std::size_t current_speaker);

// Most frequent next speaker among past events with the same previous
// speaker; lowest other chain when there is none.
std::size_t nn_baseline_predict(const std::vector<TurnTakingEvent>& past,
                                std::size_t current_speaker, std::size_t num_chains);

// Sum_j lambda_j^t R(j).
Matrix expected_influence(const ModelParams& params, const Posteriors& post, std::size_t t);

enum class ChangeLabel { Changed, Unchanged };

struct ChangeDetectionResult {
  Matrix first;   // expected influence at t = 1
  Matrix probe;   // expected influence at t = ceil(probe_fraction * T)
  std::size_t probe_time = 0;  // 0-based
  double score = 0.0;          // Frobenius norm of probe - first
};

inline constexpr double kDefaultProbeFraction = 0.8;

ChangeDetectionResult detect_structural_change(const ModelSpec& spec, const ObservationSet& obs,
                                               const FitConfig& config,
                                               double probe_fraction = kDefaultProbeFraction);

// The larger score is Changed; a tie leaves the first sample Unchanged.
std::pair<ChangeLabel, ChangeLabel> compare_change_scores(double first, double second);

// Synthetic multi-party discussion. One speaker at a time; a turn ends after
// each step with probability turn_end_prob and hands over to the successor of
// the active regime with probability successor_prob (any other chain otherwise).
// Regime 0 passes the floor c -> c+1, regime 1 passes it c -> c-1.
struct DiscussionConfig {
  std::size_t num_chains = 4;
  std::size_t length = 300;
  std::size_t switch_at = 0;  // 0: regime 0 throughout
  double successor_prob = 0.9;
  double turn_end_prob = 0.2;
  double noise = 0.01;  // per-frame chance that a silent chain blips
  std::uint64_t seed = 1;
};

struct Discussion {
  ObservationSet observations;
  std::vector<std::size_t> speaker;  // scripted speaker per step
};

Discussion generate_discussion(const DiscussionConfig& config);

struct TurnTakingScenario {
  std::string name;
  DiscussionConfig discussion;
  std::size_t eval_from = 0;  // first step whose events are scored
  std::size_t events = 10;    // events scored per sample
};

struct TurnTakingSettings {
  std::vector<std::size_t> pattern_counts = {1, 2, 3};
  std::size_t num_states = 2;
  double prior_exponent = 1.0;
  FitConfig fit;
  std::size_t refit_iterations = 20;  // warm-started refits between events
  std::size_t min_window = kMinPredictionWindow;
};

struct TurnTakingTable {
  std::vector<std::string> methods;    // "J=1".., "NN"
  std::vector<std::string> scenarios;
  // accuracy[m][s][seed]
  std::vector<std::vector<std::vector<double>>> accuracy;

  double median(std::size_t method, std::size_t scenario) const;
  // Rows are methods, columns scenarios, cells median accuracy over seeds.
  std::string to_csv() const;
};

// Accuracy of one method on one sample.
double score_sample(const Discussion& d, const TurnTakingScenario& scenario,
                    std::size_t patterns, const TurnTakingSettings& settings,
                    std::uint64_t seed);
double score_sample_nn(const Discussion& d, const TurnTakingScenario& scenario);

TurnTakingTable evaluate_turn_taking(const std::vector<TurnTakingScenario>& scenarios,
                                     const std::vector<std::uint64_t>& seeds,
                                     const TurnTakingSettings& settings);

// The two default scenarios: "simple" (one regime) and "complex" (regime
// switch half-way).
std::vector<TurnTakingScenario> default_turn_taking_scenarios();

}  // namespace influence
