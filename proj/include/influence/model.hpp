#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "influence/matrix.hpp"

namespace influence {

enum class EmissionFamily { Multinomial, GaussianFixedMeans };

// Structural hyperparameters. Chains, states and patterns are C, S and J.
struct ModelSpec {
  std::size_t num_chains = 1;
  std::size_t num_states = 2;
  std::size_t num_patterns = 1;
  // Exponent v of the sticky Dirichlet prior on each row of V: the diagonal
  // concentration is 10^v, every other entry 1.
  double prior_exponent = 0.0;
  EmissionFamily emission = EmissionFamily::Multinomial;
  // Multinomial alphabet size K; 0 means "take it from the data".
  std::size_t num_symbols = 0;
  // GaussianFixedMeans only: one strictly increasing mean per state.
  std::vector<double> gaussian_means;

  // MAP pseudo-count added to the diagonal of V's expected counts.
  double sticky_pseudocount() const;

  bool operator==(const ModelSpec&) const = default;
};

// Throws InvalidArgument when the spec breaks its own invariants.
void validate_spec(const ModelSpec& spec);

struct Emissions {
  // Multinomial: one S x K table per chain.
  std::vector<Matrix> tables;
  // Gaussian: means shared by all chains (fixed), one variance per chain.
  std::vector<double> means;
  std::vector<double> variances;

  bool operator==(const Emissions&) const = default;
};

struct ModelParams {
  std::vector<Matrix> influence;  // R(1..J), each C x C
  std::vector<Matrix> self;       // E^c, S x S
  std::vector<Matrix> cross;      // F^c, S x S
  Matrix pattern_transition;      // V, J x J
  Emissions emissions;
  std::vector<std::vector<double>> initial_state;  // C vectors of length S
  std::vector<double> initial_pattern;             // length J

  std::size_t num_chains() const { return self.size(); }
  std::size_t num_states() const { return self.empty() ? 0 : self.front().rows(); }
  std::size_t num_patterns() const { return influence.size(); }

  // M^{parent,child}: E^child on the diagonal, F^parent otherwise.
  const Matrix& parent_matrix(std::size_t parent, std::size_t child) const {
    return parent == child ? self[child] : cross[parent];
  }

  bool operator==(const ModelParams&) const = default;
};

// C aligned sequences. Discrete symbols are stored 0-based; the file formats
// and the CLI use 1-based symbols.
class ObservationSet {
 public:
  ObservationSet() = default;

  static ObservationSet discrete(std::vector<std::vector<int>> sequences);
  static ObservationSet continuous(std::vector<std::vector<double>> sequences);

  bool is_discrete() const { return !symbols_.empty(); }
  std::size_t num_chains() const { return is_discrete() ? symbols_.size() : values_.size(); }
  std::size_t length() const;

  int symbol(std::size_t chain, std::size_t t) const { return symbols_[chain][t]; }
  double value(std::size_t chain, std::size_t t) const { return values_[chain][t]; }

  const std::vector<std::vector<int>>& symbols() const { return symbols_; }
  const std::vector<std::vector<double>>& values() const { return values_; }

  // Largest symbol + 1 (discrete only).
  std::size_t alphabet_size() const;

  // First n steps.
  ObservationSet prefix(std::size_t n) const;
  // Concatenation in time; chain counts and kinds must agree.
  static ObservationSet concat(const ObservationSet& a, const ObservationSet& b);

  bool operator==(const ObservationSet&) const = default;

 private:
  std::vector<std::vector<int>> symbols_;
  std::vector<std::vector<double>> values_;
};

struct LatentTrajectory {
  std::vector<std::vector<int>> states;  // C x T, 0-based
  std::vector<int> patterns;             // T, 0-based
};

enum class ViolationKind { Dimension, Stochasticity, Range };

struct Violation {
  ViolationKind kind;
  std::string matrix;  // e.g. "R(2)", "E^1", "V", "initial_pattern"
  std::size_t row = 0;
  double row_sum = 0.0;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

inline constexpr double kStochasticTolerance = 1e-9;

ValidationResult validate_params(const ModelParams& params, const ModelSpec& spec);

// Throws DimensionMismatch or StochasticityViolation with the first problem.
void require_valid(const ModelParams& params, const ModelSpec& spec);

// Checks obs against spec (chain count, kind, alphabet) and params.
void require_compatible(const ModelParams& params, const ModelSpec& spec,
                        const ObservationSet& obs);

// Alphabet size of a multinomial model.
std::size_t alphabet_size(const ModelParams& params);

// Prob(h_t^{(chain)} | h_{t-1}^{(1..C)}, r_t = pattern) as a length-S vector.
std::vector<double> transition_distribution(const ModelParams& params, std::size_t pattern,
                                            std::size_t chain,
                                            std::span<const int> previous_states);

// Prob(O_t^{(chain)} | h = s) for every s, written into out (length S).
void emission_likelihoods(const ModelParams& params, const ObservationSet& obs,
                          std::size_t chain, std::size_t t, std::span<double> out);

struct Sample {
  ObservationSet observations;
  LatentTrajectory latent;
};

// Draws a trajectory of length T. With a schedule, r_t is taken verbatim
// (0-based pattern indices) instead of being drawn from V.
Sample sample(const ModelParams& params, const ModelSpec& spec, std::size_t length,
              std::uint64_t seed, std::optional<std::span<const int>> schedule = std::nullopt);

// Every stochastic row drawn from Dirichlet(1). Gaussian variances are set to
// the given per-chain values. alphabet is K for multinomial models.
ModelParams random_params(const ModelSpec& spec, std::uint64_t seed, std::size_t alphabet,
                          std::span<const double> variances = {});

}  // namespace influence
