#pragma once

// Exact inference on the flat HMM obtained by enumerating every joint
// configuration (h^(1..C), r). Exponential in C; meant for small systems and
// as a reference for the variational engine.

#include <span>
#include <vector>

#include "influence/inference.hpp"
#include "influence/matrix.hpp"
#include "influence/model.hpp"

namespace influence {

inline constexpr std::size_t kDefaultJointCap = 4096;

class JointChain {
 public:
  std::size_t num_chains() const { return chains_; }
  std::size_t num_states() const { return states_; }
  std::size_t num_patterns() const { return patterns_; }
  std::size_t size() const { return initial_.size(); }

  const Matrix& transition() const { return transition_; }
  const std::vector<double>& initial() const { return initial_; }
  const ModelParams& params() const { return params_; }

  // Joint index = r * S^C + sum_c h^c * S^c.
  std::size_t encode(std::span<const int> states, int pattern) const;
  void decode(std::size_t index, std::span<int> states, int& pattern) const;

  // Product over chains of Prob(O_t^c | h^c) for every joint state.
  std::vector<double> emission(const ObservationSet& obs, std::size_t t) const;

 private:
  friend JointChain expand(const ModelParams&, const ModelSpec&, std::size_t);
  std::size_t chains_ = 0, states_ = 0, patterns_ = 0, block_ = 0;
  Matrix transition_;
  std::vector<double> initial_;
  ModelParams params_;
};

JointChain expand(const ModelParams& params, const ModelSpec& spec,
                  std::size_t cap = kDefaultJointCap);

struct ExactRecursions {
  Matrix filtered;  // [t][x] Prob(x_t | O_{1:t})
  Matrix backward;  // [t][x] normalized Prob(O_{t:T} | x_t)
  std::vector<double> log_normalizers;
};

ExactRecursions exact_forward_backward(const JointChain& joint, const ObservationSet& obs);

Posteriors exact_smooth(const JointChain& joint, const ObservationSet& obs);

double exact_loglik(const JointChain& joint, const ObservationSet& obs);

}  // namespace influence
