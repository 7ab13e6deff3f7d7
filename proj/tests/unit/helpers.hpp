#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "influence/inference.hpp"
#include "influence/model.hpp"

namespace testing_support {

struct Instance {
  influence::ModelSpec spec;
  influence::ModelParams params;
  influence::ObservationSet obs;
};

// Random multinomial model plus a trajectory drawn from it.
inline Instance random_instance(std::size_t C, std::size_t S, std::size_t J, std::size_t K,
                                std::size_t T, std::uint64_t seed, double prior_exponent = 0.0) {
  Instance in;
  in.spec.num_chains = C;
  in.spec.num_states = S;
  in.spec.num_patterns = J;
  in.spec.num_symbols = K;
  in.spec.prior_exponent = prior_exponent;
  in.params = influence::random_params(in.spec, seed, K);
  in.obs = influence::sample(in.params, in.spec, T, seed + 7919).observations;
  return in;
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline bool is_distribution(std::span<const double> v, double tol = 1e-9) {
  double s = 0.0;
  for (double x : v) {
    if (!(x >= -tol && x <= 1.0 + tol)) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

// Reorders patterns by perm: new pattern j is old pattern perm[j].
inline influence::ModelParams permute_patterns(const influence::ModelParams& p,
                                               const std::vector<std::size_t>& perm) {
  influence::ModelParams q = p;
  const std::size_t J = perm.size();
  for (std::size_t j = 0; j < J; ++j) {
    q.influence[j] = p.influence[perm[j]];
    q.initial_pattern[j] = p.initial_pattern[perm[j]];
    for (std::size_t i = 0; i < J; ++i)
      q.pattern_transition(j, i) = p.pattern_transition(perm[j], perm[i]);
  }
  return q;
}

}  // namespace testing_support
