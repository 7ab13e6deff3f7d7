#pragma once

#include "influence/error.hpp"
#include "influence/matrix.hpp"
#include "influence/model.hpp"

namespace influence::detail {

// Prob(O_t^c | h_t^c = s) for all t, c, s. Throws DegenerateEvidence when a
// (t, c) has zero likelihood under every state.
inline Tensor emission_cache(const ModelParams& params, const ObservationSet& obs) {
  const std::size_t T = obs.length(), C = obs.num_chains(), S = params.num_states();
  Tensor e({T, C, S});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      auto out = e.slice(t, c);
      emission_likelihoods(params, obs, c, t, out);
      if (!(sum(out) > 0.0)) throw DegenerateEvidence(t, c);
    }
  return e;
}

}  // namespace influence::detail
