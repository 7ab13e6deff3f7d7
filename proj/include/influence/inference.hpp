#pragma once

// Variational E-M for the (dynamical) influence model.
//
// The forward and backward recursions keep one length-S distribution per
// (time, pattern, chain): the joint over all chains is approximated by the
// product of these per-chain factors, which makes every step polynomial in
// C, S and J. With a single chain the factorization is exact and all
// quantities coincide with ordinary HMM filtering/smoothing on the
// (state, pattern) product space.
//
// Indices are 0-based throughout: t in [0,T), pattern j in [0,J), chain c in
// [0,C), state s in [0,S).

#include <cstdint>
#include <optional>
#include <vector>

#include "influence/matrix.hpp"
#include "influence/model.hpp"

namespace influence {

struct ForwardState {
  Tensor alpha;      // [t][j][c][s]  Prob(h_t^c | r_t = j, O_{1:t})
  Tensor predicted;  // [t][j][c][s]  Prob(h_t^c | r_{t+1} = j, O_{1:t}), t < T-1
  Matrix kappa;      // [t][j]        Prob(r_t = j | O_{1:t})
  std::vector<double> log_normalizers;  // log Prob(O_t | O_{1:t-1}) under the approximation

  std::size_t length() const { return kappa.rows(); }
  double log_likelihood() const;
};

struct BackwardState {
  Tensor beta;     // [t][j][c][s]  Prob(h_t^c | r_t = j, O_{t:T}), flat prior on h_t
  Tensor message;  // [t][j][c][s]  normalized Prob(O_{t+1:T} | h_t^c, r_t = j)
  Matrix nu;       // [t][j]        Prob(r_t = j | O_{t:T}), flat prior on r_t
};

struct Posteriors {
  Tensor state_marginals;  // [t][c][s]
  Matrix lambda;           // [t][j]      Prob(r_t = j | O)
  Tensor xi;               // [t][i][j]   Prob(r_t = i, r_{t+1} = j | O), t < T-1
  // [t][c][j][q][u][s]: Prob(h_t^q = u, h_{t+1}^c = s, q_{t+1}^c = q, r_{t+1} = j | O)
  // where q is the parent selected by chain c for the step t -> t+1.
  Tensor parent_joint;
};

struct FitConfig {
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  // Provided initialization; random Dirichlet(1) rows when absent.
  std::optional<ModelParams> initial;
  // When set, the report tracks kl_to_reference after every M-step.
  std::optional<ModelParams> reference;
  // Independent random initializations; the one with the highest
  // likelihood proxy after warmup_iterations continues to completion.
  std::size_t restarts = 1;
  std::size_t warmup_iterations = 40;
};

void validate_config(const FitConfig& config);

struct FitReport {
  std::size_t iterations_run = 0;
  bool converged = false;
  std::vector<double> log_likelihood;  // proxy before each M-step
  std::vector<double> max_delta;       // largest absolute parameter change
  std::vector<double> kl;              // empty unless a reference was tracked
};

struct FitResult {
  ModelParams params;
  Posteriors posteriors;
  FitReport report;
};

ForwardState forward_pass(const ModelParams& params, const ModelSpec& spec,
                          const ObservationSet& obs);

// The backward recursion conditions on the forward filter for the chains it
// is not currently updating; the overload without it runs forward_pass.
BackwardState backward_pass(const ModelParams& params, const ModelSpec& spec,
                            const ObservationSet& obs, const ForwardState& fwd);
BackwardState backward_pass(const ModelParams& params, const ModelSpec& spec,
                            const ObservationSet& obs);

Posteriors compute_posteriors(const ModelParams& params, const ModelSpec& spec,
                              const ObservationSet& obs, const ForwardState& fwd,
                              const BackwardState& bwd);

// Forward, backward and posteriors in one call; loglik receives the proxy.
Posteriors e_step(const ModelParams& params, const ModelSpec& spec, const ObservationSet& obs,
                  double* loglik = nullptr);

inline constexpr double kCountEpsilon = 1e-8;

ModelParams m_step(const Posteriors& post, const ObservationSet& obs, const ModelSpec& spec,
                   const ModelParams& current);

FitResult fit(const ModelSpec& spec, const ObservationSet& obs, const FitConfig& config);

// Mean K-L(reference || learned) over the rows
//   Prob(h_t^c | h_{t-1}^{c'} = u, r_t = j)   (other parents uniform)
// for every pattern j, child c, parent c' and parent state u. Minimized over
// injective matchings of reference patterns to learned patterns and over
// per-chain relabelings of the hidden states.
double kl_to_reference(const ModelParams& learned, const ModelParams& reference);

// Predictive quantities for the step right after the filtered sequence.
struct OneStepPrediction {
  std::vector<double> pattern;  // Prob(r_{T+1} | O_{1:T})
  Matrix states;                // [c][s] Prob(h_{T+1}^c | O_{1:T})
};

OneStepPrediction predict_next_step(const ModelParams& params, const ForwardState& fwd);

// Prob(O_{T+1}^c = symbol | O_{1:T}) for a multinomial model.
double predictive_symbol_probability(const ModelParams& params, const OneStepPrediction& pred,
                                     std::size_t chain, int symbol);

}  // namespace influence
