#include <cmath>
#include <limits>

#include "emission_cache.hpp"
#include "influence/error.hpp"
#include "influence/inference.hpp"

namespace influence {

double ForwardState::log_likelihood() const {
  double ll = 0.0;
  for (double x : log_normalizers) ll += x;
  return ll;
}

namespace {

void check_inputs(const ModelParams& params, const ModelSpec& spec, const ObservationSet& obs) {
  require_valid(params, spec);
  require_compatible(params, spec, obs);
}

// out = dist * M  (dist a row vector over the previous state).
void propagate(std::span<const double> dist, const Matrix& m, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t u = 0; u < dist.size(); ++u) {
    const double w = dist[u];
    if (w == 0.0) continue;
    auto row = m.row(u);
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += w * row[s];
  }
}

// out = M * vec  (expectation of vec under each row).
void pull_back(const Matrix& m, std::span<const double> vec, std::span<double> out) {
  for (std::size_t u = 0; u < out.size(); ++u) {
    auto row = m.row(u);
    double acc = 0.0;
    for (std::size_t s = 0; s < vec.size(); ++s) acc += row[s] * vec[s];
    out[u] = acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Locates the (t, c) responsible for a zero-probability step.
[[noreturn]] void fail_step(std::size_t t, const std::vector<double>& chain_z) {
  for (std::size_t c = 0; c < chain_z.size(); ++c)
    if (!(chain_z[c] > 0.0)) throw DegenerateEvidence(t, c);
  throw NumericalFailure("forward pass: zero evidence at t=" + std::to_string(t + 1));
}

}  // namespace

ForwardState forward_pass(const ModelParams& params, const ModelSpec& spec,
                          const ObservationSet& obs) {
  check_inputs(params, spec, obs);
  const std::size_t T = obs.length(), C = spec.num_chains, S = spec.num_states,
                    J = spec.num_patterns;
  const Tensor evid = detail::emission_cache(params, obs);
  const Matrix& V = params.pattern_transition;

  ForwardState f;
  f.alpha = Tensor({T, J, C, S});
  f.predicted = Tensor({T, J, C, S});
  f.kappa = Matrix(T, J);
  f.log_normalizers.assign(T, 0.0);

  // t = 0: no transition yet, so every pattern shares the same filter and
  // the chains are independent a posteriori.
  {
    std::vector<double> chain_z(C);
    double log_z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      auto a = f.alpha.slice(0, 0, c);
      auto e = evid.slice(0, c);
      for (std::size_t s = 0; s < S; ++s) a[s] = params.initial_state[c][s] * e[s];
      chain_z[c] = normalize(a);
      if (!(chain_z[c] > 0.0)) throw DegenerateEvidence(0, c);
      log_z += std::log(chain_z[c]);
      for (std::size_t j = 1; j < J; ++j) {
        auto aj = f.alpha.slice(0, j, c);
        std::copy(a.begin(), a.end(), aj.begin());
      }
    }
    for (std::size_t j = 0; j < J; ++j) f.kappa(0, j) = params.initial_pattern[j];
    f.log_normalizers[0] = log_z;
  }

  std::vector<double> prior(J), kappa_hat(J), log_ev(J);
  std::vector<double> chain_z(C), best_chain_z(C);
  Matrix via_self(C, S), via_cross(C, S);
  std::vector<double> psi(S);

  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < J; ++j) {
      double p = 0.0;
      for (std::size_t i = 0; i < J; ++i) p += f.kappa(t - 1, i) * V(i, j);
      prior[j] = p;
    }
    std::fill(best_chain_z.begin(), best_chain_z.end(), 0.0);

    for (std::size_t j = 0; j < J; ++j) {
      // Prob(r_{t-1} | r_t = j, O_{1:t-1}).
      for (std::size_t i = 0; i < J; ++i) kappa_hat[i] = f.kappa(t - 1, i) * V(i, j);
      if (!(normalize(kappa_hat) > 0.0))
        for (std::size_t i = 0; i < J; ++i) kappa_hat[i] = f.kappa(t - 1, i);

      const Matrix& R = params.influence[j];
      for (std::size_t c = 0; c < C; ++c) {
        auto pred = f.predicted.slice(t - 1, j, c);
        std::fill(pred.begin(), pred.end(), 0.0);
        for (std::size_t i = 0; i < J; ++i) {
          if (kappa_hat[i] == 0.0) continue;
          auto a = f.alpha.slice(t - 1, i, c);
          for (std::size_t s = 0; s < S; ++s) pred[s] += kappa_hat[i] * a[s];
        }
        propagate(pred, params.self[c], via_self.row(c));
        if (C > 1) propagate(pred, params.cross[c], via_cross.row(c));
      }

      double lev = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        // One-step predictive marginal of chain c under pattern j.
        std::fill(psi.begin(), psi.end(), 0.0);
        for (std::size_t q = 0; q < C; ++q) {
          const double w = R(c, q);
          if (w == 0.0) continue;
          auto src = q == c ? via_self.row(q) : via_cross.row(q);
          for (std::size_t s = 0; s < S; ++s) psi[s] += w * src[s];
        }
        auto a = f.alpha.slice(t, j, c);
        auto e = evid.slice(t, c);
        for (std::size_t s = 0; s < S; ++s) a[s] = psi[s] * e[s];
        const double z = normalize(a);
        chain_z[c] = z;
        best_chain_z[c] = std::max(best_chain_z[c], z);
        if (z > 0.0) {
          lev += std::log(z);
        } else {
          // Pattern j cannot explain O_t^c; its weight below is zero.
          std::copy(e.begin(), e.end(), a.begin());
          normalize(a);
          lev = -std::numeric_limits<double>::infinity();
        }
      }
      log_ev[j] = lev;
    }

    // kappa_t ~ Prob(O_t | r_t, O_{1:t-1}) Prob(r_t | O_{1:t-1}), in log space.
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < J; ++j)
      if (prior[j] > 0.0) top = std::max(top, log_ev[j] + std::log(prior[j]));
    if (!std::isfinite(top)) fail_step(t, best_chain_z);
    double z = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double w = prior[j] > 0.0 ? std::exp(log_ev[j] + std::log(prior[j]) - top) : 0.0;
      f.kappa(t, j) = w;
      z += w;
    }
    for (std::size_t j = 0; j < J; ++j) f.kappa(t, j) /= z;
    f.log_normalizers[t] = top + std::log(z);
  }
  return f;
}

BackwardState backward_pass(const ModelParams& params, const ModelSpec& spec,
                            const ObservationSet& obs) {
  return backward_pass(params, spec, obs, forward_pass(params, spec, obs));
}

BackwardState backward_pass(const ModelParams& params, const ModelSpec& spec,
                            const ObservationSet& obs, const ForwardState& fwd) {
  check_inputs(params, spec, obs);
  const std::size_t T = obs.length(), C = spec.num_chains, S = spec.num_states,
                    J = spec.num_patterns;
  if (fwd.length() != T) throw DimensionMismatch("backward pass: forward state length differs");
  const Tensor evid = detail::emission_cache(params, obs);
  const Matrix& V = params.pattern_transition;

  BackwardState b;
  b.beta = Tensor({T, J, C, S});
  b.message = Tensor({T, J, C, S}, 1.0 / static_cast<double>(S));
  b.nu = Matrix(T, J, 1.0 / static_cast<double>(J));

  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t c = 0; c < C; ++c) {
      auto beta = b.beta.slice(T - 1, j, c);
      auto e = evid.slice(T - 1, c);
      std::copy(e.begin(), e.end(), beta.begin());
      normalize(beta);
    }
  if (T < 2) return b;

  // pull[j'][c][q][u] = sum_s M^{q,c}(u, s) beta_{t+1,c}^{j'}(s): expected
  // future evidence of child c given parent q sits in state u at time t.
  Tensor pull({J, C, C, S});
  // Flat-prior (evidence-only) distribution of each chain at time t.
  Matrix local(C, S);
  // Expected pull under a background distribution of the parent.
  Matrix background(C, C);
  std::vector<double> full(C), mix(J);
  Matrix lik(C, S);

  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t jn = 0; jn < J; ++jn)
      for (std::size_t c = 0; c < C; ++c) {
        auto beta_next = b.beta.slice(t + 1, jn, c);
        for (std::size_t q = 0; q < C; ++q)
          pull_back(params.parent_matrix(q, c), beta_next, pull.slice(jn, c, q));
      }
    for (std::size_t c = 0; c < C; ++c) {
      auto e = evid.slice(t, c);
      std::copy(e.begin(), e.end(), local.row(c).begin());
      normalize(local.row(c));
    }

    // nu_t(j) ~ sum_{j'} V(j, j') nu_{t+1}(j') Lambda(j'), where Lambda is the
    // expected evidence of the step t -> t+1 under pattern j'.
    for (std::size_t jn = 0; jn < J; ++jn) {
      const Matrix& R = params.influence[jn];
      double lam = 1.0;
      for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t q = 0; q < C; ++q)
          if (R(c, q) != 0.0) m += R(c, q) * dot(local.row(q), pull.slice(jn, c, q));
        lam *= m;
      }
      mix[jn] = lam * b.nu(t + 1, jn);
    }
    for (std::size_t j = 0; j < J; ++j) {
      double v = 0.0;
      for (std::size_t jn = 0; jn < J; ++jn) v += V(j, jn) * mix[jn];
      b.nu(t, j) = v;
    }
    if (!(normalize(b.nu.row(t)) > 0.0))
      throw NumericalFailure("backward pass: zero evidence at t=" + std::to_string(t + 1));

    for (std::size_t j = 0; j < J; ++j) {
      lik = Matrix(C, S);
      for (std::size_t jn = 0; jn < J; ++jn) {
        const double w = V(j, jn) * b.nu(t + 1, jn);
        if (w == 0.0) continue;
        const Matrix& R = params.influence[jn];
        // Every other parent is averaged under its forward filter at t.
        for (std::size_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (std::size_t q = 0; q < C; ++q) {
            background(c, q) = dot(fwd.alpha.slice(t, j, q), pull.slice(jn, c, q));
            acc += R(c, q) * background(c, q);
          }
          full[c] = acc;
        }
        for (std::size_t d = 0; d < C; ++d)
          for (std::size_t u = 0; u < S; ++u) {
            double prod = 1.0;
            for (std::size_t c = 0; c < C; ++c)
              prod *= full[c] + R(c, d) * (pull(jn, c, d, u) - background(c, d));
            lik(d, u) += w * prod;
          }
      }
      for (std::size_t d = 0; d < C; ++d) {
        auto msg = b.message.slice(t, j, d);
        std::copy(lik.row(d).begin(), lik.row(d).end(), msg.begin());
        if (!(normalize(msg) > 0.0)) std::fill(msg.begin(), msg.end(), 1.0 / S);
        auto beta = b.beta.slice(t, j, d);
        auto e = evid.slice(t, d);
        for (std::size_t s = 0; s < S; ++s) beta[s] = msg[s] * e[s];
        if (!(normalize(beta) > 0.0)) {
          std::copy(e.begin(), e.end(), beta.begin());
          normalize(beta);
        }
      }
    }
  }
  return b;
}

OneStepPrediction predict_next_step(const ModelParams& params, const ForwardState& fwd) {
  const std::size_t T = fwd.length(), C = params.num_chains(), S = params.num_states(),
                    J = params.num_patterns();
  const Matrix& V = params.pattern_transition;
  OneStepPrediction out;
  out.pattern.assign(J, 0.0);
  out.states = Matrix(C, S);
  std::vector<double> kappa_hat(J), pred(S), via(S);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t i = 0; i < J; ++i) {
      kappa_hat[i] = fwd.kappa(T - 1, i) * V(i, j);
      out.pattern[j] += kappa_hat[i];
    }
    if (out.pattern[j] == 0.0) continue;
    normalize(kappa_hat);
    const Matrix& R = params.influence[j];
    for (std::size_t q = 0; q < C; ++q) {
      std::fill(pred.begin(), pred.end(), 0.0);
      for (std::size_t i = 0; i < J; ++i) {
        auto a = fwd.alpha.slice(T - 1, i, q);
        for (std::size_t s = 0; s < S; ++s) pred[s] += kappa_hat[i] * a[s];
      }
      for (std::size_t c = 0; c < C; ++c) {
        const double w = R(c, q) * out.pattern[j];
        if (w == 0.0) continue;
        propagate(pred, params.parent_matrix(q, c), via);
        for (std::size_t s = 0; s < S; ++s) out.states(c, s) += w * via[s];
      }
    }
  }
  return out;
}

double predictive_symbol_probability(const ModelParams& params, const OneStepPrediction& pred,
                                     std::size_t chain, int symbol) {
  const Matrix& B = params.emissions.tables.at(chain);
  if (symbol < 0 || static_cast<std::size_t>(symbol) >= B.cols())
    throw InvalidArgument("predictive_symbol_probability: symbol out of range");
  double p = 0.0;
  for (std::size_t s = 0; s < B.rows(); ++s) p += pred.states(chain, s) * B(s, symbol);
  return p;
}

}  // namespace influence
