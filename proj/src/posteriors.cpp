#include <cmath>

#include "influence/error.hpp"
#include "influence/inference.hpp"

namespace influence {

namespace {

// coupling(i, j): expected flat-prior backward evidence of the step
// t -> t+1 when r_t = i and r_{t+1} = j, with every chain at t distributed as
// its forward filter under i. Constant over (i, j) for a single chain.
void step_coupling(const ModelParams& params, const ForwardState& fwd, const BackwardState& bwd,
                   std::size_t t, Matrix& coupling, std::vector<double>& pred) {
  const std::size_t C = params.num_chains(), S = params.num_states(), J = params.num_patterns();
  for (std::size_t i = 0; i < J; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      const Matrix& R = params.influence[j];
      double w = 1.0;
      for (std::size_t c = 0; c < C; ++c) {
        std::fill(pred.begin(), pred.end(), 0.0);
        for (std::size_t q = 0; q < C; ++q) {
          const double rq = R(c, q);
          if (rq == 0.0) continue;
          const Matrix& M = params.parent_matrix(q, c);
          auto a = fwd.alpha.slice(t, i, q);
          for (std::size_t u = 0; u < S; ++u) {
            const double au = rq * a[u];
            if (au == 0.0) continue;
            for (std::size_t s = 0; s < S; ++s) pred[s] += au * M(u, s);
          }
        }
        auto beta = bwd.beta.slice(t + 1, j, c);
        double e = 0.0;
        for (std::size_t s = 0; s < S; ++s) e += pred[s] * beta[s];
        w *= e;
      }
      coupling(i, j) = w;
    }
}

}  // namespace

Posteriors compute_posteriors(const ModelParams& params, const ModelSpec& spec,
                              const ObservationSet& obs, const ForwardState& fwd,
                              const BackwardState& bwd) {
  const std::size_t T = obs.length(), C = spec.num_chains, S = spec.num_states,
                    J = spec.num_patterns;
  if (fwd.length() != T || bwd.nu.rows() != T)
    throw DimensionMismatch("posteriors: forward/backward lengths differ from observations");
  const Matrix& V = params.pattern_transition;

  Posteriors p;
  p.lambda = Matrix(T, J);
  p.state_marginals = Tensor({T, C, S});
  p.xi = Tensor({T > 1 ? T - 1 : 0, J, J});
  p.parent_joint = Tensor({T > 1 ? T - 1 : 0, C, J, C, S, S});

  // Pattern pairs from the forward filter at t and the backward filter at
  // t+1, coupled through the evidence of the step t -> t+1 itself.
  Matrix coupling(J, J);
  std::vector<double> pred(S);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    step_coupling(params, fwd, bwd, t, coupling, pred);
    double z = 0.0;
    for (std::size_t i = 0; i < J; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        const double w = fwd.kappa(t, i) * V(i, j) * bwd.nu(t + 1, j) * coupling(i, j);
        p.xi(t, i, j) = w;
        z += w;
      }
    if (!(z > 0.0) || !std::isfinite(z))
      throw NumericalFailure("posteriors: pattern pair mass vanished at t=" +
                             std::to_string(t + 1));
    for (std::size_t i = 0; i < J; ++i)
      for (std::size_t j = 0; j < J; ++j) p.xi(t, i, j) /= z;
    for (std::size_t i = 0; i < J; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < J; ++j) row += p.xi(t, i, j);
      p.lambda(t, i) = row;
    }
  }
  if (T == 1) {
    for (std::size_t j = 0; j < J; ++j) p.lambda(0, j) = fwd.kappa(0, j);
  } else {
    for (std::size_t j = 0; j < J; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < J; ++i) col += p.xi(T - 2, i, j);
      p.lambda(T - 1, j) = col;
    }
  }

  // Smoothed chain marginals: per pattern, forward filter times the backward
  // message of the future, then mixed by lambda.
  std::vector<double> g(S);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) {
      auto out = p.state_marginals.slice(t, c);
      for (std::size_t j = 0; j < J; ++j) {
        const double w = p.lambda(t, j);
        if (w == 0.0) continue;
        auto a = fwd.alpha.slice(t, j, c);
        auto m = bwd.message.slice(t, j, c);
        for (std::size_t s = 0; s < S; ++s) g[s] = a[s] * m[s];
        if (!(normalize(g) > 0.0)) std::copy(a.begin(), a.end(), g.begin());
        for (std::size_t s = 0; s < S; ++s) out[s] += w * g[s];
      }
      normalize(out);
    }

  // Parent-selector joint for every child c and step t -> t+1. Each pattern
  // block is normalized on its own and weighted by lambda_{t+1}(j), so the
  // pattern marginal of the joint is exactly lambda.
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < J; ++j) {
        const double weight = p.lambda(t + 1, j);
        if (weight == 0.0) continue;
        const Matrix& R = params.influence[j];
        auto beta = bwd.beta.slice(t + 1, j, c);
        double z = 0.0;
        for (std::size_t q = 0; q < C; ++q) {
          const double rq = R(c, q);
          if (rq == 0.0) continue;
          const Matrix& M = params.parent_matrix(q, c);
          auto prev = fwd.predicted.slice(t, j, q);
          for (std::size_t u = 0; u < S; ++u) {
            const double a = rq * prev[u];
            if (a == 0.0) continue;
            auto out = p.parent_joint.slice(t, c, j, q, u);
            for (std::size_t s = 0; s < S; ++s) {
              const double v = a * M(u, s) * beta[s];
              out[s] = v;
              z += v;
            }
          }
        }
        if (!(z > 0.0)) continue;
        const double scale = weight / z;
        for (std::size_t q = 0; q < C; ++q)
          for (std::size_t u = 0; u < S; ++u)
            for (double& v : p.parent_joint.slice(t, c, j, q, u)) v *= scale;
      }
  return p;
}

Posteriors e_step(const ModelParams& params, const ModelSpec& spec, const ObservationSet& obs,
                  double* loglik) {
  ForwardState fwd = forward_pass(params, spec, obs);
  BackwardState bwd = backward_pass(params, spec, obs, fwd);
  if (loglik) *loglik = fwd.log_likelihood();
  return compute_posteriors(params, spec, obs, fwd, bwd);
}

namespace {

void finish_rows(Matrix& counts) {
  for (double& v : counts.values()) v += kCountEpsilon;
  normalize_rows(counts);
}

void finish_vector(std::vector<double>& v) {
  for (double& x : v) x += kCountEpsilon;
  normalize(v);
}

}  // namespace

ModelParams m_step(const Posteriors& post, const ObservationSet& obs, const ModelSpec& spec,
                   const ModelParams& current) {
  const std::size_t T = obs.length(), C = spec.num_chains, S = spec.num_states,
                    J = spec.num_patterns;
  if (post.lambda.rows() != T || post.lambda.cols() != J)
    throw DimensionMismatch("m_step: posteriors do not match observations/spec");
  ModelParams next = current;

  // V: expected pattern-pair counts plus the sticky Dirichlet pseudo-count.
  {
    const double k = spec.sticky_pseudocount();
    Matrix counts(J, J);
    for (std::size_t t = 0; t + 1 < T; ++t)
      for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j) counts(i, j) += post.xi(t, i, j);
    for (std::size_t i = 0; i < J; ++i) counts(i, i) += k;
    finish_rows(counts);
    next.pattern_transition = std::move(counts);
  }

  // R, E and F from the parent-selector joint.
  std::vector<Matrix> r_counts(J, Matrix(C, C));
  std::vector<Matrix> e_counts(C, Matrix(S, S));
  std::vector<Matrix> f_counts(C, Matrix(S, S));
  for (std::size_t t = 0; t + 1 < T; ++t)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t q = 0; q < C; ++q) {
          Matrix& target = q == c ? e_counts[c] : f_counts[q];
          double mass = 0.0;
          for (std::size_t u = 0; u < S; ++u) {
            auto row = post.parent_joint.slice(t, c, j, q, u);
            for (std::size_t s = 0; s < S; ++s) {
              target(u, s) += row[s];
              mass += row[s];
            }
          }
          r_counts[j](c, q) += mass;
        }
  for (std::size_t j = 0; j < J; ++j) {
    finish_rows(r_counts[j]);
    next.influence[j] = std::move(r_counts[j]);
  }
  for (std::size_t c = 0; c < C; ++c) {
    finish_rows(e_counts[c]);
    finish_rows(f_counts[c]);
    next.self[c] = std::move(e_counts[c]);
    next.cross[c] = std::move(f_counts[c]);
  }

  // Emissions against the smoothed chain marginals.
  if (spec.emission == EmissionFamily::Multinomial) {
    for (std::size_t c = 0; c < C; ++c) {
      Matrix counts(S, current.emissions.tables[c].cols());
      for (std::size_t t = 0; t < T; ++t) {
        auto g = post.state_marginals.slice(t, c);
        const auto k = static_cast<std::size_t>(obs.symbol(c, t));
        for (std::size_t s = 0; s < S; ++s) counts(s, k) += g[s];
      }
      finish_rows(counts);
      next.emissions.tables[c] = std::move(counts);
    }
  } else {
    // Means stay fixed; the per-chain variance is re-estimated.
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        auto g = post.state_marginals.slice(t, c);
        for (std::size_t s = 0; s < S; ++s) {
          const double d = obs.value(c, t) - current.emissions.means[s];
          acc += g[s] * d * d;
        }
      }
      next.emissions.variances[c] = std::max(acc / static_cast<double>(T), 1e-8);
    }
  }

  for (std::size_t c = 0; c < C; ++c) {
    auto g = post.state_marginals.slice(0, c);
    next.initial_state[c].assign(g.begin(), g.end());
    finish_vector(next.initial_state[c]);
  }
  next.initial_pattern.assign(post.lambda.row(0).begin(), post.lambda.row(0).end());
  finish_vector(next.initial_pattern);
  return next;
}

}  // namespace influence
