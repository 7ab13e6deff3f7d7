#pragma once

// Reference implementations written independently of the library:
// a textbook scaled HMM forward-backward with one Baum-Welch step, and brute
// enumeration of every latent trajectory of a small dynamical influence model.

#include <cmath>
#include <cstddef>
#include <vector>

#include "influence/model.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

struct Hmm {
  Mat A;   // N x N
  Vec pi;  // N
  Mat B;   // N x K
};

struct HmmSmooth {
  Mat alpha;  // filtered, T x N
  Mat beta;   // scaled backward, T x N
  Mat gamma;  // T x N
  std::vector<Mat> xi;  // (T-1) x N x N
  double loglik = 0.0;
};

inline HmmSmooth forward_backward(const Hmm& h, const std::vector<int>& o) {
  const std::size_t T = o.size(), N = h.pi.size();
  HmmSmooth r;
  r.alpha.assign(T, Vec(N, 0.0));
  r.beta.assign(T, Vec(N, 1.0));
  Vec scale(T, 0.0);
  for (std::size_t i = 0; i < N; ++i) r.alpha[0][i] = h.pi[i] * h.B[i][o[0]];
  for (std::size_t t = 0;; ++t) {
    for (double v : r.alpha[t]) scale[t] += v;
    for (double& v : r.alpha[t]) v /= scale[t];
    if (t + 1 == T) break;
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i) s += r.alpha[t][i] * h.A[i][j];
      r.alpha[t + 1][j] = s * h.B[j][o[t + 1]];
    }
  }
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < N; ++j) s += h.A[i][j] * h.B[j][o[t + 1]] * r.beta[t + 1][j];
      r.beta[t][i] = s / scale[t + 1];
    }
  }
  r.gamma.assign(T, Vec(N));
  for (std::size_t t = 0; t < T; ++t) {
    double z = 0.0;
    for (std::size_t i = 0; i < N; ++i) z += r.gamma[t][i] = r.alpha[t][i] * r.beta[t][i];
    for (double& v : r.gamma[t]) v /= z;
  }
  r.xi.assign(T ? T - 1 : 0, Mat(N, Vec(N)));
  for (std::size_t t = 0; t + 1 < T; ++t) {
    double z = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        z += r.xi[t][i][j] = r.alpha[t][i] * h.A[i][j] * h.B[j][o[t + 1]] * r.beta[t + 1][j];
    for (auto& row : r.xi[t])
      for (double& v : row) v /= z;
  }
  for (double s : scale) r.loglik += std::log(s);
  return r;
}

// One Baum-Welch re-estimation with additive eps on every count.
inline Hmm baum_welch_step(const Hmm& h, const std::vector<int>& o, double eps) {
  const HmmSmooth s = forward_backward(h, o);
  const std::size_t N = h.pi.size(), K = h.B[0].size(), T = o.size();
  Hmm n = h;
  for (std::size_t i = 0; i < N; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      double c = eps;
      for (std::size_t t = 0; t + 1 < T; ++t) c += s.xi[t][i][j];
      n.A[i][j] = c;
      row += c;
    }
    for (double& v : n.A[i]) v /= row;
    double erow = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double c = eps;
      for (std::size_t t = 0; t < T; ++t)
        if (o[t] == static_cast<int>(k)) c += s.gamma[t][i];
      n.B[i][k] = c;
      erow += c;
    }
    for (double& v : n.B[i]) v /= erow;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < N; ++i) z += n.pi[i] = s.gamma[0][i] + eps;
  for (double& v : n.pi) v /= z;
  return n;
}

// Single chain model as a flat HMM over (r, h), index r * S + h.
inline Hmm single_chain_hmm(const influence::ModelParams& p) {
  const std::size_t S = p.num_states(), J = p.num_patterns(), K = p.emissions.tables[0].cols();
  const std::size_t N = S * J;
  Hmm h;
  h.A.assign(N, Vec(N));
  h.pi.assign(N, 0.0);
  h.B.assign(N, Vec(K));
  for (std::size_t r = 0; r < J; ++r)
    for (std::size_t s = 0; s < S; ++s) {
      const std::size_t x = r * S + s;
      h.pi[x] = p.initial_pattern[r] * p.initial_state[0][s];
      for (std::size_t k = 0; k < K; ++k) h.B[x][k] = p.emissions.tables[0](s, k);
      for (std::size_t r2 = 0; r2 < J; ++r2)
        for (std::size_t s2 = 0; s2 < S; ++s2)
          h.A[x][r2 * S + s2] = p.pattern_transition(r, r2) * p.self[0](s, s2);
    }
  return h;
}

// Prob(h'^c | h, r') straight from the mixture definition.
inline double mixture_step(const influence::ModelParams& p, std::size_t r, std::size_t c,
                           const std::vector<int>& h, int next) {
  double v = 0.0;
  for (std::size_t q = 0; q < p.num_chains(); ++q) {
    const influence::Matrix& M = q == c ? p.self[c] : p.cross[q];
    v += p.influence[r](c, q) * M(h[q], next);
  }
  return v;
}

struct Enumerated {
  Mat lambda;                       // T x J
  std::vector<Mat> state_marginals; // T x C x S
  std::vector<Mat> xi;              // (T-1) x J x J
  double loglik = 0.0;
};

// Sums over all (S^C * J)^T latent trajectories of a multinomial model.
inline Enumerated enumerate(const influence::ModelParams& p, const influence::ObservationSet& o) {
  const std::size_t C = p.num_chains(), S = p.num_states(), J = p.num_patterns(), T = o.length();
  std::size_t block = 1;
  for (std::size_t c = 0; c < C; ++c) block *= S;
  const std::size_t N = block * J;
  std::size_t total = 1;
  for (std::size_t t = 0; t < T; ++t) total *= N;

  auto unpack = [&](std::size_t x, std::vector<int>& h) {
    std::size_t rest = x % block;
    for (std::size_t c = 0; c < C; ++c) {
      h[c] = static_cast<int>(rest % S);
      rest /= S;
    }
    return x / block;
  };

  Enumerated e;
  e.lambda.assign(T, Vec(J, 0.0));
  e.state_marginals.assign(T, Mat(C, Vec(S, 0.0)));
  e.xi.assign(T ? T - 1 : 0, Mat(J, Vec(J, 0.0)));
  std::vector<std::size_t> path(T);
  std::vector<int> h(C), hp(C);
  double z = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t t = 0; t < T; ++t) {
      path[t] = rest % N;
      rest /= N;
    }
    double w = 1.0;
    for (std::size_t t = 0; t < T && w > 0.0; ++t) {
      const std::size_t r = unpack(path[t], h);
      if (t == 0) {
        w *= p.initial_pattern[r];
        for (std::size_t c = 0; c < C; ++c) w *= p.initial_state[c][h[c]];
      } else {
        const std::size_t rp = unpack(path[t - 1], hp);
        w *= p.pattern_transition(rp, r);
        for (std::size_t c = 0; c < C; ++c) w *= mixture_step(p, r, c, hp, h[c]);
      }
      for (std::size_t c = 0; c < C; ++c) w *= p.emissions.tables[c](h[c], o.symbol(c, t));
    }
    if (w == 0.0) continue;
    z += w;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t r = unpack(path[t], h);
      e.lambda[t][r] += w;
      for (std::size_t c = 0; c < C; ++c) e.state_marginals[t][c][h[c]] += w;
      if (t + 1 < T) e.xi[t][r][unpack(path[t + 1], hp)] += w;
    }
  }
  for (auto& row : e.lambda)
    for (double& v : row) v /= z;
  for (auto& m : e.state_marginals)
    for (auto& row : m)
      for (double& v : row) v /= z;
  for (auto& m : e.xi)
    for (auto& row : m)
      for (double& v : row) v /= z;
  e.loglik = std::log(z);
  return e;
}

}  // namespace oracle
