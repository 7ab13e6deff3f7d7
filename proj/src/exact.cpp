#include "influence/exact.hpp"

#include <cmath>

#include "influence/error.hpp"

namespace influence {

std::size_t JointChain::encode(std::span<const int> states, int pattern) const {
  std::size_t idx = 0;
  for (std::size_t c = chains_; c-- > 0;) idx = idx * states_ + static_cast<std::size_t>(states[c]);
  return static_cast<std::size_t>(pattern) * block_ + idx;
}

void JointChain::decode(std::size_t index, std::span<int> states, int& pattern) const {
  pattern = static_cast<int>(index / block_);
  std::size_t rest = index % block_;
  for (std::size_t c = 0; c < chains_; ++c) {
    states[c] = static_cast<int>(rest % states_);
    rest /= states_;
  }
}

std::vector<double> JointChain::emission(const ObservationSet& obs, std::size_t t) const {
  std::vector<double> per(chains_ * states_);
  for (std::size_t c = 0; c < chains_; ++c)
    emission_likelihoods(params_, obs, c, t,
                         std::span<double>(per.data() + c * states_, states_));
  std::vector<double> out(size());
  std::vector<int> h(chains_);
  int r = 0;
  for (std::size_t x = 0; x < block_; ++x) {
    decode(x, h, r);
    double v = 1.0;
    for (std::size_t c = 0; c < chains_; ++c) v *= per[c * states_ + h[c]];
    for (std::size_t j = 0; j < patterns_; ++j) out[j * block_ + x] = v;
  }
  return out;
}

JointChain expand(const ModelParams& params, const ModelSpec& spec, std::size_t cap) {
  require_valid(params, spec);
  const std::size_t C = spec.num_chains, S = spec.num_states, J = spec.num_patterns;
  std::size_t block = 1;
  for (std::size_t c = 0; c < C; ++c) {
    block *= S;
    if (block * J > cap) throw CapacityExceeded("expand: joint space exceeds cap");
  }
  JointChain jc;
  jc.chains_ = C;
  jc.states_ = S;
  jc.patterns_ = J;
  jc.block_ = block;
  jc.params_ = params;
  const std::size_t N = block * J;
  jc.transition_ = Matrix(N, N);
  jc.initial_.assign(N, 0.0);

  std::vector<int> h(C), h_next(C);
  int r = 0, r_next = 0;
  for (std::size_t x = 0; x < N; ++x) {
    jc.decode(x, h, r);
    double init = params.initial_pattern[r];
    for (std::size_t c = 0; c < C; ++c) init *= params.initial_state[c][h[c]];
    jc.initial_[x] = init;
  }

  // Per (pattern, previous joint state): each chain's next-state distribution.
  std::vector<std::vector<double>> per_chain(C);
  for (std::size_t x = 0; x < block; ++x) {
    jc.decode(x, h, r);
    for (std::size_t jn = 0; jn < J; ++jn) {
      for (std::size_t c = 0; c < C; ++c) per_chain[c] = transition_distribution(params, jn, c, h);
      for (std::size_t y = 0; y < block; ++y) {
        jc.decode(y, h_next, r_next);
        double p = 1.0;
        for (std::size_t c = 0; c < C; ++c) p *= per_chain[c][h_next[c]];
        for (std::size_t j = 0; j < J; ++j)
          jc.transition_(j * block + x, jn * block + y) = params.pattern_transition(j, jn) * p;
      }
    }
  }
  return jc;
}

ExactRecursions exact_forward_backward(const JointChain& joint, const ObservationSet& obs) {
  const ModelParams& params = joint.params();
  if (obs.num_chains() != joint.num_chains())
    throw DimensionMismatch("exact: observation chain count differs");
  const std::size_t T = obs.length(), N = joint.size();
  const Matrix& A = joint.transition();

  ExactRecursions out;
  out.filtered = Matrix(T, N);
  out.backward = Matrix(T, N);
  out.log_normalizers.assign(T, 0.0);

  std::vector<std::vector<double>> evid(T);
  for (std::size_t t = 0; t < T; ++t) {
    evid[t] = joint.emission(obs, t);
    for (std::size_t c = 0; c < obs.num_chains(); ++c) {
      std::vector<double> e(joint.num_states());
      emission_likelihoods(params, obs, c, t, e);
      if (!(sum(e) > 0.0)) throw DegenerateEvidence(t, c);
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    auto f = out.filtered.row(t);
    if (t == 0) {
      for (std::size_t x = 0; x < N; ++x) f[x] = joint.initial()[x] * evid[0][x];
    } else {
      auto prev = out.filtered.row(t - 1);
      std::fill(f.begin(), f.end(), 0.0);
      for (std::size_t x = 0; x < N; ++x) {
        if (prev[x] == 0.0) continue;
        auto row = A.row(x);
        for (std::size_t y = 0; y < N; ++y) f[y] += prev[x] * row[y];
      }
      for (std::size_t y = 0; y < N; ++y) f[y] *= evid[t][y];
    }
    const double z = normalize(f);
    if (!(z > 0.0)) throw NumericalFailure("exact: zero evidence at t=" + std::to_string(t + 1));
    out.log_normalizers[t] = std::log(z);
  }

  for (std::size_t t = T; t-- > 0;) {
    auto b = out.backward.row(t);
    if (t + 1 == T) {
      for (std::size_t x = 0; x < N; ++x) b[x] = evid[t][x];
    } else {
      auto next = out.backward.row(t + 1);
      for (std::size_t x = 0; x < N; ++x) {
        auto row = A.row(x);
        double acc = 0.0;
        for (std::size_t y = 0; y < N; ++y) acc += row[y] * next[y];
        b[x] = evid[t][x] * acc;
      }
    }
    normalize(b);
  }
  return out;
}

Posteriors exact_smooth(const JointChain& joint, const ObservationSet& obs) {
  const ExactRecursions rec = exact_forward_backward(joint, obs);
  const std::size_t T = obs.length(), N = joint.size(), C = joint.num_chains(),
                    S = joint.num_states(), J = joint.num_patterns();
  const Matrix& A = joint.transition();
  Posteriors p;
  p.state_marginals = Tensor({T, C, S});
  p.lambda = Matrix(T, J);
  p.xi = Tensor({T > 1 ? T - 1 : 0, J, J});
  p.parent_joint = Tensor({T > 1 ? T - 1 : 0, C, J, C, S, S});

  std::vector<int> h(C);
  int r = 0;
  std::vector<double> gamma(N);
  for (std::size_t t = 0; t < T; ++t) {
    // Prob(x_t | O) ~ Prob(x_t | O_{1:t}) Prob(O_{t+1:T} | x_t).
    for (std::size_t x = 0; x < N; ++x) {
      double future = 1.0;
      if (t + 1 < T) {
        future = 0.0;
        auto row = A.row(x);
        auto next = rec.backward.row(t + 1);
        for (std::size_t y = 0; y < N; ++y) future += row[y] * next[y];
      }
      gamma[x] = rec.filtered(t, x) * future;
    }
    normalize(gamma);
    for (std::size_t x = 0; x < N; ++x) {
      joint.decode(x, h, r);
      p.lambda(t, r) += gamma[x];
      for (std::size_t c = 0; c < C; ++c) p.state_marginals(t, c, h[c]) += gamma[x];
    }
  }

  const ModelParams& prm = joint.params();
  std::vector<int> g(C);
  std::vector<double> share(C);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    double z = 0.0;
    for (std::size_t x = 0; x < N; ++x) {
      const double fx = rec.filtered(t, x);
      if (fx == 0.0) continue;
      joint.decode(x, h, r);
      for (std::size_t y = 0; y < N; ++y) {
        const double w = fx * A(x, y) * rec.backward(t + 1, y);
        if (w == 0.0) continue;
        int j = 0;
        joint.decode(y, g, j);
        p.xi(t, r, j) += w;
        z += w;
        // split each child's transition among the parent that produced it
        for (std::size_t c = 0; c < C; ++c) {
          double tot = 0.0;
          for (std::size_t q = 0; q < C; ++q) {
            share[q] = prm.influence[j](c, q) * prm.parent_matrix(q, c)(h[q], g[c]);
            tot += share[q];
          }
          if (tot == 0.0) continue;
          for (std::size_t q = 0; q < C; ++q)
            p.parent_joint(t, c, j, q, h[q], g[c]) += w * share[q] / tot;
        }
      }
    }
    for (std::size_t i = 0; i < J; ++i)
      for (std::size_t j = 0; j < J; ++j) p.xi(t, i, j) /= z;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < J; ++j)
        for (std::size_t q = 0; q < C; ++q)
          for (std::size_t u = 0; u < S; ++u)
            for (double& v : p.parent_joint.slice(t, c, j, q, u)) v /= z;
  }
  return p;
}

double exact_loglik(const JointChain& joint, const ObservationSet& obs) {
  const ExactRecursions rec = exact_forward_backward(joint, obs);
  double ll = 0.0;
  for (double x : rec.log_normalizers) ll += x;
  return ll;
}

}  // namespace influence
