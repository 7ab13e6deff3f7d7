#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "influence/error.hpp"
#include "influence/exact.hpp"
#include "oracles.hpp"

using namespace influence;
using testing_support::max_diff;
using testing_support::random_instance;

TEST_CASE("expand has the expected shape and stochastic rows") {
  auto in = random_instance(2, 2, 2, 2, 3, 1);
  const JointChain jc = expand(in.params, in.spec);
  CHECK(jc.size() == 8);
  CHECK(jc.transition().rows() == 8);
  for (std::size_t x = 0; x < 8; ++x) CHECK(testing_support::is_distribution(jc.transition().row(x)));
  CHECK(testing_support::is_distribution(jc.initial()));
}

TEST_CASE("single chain single pattern expansion is E") {
  auto in = random_instance(1, 3, 1, 2, 3, 2);
  const JointChain jc = expand(in.params, in.spec);
  CHECK(jc.transition() == in.params.self[0]);
}

TEST_CASE("expand respects the cap") {
  auto in = random_instance(3, 3, 2, 2, 3, 2);
  CHECK_THROWS_AS(expand(in.params, in.spec, 10), CapacityExceeded);
  CHECK_NOTHROW(expand(in.params, in.spec, 54));
}

TEST_CASE("codec round-trips every joint index") {
  auto in = random_instance(3, 3, 2, 2, 3, 3);
  const JointChain jc = expand(in.params, in.spec);
  std::vector<int> h(3);
  for (std::size_t x = 0; x < jc.size(); ++x) {
    int r = -1;
    jc.decode(x, h, r);
    CHECK(jc.encode(h, r) == x);
  }
}

TEST_CASE("marginalizing the expansion recovers transition_distribution") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto in = random_instance(2, 3, 2, 2, 3, seed);
    const JointChain jc = expand(in.params, in.spec);
    std::vector<int> h(2), h2(2);
    for (std::size_t x = 0; x < jc.size(); ++x) {
      int r = 0;
      jc.decode(x, h, r);
      for (int rn = 0; rn < 2; ++rn)
        for (std::size_t c = 0; c < 2; ++c) {
          std::vector<double> m(3, 0.0);
          double mass = 0.0;
          for (std::size_t y = 0; y < jc.size(); ++y) {
            int ry = 0;
            jc.decode(y, h2, ry);
            if (ry != rn) continue;
            m[h2[c]] += jc.transition()(x, y);
            mass += jc.transition()(x, y);
          }
          CHECK(mass == doctest::Approx(in.params.pattern_transition(r, rn)).epsilon(1e-12));
          for (double& v : m) v /= mass;
          CHECK(max_diff(m, transition_distribution(in.params, rn, c, h)) < 1e-12);
        }
    }
  }
}

TEST_CASE("exact smoothing matches trajectory enumeration") {
  struct Shape {
    std::size_t C, S, J, T;
  };
  const Shape shapes[] = {{2, 2, 1, 3}, {2, 2, 2, 3}, {1, 3, 2, 4}, {2, 2, 2, 4}, {3, 2, 1, 3}};
  std::uint64_t seed = 1;
  for (const Shape& sh : shapes)
    for (int rep = 0; rep < 3; ++rep, ++seed) {
      auto in = random_instance(sh.C, sh.S, sh.J, 2, sh.T, seed);
      const JointChain jc = expand(in.params, in.spec);
      const Posteriors p = exact_smooth(jc, in.obs);
      const oracle::Enumerated e = oracle::enumerate(in.params, in.obs);
      CHECK(std::abs(exact_loglik(jc, in.obs) - e.loglik) < 1e-9);
      for (std::size_t t = 0; t < sh.T; ++t) {
        CHECK(max_diff(p.lambda.row(t), e.lambda[t]) < 1e-9);
        for (std::size_t c = 0; c < sh.C; ++c)
          CHECK(max_diff(p.state_marginals.slice(t, c), e.state_marginals[t][c]) < 1e-9);
        if (t + 1 < sh.T)
          for (std::size_t i = 0; i < sh.J; ++i)
            for (std::size_t j = 0; j < sh.J; ++j) CHECK(std::abs(p.xi(t, i, j) - e.xi[t][i][j]) < 1e-9);
      }
    }
}

TEST_CASE("exact smoothing of one chain is textbook HMM smoothing") {
  auto in = random_instance(1, 3, 2, 3, 25, 5);
  const Posteriors p = exact_smooth(expand(in.params, in.spec), in.obs);
  const auto ref = oracle::forward_backward(oracle::single_chain_hmm(in.params), in.obs.symbols()[0]);
  CHECK(std::abs(exact_loglik(expand(in.params, in.spec), in.obs) - ref.loglik) < 1e-9);
  for (std::size_t t = 0; t < 25; ++t)
    for (std::size_t j = 0; j < 2; ++j) {
      double lam = 0.0;
      for (std::size_t s = 0; s < 3; ++s) lam += ref.gamma[t][j * 3 + s];
      CHECK(std::abs(p.lambda(t, j) - lam) < 1e-9);
    }
}

TEST_CASE("deterministic emissions give one-hot state marginals") {
  auto in = random_instance(2, 2, 2, 2, 6, 7);
  for (auto& tab : in.params.emissions.tables) tab = Matrix::identity(2);
  const Posteriors p = exact_smooth(expand(in.params, in.spec), in.obs);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(p.state_marginals(t, c, in.obs.symbol(c, t)) == doctest::Approx(1.0));
}

TEST_CASE("single-step log-likelihood is the log mixture emission") {
  ModelSpec spec;
  spec.num_chains = 1;
  spec.num_states = 2;
  spec.num_symbols = 2;
  ModelParams p = random_params(spec, 4, 2);
  const ObservationSet o = ObservationSet::discrete({{1}});
  const double expect = std::log(p.initial_state[0][0] * p.emissions.tables[0](0, 1) +
                                 p.initial_state[0][1] * p.emissions.tables[0](1, 1));
  CHECK(exact_loglik(expand(p, spec), o) == doctest::Approx(expect));
}

TEST_CASE("exact log-likelihood obeys the chain rule") {
  auto in = random_instance(2, 2, 2, 3, 12, 9);
  const JointChain jc = expand(in.params, in.spec);
  const ExactRecursions full = exact_forward_backward(jc, in.obs);
  for (std::size_t n = 2; n <= 12; ++n) {
    const double a = exact_loglik(jc, in.obs.prefix(n)), b = exact_loglik(jc, in.obs.prefix(n - 1));
    CHECK(std::abs(a - b - full.log_normalizers[n - 1]) < 1e-9);
  }
}

TEST_CASE("exact log-likelihood is invariant under pattern relabelling") {
  auto in = random_instance(2, 2, 3, 2, 10, 10);
  const ModelParams q = testing_support::permute_patterns(in.params, {2, 0, 1});
  CHECK(std::abs(exact_loglik(expand(in.params, in.spec), in.obs) -
                 exact_loglik(expand(q, in.spec), in.obs)) < 1e-10);
}

TEST_CASE("exact parent joint feeds an exact M-step") {
  auto in = random_instance(2, 2, 2, 2, 20, 11);
  const Posteriors p = exact_smooth(expand(in.params, in.spec), in.obs);
  // Summing over parent and parent state recovers the child pair marginal.
  for (std::size_t t = 0; t + 1 < 20; ++t)
    for (std::size_t c = 0; c < 2; ++c) {
      double total = 0.0;
      for (double v : p.parent_joint.values().subspan(((t * 2 + c) * 2) * 2 * 2 * 2, 16)) total += v;
      CHECK(total == doctest::Approx(1.0));
    }
  const ModelParams n = m_step(p, in.obs, in.spec, in.params);
  CHECK(validate_params(n, in.spec).ok());
}

TEST_CASE("sampled pair frequencies agree with the joint transition") {
  auto in = random_instance(2, 2, 2, 2, 2, 13);
  const JointChain jc = expand(in.params, in.spec);
  const std::size_t T = 120000;
  const Sample s = sample(in.params, in.spec, T, 5);
  Matrix counts(jc.size(), jc.size());
  std::vector<int> h(2), h2(2);
  auto code = [&](std::size_t t, std::vector<int>& v) {
    for (std::size_t c = 0; c < 2; ++c) v[c] = s.latent.states[c][t];
    return jc.encode(v, s.latent.patterns[t]);
  };
  for (std::size_t t = 1; t < T; ++t) counts(code(t - 1, h), code(t, h2)) += 1;
  for (std::size_t x = 0; x < jc.size(); ++x) {
    double n = 0;
    for (std::size_t y = 0; y < jc.size(); ++y) n += counts(x, y);
    if (n < 500) continue;
    for (std::size_t y = 0; y < jc.size(); ++y) {
      const double e = jc.transition()(x, y);
      CHECK(std::abs(counts(x, y) / n - e) <= 3 * std::sqrt(e * (1 - e) / n) + 1e-12);
    }
  }
}
