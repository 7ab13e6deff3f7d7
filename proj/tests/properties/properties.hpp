#pragma once

// Randomized invariants. Each property draws `cases` independent instances
// from a fixed seed stream and counts the ones that break it.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles/oracles.hpp"
#include "../unit/helpers.hpp"
#include "influence/exact.hpp"
#include "influence/io.hpp"
#include "influence/random.hpp"
#include "influence/tasks.hpp"

namespace properties {

using namespace influence;
using testing_support::Instance;
using testing_support::is_distribution;
using testing_support::max_diff;

struct Outcome {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
  bool ok() const { return failures == 0 && cases > 0; }
};

inline constexpr std::size_t kDefaultCases = 1000;

struct Shape {
  std::size_t C, S, J, K, T;
};

// Small random shape; joint size stays below 100 so exact checks are cheap.
inline Shape draw_shape(Rng& rng, std::size_t max_chains = 3, std::size_t max_t = 8) {
  Shape s{};
  s.C = 1 + rng.index(max_chains);
  s.S = 2 + rng.index(s.C == 3 ? 1 : 2);
  s.J = 1 + rng.index(3);
  s.K = 2 + rng.index(2);
  s.T = 2 + rng.index(max_t - 1);
  return s;
}

inline Instance draw(Rng& rng, const Shape& s) {
  return testing_support::random_instance(s.C, s.S, s.J, s.K, s.T, rng.next(),
                                          static_cast<double>(rng.index(4)));
}

template <typename F>
Outcome run(const std::string& name, std::size_t cases, std::uint64_t seed, F&& check) {
  Outcome out{name, cases, 0, {}};
  Rng rng(seed);
  for (std::size_t i = 0; i < cases; ++i) {
    std::string why;
    bool pass = false;
    try {
      pass = check(rng, why);
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (!pass && out.failures++ == 0) out.first_failure = "case " + std::to_string(i) + ": " + why;
  }
  return out;
}

inline Outcome transition_rows_stochastic(std::size_t cases = kDefaultCases) {
  return run("transition_distribution is a probability vector", cases, 101,
             [](Rng& rng, std::string& why) {
               const Shape s = draw_shape(rng, 4);
               const Instance in = draw(rng, s);
               std::vector<int> prev(s.C);
               for (auto& v : prev) v = static_cast<int>(rng.index(s.S));
               for (std::size_t j = 0; j < s.J; ++j)
                 for (std::size_t c = 0; c < s.C; ++c) {
                   const auto d = transition_distribution(in.params, j, c, prev);
                   if (!is_distribution(d)) return why = "not stochastic", false;
                   for (std::size_t k = 0; k < s.S; ++k)
                     if (std::abs(d[k] - oracle::mixture_step(in.params, j, c, prev, k)) > 1e-12)
                       return why = "differs from term-by-term sum", false;
                 }
               return true;
             });
}

inline Outcome inference_normalized(std::size_t cases = kDefaultCases) {
  return run("alpha/beta/kappa/nu/lambda/xi normalized", cases, 202,
             [](Rng& rng, std::string& why) {
               const Shape s = draw_shape(rng, 3, 12);
               const Instance in = draw(rng, s);
               const ForwardState f = forward_pass(in.params, in.spec, in.obs);
               const BackwardState b = backward_pass(in.params, in.spec, in.obs, f);
               const Posteriors p = compute_posteriors(in.params, in.spec, in.obs, f, b);
               for (std::size_t t = 0; t < s.T; ++t) {
                 if (!is_distribution(f.kappa.row(t)) || !is_distribution(b.nu.row(t)) ||
                     !is_distribution(p.lambda.row(t)))
                   return why = "pattern vector at t=" + std::to_string(t), false;
                 for (std::size_t c = 0; c < s.C; ++c) {
                   if (!is_distribution(p.state_marginals.slice(t, c)))
                     return why = "state marginal", false;
                   for (std::size_t j = 0; j < s.J; ++j)
                     if (!is_distribution(f.alpha.slice(t, j, c)) ||
                         !is_distribution(b.beta.slice(t, j, c)))
                       return why = "alpha/beta", false;
                 }
                 if (t + 1 < s.T) {
                   std::vector<double> x(s.J * s.J);
                   for (std::size_t i = 0; i < s.J; ++i)
                     for (std::size_t j = 0; j < s.J; ++j) x[i * s.J + j] = p.xi(t, i, j);
                   if (!is_distribution(x)) return why = "xi", false;
                   for (std::size_t c = 0; c < s.C; ++c) {
                     std::vector<double> pj(p.parent_joint.values().begin() +
                                                (t * s.C + c) * s.J * s.C * s.S * s.S,
                                            p.parent_joint.values().begin() +
                                                (t * s.C + c + 1) * s.J * s.C * s.S * s.S);
                     if (!is_distribution(pj)) return why = "parent joint", false;
                   }
                 }
               }
               for (double v : f.log_normalizers)
                 if (!std::isfinite(v)) return why = "non-finite normalizer", false;
               return true;
             });
}

inline Outcome lambda_is_xi_marginal(std::size_t cases = kDefaultCases) {
  return run("lambda is the row marginal of xi", cases, 303, [](Rng& rng, std::string& why) {
    const Shape s = draw_shape(rng, 3, 10);
    const Instance in = draw(rng, s);
    const Posteriors p = e_step(in.params, in.spec, in.obs);
    for (std::size_t t = 0; t + 1 < s.T; ++t)
      for (std::size_t i = 0; i < s.J; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < s.J; ++j) row += p.xi(t, i, j);
        if (std::abs(row - p.lambda(t, i)) > 1e-12) return why = "row sum", false;
      }
    return true;
  });
}

inline Outcome single_chain_reduction(std::size_t cases = kDefaultCases) {
  return run("C=1 inference equals the textbook HMM", cases, 404, [](Rng& rng, std::string& why) {
    const std::size_t S = 2 + rng.index(3), J = 1 + rng.index(3), T = 2 + rng.index(15);
    const Instance in = testing_support::random_instance(1, S, J, 3, T, rng.next());
    const auto hmm = oracle::single_chain_hmm(in.params);
    const auto ref = oracle::forward_backward(hmm, in.obs.symbols()[0]);
    double ll = 0.0;
    const Posteriors p = e_step(in.params, in.spec, in.obs, &ll);
    if (std::abs(ll - ref.loglik) > 1e-9) return why = "loglik", false;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < J; ++j) {
        double lam = 0.0;
        for (std::size_t s = 0; s < S; ++s) lam += ref.gamma[t][j * S + s];
        if (std::abs(lam - p.lambda(t, j)) > 1e-9) return why = "lambda", false;
      }
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t s = 0; s < S; ++s) {
        double g = 0.0;
        for (std::size_t j = 0; j < J; ++j) g += ref.gamma[t][j * S + s];
        if (std::abs(g - p.state_marginals(t, 0, s)) > 1e-9) return why = "marginal", false;
      }
    return true;
  });
}

inline Outcome m_step_valid(std::size_t cases = kDefaultCases) {
  return run("m_step output passes validation", cases, 505, [](Rng& rng, std::string& why) {
    const Shape s = draw_shape(rng, 3, 12);
    const Instance in = draw(rng, s);
    const ModelParams next = m_step(e_step(in.params, in.spec, in.obs), in.obs, in.spec, in.params);
    const ValidationResult r = validate_params(next, in.spec);
    if (!r.ok()) return why = r.summary(), false;
    return true;
  });
}

inline Outcome m_step_count_oracle(std::size_t cases = kDefaultCases) {
  return run("m_step equals a Baum-Welch count update (C=1, J=1)", cases, 606,
             [](Rng& rng, std::string& why) {
               const std::size_t S = 2 + rng.index(3), K = 2 + rng.index(3), T = 2 + rng.index(20);
               const Instance in = testing_support::random_instance(1, S, 1, K, T, rng.next());
               const ModelParams n =
                   m_step(e_step(in.params, in.spec, in.obs), in.obs, in.spec, in.params);
               const auto bw = oracle::baum_welch_step(oracle::single_chain_hmm(in.params),
                                                       in.obs.symbols()[0], kCountEpsilon);
               for (std::size_t u = 0; u < S; ++u) {
                 if (std::abs(n.initial_state[0][u] - bw.pi[u]) > 1e-9) return why = "pi", false;
                 for (std::size_t v = 0; v < S; ++v)
                   if (std::abs(n.self[0](u, v) - bw.A[u][v]) > 1e-9) return why = "E", false;
                 for (std::size_t k = 0; k < n.emissions.tables[0].cols(); ++k)
                   if (std::abs(n.emissions.tables[0](u, k) - bw.B[u][k]) > 1e-9)
                     return why = "emission", false;
               }
               return true;
             });
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

inline Outcome loglik_permutation_symmetry(std::size_t cases = kDefaultCases) {
  return run("likelihood proxy invariant to pattern relabelling", cases, 707,
             [](Rng& rng, std::string& why) {
               Shape s = draw_shape(rng, 3, 10);
               s.J = 2 + rng.index(2);
               const Instance in = draw(rng, s);
               const ModelParams q =
                   testing_support::permute_patterns(in.params, random_permutation(rng, s.J));
               double a = 0.0, b = 0.0;
               e_step(in.params, in.spec, in.obs, &a);
               e_step(q, in.spec, in.obs, &b);
               if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(a))) return why = "proxy", false;
               return true;
             });
}

inline Outcome change_score_permutation_symmetry(std::size_t cases = kDefaultCases) {
  return run("expected influence invariant to pattern relabelling", cases, 808,
             [](Rng& rng, std::string& why) {
               Shape s = draw_shape(rng, 3, 10);
               s.J = 2 + rng.index(2);
               const Instance in = draw(rng, s);
               const ModelParams q =
                   testing_support::permute_patterns(in.params, random_permutation(rng, s.J));
               const Posteriors pa = e_step(in.params, in.spec, in.obs);
               const Posteriors pb = e_step(q, in.spec, in.obs);
               for (std::size_t t : {std::size_t{0}, s.T - 1})
                 if (max_abs_diff(expected_influence(in.params, pa, t), expected_influence(q, pb, t)) >
                     1e-9)
                   return why = "expected influence", false;
               return true;
             });
}

inline Outcome joint_chain_consistent(std::size_t cases = kDefaultCases) {
  return run("expanded joint chain is stochastic and marginalizes to the mixture", cases, 909,
             [](Rng& rng, std::string& why) {
               const Shape s = draw_shape(rng, 3);
               const Instance in = draw(rng, s);
               const JointChain jc = expand(in.params, in.spec);
               const std::size_t x = rng.index(jc.size());
               if (!is_distribution(jc.transition().row(x))) return why = "row", false;
               std::vector<int> h(s.C), h2(s.C);
               int r = 0;
               jc.decode(x, h, r);
               if (jc.encode(h, r) != x) return why = "codec", false;
               const int rn = static_cast<int>(rng.index(s.J));
               const std::size_t c = rng.index(s.C);
               std::vector<double> m(s.S, 0.0);
               double mass = 0.0;
               for (std::size_t y = 0; y < jc.size(); ++y) {
                 int ry = 0;
                 jc.decode(y, h2, ry);
                 if (ry != rn) continue;
                 m[h2[c]] += jc.transition()(x, y);
                 mass += jc.transition()(x, y);
               }
               for (double& v : m) v /= mass;
               if (max_diff(m, transition_distribution(in.params, rn, c, h)) > 1e-12)
                 return why = "marginal", false;
               return true;
             });
}

inline Outcome exact_matches_enumeration(std::size_t cases = kDefaultCases) {
  return run("exact smoothing equals trajectory enumeration", cases, 1010,
             [](Rng& rng, std::string& why) {
               Shape s = draw_shape(rng, 2, 4);
               s.T = 2 + rng.index(2);
               if (s.C == 2) s.S = 2;
               const Instance in = draw(rng, s);
               const JointChain jc = expand(in.params, in.spec);
               const Posteriors p = exact_smooth(jc, in.obs);
               const auto e = oracle::enumerate(in.params, in.obs);
               if (std::abs(exact_loglik(jc, in.obs) - e.loglik) > 1e-9) return why = "loglik", false;
               for (std::size_t t = 0; t < s.T; ++t) {
                 if (max_diff(p.lambda.row(t), e.lambda[t]) > 1e-9) return why = "lambda", false;
                 for (std::size_t c = 0; c < s.C; ++c)
                   if (max_diff(p.state_marginals.slice(t, c), e.state_marginals[t][c]) > 1e-9)
                     return why = "marginal", false;
               }
               return true;
             });
}

inline Outcome exact_chain_rule(std::size_t cases = kDefaultCases) {
  return run("exact log-likelihood chain rule", cases, 1111, [](Rng& rng, std::string& why) {
    Shape s = draw_shape(rng, 2, 10);
    s.T = std::max<std::size_t>(s.T, 3);
    const Instance in = draw(rng, s);
    const JointChain jc = expand(in.params, in.spec);
    const ExactRecursions full = exact_forward_backward(jc, in.obs);
    const std::size_t n = 2 + rng.index(s.T - 1);
    const double d = exact_loglik(jc, in.obs.prefix(n)) - exact_loglik(jc, in.obs.prefix(n - 1));
    if (std::abs(d - full.log_normalizers[n - 1]) > 1e-9) return why = "chain rule", false;
    return true;
  });
}

inline Outcome prediction_excludes_current(std::size_t cases = kDefaultCases) {
  return run("predicted next speaker is never the current one", cases, 1212,
             [](Rng& rng, std::string& why) {
               const std::size_t C = 2 + rng.index(3);
               const Instance in = testing_support::random_instance(C, 2, 1 + rng.index(2), 2,
                                                                    3 + rng.index(10), rng.next());
               const std::size_t cur = rng.index(C);
               const auto pred = predict_with_params(in.params, in.spec, in.obs, cur);
               if (pred.speaker == cur || pred.speaker >= C) return why = "current speaker", false;
               return true;
             });
}

inline Outcome binarize_idempotent(std::size_t cases = kDefaultCases) {
  return run("binarize is idempotent on 0/1 values", cases, 1313, [](Rng& rng, std::string& why) {
    const std::size_t C = 1 + rng.index(4), T = 2 + rng.index(20);
    std::vector<std::vector<double>> v(C, std::vector<double>(T));
    for (auto& row : v)
      for (double& x : row) x = rng.uniform() * 4 - 2;
    const double thr = rng.uniform() * 2 - 1;
    const ObservationSet once = binarize(ObservationSet::continuous(v), thr);
    std::vector<std::vector<double>> back(C, std::vector<double>(T));
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T; ++t) back[c][t] = once.symbol(c, t);
    if (!(binarize(ObservationSet::continuous(back), 0.5) == once)) return why = "changed", false;
    return true;
  });
}

inline Outcome io_round_trip(std::size_t cases = kDefaultCases) {
  return run("observation and params files round-trip exactly", cases, 1414,
             [](Rng& rng, std::string& why) {
               const Shape s = draw_shape(rng, 4, 30);
               const Instance in = draw(rng, s);
               std::vector<std::vector<double>> v(s.C, std::vector<double>(s.T));
               for (auto& row : v)
                 for (double& x : row) x = (rng.uniform() - 0.5) * std::pow(10.0, rng.index(20) - 10.0);
               const ObservationSet cont = ObservationSet::continuous(v);
               for (const ObservationSet* o : {&in.obs, &cont}) {
                 const EmissionFamily f = o->is_discrete() ? EmissionFamily::Multinomial
                                                           : EmissionFamily::GaussianFixedMeans;
                 std::stringstream csv, js;
                 write_observations_csv(csv, *o);
                 write_observations_json(js, *o);
                 if (!(read_observations_csv(csv, f).observations == *o)) return why = "csv", false;
                 if (!(read_observations_json(js, f).observations == *o)) return why = "json", false;
               }
               if (!(params_from_json(params_to_json(in.spec, in.params)).params == in.params))
                 return why = "params", false;
               return true;
             });
}

inline std::vector<Outcome> all(std::size_t cases = kDefaultCases) {
  return {transition_rows_stochastic(cases),
          inference_normalized(cases),
          lambda_is_xi_marginal(cases),
          single_chain_reduction(cases),
          m_step_valid(cases),
          m_step_count_oracle(cases),
          loglik_permutation_symmetry(cases),
          change_score_permutation_symmetry(cases),
          joint_chain_consistent(cases),
          exact_matches_enumeration(cases),
          exact_chain_rule(cases),
          prediction_excludes_current(cases),
          binarize_idempotent(cases),
          io_round_trip(cases)};
}

}  // namespace properties
