#include "influence/toy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "influence/error.hpp"
#include "influence/tasks.hpp"

namespace influence::toy {

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

}  // namespace

Truth truth(std::size_t length, std::size_t switch_at) {
  if (switch_at == 0 || switch_at >= length) throw InvalidArgument("toy: switch outside sequence");
  Truth t;
  t.spec.num_chains = 2;
  t.spec.num_states = 2;
  t.spec.num_patterns = 2;
  t.spec.num_symbols = 2;

  ModelParams& p = t.params;
  p.influence = {mat2(0.90, 0.10, 0.10, 0.90), mat2(0.05, 0.95, 0.95, 0.05)};
  // Own dynamics are near coin flips, cross influence copies the parent's state.
  p.self = {mat2(0.50, 0.50, 0.52, 0.48), mat2(0.48, 0.52, 0.50, 0.50)};
  p.cross = {mat2(0.97, 0.03, 0.01, 0.99), mat2(0.99, 0.01, 0.03, 0.97)};
  p.pattern_transition = mat2(0.99, 0.01, 0.01, 0.99);
  p.emissions.tables = {mat2(0.97, 0.03, 0.05, 0.95), mat2(0.95, 0.05, 0.03, 0.97)};
  p.initial_state = {{0.5, 0.5}, {0.5, 0.5}};
  p.initial_pattern = {1.0, 0.0};

  t.schedule.assign(length, 0);
  std::fill(t.schedule.begin() + static_cast<std::ptrdiff_t>(switch_at), t.schedule.end(), 1);
  return t;
}

SwitchAnalysis analyze_switch(const Matrix& lambda, std::size_t lo, std::size_t hi) {
  const std::size_t T = lambda.rows(), J = lambda.cols();
  if (lo < 2 || hi >= T || lo > hi) throw InvalidArgument("analyze_switch: window out of range");
  SwitchAnalysis a;
  std::vector<double> mass_before(J, 0.0), mass_after(J, 0.0);
  for (std::size_t t = 0; t + 1 < lo; ++t)
    for (std::size_t j = 0; j < J; ++j) mass_before[j] += lambda(t, j);
  for (std::size_t t = hi; t < T; ++t)
    for (std::size_t j = 0; j < J; ++j) mass_after[j] += lambda(t, j);
  a.before = static_cast<std::size_t>(
      std::max_element(mass_before.begin(), mass_before.end()) - mass_before.begin());
  a.after = static_cast<std::size_t>(
      std::max_element(mass_after.begin(), mass_after.end()) - mass_after.begin());
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < J; ++j)
      if (j != a.before && j != a.after) a.max_unused = std::max(a.max_unused, lambda(t, j));
  if (a.before == a.after) return a;
  // 1-based step k in [lo, hi] with lambda_before(k-1) >= 0.5, lambda_after(k) >= 0.5.
  for (std::size_t k = lo; k <= hi; ++k) {
    if (lambda(k - 2, a.before) >= 0.5 && lambda(k - 1, a.after) >= 0.5) {
      a.crossed = true;
      a.crossing = k;
      break;
    }
  }
  return a;
}

double influence_recovery_error(const ModelParams& learned, const ModelParams& truth,
                                std::vector<std::size_t>* matching) {
  const std::size_t J = truth.num_patterns(), JL = learned.num_patterns();
  if (JL < J || learned.num_chains() != truth.num_chains())
    throw DimensionMismatch("recovery: incompatible models");
  std::vector<std::size_t> order(JL);
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t j = 0; j < J; ++j)
      worst = std::max(worst, max_abs_diff(learned.influence[order[j]], truth.influence[j]));
    if (worst < best) {
      best = worst;
      if (matching) matching->assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(J));
    }
    std::reverse(order.begin() + static_cast<std::ptrdiff_t>(J), order.end());
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

Outcome run(const RunConfig& config) {
  Outcome o;
  o.truth = truth(config.length, config.switch_at);
  o.data = sample(o.truth.params, o.truth.spec, config.length, config.seed,
                  std::span<const int>(o.truth.schedule));

  ModelSpec spec = o.truth.spec;
  spec.num_patterns = config.patterns;
  spec.prior_exponent = config.prior_exponent;
  FitConfig fc;
  fc.max_iterations = config.max_iterations;
  fc.tolerance = config.tolerance;
  fc.seed = config.seed ^ 0x5eedf00dULL;
  fc.restarts = config.restarts;
  if (config.track_reference) fc.reference = o.truth.params;
  o.fit = fit(spec, o.data.observations, fc);

  o.recovery_error = influence_recovery_error(o.fit.params, o.truth.params, &o.matching);
  if (config.length > kSwitchWindowHi && config.switch_at == 200)
    o.switching = analyze_switch(o.fit.posteriors.lambda, kSwitchWindowLo, kSwitchWindowHi);
  else
    o.switching = analyze_switch(o.fit.posteriors.lambda, std::max<std::size_t>(2, config.switch_at - 20),
                                 std::min(config.length - 1, config.switch_at + 20));
  return o;
}

bool recovered(const Outcome& o) { return o.recovery_error <= kRecoveryTolerance; }

bool switch_detected(const Outcome& o) {
  return o.switching.crossed && o.switching.max_unused < kUnusedPatternCeiling;
}

ChangePair change_detection_pair(std::uint64_t seed, std::size_t length, std::size_t patterns,
                                 double prior_exponent) {
  const Truth tr = truth(length, length / 2);
  const Sample two = sample(tr.params, tr.spec, length, seed, std::span<const int>(tr.schedule));
  const std::vector<int> flat(length, static_cast<int>(seed % 2));
  const Sample one =
      sample(tr.params, tr.spec, length, seed + 1000, std::span<const int>(flat));

  ModelSpec spec = tr.spec;
  spec.num_patterns = patterns;
  spec.prior_exponent = prior_exponent;
  FitConfig fc;
  fc.seed = seed;
  fc.restarts = 4;
  ChangePair out;
  out.concatenated = detect_structural_change(spec, two.observations, fc).score;
  out.single = detect_structural_change(spec, one.observations, fc).score;
  out.correct = compare_change_scores(out.concatenated, out.single).first == ChangeLabel::Changed;
  return out;
}

}  // namespace influence::toy
