#include <cmath>
#include <limits>

#include "influence/error.hpp"
#include "influence/inference.hpp"

namespace influence {

void validate_config(const FitConfig& config) {
  if (config.max_iterations < 1) throw InvalidArgument("fit: max_iterations must be >= 1");
  if (!(config.tolerance > 0.0)) throw InvalidArgument("fit: tolerance must be > 0");
  if (config.restarts < 1) throw InvalidArgument("fit: restarts must be >= 1");
}

namespace {

double params_delta(const ModelParams& a, const ModelParams& b) {
  double d = max_abs_diff(a.pattern_transition, b.pattern_transition);
  for (std::size_t j = 0; j < a.influence.size(); ++j)
    d = std::max(d, max_abs_diff(a.influence[j], b.influence[j]));
  for (std::size_t c = 0; c < a.self.size(); ++c) {
    d = std::max(d, max_abs_diff(a.self[c], b.self[c]));
    d = std::max(d, max_abs_diff(a.cross[c], b.cross[c]));
  }
  for (std::size_t c = 0; c < a.emissions.tables.size(); ++c)
    d = std::max(d, max_abs_diff(a.emissions.tables[c], b.emissions.tables[c]));
  for (std::size_t c = 0; c < a.emissions.variances.size(); ++c)
    d = std::max(d, std::abs(a.emissions.variances[c] - b.emissions.variances[c]));
  return d;
}

std::vector<double> chain_variances(const ObservationSet& obs) {
  std::vector<double> out;
  for (const auto& seq : obs.values()) {
    double mean = 0.0;
    for (double x : seq) mean += x;
    mean /= static_cast<double>(seq.size());
    double var = 0.0;
    for (double x : seq) var += (x - mean) * (x - mean);
    var /= static_cast<double>(seq.size());
    if (!std::isfinite(var)) throw NumericalFailure("fit: data variance overflows");
    out.push_back(var > 0.0 ? var : 1.0);
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t k) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ModelParams initial_params(const ModelSpec& spec, const ObservationSet& obs, std::uint64_t seed) {
  const std::size_t K = spec.num_symbols ? spec.num_symbols : obs.alphabet_size();
  const auto vars = obs.is_discrete() ? std::vector<double>{} : chain_variances(obs);
  return random_params(spec, seed, K, vars);
}

double checked_loglik(double ll, std::size_t iteration) {
  if (!std::isfinite(ll))
    throw NumericalFailure("fit: non-finite likelihood proxy at iteration " +
                           std::to_string(iteration));
  return ll;
}

}  // namespace

FitResult fit(const ModelSpec& spec, const ObservationSet& obs, const FitConfig& config) {
  validate_spec(spec);
  validate_config(config);
  if (obs.length() < 2) throw InvalidArgument("fit: need at least two time steps");

  ModelParams params;
  if (config.initial) {
    params = *config.initial;
    require_valid(params, spec);
  } else if (config.restarts == 1) {
    params = initial_params(spec, obs, config.seed);
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < config.restarts; ++r) {
      ModelParams cur = initial_params(spec, obs, mix_seed(config.seed, r));
      double ll = 0.0;
      for (std::size_t it = 0; it < config.warmup_iterations; ++it) {
        Posteriors post = e_step(cur, spec, obs, &ll);
        cur = m_step(post, obs, spec, cur);
      }
      e_step(cur, spec, obs, &ll);
      if (std::isfinite(ll) && ll > best) {
        best = ll;
        params = std::move(cur);
      }
    }
    if (params.influence.empty())
      throw NumericalFailure("fit: every restart produced a non-finite likelihood");
  }
  require_compatible(params, spec, obs);
  if (config.reference) {
    ModelSpec ref_spec = spec;
    ref_spec.num_patterns = config.reference->num_patterns();
    require_valid(*config.reference, ref_spec);
  }

  FitResult result;
  FitReport& report = result.report;
  double prev_ll = 0.0;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    double ll = 0.0;
    Posteriors post = e_step(params, spec, obs, &ll);
    checked_loglik(ll, it);
    ModelParams next = m_step(post, obs, spec, params);
    const double delta = params_delta(params, next);
    params = std::move(next);

    report.iterations_run = it;
    report.log_likelihood.push_back(ll);
    report.max_delta.push_back(delta);
    if (config.reference) report.kl.push_back(kl_to_reference(params, *config.reference));

    const bool small_step = delta < config.tolerance;
    const bool flat =
        it > 1 && std::abs(ll - prev_ll) < config.tolerance * std::max(std::abs(prev_ll), 1e-300);
    prev_ll = ll;
    if (small_step || flat) {
      report.converged = true;
      break;
    }
  }

  double ll = 0.0;
  result.posteriors = e_step(params, spec, obs, &ll);
  checked_loglik(ll, report.iterations_run + 1);
  result.params = std::move(params);
  return result;
}

}  // namespace influence
