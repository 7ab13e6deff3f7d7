#include "influence/influence.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "influence/error.hpp"
#include "influence/inference.hpp"
#include "influence/io.hpp"
#include "influence/model.hpp"
#include "influence/tasks.hpp"
#include "influence/toy.hpp"

struct infl_observations {
  influence::ObservationSet obs;
  std::vector<std::string> names;
};

struct infl_model {
  influence::ModelSpec spec;
  influence::ModelParams params;
};

struct infl_fit {
  influence::ModelSpec spec;
  influence::FitResult result;
};

namespace {

using namespace influence;

thread_local std::string g_last_error;

infl_status fail(infl_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <typename F>
infl_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return INFL_OK;
  } catch (const InvalidArgument& e) {
    return fail(INFL_INVALID_ARGUMENT, e.what());
  } catch (const DimensionMismatch& e) {
    return fail(INFL_DIMENSION_MISMATCH, e.what());
  } catch (const StochasticityViolation& e) {
    return fail(INFL_STOCHASTICITY_VIOLATION, e.what());
  } catch (const DegenerateEvidence& e) {
    return fail(INFL_DEGENERATE_EVIDENCE, e.what());
  } catch (const NumericalFailure& e) {
    return fail(INFL_NUMERICAL_FAILURE, e.what());
  } catch (const ParseError& e) {
    return fail(INFL_PARSE_ERROR, e.what());
  } catch (const CapacityExceeded& e) {
    return fail(INFL_CAPACITY_EXCEEDED, e.what());
  } catch (const IoError& e) {
    return fail(INFL_IO_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(INFL_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(INFL_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(INFL_INTERNAL_ERROR, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " must not be NULL");
}

ModelSpec to_spec(const infl_spec* s) {
  need(s, "spec");
  ModelSpec spec;
  spec.num_chains = s->num_chains;
  spec.num_states = s->num_states;
  spec.num_patterns = s->num_patterns;
  spec.prior_exponent = s->prior_exponent;
  if (s->emission != INFL_MULTINOMIAL && s->emission != INFL_GAUSSIAN)
    throw InvalidArgument("unknown emission family");
  spec.emission =
      s->emission == INFL_GAUSSIAN ? EmissionFamily::GaussianFixedMeans : EmissionFamily::Multinomial;
  spec.num_symbols = s->num_symbols;
  if (s->num_means) {
    need(s->gaussian_means, "gaussian_means");
    spec.gaussian_means.assign(s->gaussian_means, s->gaussian_means + s->num_means);
  }
  validate_spec(spec);
  return spec;
}

FitConfig to_config(const infl_fit_options* o) {
  FitConfig cfg;
  if (!o) return cfg;
  cfg.max_iterations = o->max_iterations;
  cfg.tolerance = o->tolerance;
  cfg.seed = o->seed;
  cfg.restarts = o->restarts;
  if (o->initial) cfg.initial = o->initial->params;
  if (o->reference) cfg.reference = o->reference->params;
  validate_config(cfg);
  return cfg;
}

DataFormat to_format(infl_format f, const char* path) {
  switch (f) {
    case INFL_FORMAT_CSV:
      return DataFormat::Csv;
    case INFL_FORMAT_JSON:
      return DataFormat::Json;
    case INFL_FORMAT_AUTO:
      return format_from_path(path);
  }
  throw InvalidArgument("unknown data format");
}

EmissionFamily to_family(infl_emission e) {
  if (e == INFL_GAUSSIAN) return EmissionFamily::GaussianFixedMeans;
  if (e == INFL_MULTINOMIAL) return EmissionFamily::Multinomial;
  throw InvalidArgument("unknown emission family");
}

// Fills the model spec's alphabet from the data when left open.
ModelSpec resolved(ModelSpec spec, const ObservationSet& obs) {
  if (spec.emission == EmissionFamily::Multinomial && spec.num_symbols == 0 && obs.is_discrete())
    spec.num_symbols = obs.alphabet_size();
  return spec;
}

}  // namespace

extern "C" {

const char* infl_version(void) { return "0.1.0"; }

const char* infl_last_error(void) { return g_last_error.c_str(); }

const char* infl_status_name(infl_status status) {
  switch (status) {
    case INFL_OK:
      return "ok";
    case INFL_INVALID_ARGUMENT:
      return "invalid argument";
    case INFL_DIMENSION_MISMATCH:
      return "dimension mismatch";
    case INFL_STOCHASTICITY_VIOLATION:
      return "stochasticity violation";
    case INFL_DEGENERATE_EVIDENCE:
      return "degenerate evidence";
    case INFL_NUMERICAL_FAILURE:
      return "numerical failure";
    case INFL_PARSE_ERROR:
      return "parse error";
    case INFL_CAPACITY_EXCEEDED:
      return "capacity exceeded";
    case INFL_IO_ERROR:
      return "i/o error";
    case INFL_INTERNAL_ERROR:
      return "internal error";
  }
  return "unknown status";
}

void infl_spec_init(infl_spec* spec) {
  if (!spec) return;
  *spec = infl_spec{};
  spec->num_chains = 1;
  spec->num_states = 2;
  spec->num_patterns = 1;
  spec->emission = INFL_MULTINOMIAL;
}

void infl_fit_options_init(infl_fit_options* options) {
  if (!options) return;
  const FitConfig d;
  *options = infl_fit_options{};
  options->max_iterations = d.max_iterations;
  options->tolerance = d.tolerance;
  options->seed = d.seed;
  options->restarts = d.restarts;
}

void infl_toy_options_init(infl_toy_options* options) {
  if (!options) return;
  const toy::RunConfig d;
  options->patterns = d.patterns;
  options->prior_exponent = d.prior_exponent;
  options->seed = d.seed;
  options->max_iterations = d.max_iterations;
  options->tolerance = d.tolerance;
  options->restarts = d.restarts;
}

infl_status infl_observations_load(const char* path, infl_format format, infl_emission emission,
                                   infl_observations** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    NamedObservations n = load_observations(path, to_format(format, path), to_family(emission));
    *out = new infl_observations{std::move(n.observations), std::move(n.chain_names)};
  });
}

infl_status infl_observations_save(const infl_observations* obs, const char* path,
                                   infl_format format) {
  return guarded([&] {
    need(obs, "observations");
    need(path, "path");
    save_observations(path, to_format(format, path), obs->obs, obs->names);
  });
}

infl_status infl_observations_from_symbols(size_t chains, size_t length, const int* symbols,
                                           infl_observations** out) {
  return guarded([&] {
    need(symbols, "symbols");
    need(out, "out");
    if (chains == 0 || length == 0) throw InvalidArgument("empty observation set");
    std::vector<std::vector<int>> seq(chains, std::vector<int>(length));
    for (size_t c = 0; c < chains; ++c)
      for (size_t t = 0; t < length; ++t) {
        const int s = symbols[c * length + t];
        if (s < 1) throw InvalidArgument("symbols start at 1");
        seq[c][t] = s - 1;
      }
    *out = new infl_observations{ObservationSet::discrete(std::move(seq)), {}};
  });
}

infl_status infl_observations_from_values(size_t chains, size_t length, const double* values,
                                          infl_observations** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "out");
    if (chains == 0 || length == 0) throw InvalidArgument("empty observation set");
    std::vector<std::vector<double>> seq(chains);
    for (size_t c = 0; c < chains; ++c) {
      seq[c].assign(values + c * length, values + (c + 1) * length);
      for (double v : seq[c])
        if (!std::isfinite(v)) throw InvalidArgument("non-finite observation");
    }
    *out = new infl_observations{ObservationSet::continuous(std::move(seq)), {}};
  });
}

size_t infl_observations_chains(const infl_observations* obs) {
  return obs ? obs->obs.num_chains() : 0;
}

size_t infl_observations_length(const infl_observations* obs) {
  return obs ? obs->obs.length() : 0;
}

int infl_observations_is_discrete(const infl_observations* obs) {
  return obs && obs->obs.is_discrete() ? 1 : 0;
}

infl_status infl_observations_symbols(const infl_observations* obs, int* out) {
  return guarded([&] {
    need(obs, "observations");
    need(out, "out");
    if (!obs->obs.is_discrete()) throw InvalidArgument("observations are not discrete");
    const size_t T = obs->obs.length();
    for (size_t c = 0; c < obs->obs.num_chains(); ++c)
      for (size_t t = 0; t < T; ++t) out[c * T + t] = obs->obs.symbol(c, t) + 1;
  });
}

void infl_observations_free(infl_observations* obs) { delete obs; }

infl_status infl_model_load(const char* path, infl_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    StoredModel m = load_params(path);
    *out = new infl_model{std::move(m.spec), std::move(m.params)};
  });
}

infl_status infl_model_save(const infl_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    save_params(path, model->spec, model->params);
  });
}

infl_status infl_model_random(const infl_spec* spec, uint64_t seed, infl_model** out) {
  return guarded([&] {
    need(out, "out");
    ModelSpec s = to_spec(spec);
    if (s.emission == EmissionFamily::Multinomial && s.num_symbols == 0)
      throw InvalidArgument("a random multinomial model needs num_symbols");
    const std::vector<double> unit(s.num_chains, 1.0);
    ModelParams p = random_params(s, seed, s.num_symbols, unit);
    *out = new infl_model{std::move(s), std::move(p)};
  });
}

infl_status infl_model_spec(const infl_model* model, infl_spec* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const ModelSpec& s = model->spec;
    out->num_chains = s.num_chains;
    out->num_states = s.num_states;
    out->num_patterns = s.num_patterns;
    out->prior_exponent = s.prior_exponent;
    out->emission = s.emission == EmissionFamily::GaussianFixedMeans ? INFL_GAUSSIAN
                                                                     : INFL_MULTINOMIAL;
    out->num_symbols = s.emission == EmissionFamily::Multinomial ? alphabet_size(model->params) : 0;
    out->gaussian_means = s.gaussian_means.empty() ? nullptr : s.gaussian_means.data();
    out->num_means = s.gaussian_means.size();
  });
}

infl_status infl_model_influence(const infl_model* model, size_t pattern, double* out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    if (pattern < 1 || pattern > model->params.num_patterns())
      throw InvalidArgument("pattern out of range");
    const Matrix& R = model->params.influence[pattern - 1];
    std::copy(R.values().begin(), R.values().end(), out);
  });
}

infl_status infl_kl_to_reference(const infl_model* learned, const infl_model* reference,
                                 double* out) {
  return guarded([&] {
    need(learned, "learned");
    need(reference, "reference");
    need(out, "out");
    *out = kl_to_reference(learned->params, reference->params);
  });
}

void infl_model_free(infl_model* model) { delete model; }

infl_status infl_sample(const infl_model* model, size_t length, uint64_t seed, const int* schedule,
                        infl_observations** out, int* patterns_out, int* states_out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    std::vector<int> sched;
    if (schedule) {
      sched.resize(length);
      for (size_t t = 0; t < length; ++t) sched[t] = schedule[t] - 1;
    }
    Sample s = schedule ? sample(model->params, model->spec, length, seed,
                                 std::span<const int>(sched))
                        : sample(model->params, model->spec, length, seed);
    if (patterns_out)
      for (size_t t = 0; t < length; ++t) patterns_out[t] = s.latent.patterns[t] + 1;
    if (states_out)
      for (size_t c = 0; c < s.latent.states.size(); ++c)
        for (size_t t = 0; t < length; ++t) states_out[c * length + t] = s.latent.states[c][t] + 1;
    *out = new infl_observations{std::move(s.observations), {}};
  });
}

infl_status infl_fit_run(const infl_spec* spec, const infl_observations* obs,
                         const infl_fit_options* options, infl_fit** out) {
  return guarded([&] {
    need(obs, "observations");
    need(out, "out");
    const ModelSpec s = resolved(to_spec(spec), obs->obs);
    const FitConfig cfg = to_config(options);
    *out = new infl_fit{s, fit(s, obs->obs, cfg)};
  });
}

int infl_fit_converged(const infl_fit* f) { return f && f->result.report.converged ? 1 : 0; }

size_t infl_fit_iterations(const infl_fit* f) { return f ? f->result.report.iterations_run : 0; }

double infl_fit_log_likelihood(const infl_fit* f) {
  if (!f || f->result.report.log_likelihood.empty()) return NAN;
  return f->result.report.log_likelihood.back();
}

infl_status infl_fit_model(const infl_fit* f, infl_model** out) {
  return guarded([&] {
    need(f, "fit");
    need(out, "out");
    *out = new infl_model{f->spec, f->result.params};
  });
}

infl_status infl_fit_lambda(const infl_fit* f, double* out) {
  return guarded([&] {
    need(f, "fit");
    need(out, "out");
    const auto v = f->result.posteriors.lambda.values();
    std::copy(v.begin(), v.end(), out);
  });
}

infl_status infl_fit_save_params(const infl_fit* f, const char* path) {
  return guarded([&] {
    need(f, "fit");
    need(path, "path");
    save_params(path, f->spec, f->result.params);
  });
}

infl_status infl_fit_save_report(const infl_fit* f, const char* path) {
  return guarded([&] {
    need(f, "fit");
    need(path, "path");
    write_text(path, report_to_json(f->result.report));
  });
}

infl_status infl_fit_save_lambda(const infl_fit* f, const char* path) {
  return guarded([&] {
    need(f, "fit");
    need(path, "path");
    std::ostringstream ss;
    write_lambda_csv(ss, f->result.posteriors.lambda);
    write_text(path, ss.str());
  });
}

void infl_fit_free(infl_fit* f) { delete f; }

infl_status infl_binarize(const infl_observations* raw, double threshold,
                          infl_observations** out) {
  return guarded([&] {
    need(raw, "observations");
    need(out, "out");
    *out = new infl_observations{binarize(raw->obs, threshold), raw->names};
  });
}

infl_status infl_predict_next_speaker(const infl_spec* spec, const infl_observations* history,
                                      size_t current_speaker, const infl_fit_options* options,
                                      size_t* speaker, double* probabilities) {
  return guarded([&] {
    need(history, "history");
    need(speaker, "speaker");
    const ModelSpec s = resolved(to_spec(spec), history->obs);
    size_t cur = current_speaker;
    if (cur == 0) {
      if (!history->obs.is_discrete()) throw InvalidArgument("history must be discrete");
      const int who = lone_speaker(history->obs, history->obs.length() - 1);
      if (who < 0) throw InvalidArgument("no lone speaker at the last step");
      cur = static_cast<size_t>(who) + 1;
    }
    if (cur > s.num_chains) throw InvalidArgument("current speaker out of range");
    const SpeakerPrediction p = predict_next_speaker(s, history->obs, cur - 1, to_config(options));
    *speaker = p.speaker + 1;
    if (probabilities)
      std::copy(p.speaking_probability.begin(), p.speaking_probability.end(), probabilities);
  });
}

infl_status infl_detect_change(const infl_spec* spec, const infl_observations* obs,
                               const infl_fit_options* options, double probe_fraction,
                               double* score, size_t* probe_time) {
  return guarded([&] {
    need(obs, "observations");
    need(score, "score");
    const ModelSpec s = resolved(to_spec(spec), obs->obs);
    const ChangeDetectionResult r =
        detect_structural_change(s, obs->obs, to_config(options), probe_fraction);
    *score = r.score;
    if (probe_time) *probe_time = r.probe_time + 1;
  });
}

int infl_compare_change_scores(double first, double second) {
  return compare_change_scores(first, second).first == ChangeLabel::Changed ? 1 : 2;
}

infl_status infl_turn_taking_eval(size_t num_seeds, uint64_t first_seed,
                                  const infl_fit_options* options, double prior_exponent,
                                  const char* csv_path) {
  return guarded([&] {
    need(csv_path, "csv_path");
    if (num_seeds == 0) throw InvalidArgument("need at least one seed");
    TurnTakingSettings settings;
    if (options) settings.fit = to_config(options);
    settings.prior_exponent = prior_exponent;
    std::vector<std::uint64_t> seeds;
    for (size_t i = 0; i < num_seeds; ++i) seeds.push_back(first_seed + i);
    const TurnTakingTable table =
        evaluate_turn_taking(default_turn_taking_scenarios(), seeds, settings);
    write_text(csv_path, table.to_csv());
  });
}

infl_status infl_eval_toy(const infl_toy_options* options, const char* output_dir,
                          infl_toy_summary* out) {
  return guarded([&] {
    need(options, "options");
    need(out, "out");
    toy::RunConfig rc;
    rc.patterns = options->patterns;
    rc.prior_exponent = options->prior_exponent;
    rc.seed = options->seed;
    rc.max_iterations = options->max_iterations;
    rc.tolerance = options->tolerance;
    rc.restarts = options->restarts;
    const toy::Outcome o = toy::run(rc);

    out->recovery_error = o.recovery_error;
    out->recovered = toy::recovered(o) ? 1 : 0;
    out->switch_detected = toy::switch_detected(o) ? 1 : 0;
    out->crossing = o.switching.crossing;
    out->max_unused = o.switching.max_unused;
    out->converged = o.fit.report.converged ? 1 : 0;
    out->iterations = o.fit.report.iterations_run;
    out->final_kl = o.fit.report.kl.empty() ? NAN : o.fit.report.kl.back();

    if (output_dir) {
      const std::filesystem::path dir(output_dir);
      std::filesystem::create_directories(dir);
      ModelSpec fitted = o.truth.spec;
      fitted.num_patterns = rc.patterns;
      fitted.prior_exponent = rc.prior_exponent;
      save_params(dir / "truth.json", o.truth.spec, o.truth.params);
      save_observations(dir / "observations.csv", DataFormat::Csv, o.data.observations);
      save_params(dir / "params.json", fitted, o.fit.params);
      write_text(dir / "report.json", report_to_json(o.fit.report));
      std::ostringstream ss;
      write_lambda_csv(ss, o.fit.posteriors.lambda);
      write_text(dir / "lambda.csv", ss.str());
    }
  });
}

}  // extern "C"
