#include "influence/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "influence/error.hpp"
#include "influence/random.hpp"

namespace influence {

ObservationSet binarize(const ObservationSet& raw, double threshold) {
  if (raw.is_discrete()) throw InvalidArgument("binarize: expects real-valued sequences");
  if (!std::isfinite(threshold)) throw InvalidArgument("binarize: threshold must be finite");
  std::vector<std::vector<int>> out;
  for (const auto& row : raw.values()) {
    std::vector<int> s(row.size());
    for (std::size_t t = 0; t < row.size(); ++t) s[t] = row[t] > threshold ? kSpeaking : kSilent;
    out.push_back(std::move(s));
  }
  return ObservationSet::discrete(std::move(out));
}

int lone_speaker(const ObservationSet& obs, std::size_t t) {
  int who = -1;
  for (std::size_t c = 0; c < obs.num_chains(); ++c) {
    if (obs.symbol(c, t) != kSpeaking) continue;
    if (who >= 0) return -1;
    who = static_cast<int>(c);
  }
  return who;
}

std::vector<TurnTakingEvent> extract_turn_events(const ObservationSet& obs) {
  if (!obs.is_discrete()) throw InvalidArgument("extract_turn_events: expects symbols");
  std::vector<TurnTakingEvent> events;
  for (std::size_t t = 1; t < obs.length(); ++t) {
    const int before = lone_speaker(obs, t - 1);
    const int after = lone_speaker(obs, t);
    if (before < 0 || after < 0 || before == after) continue;
    events.push_back({t, static_cast<std::size_t>(before), static_cast<std::size_t>(after)});
  }
  return events;
}

SpeakerPrediction predict_with_params(const ModelParams& params, const ModelSpec& spec,
                                      const ObservationSet& history,
                                      std::size_t current_speaker) {
  if (spec.emission != EmissionFamily::Multinomial)
    throw InvalidArgument("predict_next_speaker: needs speaking/silent symbols");
  if (current_speaker >= spec.num_chains)
    throw InvalidArgument("predict_next_speaker: current speaker out of range");
  if (spec.num_chains < 2) throw InvalidArgument("predict_next_speaker: needs two chains");
  const ForwardState fwd = forward_pass(params, spec, history);
  const OneStepPrediction next = predict_next_step(params, fwd);

  SpeakerPrediction out;
  out.speaking_probability.assign(spec.num_chains, 0.0);
  bool first = true;
  for (std::size_t c = 0; c < spec.num_chains; ++c) {
    if (c == current_speaker) continue;
    const double p = predictive_symbol_probability(params, next, c, kSpeaking);
    out.speaking_probability[c] = p;
    if (first || p > out.speaking_probability[out.speaker]) out.speaker = c;
    first = false;
  }
  return out;
}

SpeakerPrediction predict_next_speaker(const ModelSpec& spec, const ObservationSet& history,
                                       std::size_t current_speaker, const FitConfig& config,
                                       std::size_t min_window) {
  if (history.length() < min_window)
    throw InvalidArgument("predict_next_speaker: history shorter than " +
                          std::to_string(min_window) + " steps");
  FitResult fitted = fit(spec, history, config);
  SpeakerPrediction out = predict_with_params(fitted.params, spec, history, current_speaker);
  out.fit = std::move(fitted);
  return out;
}

std::size_t nn_baseline_predict(const std::vector<TurnTakingEvent>& past,
                                std::size_t current_speaker, std::size_t num_chains) {
  if (num_chains < 2 || current_speaker >= num_chains)
    throw InvalidArgument("nn_baseline_predict: bad speaker or chain count");
  std::vector<std::size_t> counts(num_chains, 0);
  for (const auto& e : past)
    if (e.previous_speaker == current_speaker && e.next_speaker < num_chains)
      ++counts[e.next_speaker];
  std::size_t best = current_speaker == 0 ? 1 : 0;
  for (std::size_t c = 0; c < num_chains; ++c)
    if (c != current_speaker && counts[c] > counts[best]) best = c;
  return best;
}

Matrix expected_influence(const ModelParams& params, const Posteriors& post, std::size_t t) {
  const std::size_t C = params.num_chains();
  Matrix m(C, C);
  for (std::size_t j = 0; j < params.num_patterns(); ++j) {
    const double w = post.lambda(t, j);
    for (std::size_t a = 0; a < C; ++a)
      for (std::size_t b = 0; b < C; ++b) m(a, b) += w * params.influence[j](a, b);
  }
  return m;
}

ChangeDetectionResult detect_structural_change(const ModelSpec& spec, const ObservationSet& obs,
                                               const FitConfig& config, double probe_fraction) {
  if (!(probe_fraction > 0.0 && probe_fraction <= 1.0))
    throw InvalidArgument("detect: probe fraction must lie in (0, 1]");
  const FitResult fitted = fit(spec, obs, config);
  const std::size_t T = obs.length();
  ChangeDetectionResult out;
  const auto probe = static_cast<std::size_t>(std::ceil(probe_fraction * static_cast<double>(T)));
  out.probe_time = std::clamp<std::size_t>(probe, 1, T) - 1;
  out.first = expected_influence(fitted.params, fitted.posteriors, 0);
  out.probe = expected_influence(fitted.params, fitted.posteriors, out.probe_time);
  if (spec.num_patterns == 1) return out;
  double ss = 0.0;
  for (std::size_t a = 0; a < out.first.rows(); ++a)
    for (std::size_t b = 0; b < out.first.cols(); ++b) {
      const double d = out.probe(a, b) - out.first(a, b);
      ss += d * d;
    }
  out.score = std::sqrt(ss);
  return out;
}

std::pair<ChangeLabel, ChangeLabel> compare_change_scores(double first, double second) {
  if (first > second) return {ChangeLabel::Changed, ChangeLabel::Unchanged};
  return {ChangeLabel::Unchanged, ChangeLabel::Changed};
}

Discussion generate_discussion(const DiscussionConfig& cfg) {
  const std::size_t C = cfg.num_chains, T = cfg.length;
  if (C < 3) throw InvalidArgument("discussion: needs at least three chains");
  if (T < 2) throw InvalidArgument("discussion: length must be at least 2");
  if (!(cfg.turn_end_prob > 0.0 && cfg.turn_end_prob <= 1.0))
    throw InvalidArgument("discussion: turn end probability must lie in (0, 1]");
  if (!(cfg.successor_prob >= 0.0 && cfg.successor_prob <= 1.0) ||
      !(cfg.noise >= 0.0 && cfg.noise < 1.0))
    throw InvalidArgument("discussion: probabilities must lie in [0, 1]");

  Rng rng(cfg.seed);
  Discussion d;
  d.speaker.resize(T);
  std::size_t cur = rng.index(C);
  std::size_t t = 0;
  while (t < T) {
    d.speaker[t++] = cur;
    while (t < T && rng.uniform() >= cfg.turn_end_prob) d.speaker[t++] = cur;
    if (t >= T) break;
    const bool reversed = cfg.switch_at > 0 && t >= cfg.switch_at;
    const std::size_t succ = reversed ? (cur + C - 1) % C : (cur + 1) % C;
    if (rng.uniform() < cfg.successor_prob) {
      cur = succ;
    } else {
      std::size_t pick = rng.index(C - 2);
      for (std::size_t c = 0; c < C; ++c) {
        if (c == cur || c == succ) continue;
        if (pick-- == 0) {
          cur = c;
          break;
        }
      }
    }
  }

  std::vector<std::vector<int>> sym(C, std::vector<int>(T, kSilent));
  for (std::size_t s = 0; s < T; ++s)
    for (std::size_t c = 0; c < C; ++c) {
      const bool blip = rng.uniform() < cfg.noise;
      if (c == d.speaker[s] || blip) sym[c][s] = kSpeaking;
    }
  d.observations = ObservationSet::discrete(std::move(sym));
  return d;
}

namespace {

std::vector<TurnTakingEvent> scored_events(const std::vector<TurnTakingEvent>& all,
                                           const TurnTakingScenario& sc, std::size_t min_window) {
  std::vector<TurnTakingEvent> out;
  const std::size_t from = std::max(sc.eval_from, min_window);
  for (const auto& e : all) {
    if (e.t < from) continue;
    if (out.size() == sc.events) break;
    out.push_back(e);
  }
  return out;
}

double fraction(std::size_t hit, std::size_t n) {
  return n ? static_cast<double>(hit) / static_cast<double>(n) : 0.0;
}

}  // namespace

double score_sample(const Discussion& d, const TurnTakingScenario& sc, std::size_t patterns,
                    const TurnTakingSettings& settings, std::uint64_t seed) {
  const auto events = scored_events(extract_turn_events(d.observations), sc, settings.min_window);
  ModelSpec spec;
  spec.num_chains = d.observations.num_chains();
  spec.num_states = settings.num_states;
  spec.num_patterns = patterns;
  spec.prior_exponent = settings.prior_exponent;
  spec.num_symbols = 2;

  FitConfig cfg = settings.fit;
  cfg.seed = seed;
  std::optional<ModelParams> warm;
  std::size_t hit = 0;
  for (const auto& e : events) {
    const ObservationSet history = d.observations.prefix(e.t);
    if (warm) {
      cfg.initial = warm;
      cfg.max_iterations = settings.refit_iterations;
    }
    const SpeakerPrediction p =
        predict_next_speaker(spec, history, e.previous_speaker, cfg, settings.min_window);
    warm = p.fit.params;
    if (p.speaker == e.next_speaker) ++hit;
  }
  return fraction(hit, events.size());
}

double score_sample_nn(const Discussion& d, const TurnTakingScenario& sc) {
  const auto all = extract_turn_events(d.observations);
  const auto events = scored_events(all, sc, 0);
  std::size_t hit = 0;
  for (const auto& e : events) {
    std::vector<TurnTakingEvent> past;
    for (const auto& p : all)
      if (p.t < e.t) past.push_back(p);
    if (nn_baseline_predict(past, e.previous_speaker, d.observations.num_chains()) ==
        e.next_speaker)
      ++hit;
  }
  return fraction(hit, events.size());
}

double TurnTakingTable::median(std::size_t method, std::size_t scenario) const {
  std::vector<double> v = accuracy.at(method).at(scenario);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string TurnTakingTable::to_csv() const {
  std::ostringstream out;
  out << "method";
  for (const auto& s : scenarios) out << ',' << s;
  out << '\n';
  char buf[32];
  for (std::size_t m = 0; m < methods.size(); ++m) {
    out << methods[m];
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%.4f", median(m, s));
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

TurnTakingTable evaluate_turn_taking(const std::vector<TurnTakingScenario>& scenarios,
                                     const std::vector<std::uint64_t>& seeds,
                                     const TurnTakingSettings& settings) {
  TurnTakingTable table;
  for (std::size_t J : settings.pattern_counts) table.methods.push_back("J=" + std::to_string(J));
  table.methods.push_back("NN");
  for (const auto& s : scenarios) table.scenarios.push_back(s.name);
  table.accuracy.assign(table.methods.size(),
                        std::vector<std::vector<double>>(scenarios.size()));

  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (std::uint64_t seed : seeds) {
      DiscussionConfig dc = scenarios[s].discussion;
      dc.seed = seed;
      const Discussion d = generate_discussion(dc);
      for (std::size_t m = 0; m < settings.pattern_counts.size(); ++m)
        table.accuracy[m][s].push_back(score_sample(d, scenarios[s], settings.pattern_counts[m],
                                                    settings, seed * 7919 + m));
      table.accuracy.back()[s].push_back(score_sample_nn(d, scenarios[s]));
    }
  return table;
}

std::vector<TurnTakingScenario> default_turn_taking_scenarios() {
  TurnTakingScenario simple;
  simple.name = "simple";
  simple.discussion.length = 420;
  simple.eval_from = 320;

  TurnTakingScenario complex = simple;
  complex.name = "complex";
  complex.discussion.switch_at = 240;
  return {simple, complex};
}

}  // namespace influence
