#include "influence/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "influence/error.hpp"
#include "influence/random.hpp"

namespace influence {

double ModelSpec::sticky_pseudocount() const { return std::pow(10.0, prior_exponent) - 1.0; }

void validate_spec(const ModelSpec& spec) {
  if (spec.num_chains < 1) throw InvalidArgument("spec: num_chains must be >= 1");
  if (spec.num_states < 2) throw InvalidArgument("spec: num_states must be >= 2");
  if (spec.num_patterns < 1) throw InvalidArgument("spec: num_patterns must be >= 1");
  if (!(spec.prior_exponent >= 0.0) || !std::isfinite(spec.prior_exponent))
    throw InvalidArgument("spec: prior_exponent must be finite and >= 0");
  if (spec.emission == EmissionFamily::GaussianFixedMeans) {
    if (spec.gaussian_means.size() != spec.num_states)
      throw InvalidArgument("spec: gaussian means must have exactly num_states entries");
    for (std::size_t s = 1; s < spec.gaussian_means.size(); ++s)
      if (!(spec.gaussian_means[s] > spec.gaussian_means[s - 1]))
        throw InvalidArgument("spec: gaussian means must be strictly increasing");
  }
}

// ---------------------------------------------------------------------------
// ObservationSet

ObservationSet ObservationSet::discrete(std::vector<std::vector<int>> sequences) {
  if (sequences.empty()) throw InvalidArgument("observations: no chains");
  const std::size_t n = sequences.front().size();
  if (n == 0) throw InvalidArgument("observations: empty sequence");
  for (std::size_t c = 0; c < sequences.size(); ++c) {
    if (sequences[c].size() != n)
      throw DimensionMismatch("observations: chain " + std::to_string(c + 1) +
                              " has a different length");
    for (int x : sequences[c])
      if (x < 0) throw InvalidArgument("observations: negative symbol");
  }
  ObservationSet o;
  o.symbols_ = std::move(sequences);
  return o;
}

ObservationSet ObservationSet::continuous(std::vector<std::vector<double>> sequences) {
  if (sequences.empty()) throw InvalidArgument("observations: no chains");
  const std::size_t n = sequences.front().size();
  if (n == 0) throw InvalidArgument("observations: empty sequence");
  for (std::size_t c = 0; c < sequences.size(); ++c) {
    if (sequences[c].size() != n)
      throw DimensionMismatch("observations: chain " + std::to_string(c + 1) +
                              " has a different length");
    for (double x : sequences[c])
      if (!std::isfinite(x)) throw InvalidArgument("observations: non-finite value");
  }
  ObservationSet o;
  o.values_ = std::move(sequences);
  return o;
}

std::size_t ObservationSet::length() const {
  if (is_discrete()) return symbols_.front().size();
  return values_.empty() ? 0 : values_.front().size();
}

std::size_t ObservationSet::alphabet_size() const {
  int k = -1;
  for (const auto& seq : symbols_)
    for (int x : seq) k = std::max(k, x);
  return static_cast<std::size_t>(k + 1);
}

ObservationSet ObservationSet::prefix(std::size_t n) const {
  if (n == 0 || n > length()) throw InvalidArgument("observations: prefix length out of range");
  ObservationSet o;
  for (const auto& seq : symbols_) o.symbols_.emplace_back(seq.begin(), seq.begin() + n);
  for (const auto& seq : values_) o.values_.emplace_back(seq.begin(), seq.begin() + n);
  return o;
}

ObservationSet ObservationSet::concat(const ObservationSet& a, const ObservationSet& b) {
  if (a.is_discrete() != b.is_discrete() || a.num_chains() != b.num_chains())
    throw DimensionMismatch("observations: cannot concatenate differently shaped sets");
  ObservationSet o = a;
  for (std::size_t c = 0; c < o.symbols_.size(); ++c)
    o.symbols_[c].insert(o.symbols_[c].end(), b.symbols_[c].begin(), b.symbols_[c].end());
  for (std::size_t c = 0; c < o.values_.size(); ++c)
    o.values_[c].insert(o.values_[c].end(), b.values_[c].begin(), b.values_[c].end());
  return o;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationResult::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationResult::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i].message;
  }
  return out.str();
}

namespace {

class Checker {
 public:
  explicit Checker(ValidationResult& result) : result_(result) {}

  bool shape(const std::string& name, const Matrix& m, std::size_t rows, std::size_t cols) {
    if (m.rows() == rows && m.cols() == cols) return true;
    std::ostringstream msg;
    msg << name << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x"
        << m.cols();
    result_.violations.push_back({ViolationKind::Dimension, name, 0, 0.0, msg.str()});
    return false;
  }

  bool count(const std::string& name, std::size_t got, std::size_t expected) {
    if (got == expected) return true;
    std::ostringstream msg;
    msg << name << ": expected " << expected << " entries, got " << got;
    result_.violations.push_back({ViolationKind::Dimension, name, 0, 0.0, msg.str()});
    return false;
  }

  void row(const std::string& name, std::size_t r, std::span<const double> values) {
    double s = 0.0;
    for (double x : values) {
      if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream msg;
        msg << name << " row " << r + 1 << ": entry " << x << " outside [0,1]";
        result_.violations.push_back({ViolationKind::Range, name, r, x, msg.str()});
        return;
      }
      s += x;
    }
    if (std::abs(s - 1.0) > kStochasticTolerance) {
      std::ostringstream msg;
      msg << name << " row " << r + 1 << ": sums to " << s;
      result_.violations.push_back({ViolationKind::Stochasticity, name, r, s, msg.str()});
    }
  }

  void stochastic(const std::string& name, const Matrix& m, std::size_t rows, std::size_t cols) {
    if (!shape(name, m, rows, cols)) return;
    for (std::size_t r = 0; r < m.rows(); ++r) row(name, r, m.row(r));
  }

 private:
  ValidationResult& result_;
};

std::string indexed(const char* base, std::size_t i) { return base + std::to_string(i + 1); }

}  // namespace

ValidationResult validate_params(const ModelParams& p, const ModelSpec& spec) {
  ValidationResult result;
  Checker check(result);
  const std::size_t C = spec.num_chains, S = spec.num_states, J = spec.num_patterns;

  if (check.count("R", p.influence.size(), J))
    for (std::size_t j = 0; j < J; ++j)
      check.stochastic("R(" + std::to_string(j + 1) + ")", p.influence[j], C, C);
  if (check.count("E", p.self.size(), C))
    for (std::size_t c = 0; c < C; ++c) check.stochastic(indexed("E^", c), p.self[c], S, S);
  if (check.count("F", p.cross.size(), C))
    for (std::size_t c = 0; c < C; ++c) check.stochastic(indexed("F^", c), p.cross[c], S, S);
  check.stochastic("V", p.pattern_transition, J, J);

  if (check.count("initial_state", p.initial_state.size(), C))
    for (std::size_t c = 0; c < C; ++c)
      if (check.count(indexed("initial_state ", c), p.initial_state[c].size(), S))
        check.row(indexed("initial_state ", c), 0, p.initial_state[c]);
  if (check.count("initial_pattern", p.initial_pattern.size(), J))
    check.row("initial_pattern", 0, p.initial_pattern);

  const Emissions& em = p.emissions;
  if (spec.emission == EmissionFamily::Multinomial) {
    if (check.count("emission tables", em.tables.size(), C)) {
      std::size_t K = spec.num_symbols ? spec.num_symbols
                                       : (em.tables.empty() ? 0 : em.tables.front().cols());
      if (K == 0)
        result.violations.push_back(
            {ViolationKind::Dimension, "emission tables", 0, 0.0, "emission tables: zero symbols"});
      for (std::size_t c = 0; c < C; ++c)
        check.stochastic(indexed("B^", c), em.tables[c], S, K);
    }
  } else {
    if (check.count("gaussian means", em.means.size(), S) && em.means != spec.gaussian_means)
      result.violations.push_back({ViolationKind::Dimension, "gaussian means", 0, 0.0,
                                   "gaussian means differ from the spec's fixed means"});
    if (check.count("gaussian variances", em.variances.size(), C))
      for (std::size_t c = 0; c < C; ++c)
        if (!(em.variances[c] > 0.0) || !std::isfinite(em.variances[c]))
          result.violations.push_back({ViolationKind::Range, indexed("variance ", c), c,
                                       em.variances[c],
                                       indexed("variance ", c) + ": must be positive"});
  }
  return result;
}

void require_valid(const ModelParams& params, const ModelSpec& spec) {
  validate_spec(spec);
  ValidationResult r = validate_params(params, spec);
  if (r.ok()) return;
  if (r.has(ViolationKind::Dimension)) throw DimensionMismatch("invalid params: " + r.summary());
  throw StochasticityViolation("invalid params: " + r.summary());
}

void require_compatible(const ModelParams& params, const ModelSpec& spec,
                        const ObservationSet& obs) {
  if (obs.num_chains() != spec.num_chains)
    throw DimensionMismatch("observations have " + std::to_string(obs.num_chains()) +
                            " chains, model has " + std::to_string(spec.num_chains));
  const bool discrete = spec.emission == EmissionFamily::Multinomial;
  if (obs.is_discrete() != discrete)
    throw InvalidArgument(discrete ? "multinomial model needs discrete observations"
                                   : "gaussian model needs real-valued observations");
  if (discrete && obs.alphabet_size() > alphabet_size(params))
    throw InvalidArgument("observation symbol " + std::to_string(obs.alphabet_size()) +
                          " outside the model alphabet of " +
                          std::to_string(alphabet_size(params)));
}

std::size_t alphabet_size(const ModelParams& params) {
  return params.emissions.tables.empty() ? 0 : params.emissions.tables.front().cols();
}

// ---------------------------------------------------------------------------

std::vector<double> transition_distribution(const ModelParams& params, std::size_t pattern,
                                            std::size_t chain,
                                            std::span<const int> previous_states) {
  const std::size_t C = params.num_chains(), S = params.num_states();
  if (pattern >= params.num_patterns() || chain >= C || previous_states.size() != C)
    throw InvalidArgument("transition_distribution: index out of range");
  std::vector<double> out(S, 0.0);
  const Matrix& R = params.influence[pattern];
  for (std::size_t parent = 0; parent < C; ++parent) {
    const int prev = previous_states[parent];
    if (prev < 0 || static_cast<std::size_t>(prev) >= S)
      throw InvalidArgument("transition_distribution: state out of range");
    const double w = R(chain, parent);
    if (w == 0.0) continue;
    auto row = params.parent_matrix(parent, chain).row(prev);
    for (std::size_t s = 0; s < S; ++s) out[s] += w * row[s];
  }
  return out;
}

void emission_likelihoods(const ModelParams& params, const ObservationSet& obs,
                          std::size_t chain, std::size_t t, std::span<double> out) {
  const Emissions& em = params.emissions;
  if (obs.is_discrete()) {
    const Matrix& B = em.tables[chain];
    const auto k = static_cast<std::size_t>(obs.symbol(chain, t));
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = B(s, k);
  } else {
    const double var = em.variances[chain];
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * var);
    const double x = obs.value(chain, t);
    for (std::size_t s = 0; s < out.size(); ++s) {
      const double d = x - em.means[s];
      out[s] = norm * std::exp(-0.5 * d * d / var);
    }
  }
}

Sample sample(const ModelParams& params, const ModelSpec& spec, std::size_t length,
              std::uint64_t seed, std::optional<std::span<const int>> schedule) {
  require_valid(params, spec);
  if (length < 2) throw InvalidArgument("sample: length must be >= 2");
  const std::size_t C = spec.num_chains, J = spec.num_patterns;
  if (schedule) {
    if (schedule->size() != length) throw InvalidArgument("sample: schedule length != T");
    for (int r : *schedule)
      if (r < 0 || static_cast<std::size_t>(r) >= J)
        throw InvalidArgument("sample: schedule value outside 1..J");
  }

  Rng rng(seed);
  LatentTrajectory lat;
  lat.patterns.resize(length);
  lat.states.assign(C, std::vector<int>(length));

  std::vector<int> prev(C);
  for (std::size_t t = 0; t < length; ++t) {
    if (schedule)
      lat.patterns[t] = (*schedule)[t];
    else if (t == 0)
      lat.patterns[t] = static_cast<int>(rng.categorical(params.initial_pattern));
    else
      lat.patterns[t] = static_cast<int>(
          rng.categorical(params.pattern_transition.row(lat.patterns[t - 1])));

    for (std::size_t c = 0; c < C; ++c) {
      if (t == 0) {
        lat.states[c][t] = static_cast<int>(rng.categorical(params.initial_state[c]));
      } else {
        auto dist = transition_distribution(params, lat.patterns[t], c, prev);
        lat.states[c][t] = static_cast<int>(rng.categorical(dist));
      }
    }
    for (std::size_t c = 0; c < C; ++c) prev[c] = lat.states[c][t];
  }

  Sample out;
  if (spec.emission == EmissionFamily::Multinomial) {
    std::vector<std::vector<int>> obs(C, std::vector<int>(length));
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t c = 0; c < C; ++c)
        obs[c][t] = static_cast<int>(
            rng.categorical(params.emissions.tables[c].row(lat.states[c][t])));
    out.observations = ObservationSet::discrete(std::move(obs));
  } else {
    std::vector<std::vector<double>> obs(C, std::vector<double>(length));
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t c = 0; c < C; ++c)
        obs[c][t] = params.emissions.means[lat.states[c][t]] +
                    std::sqrt(params.emissions.variances[c]) * rng.normal();
    out.observations = ObservationSet::continuous(std::move(obs));
  }
  out.latent = std::move(lat);
  return out;
}

namespace {

Matrix random_stochastic(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto v = rng.dirichlet1(cols);
    std::copy(v.begin(), v.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

ModelParams random_params(const ModelSpec& spec, std::uint64_t seed, std::size_t alphabet,
                          std::span<const double> variances) {
  validate_spec(spec);
  const std::size_t C = spec.num_chains, S = spec.num_states, J = spec.num_patterns;
  Rng rng(seed);
  ModelParams p;
  for (std::size_t j = 0; j < J; ++j) p.influence.push_back(random_stochastic(rng, C, C));
  for (std::size_t c = 0; c < C; ++c) p.self.push_back(random_stochastic(rng, S, S));
  for (std::size_t c = 0; c < C; ++c) p.cross.push_back(random_stochastic(rng, S, S));
  p.pattern_transition = random_stochastic(rng, J, J);
  for (std::size_t c = 0; c < C; ++c) p.initial_state.push_back(rng.dirichlet1(S));
  p.initial_pattern = rng.dirichlet1(J);
  if (spec.emission == EmissionFamily::Multinomial) {
    const std::size_t K = spec.num_symbols ? spec.num_symbols : alphabet;
    if (K == 0) throw InvalidArgument("random_params: unknown alphabet size");
    for (std::size_t c = 0; c < C; ++c) p.emissions.tables.push_back(random_stochastic(rng, S, K));
  } else {
    p.emissions.means = spec.gaussian_means;
    if (variances.empty())
      p.emissions.variances.assign(C, 1.0);
    else if (variances.size() != C)
      throw DimensionMismatch("random_params: need one variance per chain");
    else
      p.emissions.variances.assign(variances.begin(), variances.end());
  }
  return p;
}

}  // namespace influence
