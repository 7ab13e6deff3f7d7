// Command-line front end. Talks to the library only through influence.h.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "influence/influence.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitInternal = 1;

struct Failure {
  int code;
  std::string message;
};

int exit_code(infl_status s) {
  switch (s) {
    case INFL_OK:
      return kExitOk;
    case INFL_NUMERICAL_FAILURE:
      return kExitNumerical;
    case INFL_INTERNAL_ERROR:
      return kExitInternal;
    default:
      return kExitInput;
  }
}

void check(infl_status s, const std::string& what) {
  if (s != INFL_OK)
    throw Failure{exit_code(s), what + ": " + infl_status_name(s) + ": " + infl_last_error()};
}

void input_error(const std::string& msg) { throw Failure{kExitInput, msg}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Obs = std::unique_ptr<infl_observations, Deleter<infl_observations, infl_observations_free>>;
using Model = std::unique_ptr<infl_model, Deleter<infl_model, infl_model_free>>;
using Fit = std::unique_ptr<infl_fit, Deleter<infl_fit, infl_fit_free>>;

struct Options {
  std::string command;
  std::string input;
  std::string output_dir = ".";
  std::size_t chains = 0;
  std::size_t states = 2;
  std::size_t patterns = 0;
  double prior_exponent = 1.0;
  std::string emission = "multinomial";
  std::string gaussian_means;
  std::size_t max_iters = 200;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  std::string track_reference;
  double probe_fraction = 0.8;
  std::size_t length = 600;
  std::size_t restarts = 1;
  std::size_t seeds = 20;
};

std::vector<double> parse_means(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" ", used) != std::string::npos)
        throw std::invalid_argument(item);
    } catch (const std::exception&) {
      input_error("--gaussian-means: cannot parse '" + item + "'");
    }
  }
  return out;
}

infl_emission emission(const Options& o) {
  return o.emission == "gaussian" ? INFL_GAUSSIAN : INFL_MULTINOMIAL;
}

Obs load_obs(const std::string& path, const Options& o) {
  if (path.empty()) input_error("--input is required for " + o.command);
  infl_observations* raw = nullptr;
  check(infl_observations_load(path.c_str(), INFL_FORMAT_AUTO, emission(o), &raw), path);
  Obs obs(raw);
  if (o.chains && infl_observations_chains(obs.get()) != o.chains)
    input_error(path + ": has " + std::to_string(infl_observations_chains(obs.get())) +
                " chains, --chains says " + std::to_string(o.chains));
  return obs;
}

Model load_model(const std::string& path) {
  infl_model* raw = nullptr;
  check(infl_model_load(path.c_str(), &raw), path);
  return Model(raw);
}

// means must outlive the returned spec.
infl_spec make_spec(const Options& o, std::size_t chains, std::size_t patterns,
                    const std::vector<double>& means) {
  infl_spec s;
  infl_spec_init(&s);
  s.num_chains = chains;
  s.num_states = o.states;
  s.num_patterns = patterns;
  s.prior_exponent = o.prior_exponent;
  s.emission = emission(o);
  s.gaussian_means = means.empty() ? nullptr : means.data();
  s.num_means = means.size();
  return s;
}

infl_fit_options make_fit_options(const Options& o) {
  infl_fit_options f;
  infl_fit_options_init(&f);
  f.max_iterations = o.max_iters;
  f.tolerance = o.tol;
  f.seed = o.seed;
  f.restarts = o.restarts;
  return f;
}

fs::path out_path(const Options& o, const std::string& name) {
  std::error_code ec;
  fs::create_directories(o.output_dir, ec);
  if (ec) input_error("cannot create " + o.output_dir + ": " + ec.message());
  return fs::path(o.output_dir) / name;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw Failure{kExitInput, "cannot write " + path.string()};
  out << j.dump(1) << '\n';
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void print_influence(const infl_model* m, std::size_t patterns, std::size_t chains) {
  std::vector<double> R(chains * chains);
  for (std::size_t j = 1; j <= patterns; ++j) {
    check(infl_model_influence(m, j, R.data()), "influence");
    std::cout << "R(" << j << ")\n";
    for (std::size_t a = 0; a < chains; ++a) {
      std::cout << " ";
      for (std::size_t b = 0; b < chains; ++b) std::cout << ' ' << fmt2(R[a * chains + b]);
      std::cout << '\n';
    }
  }
}

int run_fit(const Options& o) {
  Obs obs = load_obs(o.input, o);
  const std::vector<double> means = parse_means(o.gaussian_means);
  const infl_spec spec =
      make_spec(o, infl_observations_chains(obs.get()), o.patterns ? o.patterns : 1, means);
  infl_fit_options fo = make_fit_options(o);
  Model reference;
  if (!o.track_reference.empty()) {
    reference = load_model(o.track_reference);
    fo.reference = reference.get();
  }
  infl_fit* raw = nullptr;
  check(infl_fit_run(&spec, obs.get(), &fo, &raw), "fit");
  Fit fit(raw);
  check(infl_fit_save_params(fit.get(), out_path(o, "params.json").c_str()), "params.json");
  check(infl_fit_save_report(fit.get(), out_path(o, "report.json").c_str()), "report.json");
  check(infl_fit_save_lambda(fit.get(), out_path(o, "lambda.csv").c_str()), "lambda.csv");
  const bool converged = infl_fit_converged(fit.get());
  std::cout << (converged ? "converged" : "not converged") << " after "
            << infl_fit_iterations(fit.get()) << " iterations, log-likelihood proxy "
            << infl_fit_log_likelihood(fit.get()) << '\n';
  return converged ? kExitOk : kExitNotConverged;
}

int run_sample(const Options& o) {
  if (o.input.empty()) input_error("--input (params JSON) is required for sample");
  Model model = load_model(o.input);
  infl_spec spec;
  check(infl_model_spec(model.get(), &spec), "spec");
  std::vector<int> patterns(o.length), states(o.length * spec.num_chains);
  infl_observations* raw = nullptr;
  check(infl_sample(model.get(), o.length, o.seed, nullptr, &raw, patterns.data(), states.data()),
        "sample");
  Obs obs(raw);
  check(infl_observations_save(obs.get(), out_path(o, "observations.csv").c_str(), INFL_FORMAT_CSV),
        "observations.csv");
  std::ofstream latent(out_path(o, "latent.csv"));
  latent << "t,pattern";
  for (std::size_t c = 0; c < spec.num_chains; ++c) latent << ",chain" << c + 1;
  latent << '\n';
  for (std::size_t t = 0; t < o.length; ++t) {
    latent << t + 1 << ',' << patterns[t];
    for (std::size_t c = 0; c < spec.num_chains; ++c) latent << ',' << states[c * o.length + t];
    latent << '\n';
  }
  std::cout << "sampled " << o.length << " steps of " << spec.num_chains << " chains\n";
  return kExitOk;
}

int run_predict(const Options& o) {
  const infl_fit_options fo = make_fit_options(o);
  if (o.input.empty()) {
    const fs::path path = out_path(o, "turn_taking.csv");
    check(infl_turn_taking_eval(o.seeds, o.seed, &fo, o.prior_exponent, path.c_str()),
          "turn-taking benchmark");
    std::ifstream in(path);
    std::cout << in.rdbuf();
    return kExitOk;
  }
  Obs obs = load_obs(o.input, o);
  const std::size_t C = infl_observations_chains(obs.get());
  const infl_spec spec = make_spec(o, C, o.patterns ? o.patterns : 1, {});
  std::size_t speaker = 0;
  std::vector<double> probs(C);
  check(infl_predict_next_speaker(&spec, obs.get(), 0, &fo, &speaker, probs.data()), "predict");
  nlohmann::ordered_json j;
  j["t"] = infl_observations_length(obs.get()) + 1;
  j["next_speaker"] = speaker;
  j["speaking_probability"] = probs;
  write_json(out_path(o, "prediction.json"), j);
  std::cout << "next speaker: chain " << speaker << '\n';
  return kExitOk;
}

int run_detect(const Options& o) {
  std::vector<std::string> paths;
  std::stringstream ss(o.input);
  for (std::string p; std::getline(ss, p, ',');)
    if (!p.empty()) paths.push_back(p);
  if (paths.empty() || paths.size() > 2) input_error("--input takes one or two comma-separated files");
  const infl_fit_options fo = make_fit_options(o);
  const std::vector<double> means = parse_means(o.gaussian_means);
  nlohmann::ordered_json j;
  j["probe_fraction"] = o.probe_fraction;
  std::vector<double> scores;
  for (const auto& p : paths) {
    Obs obs = load_obs(p, o);
    const infl_spec spec =
        make_spec(o, infl_observations_chains(obs.get()), o.patterns ? o.patterns : 2, means);
    double score = 0.0;
    std::size_t probe = 0;
    check(infl_detect_change(&spec, obs.get(), &fo, o.probe_fraction, &score, &probe), p);
    scores.push_back(score);
    j["samples"].push_back({{"input", p}, {"probe_time", probe}, {"score", score}});
    std::cout << p << ": score " << score << " (t=1 vs t=" << probe << ")\n";
  }
  if (scores.size() == 2) {
    const int changed = infl_compare_change_scores(scores[0], scores[1]);
    j["changed"] = paths[changed - 1];
    std::cout << "changed: " << paths[changed - 1] << '\n';
  }
  write_json(out_path(o, "detect.json"), j);
  return kExitOk;
}

int run_eval_toy(const Options& o) {
  infl_toy_options to;
  infl_toy_options_init(&to);
  if (o.patterns) to.patterns = o.patterns;
  to.prior_exponent = o.prior_exponent;
  to.seed = o.seed;
  to.max_iterations = o.max_iters;
  to.tolerance = o.tol;
  infl_toy_summary sum;
  check(infl_eval_toy(&to, o.output_dir.c_str(), &sum), "eval-toy");

  Model truth = load_model((fs::path(o.output_dir) / "truth.json").string());
  Model learned = load_model((fs::path(o.output_dir) / "params.json").string());
  std::cout << "true influence matrices\n";
  print_influence(truth.get(), 2, 2);
  std::cout << "learned influence matrices (J=" << to.patterns << ")\n";
  print_influence(learned.get(), to.patterns, 2);
  std::cout << "iterations " << sum.iterations << (sum.converged ? " (converged)" : "")
            << ", final K-L " << sum.final_kl << '\n';
  std::cout << "recovery error " << fmt2(sum.recovery_error) << ": "
            << (sum.recovered ? "PASS" : "FAIL") << '\n';
  std::cout << "switch " << (sum.crossing ? "at t=" + std::to_string(sum.crossing) : "not found")
            << ", unused pattern peak " << fmt2(sum.max_unused) << ": "
            << (sum.switch_detected ? "PASS" : "FAIL") << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Dynamical influence model: fit, sample, predict, detect, eval-toy"};
  app.add_option("--command", o.command, "Command to run")
      ->required()
      ->check(CLI::IsMember({"fit", "sample", "predict", "detect", "eval-toy"}));
  app.add_option("--input", o.input, "Observations (CSV/JSON), params JSON for sample");
  app.add_option("--output-dir", o.output_dir, "Directory for artifacts");
  app.add_option("--chains", o.chains, "Expected chain count (checked against the input)");
  app.add_option("--states", o.states, "Hidden states per chain")->check(CLI::PositiveNumber);
  app.add_option("--patterns", o.patterns, "Number of influence patterns J");
  app.add_option("--prior-exponent", o.prior_exponent, "Sticky prior exponent v (10^v)");
  app.add_option("--emission", o.emission, "Emission family")
      ->check(CLI::IsMember({"multinomial", "gaussian"}));
  app.add_option("--gaussian-means", o.gaussian_means, "Comma list of per-state means");
  app.add_option("--max-iters", o.max_iters, "Maximum E-M iterations")->check(CLI::PositiveNumber);
  app.add_option("--tol", o.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--track-reference", o.track_reference, "Reference params JSON for K-L");
  app.add_option("--probe-fraction", o.probe_fraction, "Probe time as a fraction of T");
  app.add_option("--length", o.length, "Steps to draw (sample)")->check(CLI::PositiveNumber);
  app.add_option("--restarts", o.restarts, "Random restarts")->check(CLI::PositiveNumber);
  app.add_option("--seeds", o.seeds, "Seeds for the turn-taking benchmark")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (o.command == "fit") return run_fit(o);
    if (o.command == "sample") return run_sample(o);
    if (o.command == "predict") return run_predict(o);
    if (o.command == "detect") return run_detect(o);
    return run_eval_toy(o);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  }
}
