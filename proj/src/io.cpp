#include "influence/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "influence/error.hpp"
#include "json.hpp"

namespace influence {

using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int parse_symbol(const std::string& field, std::size_t line) {
  int v = 0;
  const auto* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || field.empty())
    throw ParseError("expected an integer symbol, got '" + field + "'", line);
  if (v < 1) throw ParseError("symbol out of range: " + field + " (symbols start at 1)", line);
  return v - 1;
}

double parse_real(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || field.empty())
    throw ParseError("expected a real value, got '" + field + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + field + "'", line);
  return v;
}

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::vector<std::string> default_names(std::size_t C, const std::vector<std::string>& names) {
  if (names.empty()) {
    std::vector<std::string> out;
    for (std::size_t c = 0; c < C; ++c) out.push_back("chain" + std::to_string(c + 1));
    return out;
  }
  if (names.size() != C) throw DimensionMismatch("chain names do not match the chain count");
  return names;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (double v : m.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

json matrices_json(const std::vector<Matrix>& ms) {
  json out = json::array();
  for (const Matrix& m : ms) out.push_back(matrix_json(m));
  return out;
}

Matrix matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ParseError(std::string(what) + ": expected a non-empty nested array", 0);
  const std::size_t rows = j.size(), cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(std::string(what) + ": ragged row " + std::to_string(r + 1), 0);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

std::vector<Matrix> matrices_from(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array", 0);
  std::vector<Matrix> out;
  for (const auto& m : j) out.push_back(matrix_from(m, what));
  return out;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", 0);
  return *it;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), 0);
  }
}

void check_header(const json& j, const char* format) {
  if (!j.is_object() || field(j, "format") != format)
    throw ParseError(std::string("not an ") + format + " document", 0);
  if (field(j, "version").get<int>() != kFormatVersion)
    throw ParseError("unsupported version " + field(j, "version").dump(), 0);
}

}  // namespace

DataFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? DataFormat::Json : DataFormat::Csv;
}

NamedObservations read_observations_csv(std::istream& in, EmissionFamily family) {
  const bool discrete = family == EmissionFamily::Multinomial;
  NamedObservations out;
  std::vector<std::vector<int>> sym;
  std::vector<std::vector<double>> val;
  std::string line;
  std::size_t lineno = 0, C = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (out.chain_names.empty()) {
      for (const auto& f : fields)
        if (f.empty()) throw ParseError("empty chain name in header", lineno);
      out.chain_names = std::move(fields);
      C = out.chain_names.size();
      sym.resize(discrete ? C : 0);
      val.resize(discrete ? 0 : C);
      continue;
    }
    if (fields.size() != C)
      throw ParseError("ragged row: expected " + std::to_string(C) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    for (std::size_t c = 0; c < C; ++c) {
      if (discrete)
        sym[c].push_back(parse_symbol(fields[c], lineno));
      else
        val[c].push_back(parse_real(fields[c], lineno));
    }
  }
  if (out.chain_names.empty()) throw ParseError("missing header row", 0);
  const bool empty = discrete ? sym.front().empty() : val.front().empty();
  if (empty) throw ParseError("no observation rows", lineno);
  out.observations = discrete ? ObservationSet::discrete(std::move(sym))
                              : ObservationSet::continuous(std::move(val));
  return out;
}

NamedObservations read_observations_json(std::istream& in, EmissionFamily family) {
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = parse_json(ss.str());
  check_header(j, "influence-observations");
  const bool discrete = family == EmissionFamily::Multinomial;
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind != (discrete ? "discrete" : "continuous"))
    throw ParseError("observation kind '" + kind + "' does not match the emission family", 0);
  const json& data = field(j, "data");
  if (!data.is_array() || data.empty()) throw ParseError("data: expected one array per chain", 0);

  NamedObservations out;
  try {
    out.chain_names = field(j, "chains").get<std::vector<std::string>>();
    if (out.chain_names.size() != data.size())
      throw ParseError("chains and data disagree on the chain count", 0);
    if (discrete) {
      std::vector<std::vector<int>> sym;
      for (const auto& row : data) {
        std::vector<int> s;
        for (const auto& v : row) {
          if (!v.is_number_integer()) throw ParseError("non-integer symbol " + v.dump(), 0);
          if (v.get<int>() < 1) throw ParseError("symbol out of range: " + v.dump(), 0);
          s.push_back(v.get<int>() - 1);
        }
        sym.push_back(std::move(s));
      }
      out.observations = ObservationSet::discrete(std::move(sym));
    } else {
      auto val = data.get<std::vector<std::vector<double>>>();
      for (const auto& row : val)
        for (double v : row)
          if (!std::isfinite(v)) throw ParseError("non-finite value", 0);
      out.observations = ObservationSet::continuous(std::move(val));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad observation document: ") + e.what(), 0);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 0);
  }
  return out;
}

NamedObservations load_observations(const std::filesystem::path& path, DataFormat format,
                                    EmissionFamily family) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return format == DataFormat::Json ? read_observations_json(in, family)
                                    : read_observations_csv(in, family);
}

void write_observations_csv(std::ostream& out, const ObservationSet& obs,
                            const std::vector<std::string>& names) {
  const std::size_t C = obs.num_chains(), T = obs.length();
  const auto header = default_names(C, names);
  for (std::size_t c = 0; c < C; ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      if (c) out << ',';
      if (obs.is_discrete())
        out << obs.symbol(c, t) + 1;
      else
        out << format_real(obs.value(c, t));
    }
    out << '\n';
  }
}

void write_observations_json(std::ostream& out, const ObservationSet& obs,
                             const std::vector<std::string>& names) {
  json j;
  j["format"] = "influence-observations";
  j["version"] = kFormatVersion;
  j["kind"] = obs.is_discrete() ? "discrete" : "continuous";
  j["chains"] = default_names(obs.num_chains(), names);
  json data = json::array();
  for (std::size_t c = 0; c < obs.num_chains(); ++c) {
    json row = json::array();
    for (std::size_t t = 0; t < obs.length(); ++t) {
      if (obs.is_discrete())
        row.push_back(obs.symbol(c, t) + 1);
      else
        row.push_back(obs.value(c, t));
    }
    data.push_back(std::move(row));
  }
  j["data"] = std::move(data);
  out << j.dump(1) << '\n';
}

void save_observations(const std::filesystem::path& path, DataFormat format,
                       const ObservationSet& obs, const std::vector<std::string>& names) {
  std::ostringstream ss;
  if (format == DataFormat::Json)
    write_observations_json(ss, obs, names);
  else
    write_observations_csv(ss, obs, names);
  write_text(path, ss.str());
}

std::string params_to_json(const ModelSpec& spec, const ModelParams& params) {
  const bool gaussian = spec.emission == EmissionFamily::GaussianFixedMeans;
  json s;
  s["num_chains"] = spec.num_chains;
  s["num_states"] = spec.num_states;
  s["num_patterns"] = spec.num_patterns;
  s["prior_exponent"] = spec.prior_exponent;
  s["emission"] = gaussian ? "gaussian" : "multinomial";
  s["num_symbols"] = gaussian ? 0 : alphabet_size(params);
  s["gaussian_means"] = spec.gaussian_means;

  json j;
  j["format"] = "influence-params";
  j["version"] = kFormatVersion;
  j["spec"] = std::move(s);
  j["influence"] = matrices_json(params.influence);
  j["self"] = matrices_json(params.self);
  j["cross"] = matrices_json(params.cross);
  j["pattern_transition"] = matrix_json(params.pattern_transition);
  json e;
  if (gaussian) {
    e["means"] = params.emissions.means;
    e["variances"] = params.emissions.variances;
  } else {
    e["tables"] = matrices_json(params.emissions.tables);
  }
  j["emissions"] = std::move(e);
  j["initial_state"] = params.initial_state;
  j["initial_pattern"] = params.initial_pattern;
  return j.dump(1) + "\n";
}

StoredModel params_from_json(const std::string& text) {
  const json j = parse_json(text);
  check_header(j, "influence-params");
  StoredModel m;
  try {
    const json& s = field(j, "spec");
    m.spec.num_chains = field(s, "num_chains").get<std::size_t>();
    m.spec.num_states = field(s, "num_states").get<std::size_t>();
    m.spec.num_patterns = field(s, "num_patterns").get<std::size_t>();
    m.spec.prior_exponent = field(s, "prior_exponent").get<double>();
    const std::string family = field(s, "emission").get<std::string>();
    if (family == "gaussian")
      m.spec.emission = EmissionFamily::GaussianFixedMeans;
    else if (family == "multinomial")
      m.spec.emission = EmissionFamily::Multinomial;
    else
      throw ParseError("unknown emission family '" + family + "'", 0);
    m.spec.num_symbols = field(s, "num_symbols").get<std::size_t>();
    m.spec.gaussian_means = field(s, "gaussian_means").get<std::vector<double>>();

    ModelParams& p = m.params;
    p.influence = matrices_from(field(j, "influence"), "influence");
    p.self = matrices_from(field(j, "self"), "self");
    p.cross = matrices_from(field(j, "cross"), "cross");
    p.pattern_transition = matrix_from(field(j, "pattern_transition"), "pattern_transition");
    const json& e = field(j, "emissions");
    if (m.spec.emission == EmissionFamily::GaussianFixedMeans) {
      p.emissions.means = field(e, "means").get<std::vector<double>>();
      p.emissions.variances = field(e, "variances").get<std::vector<double>>();
    } else {
      p.emissions.tables = matrices_from(field(e, "tables"), "emissions.tables");
    }
    p.initial_state = field(j, "initial_state").get<std::vector<std::vector<double>>>();
    p.initial_pattern = field(j, "initial_pattern").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad params document: ") + e.what(), 0);
  }
  validate_spec(m.spec);
  require_valid(m.params, m.spec);
  return m;
}

void save_params(const std::filesystem::path& path, const ModelSpec& spec,
                 const ModelParams& params) {
  write_text(path, params_to_json(spec, params));
}

StoredModel load_params(const std::filesystem::path& path) {
  return params_from_json(read_text(path));
}

std::string report_to_json(const FitReport& report) {
  json j;
  j["format"] = "influence-fit-report";
  j["version"] = kFormatVersion;
  j["iterations_run"] = report.iterations_run;
  j["converged"] = report.converged;
  j["log_likelihood"] = report.log_likelihood;
  j["max_delta"] = report.max_delta;
  if (!report.kl.empty()) j["kl"] = report.kl;
  return j.dump(1) + "\n";
}

void write_lambda_csv(std::ostream& out, const Matrix& lambda) {
  out << "t,pattern,probability\n";
  for (std::size_t t = 0; t < lambda.rows(); ++t)
    for (std::size_t j = 0; j < lambda.cols(); ++j)
      out << t + 1 << ',' << j + 1 << ',' << format_real(lambda(t, j)) << '\n';
}

void write_latent_csv(std::ostream& out, const LatentTrajectory& latent) {
  out << "t,pattern";
  for (std::size_t c = 0; c < latent.states.size(); ++c) out << ",chain" << c + 1;
  out << '\n';
  for (std::size_t t = 0; t < latent.patterns.size(); ++t) {
    out << t + 1 << ',' << latent.patterns[t] + 1;
    for (const auto& s : latent.states) out << ',' << s[t] + 1;
    out << '\n';
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace influence
