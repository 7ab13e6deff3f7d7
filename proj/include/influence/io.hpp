#pragma once

// File formats. Symbols, times, chains and patterns are 1-based on disk.
//
// Observation CSV: a header row of chain names, then one row per time step
// with one column per chain. Observation JSON:
//   {"format": "influence-observations", "version": 1,
//    "kind": "discrete" | "continuous", "chains": [names], "data": [[...] per chain]}

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "influence/inference.hpp"
#include "influence/model.hpp"

namespace influence {

inline constexpr int kFormatVersion = 1;

enum class DataFormat { Csv, Json };

// Csv unless the extension is .json.
DataFormat format_from_path(const std::filesystem::path& path);

struct NamedObservations {
  ObservationSet observations;
  std::vector<std::string> chain_names;
};

NamedObservations read_observations_csv(std::istream& in, EmissionFamily family);
NamedObservations read_observations_json(std::istream& in, EmissionFamily family);
NamedObservations load_observations(const std::filesystem::path& path, DataFormat format,
                                    EmissionFamily family);

// Empty names become chain1..chainC.
void write_observations_csv(std::ostream& out, const ObservationSet& obs,
                            const std::vector<std::string>& names = {});
void write_observations_json(std::ostream& out, const ObservationSet& obs,
                             const std::vector<std::string>& names = {});
void save_observations(const std::filesystem::path& path, DataFormat format,
                       const ObservationSet& obs, const std::vector<std::string>& names = {});

struct StoredModel {
  ModelSpec spec;
  ModelParams params;
};

// Version-tagged spec plus every matrix as row-major nested arrays.
std::string params_to_json(const ModelSpec& spec, const ModelParams& params);
StoredModel params_from_json(const std::string& text);
void save_params(const std::filesystem::path& path, const ModelSpec& spec,
                 const ModelParams& params);
StoredModel load_params(const std::filesystem::path& path);

std::string report_to_json(const FitReport& report);

// Rows t,pattern,probability for every (t, j).
void write_lambda_csv(std::ostream& out, const Matrix& lambda);

// Latent trajectory: t, pattern, then one column per chain.
void write_latent_csv(std::ostream& out, const LatentTrajectory& latent);

// Reads a whole file; IoError on failure.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace influence
