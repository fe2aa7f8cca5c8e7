#pragma once

#include "fnlslab/dynamics.hpp"
#include "fnlslab/field.hpp"
#include "fnlslab/xnorm.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fnls {

// Full run description. Serializes to a single JSON document; every field
// has a default, unknown keys are rejected, and to/from round-trips
// losslessly (the resolved form is embedded in every output artifact).
struct ExperimentConfig {
  ModelParams model;
  GridSpec grid = GridSpec::for_trunc(16);
  IntegratorConfig integrator;
  TauConfig tau;
  uint64_t seed = 1;
  int64_t samples = 1000;
  double t_final = 0.5;
  std::string output_dir = "out";

  void validate() const;  // every module-level validation, in one place
};

nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);

// Dotted-path override, e.g. ("model.alpha", "1.5") or ("seed", "42").
// Setting grid.n_trunc re-derives n_pad = 4N+1; override n_pad afterwards
// to pin a custom padding.
void apply_override(ExperimentConfig& c, const std::string& key,
                    const std::string& value);

// Shortest round-trip decimal form (std::to_chars): locale-free and
// deterministic, so output files are byte-stable.
std::string format_double(double x);

// UTF-8 CSV, '\n' line ends. preamble, when nonempty, is written first as
// a '#' comment line (the self-describing config embed); then the header
// row, then the data rows (each checked against the header width).
void write_csv(const std::string& path, const std::string& preamble,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// `git describe --always --dirty` of the working tree, "unknown" when not
// available. Identifies the code version inside run manifests.
std::string git_describe();

// Run manifest: command, resolved config, code version, wall time, and a
// command-specific summary block. wall_time_seconds is the one field that
// varies between identical reruns; byte-comparisons must mask it.
nlohmann::json run_manifest(const std::string& command,
                            const ExperimentConfig& c, double wall_seconds,
                            const nlohmann::json& summary);

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace fnls
