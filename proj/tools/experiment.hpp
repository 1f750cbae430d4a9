#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxlmc/potentials.hpp"
#include "proxlmc/reference_flows.hpp"
#include "proxlmc/samplers.hpp"

namespace proxlmc::cli {

// Raised for anything the user can fix by editing the config or flags; the
// CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PotentialSpec {
  std::string kind = "quadratic";  // quadratic | l1 | composite
  double lambda = 1.0;
  double l1_weight = 1.0;
  std::size_t dim = 1;
  std::optional<std::vector<double>> weights;  // per-coordinate quadratic weights

  Potential build() const;
  bool has_quadratic_part() const { return kind != "l1"; }
  Vector quadratic_weights() const;  // for the quadratic kind only
};

struct InitSpec {
  Vector mean;
  std::optional<double> variance;
  std::optional<Vector> cov_diag;

  GaussianMeasure gaussian() const;
  InitialLaw law() const;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "bin"};
  bool wants(const std::string &format) const;
};

struct ExperimentConfig {
  PotentialSpec potential;
  SchemeConfig sampler;
  InitSpec init;
  std::optional<GaussianMeasure> target;
  OutputSpec output;

  // Every field spelled out, keys sorted.
  nlohmann::json to_json() const;
  std::string canonical() const { return to_json().dump(); }
  // to_json() minus the output section: what determines the artifacts, so a
  // rerun into another directory hashes the same.
  nlohmann::json identity() const;
};

// Unknown keys, wrong types, inconsistent dimensions and out-of-range values
// all raise ConfigError with the offending JSON path.
ExperimentConfig parse_config(const nlohmann::json &j);
nlohmann::json load_json_file(const std::filesystem::path &path);

// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(const std::string &content);

}  // namespace proxlmc::cli
