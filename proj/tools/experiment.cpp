#include "experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace proxlmc::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &path, const std::string &what) {
  throw ConfigError("schema error at " + path + ": " + what);
}

void only_keys(const json &j, const std::string &path, std::set<std::string> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto &[key, _] : j.items())
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
}

double number(const json &j, const std::string &path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

double positive(const json &j, const std::string &path) {
  const double v = number(j, path);
  if (!(v > 0.0)) fail(path, "must be > 0");
  return v;
}

std::uint64_t integer(const json &j, const std::string &path, std::uint64_t min) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v < min) fail(path, "must be >= " + std::to_string(min));
    return v;
  }
  const auto v = j.get<std::int64_t>();
  if (v < static_cast<std::int64_t>(min)) fail(path, "must be >= " + std::to_string(min));
  return static_cast<std::uint64_t>(v);
}

Vector number_array(const json &j, const std::string &path, bool require_positive) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    v(static_cast<Eigen::Index>(i)) = require_positive ? positive(j[i], p) : number(j[i], p);
  }
  return v;
}

json to_array(const Vector &v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

PotentialSpec parse_potential(const json &j) {
  only_keys(j, "potential", {"kind", "lambda", "l1_weight", "dim", "weights"});
  PotentialSpec p;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) fail("potential.kind", "expected a string");
    p.kind = j["kind"].get<std::string>();
  }
  if (p.kind != "quadratic" && p.kind != "l1" && p.kind != "composite")
    fail("potential.kind", "must be one of quadratic, l1, composite");
  if (j.contains("lambda")) p.lambda = positive(j["lambda"], "potential.lambda");
  if (j.contains("l1_weight")) p.l1_weight = positive(j["l1_weight"], "potential.l1_weight");
  if (j.contains("weights")) {
    if (p.kind == "l1") fail("potential.weights", "not allowed for kind l1");
    if (j.contains("lambda")) fail("potential.weights", "give either lambda or weights, not both");
    const Vector w = number_array(j["weights"], "potential.weights", true);
    p.weights = std::vector<double>(w.begin(), w.end());
    p.dim = p.weights->size();
  }
  if (j.contains("dim")) {
    const auto d = integer(j["dim"], "potential.dim", 1);
    if (p.weights && d != p.weights->size())
      fail("potential.dim", "is " + std::to_string(d) + " but weights has " + std::to_string(p.weights->size()));
    p.dim = static_cast<std::size_t>(d);
  }
  return p;
}

SchemeConfig parse_sampler(const json &j) {
  only_keys(j, "sampler", {"algorithm", "h", "n_steps", "n_particles", "seed", "record_half_steps", "noise_scale"});
  SchemeConfig c;
  c.h = 0.1;
  c.n_steps = 10;
  c.n_particles = 1000;
  c.record_half_steps = true;
  if (j.contains("algorithm")) {
    if (!j["algorithm"].is_string()) fail("sampler.algorithm", "expected a string");
    const auto a = j["algorithm"].get<std::string>();
    if (a != "prox_ula" && a != "ula") fail("sampler.algorithm", "must be prox_ula or ula");
    c.algorithm = algorithm_from_string(a);
  }
  if (j.contains("h")) c.h = positive(j["h"], "sampler.h");
  if (j.contains("n_steps")) c.n_steps = integer(j["n_steps"], "sampler.n_steps", 0);
  if (j.contains("n_particles")) c.n_particles = static_cast<std::size_t>(integer(j["n_particles"], "sampler.n_particles", 1));
  if (j.contains("seed")) c.seed = integer(j["seed"], "sampler.seed", 0);
  if (j.contains("record_half_steps")) {
    if (!j["record_half_steps"].is_boolean()) fail("sampler.record_half_steps", "expected a boolean");
    c.record_half_steps = j["record_half_steps"].get<bool>();
  }
  if (j.contains("noise_scale")) {
    const double s = number(j["noise_scale"], "sampler.noise_scale");
    if (s < 0.0) fail("sampler.noise_scale", "must be >= 0");
    c.noise_scale = s;
  }
  return c;
}

InitSpec parse_init(const json &j, std::size_t dim) {
  only_keys(j, "init", {"mean", "variance", "cov_diag"});
  InitSpec s;
  s.mean = Vector::Zero(static_cast<Eigen::Index>(dim));
  if (j.contains("mean")) {
    if (j["mean"].is_number())
      s.mean = Vector::Constant(static_cast<Eigen::Index>(dim), number(j["mean"], "init.mean"));
    else
      s.mean = number_array(j["mean"], "init.mean", false);
  }
  if (static_cast<std::size_t>(s.mean.size()) != dim)
    fail("init.mean", "has length " + std::to_string(s.mean.size()) + ", potential dim is " + std::to_string(dim));
  if (j.contains("variance") && j.contains("cov_diag")) fail("init", "give either variance or cov_diag, not both");
  if (j.contains("cov_diag")) {
    s.cov_diag = number_array(j["cov_diag"], "init.cov_diag", true);
    if (static_cast<std::size_t>(s.cov_diag->size()) != dim)
      fail("init.cov_diag", "has length " + std::to_string(s.cov_diag->size()) + ", potential dim is " +
                                std::to_string(dim));
  } else {
    s.variance = j.contains("variance") ? positive(j["variance"], "init.variance") : 1.0;
  }
  return s;
}

GaussianMeasure parse_target(const json &j, const PotentialSpec &p) {
  if (j.is_string()) {
    if (j.get<std::string>() != "potential") fail("target", "the only string form is \"potential\"");
    if (p.kind != "quadratic") fail("target", "\"potential\" needs a quadratic potential (pi is then Gaussian)");
    return quadratic_target(p.quadratic_weights());
  }
  only_keys(j, "target", {"mean", "cov_diag", "cov"});
  GaussianMeasure g = [&] {
    try {
      return gaussian_from_json(j);
    } catch (const std::exception &e) {
      fail("target", e.what());
    }
  }();
  if (g.dim() != p.dim)
    fail("target", "has dimension " + std::to_string(g.dim()) + ", potential dim is " + std::to_string(p.dim));
  return g;
}

OutputSpec parse_output(const json &j) {
  only_keys(j, "output", {"directory", "formats"});
  OutputSpec o;
  if (j.contains("directory")) {
    if (!j["directory"].is_string() || j["directory"].get<std::string>().empty())
      fail("output.directory", "expected a nonempty string");
    o.directory = j["directory"].get<std::string>();
  }
  if (j.contains("formats")) {
    if (!j["formats"].is_array() || j["formats"].empty()) fail("output.formats", "expected a nonempty array");
    o.formats.clear();
    for (std::size_t i = 0; i < j["formats"].size(); ++i) {
      const auto &f = j["formats"][i];
      const std::string path = "output.formats[" + std::to_string(i) + "]";
      if (!f.is_string() || (f != "csv" && f != "bin")) fail(path, "must be \"csv\" or \"bin\"");
      o.formats.push_back(f.get<std::string>());
    }
  }
  return o;
}

}  // namespace

Vector PotentialSpec::quadratic_weights() const {
  if (weights) return Eigen::Map<const Vector>(weights->data(), static_cast<Eigen::Index>(weights->size()));
  return Vector::Constant(static_cast<Eigen::Index>(dim), lambda);
}

Potential PotentialSpec::build() const {
  const auto quad = [&] {
    return weights ? Potential::diagonal_quadratic(quadratic_weights()) : Potential::isotropic_quadratic(dim, lambda);
  };
  if (kind == "quadratic") return quad();
  if (kind == "l1") return Potential::l1(dim, l1_weight);
  return Potential::composite(quad(), Potential::l1(dim, l1_weight));
}

GaussianMeasure InitSpec::gaussian() const {
  return cov_diag ? GaussianMeasure::diagonal(mean, *cov_diag) : GaussianMeasure::isotropic(mean, *variance);
}

InitialLaw InitSpec::law() const {
  return cov_diag ? InitialLaw::diagonal_gaussian(mean, *cov_diag) : InitialLaw::isotropic_gaussian(mean, *variance);
}

bool OutputSpec::wants(const std::string &format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

nlohmann::json ExperimentConfig::to_json() const {
  json p{{"kind", potential.kind}, {"dim", potential.dim}};
  if (potential.has_quadratic_part()) {
    if (potential.weights)
      p["weights"] = potential.weights.value();
    else
      p["lambda"] = potential.lambda;
  }
  if (potential.kind != "quadratic") p["l1_weight"] = potential.l1_weight;

  json s{{"algorithm", proxlmc::to_string(sampler.algorithm)},
         {"h", sampler.h},
         {"n_steps", sampler.n_steps},
         {"n_particles", sampler.n_particles},
         {"seed", sampler.seed},
         {"record_half_steps", sampler.record_half_steps}};
  if (sampler.noise_scale) s["noise_scale"] = *sampler.noise_scale;

  json i{{"mean", to_array(init.mean)}};
  if (init.cov_diag)
    i["cov_diag"] = to_array(*init.cov_diag);
  else
    i["variance"] = *init.variance;

  json j{{"potential", p}, {"sampler", s}, {"init", i},
         {"output", {{"directory", output.directory}, {"formats", output.formats}}}};
  if (target) j["target"] = gaussian_to_json(*target);
  return j;
}

nlohmann::json ExperimentConfig::identity() const {
  json j = to_json();
  j.erase("output");
  return j;
}

ExperimentConfig parse_config(const nlohmann::json &j) {
  only_keys(j, "config", {"potential", "sampler", "init", "target", "output", "description"});
  ExperimentConfig c;
  if (j.contains("potential")) c.potential = parse_potential(j["potential"]);
  c.sampler = parse_sampler(j.contains("sampler") ? j["sampler"] : json::object());
  c.init = parse_init(j.contains("init") ? j["init"] : json::object(), c.potential.dim);
  if (j.contains("target") && !j["target"].is_null()) c.target = parse_target(j["target"], c.potential);
  if (j.contains("output")) c.output = parse_output(j["output"]);
  if (c.sampler.algorithm == Algorithm::ULA && c.potential.kind != "quadratic")
    fail("sampler.algorithm", "ula needs a differentiable potential; " + c.potential.kind + " is not");
  try {
    c.sampler.validate();
  } catch (const std::exception &e) {
    fail("sampler", e.what());
  }
  return c;
}

nlohmann::json load_json_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError("schema error: " + path.string() + " is not valid JSON: " + e.what());
  }
}

std::string git_blob_sha1(const std::string &content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

}  // namespace proxlmc::cli
