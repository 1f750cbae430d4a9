// proxlmc command-line front end. Exit codes: 0 success, 1 runtime failure,
// 2 config or validation failure.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "experiment.hpp"
#include "proxlmc/diagnostics.hpp"
#include "proxlmc/trajectory_io.hpp"
#include "proxlmc/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace proxlmc;
using namespace proxlmc::cli;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigFailure = 2;

// --seed, --out-dir and --format, shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format;
  CLI::Option *seed_opt = nullptr;
  CLI::Option *out_opt = nullptr;
  CLI::Option *format_opt = nullptr;

  void attach(CLI::App *app) {
    seed_opt = app->add_option("--seed", seed, "RNG seed (overrides sampler.seed)");
    out_opt = app->add_option("--out-dir", out_dir, "Output directory");
    format_opt = app->add_option("--format", format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  }
  bool has_seed() const { return seed_opt && seed_opt->count() > 0; }
  bool has_out() const { return out_opt && out_opt->count() > 0; }
  bool has_format() const { return format_opt && format_opt->count() > 0; }
};

// Flags that mirror config keys; each one patches the JSON before
// validation, so flag and file values are checked identically.
struct Overrides {
  std::vector<std::pair<CLI::Option *, std::function<void(json &)>>> patches;

  template <class T>
  void add(CLI::App *app, const std::string &flag, const std::string &section, const std::string &key,
           const std::string &help) {
    auto value = std::make_shared<T>();
    auto *opt = app->add_option(flag, *value, help);
    patches.emplace_back(opt, [value, section, key](json &j) { j[section][key] = *value; });
  }
  void apply(json &j) const {
    for (const auto &[opt, patch] : patches)
      if (opt->count() > 0) patch(j);
  }
};

void attach_config_flags(CLI::App *app, Overrides &o) {
  o.add<std::string>(app, "--kind", "potential", "kind", "Potential kind: quadratic, l1, composite");
  o.add<double>(app, "--lambda", "potential", "lambda", "Quadratic curvature");
  o.add<double>(app, "--l1-weight", "potential", "l1_weight", "Weight of the l1 term");
  o.add<std::uint64_t>(app, "--dim", "potential", "dim", "Dimension");
  o.add<std::string>(app, "--algorithm", "sampler", "algorithm", "prox_ula or ula");
  o.add<double>(app, "--h", "sampler", "h", "Step size");
  o.add<std::uint64_t>(app, "--n-steps", "sampler", "n_steps", "Number of steps");
  o.add<std::uint64_t>(app, "--n-particles", "sampler", "n_particles", "Number of independent chains");
  o.add<bool>(app, "--record-half-steps", "sampler", "record_half_steps", "Keep X^{k+1/2} (true/false)");
  o.add<double>(app, "--noise-scale", "sampler", "noise_scale", "Replace sqrt(2h); 0 turns noise off");
  o.add<double>(app, "--init-mean", "init", "mean", "Initial mean (broadcast to every coordinate)");
  o.add<double>(app, "--init-variance", "init", "variance", "Initial isotropic variance");
}

ExperimentConfig resolve_config(const std::string &path, const Overrides &o, const Common &common) {
  json j = path.empty() ? json::object() : load_json_file(path);
  if (!j.is_object()) throw ConfigError("schema error at config: expected an object");
  o.apply(j);
  if (common.has_seed()) j["sampler"]["seed"] = common.seed;
  if (common.has_out()) j["output"]["directory"] = common.out_dir;
  if (common.has_format()) j["output"]["formats"] = json::array({common.format});
  return parse_config(j);
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string snapshot_name(const Ensemble &e) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "step_%06llu%s.bin", static_cast<unsigned long long>(e.step_index),
                e.half_step ? "_half" : "");
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_sample(const std::string &config_path, const Overrides &o, const Common &common) {
  const ExperimentConfig c = resolve_config(config_path, o, common);
  const Trajectory t = run(c.sampler, c.potential.build(), c.init.law());

  const fs::path dir = c.output.directory;
  fs::create_directories(dir);
  std::vector<std::string> files;
  const std::string identity = c.identity().dump();
  write_text(dir / "config.json", c.identity().dump(2) + "\n");
  files.push_back("config.json");
  if (c.output.wants("csv")) {
    std::ofstream out(dir / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(out, t);
    if (!out) throw std::runtime_error("cannot write " + (dir / "trajectory.csv").string());
    files.push_back("trajectory.csv");
  }
  if (c.output.wants("bin")) {
    fs::create_directories(dir / "snapshots");
    for (const auto &e : t.records()) {
      write_snapshot_file(dir / "snapshots" / snapshot_name(e), e.particles);
      files.push_back("snapshots/" + snapshot_name(e));
    }
  }

  json manifest{{"seed", c.sampler.seed}, {"config_sha1", git_blob_sha1(identity)}, {"files", json::array()}};
  for (const auto &f : files) manifest["files"].push_back({{"path", f}, {"sha1", git_blob_sha1(read_file(dir / f))}});
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

// Trajectory from a `sample` output directory: CSV if present (or asked for
// with --format csv), otherwise the binary snapshots.
Trajectory load_trajectory(const fs::path &dir, const ExperimentConfig &c, const std::string &format) {
  const bool csv = format == "csv" || (format.empty() && fs::exists(dir / "trajectory.csv"));
  if (csv) {
    std::ifstream in(dir / "trajectory.csv");
    if (!in) throw std::runtime_error("cannot open " + (dir / "trajectory.csv").string());
    return read_trajectory_csv(in, c.sampler.h);
  }
  std::vector<Ensemble> records;
  for (std::uint64_t k = 0; k <= c.sampler.n_steps; ++k) {
    for (bool half : {false, true}) {
      if (half && (k == c.sampler.n_steps || !c.sampler.record_half_steps)) continue;
      Ensemble probe;
      probe.step_index = k;
      probe.half_step = half;
      const fs::path p = dir / "snapshots" / snapshot_name(probe);
      records.push_back(Ensemble::from_particles(read_snapshot_file(p), k, half));
    }
  }
  return Trajectory(c.sampler.h, c.sampler.record_half_steps, std::move(records));
}

// N draws from a Gaussian in the target-samples RNG domain.
RowMatrix target_samples(const GaussianMeasure &g, std::size_t n, std::uint64_t seed) {
  const NoiseSource source(seed, std::nullopt, StreamDomain::TargetSamples);
  const Matrix chol = g.covariance().llt().matrixL();
  RowMatrix x(n, g.dim());
  Vector z(static_cast<Eigen::Index>(g.dim()));
  for (std::size_t i = 0; i < n; ++i) {
    source.standard_normal(i, 0, z);
    x.row(static_cast<Eigen::Index>(i)) = (g.mean() + chol * z).transpose();
  }
  return x;
}

std::string cell(const std::optional<double> &v) { return v ? format_double(*v) : ""; }

struct DiagnoseOptions {
  std::string config_path;
  std::string trajectory_dir;
  std::string delta_source = "half";
  std::string w2 = "auto";
  std::size_t projections = 256;
  std::size_t max_assignment = 2048;
  std::string out;
};

int cmd_diagnose(const DiagnoseOptions &opt, const Overrides &o, const Common &common) {
  if (opt.config_path.empty() == opt.trajectory_dir.empty())
    throw ConfigError("diagnose needs exactly one of --config or --trajectory-dir");
  ExperimentConfig c;
  std::optional<Trajectory> traj;
  if (!opt.trajectory_dir.empty()) {
    const fs::path dir = opt.trajectory_dir;
    Overrides none;
    c = resolve_config((dir / "config.json").string(), none, Common{});
    traj = load_trajectory(dir, c, common.has_format() ? common.format : "");
  } else {
    c = resolve_config(opt.config_path, o, common);
    traj = run(c.sampler, c.potential.build(), c.init.law());
  }
  const Potential p = c.potential.build();
  const double h = c.sampler.h;
  const std::uint64_t n = traj->n_steps();

  if (opt.delta_source == "half" && !traj->has_half_steps())
    throw ConfigError("delta_source=half needs half steps; rerun with sampler.record_half_steps = true "
                      "(--record-half-steps true) or pass --delta-source full");
  if ((opt.delta_source == "exact" || opt.w2 == "exact") && c.potential.kind != "quadratic")
    throw ConfigError("exact delta/W2 need a quadratic potential");
  if ((opt.delta_source == "exact" || opt.w2 == "exact") && c.sampler.algorithm != Algorithm::ProxULA)
    throw ConfigError("exact delta/W2 model the proximal scheme only");

  if (!c.target)
    std::cerr << "warning: config has no target; bound and W2 columns are left empty\n";

  std::optional<double> kl0, w2_init;
  if (c.target) {
    kl0 = gaussian_kl(c.init.gaussian(), *c.target);
    w2_init = gaussian_w2(c.init.gaussian(), *c.target);
  }
  const double lambda = p.strong_convexity();
  const auto per_step_bound = delta_bound(p, h);

  std::vector<GaussianMeasure> laws;
  if (opt.delta_source == "exact" || opt.w2 == "exact")
    laws = scheme_recursion(c.init.gaussian(), h, c.potential.quadratic_weights(), static_cast<std::size_t>(n));
  std::optional<PointCloud> target_cloud;
  if (c.target && opt.w2 == "auto")
    target_cloud = PointCloud(target_samples(*c.target, traj->full(0).size(), c.sampler.seed));

  std::ostringstream csv;
  csv << "step,delta_hat,delta_se,delta_bound,cum_delta,theorem1_bound,corollary_bound,w2_measured,w2_method\n";
  double cumulative = 0.0;
  for (std::uint64_t k = 1; k <= n; ++k) {
    double dhat, dse;
    if (opt.delta_source == "exact") {
      dhat = exact_quadratic_delta(c.potential.quadratic_weights(), h);
      dse = 0.0;
    } else {
      const auto e = estimate_delta(*traj, p, k, opt.delta_source == "half" ? DeltaDefinition::HalfStep
                                                                            : DeltaDefinition::FullStep);
      dhat = e.delta_hat;
      dse = e.standard_error;
    }
    cumulative += dhat;
    std::optional<double> t1, cor, w2;
    std::string method;
    if (c.target) {
      // Population delta is nonnegative; a noisy negative partial sum is clamped.
      const double ds = std::max(0.0, cumulative);
      t1 = theorem1_bound(h, k, *kl0, ds);
      if (lambda > 0.0) cor = corollary_bound(h, k, *kl0, ds, *w2_init, lambda, h * static_cast<double>(k));
      if (opt.w2 == "exact") {
        w2 = gaussian_w2(laws[2 * k], *c.target);
        method = "exact_gaussian";
      } else if (opt.w2 == "auto") {
        const auto est = w2_auto(PointCloud::from_ensemble(traj->full(k)), *target_cloud, opt.projections,
                                 c.sampler.seed, AssignmentOptions{opt.max_assignment});
        w2 = est.value;
        method = to_string(est.method);
      }
    }
    csv << k << ',' << format_double(dhat) << ',' << format_double(dse) << ',' << cell(per_step_bound) << ','
        << format_double(cumulative) << ',' << cell(t1) << ',' << cell(cor) << ',' << cell(w2) << ',' << method
        << '\n';
  }

  if (!opt.out.empty()) {
    write_text(opt.out, csv.str());
  } else if (common.has_out()) {
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "diagnostics.csv", csv.str());
  } else {
    std::cout << csv.str();
  }
  return 0;
}

int cmd_flow(const std::string &config_path, const Overrides &o, const Common &common) {
  if (common.has_format() && common.format != "csv") throw ConfigError("flow writes CSV only");
  const ExperimentConfig c = resolve_config(config_path, o, common);
  if (c.potential.kind != "quadratic") throw ConfigError("flow needs a quadratic potential (closed-form laws)");
  const Vector w = c.potential.quadratic_weights();
  const GaussianMeasure g0 = c.init.gaussian();
  const double h = c.sampler.h;
  const auto n = static_cast<std::size_t>(c.sampler.n_steps);
  const auto laws = scheme_recursion(g0, h, w, n);

  std::ostringstream csv;
  csv << "t,flow,step,half";
  for (std::size_t i = 0; i < g0.dim(); ++i) csv << ",mean_x" << i;
  for (std::size_t i = 0; i < g0.dim(); ++i) csv << ",var_x" << i;
  csv << ",w2_scheme_to_ou\n";
  const auto row = [&](double t, const char *flow, std::size_t step, bool half, const GaussianMeasure &g,
                       const std::string &gap) {
    csv << format_double(t) << ',' << flow << ',' << step << ',' << (half ? 1 : 0);
    for (double m : g.mean()) csv << ',' << format_double(m);
    for (double v : g.variances()) csv << ',' << format_double(v);
    csv << ',' << gap << '\n';
  };
  // Law index j = 2k is rho^k at t = kh; j = 2k+1 is rho^{k+1/2}, listed at
  // t = (k + 1/2) h for comparison with the flow at the same time.
  for (std::size_t j = 0; j < laws.size(); ++j) {
    const double t = 0.5 * h * static_cast<double>(j);
    const auto ou = ou_flow(g0, t, w);
    row(t, "ou", j / 2, j % 2 == 1, ou, "");
    row(t, "scheme", j / 2, j % 2 == 1, laws[j], format_double(gaussian_w2(laws[j], ou)));
  }
  if (common.has_out()) {
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "flow.csv", csv.str());
  } else {
    std::cout << csv.str();
  }
  return 0;
}

struct W2Options {
  std::string a, b;
  std::string method = "auto";
  std::size_t projections = 256;
  std::size_t max_assignment = 2048;
  std::int64_t step = -1;
  bool half = false;
};

PointCloud load_cloud(const std::string &path, const W2Options &opt, const std::string &format) {
  const std::string f = !format.empty() ? format : fs::path(path).extension() == ".bin" ? "bin" : "csv";
  if (f == "bin") return PointCloud(read_snapshot_file(path));
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const Trajectory t = read_trajectory_csv(in, 1.0);
  if (opt.step < 0 && !opt.half) return PointCloud::from_ensemble(t.final_ensemble());
  const std::uint64_t k = opt.step < 0 ? t.n_steps() - 1 : static_cast<std::uint64_t>(opt.step);
  return PointCloud::from_ensemble(opt.half ? t.half(k) : t.full(k));
}

int cmd_w2(const W2Options &opt, const Common &common) {
  const std::string format = common.has_format() ? common.format : "";
  const PointCloud a = load_cloud(opt.a, opt, format), b = load_cloud(opt.b, opt, format);
  const AssignmentOptions ao{opt.max_assignment};
  W2Estimate est;
  if (opt.method == "exact_1d")
    est = w2_exact_1d(a, b);
  else if (opt.method == "assignment")
    est = w2_assignment(a, b, ao);
  else if (opt.method == "sliced")
    est = w2_sliced(a, b, opt.projections, common.seed);
  else
    est = w2_auto(a, b, opt.projections, common.seed, ao);
  std::ostringstream csv;
  csv << "w2,method,standard_error,n_projections\n"
      << format_double(est.value) << ',' << to_string(est.method) << ',' << cell(est.standard_error) << ','
      << (est.n_projections ? std::to_string(*est.n_projections) : "") << '\n';
  if (common.has_out()) {
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "w2.csv", csv.str());
  }
  std::cout << csv.str();
  return 0;
}

struct PlanOptions {
  double epsilon = 0.1;
  std::size_t d = 1;
  double M = 0.0, L = 0.0, lambda = 1.0;
};

int cmd_plan(const PlanOptions &opt, const Common &common) {
  if (common.has_format() && common.format != "csv") throw ConfigError("plan writes CSV only");
  const RatePlan plan = plan_rates(opt.epsilon, opt.d, opt.M, opt.L, opt.lambda);
  std::ostringstream csv;
  csv << "candidate,applicable,binding,h,n,log_term\n";
  for (const auto &[name, cand] : {std::pair{"smooth", &plan.smooth}, {"nonsmooth", &plan.nonsmooth}, {"kl", &plan.kl}}) {
    csv << name << ',' << (cand->applicable ? 1 : 0) << ',' << (plan.binding == name ? 1 : 0) << ','
        << (cand->applicable ? format_double(cand->h) : "") << ',' << (cand->applicable ? std::to_string(cand->n) : "")
        << ',' << format_double(plan.log_term) << '\n';
  }
  if (common.has_out()) {
    fs::create_directories(common.out_dir);
    write_text(fs::path(common.out_dir) / "plan.csv", csv.str());
  }
  std::cout << csv.str();
  return 0;
}

int cmd_verify(std::vector<int> ids, bool verbose) {
  if (ids.empty()) ids = criterion_ids();
  int failed = 0;
  for (int id : ids) {
    const auto r = run_criterion(id);
    std::cout << format_result(r, verbose) << std::flush;
    failed += r.passed ? 0 : 1;
  }
  std::cout << (ids.size() - static_cast<std::size_t>(failed)) << "/" << ids.size() << " criteria passed\n";
  return failed == 0 ? 0 : kRuntimeFailure;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Proximal Langevin Monte Carlo experiments"};
  app.require_subcommand(1);
  // -h would collide with the step-size flag --h.
  app.set_help_flag("--help", "Print this help message and exit");

  Common c_sample, c_diag, c_flow, c_w2, c_plan, c_verify;
  Overrides o_sample, o_diag, o_flow;
  std::string sample_config, flow_config;

  auto *sample = app.add_subcommand("sample", "Run the sampler and write trajectory files");
  sample->add_option("--config", sample_config, "Experiment config JSON");
  attach_config_flags(sample, o_sample);
  c_sample.attach(sample);

  DiagnoseOptions dopt;
  auto *diag = app.add_subcommand("diagnose", "Delta estimates, error bounds and W2 per step");
  diag->add_option("--config", dopt.config_path, "Run this config and diagnose it");
  diag->add_option("--trajectory-dir", dopt.trajectory_dir, "Diagnose an existing `sample` output directory");
  diag->add_option("--delta-source", dopt.delta_source, "half: V(X^k) - V(X^{k-1/2}); full: V(X^k) - V(X^{k-1}); "
                                                        "exact: h tr(W) for quadratics")
      ->check(CLI::IsMember({"half", "full", "exact"}));
  diag->add_option("--w2", dopt.w2, "auto (empirical vs target samples), exact (Gaussian laws) or none")
      ->check(CLI::IsMember({"auto", "exact", "none"}));
  diag->add_option("--projections", dopt.projections, "Sliced-W2 directions");
  diag->add_option("--max-assignment", dopt.max_assignment, "Largest N solved by exact assignment");
  diag->add_option("--out", dopt.out, "Output CSV path (default: stdout, or <out-dir>/diagnostics.csv)");
  attach_config_flags(diag, o_diag);
  c_diag.attach(diag);

  auto *flow = app.add_subcommand("flow", "Exact OU flow and scheme recursion laws for a quadratic potential");
  flow->add_option("--config", flow_config, "Experiment config JSON");
  attach_config_flags(flow, o_flow);
  c_flow.attach(flow);

  W2Options wopt;
  auto *w2 = app.add_subcommand("w2", "W2 distance between two point-cloud files");
  w2->add_option("file_a", wopt.a, "Trajectory CSV or binary snapshot")->required();
  w2->add_option("file_b", wopt.b, "Trajectory CSV or binary snapshot")->required();
  w2->add_option("--method", wopt.method, "auto, exact_1d, assignment or sliced")
      ->check(CLI::IsMember({"auto", "exact_1d", "assignment", "sliced"}));
  w2->add_option("--projections", wopt.projections, "Sliced-W2 directions");
  w2->add_option("--max-assignment", wopt.max_assignment, "Largest N solved by exact assignment");
  w2->add_option("--step", wopt.step, "Trajectory step to compare (default: last)");
  w2->add_flag("--half", wopt.half, "Use the half-step ensemble of --step");
  c_w2.attach(w2);

  PlanOptions popt;
  auto *plan = app.add_subcommand("plan", "Order-of-magnitude step size and iteration count for W2 accuracy epsilon");
  plan->add_option("--epsilon", popt.epsilon, "Target W2 accuracy")->required();
  plan->add_option("--d", popt.d, "Dimension")->required();
  plan->add_option("--M", popt.M, "Gradient Lipschitz constant of the smooth part (0 if none)");
  plan->add_option("--L", popt.L, "Lipschitz constant of the nonsmooth part (0 if none)");
  plan->add_option("--lambda", popt.lambda, "Strong convexity");
  c_plan.attach(plan);

  std::vector<int> ids;
  bool verbose = false;
  auto *verify = app.add_subcommand("verify", "Run the acceptance scenarios");
  verify->add_option("ids", ids, "Criterion numbers (default: all)");
  verify->add_flag("-v,--verbose", verbose, "Print every sub-check");
  c_verify.attach(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigFailure;
  }

  try {
    if (*sample) return cmd_sample(sample_config, o_sample, c_sample);
    if (*diag) return cmd_diagnose(dopt, o_diag, c_diag);
    if (*flow) return cmd_flow(flow_config, o_flow, c_flow);
    if (*w2) return cmd_w2(wopt, c_w2);
    if (*plan) return cmd_plan(popt, c_plan);
    if (*verify) return cmd_verify(ids, verbose);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::logic_error &e) {
    // invalid_argument, out_of_range, UnsupportedOperation: bad inputs.
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}
