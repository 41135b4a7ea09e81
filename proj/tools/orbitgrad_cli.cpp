// Command-line runner: train, sample, eval, variance, equivariance, oracle.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "orbitgrad/checks.hpp"
#include "orbitgrad/config.hpp"
#include "orbitgrad/error.hpp"
#include "orbitgrad/eval.hpp"
#include "orbitgrad/sampler.hpp"
#include "orbitgrad/train.hpp"

namespace fs = std::filesystem;
using namespace orbitgrad;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kPropertyFailure = 4;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::InvalidInput, "not a number: '" + s + "'");
  return v;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split(s, ',')) out.push_back(static_cast<int>(to_double(item)));
  return out;
}

/// --seed beats ORBITGRAD_SEED, which beats the config file.
ExperimentConfig load_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed_flag) {
  ExperimentConfig cfg = load_config(path);
  if (const char* env = std::getenv("ORBITGRAD_SEED"); env && *env) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, std::string("ORBITGRAD_SEED is not an integer: ") + env);
    }
  }
  if (seed_flag) cfg.seed = *seed_flag;
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

void write_points(std::ostream& out, const std::vector<Point>& pts) {
  for (const auto& p : pts) {
    for (std::size_t j = 0; j < p.dim(); ++j) out << (j ? "," : "") << p[j];
    out << '\n';
  }
}

std::vector<Point> read_points(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read '" + path.string() + "'");
  std::vector<Point> pts;
  for (std::string line; std::getline(in, line);) {
    const auto cols = split(line, ',');
    if (cols.empty() || cols.front().starts_with('#')) continue;
    Point p;
    for (const auto& c : cols) p.x.push_back(to_double(c));
    if (!pts.empty() && p.dim() != pts.front().dim()) throw Error(ErrorCode::InvalidShape, "ragged samples file");
    pts.push_back(std::move(p));
  }
  if (pts.empty()) throw Error(ErrorCode::InvalidInput, "no samples in '" + path.string() + "'");
  return pts;
}

/// Targets: ';' separates points, ',' separates coordinates. For 1-D samples a plain
/// comma list ("-1,1") is read as one atom per entry.
std::vector<Point> parse_targets(const std::string& text, std::size_t dim) {
  std::vector<Point> out;
  if (dim == 1 && text.find(';') == std::string::npos) {
    for (const auto& v : split(text, ',')) out.push_back(Point{to_double(v)});
  } else {
    for (const auto& row : split(text, ';')) {
      Point p;
      for (const auto& v : split(row, ',')) p.x.push_back(to_double(v));
      if (p.dim() != dim) throw Error(ErrorCode::InvalidShape, "target dimension differs from samples");
      out.push_back(std::move(p));
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidInput, "no targets given");
  return out;
}

int cmd_train(const std::string& config, const std::string& variant, const fs::path& out_dir,
              std::optional<std::uint64_t> seed, std::optional<int> iterations) {
  ExperimentConfig cfg = load_with_seed(config, seed);
  if (!variant.empty()) cfg.variant = parse_variant(variant);
  if (iterations) cfg.iterations = *iterations;
  const Problem problem = make_problem(cfg);
  const TrainConfig tc = make_train_config(cfg);
  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "config.resolved.toml");
    write_config(cfg, out);
  }
  const TrainResult result = train_loop(problem, tc, make_initial_denoiser(cfg));
  {
    auto out = open_out(out_dir / "loss.csv");
    out << "iteration,loss\n";
    for (const auto& r : result.trace) out << r.iteration << ',' << r.loss << '\n';
  }
  save_checkpoint(result.model, out_dir / "checkpoint.bin");
  if (result.diverged) {
    std::cerr << "error: loss became non-finite after " << result.completed
              << " iterations; last finite model saved\n";
    return kNumericalError;
  }
  std::cout << "trained " << variant_name(cfg.variant) << " for " << result.completed << " iterations, final loss "
            << (result.trace.empty() ? 0.0 : result.trace.back().loss) << '\n';
  return kOk;
}

int cmd_sample(const std::string& config, const fs::path& checkpoint, const fs::path& out_path,
               std::optional<int> n, std::optional<std::uint64_t> seed) {
  const ExperimentConfig cfg = load_with_seed(config, seed);
  if (cfg.space != Space::Euclidean) throw Error(ErrorCode::InvalidConfig, "ancestral sampling needs a Euclidean dataset");
  const Denoiser net = load_checkpoint(checkpoint);
  const auto schedule = make_schedule(cfg);
  const auto samples = ancestral_sample(as_batch_denoiser(net), net.dim(), *schedule, n.value_or(cfg.n_samples),
                                        derive_seed(cfg.seed, "sample-run"), AncestralOptions{cfg.antithetic});
  auto out = open_out(out_path);
  write_points(out, samples);
  return kOk;
}

int cmd_eval(const fs::path& samples_path, const std::string& targets_text, std::uint64_t seed) {
  const auto samples = read_points(samples_path);
  const auto targets = parse_targets(targets_text, samples.front().dim());
  nlohmann::json j;
  j["rmsd"] = rmsd_to_nearest(samples, targets);
  if (samples.front().dim() == 1) {
    std::vector<double> a, atoms;
    for (const auto& p : samples) a.push_back(p[0]);
    for (const auto& p : targets) atoms.push_back(p[0]);
    j["w2"] = wasserstein2_1d(a, tile_atoms(atoms, a.size()));
  } else {
    j["w2"] = nullptr;
  }
  j["n_samples"] = samples.size();
  j["seed"] = seed;
  std::cout << j.dump() << '\n';
  return kOk;
}

Denoiser model_for(const ExperimentConfig& cfg, const std::string& checkpoint) {
  return checkpoint.empty() ? make_initial_denoiser(cfg) : load_checkpoint(checkpoint);
}

int cmd_variance(const std::string& config, const std::string& checkpoint, const std::string& timesteps,
                 int repeats, const std::string& variants, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
  const ExperimentConfig cfg = load_with_seed(config, seed);
  const Problem problem = make_problem(cfg);
  const Denoiser net = model_for(cfg, checkpoint);
  std::vector<TargetEstimator> estimators;
  for (const auto& name : split(variants, ',')) estimators.push_back(make_estimator(cfg, name));
  if (estimators.empty()) throw Error(ErrorCode::InvalidConfig, "no variants given");
  const auto ts = parse_ints(timesteps);
  const auto stats = gradient_variance_sweep(net, problem, ts, repeats, estimators, cfg.seed);

  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << std::setprecision(10) << "variant,t,K,mean_grad_norm,grad_norm_var,mean_component_var,p_below_first\n";
  for (const auto& s : stats) {
    const GradientStats* first = nullptr;
    for (const auto& r : stats) {
      if (r.t == s.t && r.estimator == estimators.front().name) first = &r;
    }
    out << s.estimator << ',' << s.t << ',' << s.repeats << ',' << s.mean_grad_norm << ',' << s.grad_norm_var << ','
        << s.mean_component_var << ',';
    if (first && first != &s) {
      out << bootstrap_variance_pvalue(s.norms, first->norms, 2000, derive_seed(cfg.seed, "bootstrap", s.t));
    } else {
      out << "nan";
    }
    out << '\n';
  }
  return kOk;
}

int cmd_equivariance(const std::string& config, const std::string& checkpoint, const std::string& timesteps,
                     int probes, std::optional<std::uint64_t> seed) {
  const ExperimentConfig cfg = load_with_seed(config, seed);
  const Problem problem = make_problem(cfg);
  const Denoiser net = model_for(cfg, checkpoint);
  const auto ts = parse_ints(timesteps);
  std::cout << std::setprecision(10) << "t,error\n";
  for (const auto& r : equivariance_error(net, problem, ts, probes, cfg.seed)) std::cout << r.t << ',' << r.error << '\n';
  return kOk;
}

int cmd_oracle(const std::string& suite, std::uint64_t seed) {
  const auto rows = run_checks(suite, seed);
  bool ok = true;
  std::cout << std::left << std::setw(16) << "suite" << std::setw(52) << "check" << std::setw(14) << "deviation"
            << std::setw(12) << "tolerance" << "result\n";
  for (const auto& r : rows) {
    std::ostringstream dev, tol;
    dev << std::setprecision(3) << std::scientific << r.deviation;
    tol << std::setprecision(1) << std::scientific << r.tolerance;
    std::cout << std::setw(16) << r.suite << std::setw(52) << r.name << std::setw(14) << dev.str() << std::setw(12)
              << tol.str() << (r.passed ? "PASS" : "FAIL") << '\n';
    ok = ok && r.passed;
  }
  return ok ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitgrad: orbit-weighted denoising targets for symmetric diffusion models"};
  app.require_subcommand(1);

  std::string config, variant, checkpoint, out, targets, timesteps = "100,500,900", variants = "baseline,orbdiff";
  std::string suite = "all";
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations, n;
  int repeats = 1000, probes = 1000;

  auto* train = app.add_subcommand("train", "train a denoiser");
  train->add_option("--config", config, "experiment config")->required();
  train->add_option("--variant", variant, "baseline | augment | orbdiff (default: from config)");
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--seed", seed, "root seed");
  train->add_option("--iterations", iterations, "override train.iterations");

  auto* sample = app.add_subcommand("sample", "draw samples from a trained denoiser");
  sample->add_option("--config", config, "experiment config")->required();
  sample->add_option("--checkpoint", checkpoint, "checkpoint.bin")->required();
  sample->add_option("--out", out, "samples CSV")->required();
  sample->add_option("--n", n, "number of samples");
  sample->add_option("--seed", seed, "root seed");

  auto* eval = app.add_subcommand("eval", "RMSD and W2 of samples against target atoms");
  eval->add_option("--samples", out, "samples CSV")->required();
  eval->add_option("--targets", targets, "target atoms, e.g. \"-1,1\"")->required();
  eval->add_option("--seed", seed, "seed recorded in the metrics");

  auto* variance = app.add_subcommand("variance", "gradient variance sweep at frozen parameters");
  variance->add_option("--config", config, "experiment config")->required();
  variance->add_option("--checkpoint", checkpoint, "checkpoint (default: freshly initialized net)");
  variance->add_option("--timesteps", timesteps, "comma-separated timesteps");
  variance->add_option("--repeats", repeats, "gradients per cell")->check(CLI::Range(2, 100000000));
  variance->add_option("--variants", variants, "baseline, augment, orbdiff, orbdiff_exact, orbdiff_u, orbdiff_wn");
  variance->add_option("--out", out, "CSV path (default: stdout)");
  variance->add_option("--seed", seed, "root seed");

  auto* equi = app.add_subcommand("equivariance", "equivariance error of a denoiser per timestep");
  equi->add_option("--config", config, "experiment config")->required();
  equi->add_option("--checkpoint", checkpoint, "checkpoint (default: freshly initialized net)");
  equi->add_option("--timesteps", timesteps, "comma-separated timesteps");
  equi->add_option("--probes", probes, "random probes per timestep")->check(CLI::PositiveNumber);
  equi->add_option("--seed", seed, "root seed");

  auto* oracle = app.add_subcommand("oracle", "run the estimator and kernel self-checks");
  oracle->add_option("--suite", suite, "all | estimator | counterexample | kernels | lemmas | flow");
  oracle->add_option("--seed", seed, "root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return cmd_train(config, variant, out, seed, iterations);
    if (*sample) return cmd_sample(config, checkpoint, out, n, seed);
    if (*eval) return cmd_eval(out, targets, seed.value_or(0));
    if (*variance) return cmd_variance(config, checkpoint, timesteps, repeats, variants, out, seed);
    if (*equi) return cmd_equivariance(config, checkpoint, timesteps, probes, seed);
    if (*oracle) return cmd_oracle(suite, seed.value_or(0));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::NumericalDivergence ? kNumericalError : kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
