#include "orbitgrad/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "orbitgrad/error.hpp"

namespace orbitgrad {

namespace pt = boost::property_tree;

namespace {

std::string unquote(std::string s) {
  boost::algorithm::trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

template <class T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto raw = tree.get_optional<std::string>(key);
  if (!raw) return fallback;
  const std::string v = unquote(*raw);
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorCode::InvalidConfig, key + ": expected true or false, got '" + v + "'");
  } else {
    std::istringstream is(v);
    T out{};
    is >> out;
    if (!is || !is.eof()) throw Error(ErrorCode::InvalidConfig, key + ": cannot parse '" + v + "'");
    return out;
  }
}

std::vector<Point> parse_points(const std::string& text, Space space) {
  std::vector<Point> out;
  std::vector<std::string> rows;
  boost::algorithm::split(rows, text, boost::is_any_of(";"));
  for (auto& row : rows) {
    boost::algorithm::trim(row);
    if (row.empty()) continue;
    std::vector<std::string> cols;
    boost::algorithm::split(cols, row, boost::is_any_of(","));
    Point p(std::vector<double>{}, space);
    for (auto& c : cols) {
      boost::algorithm::trim(c);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) throw Error(ErrorCode::InvalidConfig, "dataset.points: bad number '" + c + "'");
      p.x.push_back(space == Space::Torus ? wrap_unit(v) : v);
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "dataset.points is empty");
  return out;
}

std::string format_points(const std::vector<Point>& pts) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ";";
    for (std::size_t j = 0; j < pts[i].dim(); ++j) os << (j ? "," : "") << pts[i][j];
  }
  return os.str();
}

GroupKind parse_group_kind(const std::string& s) {
  if (s == "reflection") return GroupKind::Reflection;
  if (s == "rotation") return GroupKind::Rotation;
  if (s == "torus") return GroupKind::TorusTranslation;
  if (s == "permutation") return GroupKind::Permutation;
  throw Error(ErrorCode::InvalidConfig, "group.kind: unknown '" + s + "'");
}

std::string group_kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::Reflection: return "reflection";
    case GroupKind::Rotation: return "rotation";
    case GroupKind::TorusTranslation: return "torus";
    case GroupKind::Permutation: return "permutation";
  }
  return "?";
}

GroupSampler make_proposal(const ExperimentConfig& cfg, const std::string& proposal, const Problem& problem) {
  if (proposal == "uniform") return GroupSampler::uniform(cfg.group_kind, cfg.group_size, cfg.include_identity);
  if (proposal == "enumeration") {
    if (problem.elements.empty()) throw Error(ErrorCode::InvalidConfig, "enumeration proposal needs a finite group");
    return GroupSampler::enumeration(problem.elements, cfg.include_identity);
  }
  if (proposal == "wrapped_normal") {
    if (cfg.group_kind != GroupKind::TorusTranslation) {
      throw Error(ErrorCode::InvalidConfig, "wrapped_normal proposal requires group.kind = torus");
    }
    auto schedule = problem.kernel.schedule_ptr();
    const double scale = cfg.bandwidth_scale;
    return GroupSampler::wrapped_normal(
        cfg.group_size, [schedule, scale](int t) { return scale * schedule->sigma(t); }, cfg.include_identity);
  }
  throw Error(ErrorCode::InvalidConfig, "group.proposal: unknown '" + proposal + "'");
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "baseline") return Variant::Baseline;
  if (name == "augment") return Variant::Augment;
  if (name == "orbdiff") return Variant::OrbDiff;
  throw Error(ErrorCode::InvalidConfig, "unknown variant '" + name + "'");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Augment: return "augment";
    case Variant::OrbDiff: return "orbdiff";
  }
  return "?";
}

ExperimentConfig parse_config(std::istream& in) {
  std::ostringstream cleaned;
  for (std::string line; std::getline(in, line);) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') continue;
    cleaned << line << '\n';
  }
  pt::ptree tree;
  try {
    std::istringstream is(cleaned.str());
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }

  ExperimentConfig c;
  const std::string space = get<std::string>(tree, "dataset.space", "euclidean");
  if (space != "euclidean" && space != "torus") throw Error(ErrorCode::InvalidConfig, "dataset.space: unknown '" + space + "'");
  c.space = space == "torus" ? Space::Torus : Space::Euclidean;
  c.points = parse_points(get<std::string>(tree, "dataset.points", "1"), c.space);

  c.schedule_kind = get(tree, "schedule.kind", c.schedule_kind);
  c.steps = get(tree, "schedule.steps", c.steps);
  c.beta_min = get(tree, "schedule.beta_min", c.beta_min);
  c.beta_max = get(tree, "schedule.beta_max", c.beta_max);
  c.sigma_min = get(tree, "schedule.sigma_min", c.sigma_min);
  c.sigma_max = get(tree, "schedule.sigma_max", c.sigma_max);

  c.group_kind = parse_group_kind(get<std::string>(tree, "group.kind", "reflection"));
  c.group_size = get(tree, "group.size", c.group_size);
  c.cyclic_order = get(tree, "group.cyclic_order", c.cyclic_order);
  c.proposal = get(tree, "group.proposal", c.proposal);
  c.bandwidth_scale = get(tree, "group.bandwidth_scale", c.bandwidth_scale);
  c.exact = get(tree, "group.exact", c.exact);
  c.n_group_samples = get(tree, "group.n_samples", c.n_group_samples);
  c.include_identity = get(tree, "group.include_identity", c.include_identity);

  const std::string arch = get<std::string>(tree, "net.architecture", "equi_reflect");
  if (arch == "plain") {
    c.architecture = Architecture::Plain;
  } else if (arch == "equi_reflect") {
    c.architecture = Architecture::EquiReflect;
  } else {
    throw Error(ErrorCode::InvalidConfig, "net.architecture: unknown '" + arch + "'");
  }
  c.hidden = get(tree, "net.hidden", c.hidden);

  c.variant = parse_variant(get<std::string>(tree, "train.variant", variant_name(c.variant)));
  c.iterations = get(tree, "train.iterations", c.iterations);
  c.batch = get(tree, "train.batch", c.batch);
  c.adam.lr = get(tree, "train.lr", c.adam.lr);
  c.adam.beta1 = get(tree, "train.beta1", c.adam.beta1);
  c.adam.beta2 = get(tree, "train.beta2", c.adam.beta2);
  c.adam.eps = get(tree, "train.eps", c.adam.eps);
  c.seed = get(tree, "train.seed", c.seed);
  c.log_every = get(tree, "train.log_every", c.log_every);

  c.n_samples = get(tree, "sample.n", c.n_samples);
  c.antithetic = get(tree, "sample.antithetic", c.antithetic);

  if (c.steps < 2 || c.iterations < 0 || c.batch < 1 || c.hidden < 1 || c.n_group_samples < 1 || c.log_every < 1 ||
      c.n_samples < 1 || c.group_size < 1) {
    throw Error(ErrorCode::InvalidConfig, "sizes and counts must be positive");
  }
  for (const auto& p : c.points) {
    if (p.dim() != c.points.front().dim()) throw Error(ErrorCode::InvalidConfig, "dataset points differ in dimension");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file '" + path.string() + "'");
  return parse_config(in);
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
  out << std::setprecision(17) << std::boolalpha;
  out << "[dataset]\n"
      << "space = " << (c.space == Space::Torus ? "torus" : "euclidean") << "\n"
      << "points = \"" << format_points(c.points) << "\"\n\n";
  out << "[schedule]\n"
      << "kind = " << c.schedule_kind << "\nsteps = " << c.steps << "\nbeta_min = " << c.beta_min
      << "\nbeta_max = " << c.beta_max << "\nsigma_min = " << c.sigma_min << "\nsigma_max = " << c.sigma_max << "\n\n";
  out << "[group]\n"
      << "kind = " << group_kind_name(c.group_kind) << "\nsize = " << c.group_size
      << "\ncyclic_order = " << c.cyclic_order << "\nproposal = " << c.proposal
      << "\nbandwidth_scale = " << c.bandwidth_scale << "\nexact = " << c.exact << "\nn_samples = " << c.n_group_samples
      << "\ninclude_identity = " << c.include_identity << "\n\n";
  out << "[net]\n"
      << "architecture = " << (c.architecture == Architecture::Plain ? "plain" : "equi_reflect")
      << "\nhidden = " << c.hidden << "\n\n";
  out << "[train]\n"
      << "variant = " << variant_name(c.variant) << "\niterations = " << c.iterations << "\nbatch = " << c.batch
      << "\nlr = " << c.adam.lr << "\nbeta1 = " << c.adam.beta1 << "\nbeta2 = " << c.adam.beta2
      << "\neps = " << c.adam.eps << "\nseed = " << c.seed << "\nlog_every = " << c.log_every << "\n\n";
  out << "[sample]\n"
      << "n = " << c.n_samples << "\nantithetic = " << c.antithetic << "\n";
}

std::shared_ptr<const NoiseSchedule> make_schedule(const ExperimentConfig& c) {
  if (c.schedule_kind == "vp") return std::make_shared<const NoiseSchedule>(make_vp_schedule(c.steps, c.beta_min, c.beta_max));
  if (c.schedule_kind == "geometric") {
    return std::make_shared<const NoiseSchedule>(make_geometric_schedule(c.steps, c.sigma_min, c.sigma_max));
  }
  throw Error(ErrorCode::InvalidConfig, "schedule.kind: unknown '" + c.schedule_kind + "'");
}

Problem make_problem(const ExperimentConfig& c) {
  const KernelKind kernel_kind = c.space == Space::Torus ? KernelKind::WrappedNormal : KernelKind::Gaussian;
  std::vector<GroupElement> elements;
  switch (c.group_kind) {
    case GroupKind::Reflection: elements = reflection_group(); break;
    case GroupKind::TorusTranslation:
      if (c.cyclic_order > 0) elements = cyclic_translations(c.cyclic_order, c.group_size);
      break;
    case GroupKind::Permutation:
      if (c.group_size <= 6) elements = all_permutations(c.group_size);
      break;
    case GroupKind::Rotation: break;
  }
  GroupSampler haar = GroupSampler::uniform(c.group_kind, c.group_size);
  if (c.group_kind == GroupKind::TorusTranslation && c.cyclic_order > 0) haar = GroupSampler::enumeration(elements);
  return Problem{Dataset(c.points), ForwardKernel(kernel_kind, make_schedule(c)), std::move(haar), std::move(elements)};
}

TargetEstimator make_estimator(const ExperimentConfig& c, const std::string& name) {
  TargetEstimator est;
  est.name = name;
  est.n_group_samples = c.n_group_samples;
  const Problem problem = make_problem(c);
  if (name == "baseline" || name == "augment") {
    est.variant = parse_variant(name);
    est.exact = false;
    return est;
  }
  est.variant = Variant::OrbDiff;
  if (name == "orbdiff") {
    est.exact = c.exact;
    if (!est.exact) est.proposal = make_proposal(c, c.proposal, problem);
  } else if (name == "orbdiff_exact") {
    est.exact = true;
  } else if (name == "orbdiff_u") {
    est.exact = false;
    est.proposal = make_proposal(c, "uniform", problem);
  } else if (name == "orbdiff_wn") {
    est.exact = false;
    est.proposal = make_proposal(c, "wrapped_normal", problem);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown estimator '" + name + "'");
  }
  if (est.exact && problem.elements.empty()) {
    throw Error(ErrorCode::InvalidConfig, "exact orbit targets need a finite, enumerated group");
  }
  return est;
}

TrainConfig make_train_config(const ExperimentConfig& c) {
  TrainConfig tc;
  tc.estimator = make_estimator(c, variant_name(c.variant));
  tc.iterations = c.iterations;
  tc.batch = c.batch;
  tc.adam = c.adam;
  tc.seed = c.seed;
  tc.log_every = c.log_every;
  return tc;
}

Denoiser make_initial_denoiser(const ExperimentConfig& c) {
  Rng rng(derive_seed(c.seed, "init"));
  return Denoiser(c.architecture, MlpParams::init(static_cast<int>(c.points.front().dim()), c.hidden, rng));
}

}  // namespace orbitgrad
