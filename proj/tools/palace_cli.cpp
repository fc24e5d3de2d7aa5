// palace: command-line front end. Every subcommand writes its outputs plus
// <output>.manifest.json holding the resolved configuration, seeds and
// versions.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "palace/palace.hpp"

using nlohmann::json;
using namespace palace;

namespace {

struct ExperimentConfig {
  std::uint64_t seed = 42;
  int outer_folds = 10;
  int inner_folds = 3;
  std::vector<std::uint64_t> seeds{42};
  std::size_t K = 11;
  double alpha = 1.75;
  std::optional<double> sigma;
  std::vector<double> q_grid{0.25};
  std::string tau_strategy = "median-half-persistence";
  std::optional<double> tau;
  double tau_quantile = 0.1;
  std::size_t tau_pairs = 500;
  std::vector<double> C_grid{1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3};
  std::size_t n_max = 30;
  double delta = 0.05;
  std::string kernel = "landmark";
};

json to_json(const ExperimentConfig& c) {
  json j = {{"seed", c.seed},           {"outer_folds", c.outer_folds}, {"inner_folds", c.inner_folds},
            {"seeds", c.seeds},         {"K", c.K},                     {"alpha", c.alpha},
            {"q_grid", c.q_grid},       {"tau_strategy", c.tau_strategy}, {"tau_quantile", c.tau_quantile},
            {"tau_pairs", c.tau_pairs}, {"C_grid", c.C_grid},           {"n_max", c.n_max},
            {"delta", c.delta},         {"kernel", c.kernel}};
  j["sigma"] = c.sigma ? json(*c.sigma) : json(nullptr);
  j["tau"] = c.tau ? json(*c.tau) : json(nullptr);
  return j;
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
void take(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

ExperimentConfig load_experiment(const std::string& path) {
  ExperimentConfig c;
  if (path.empty()) return c;
  json j = read_json(path);
  take(j, "seed", c.seed);
  take(j, "outer_folds", c.outer_folds);
  take(j, "inner_folds", c.inner_folds);
  take(j, "seeds", c.seeds);
  take(j, "K", c.K);
  take(j, "alpha", c.alpha);
  take(j, "sigma", c.sigma);
  take(j, "q_grid", c.q_grid);
  take(j, "tau_strategy", c.tau_strategy);
  take(j, "tau", c.tau);
  take(j, "tau_quantile", c.tau_quantile);
  take(j, "tau_pairs", c.tau_pairs);
  take(j, "C_grid", c.C_grid);
  take(j, "n_max", c.n_max);
  take(j, "delta", c.delta);
  take(j, "kernel", c.kernel);
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.outer_folds < 2 || c.inner_folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (c.seeds.empty() || c.C_grid.empty() || (!c.sigma && c.q_grid.empty())) {
    throw std::invalid_argument("seed, C and bandwidth grids must be non-empty");
  }
  if (c.K == 0) throw std::invalid_argument("K must be >= 1");
  if (c.kernel != "landmark" && c.kernel != "rbf") throw std::invalid_argument("kernel must be landmark or rbf");
}

InflationConfig load_inflation(const std::string& path) {
  InflationConfig c;
  if (path.empty()) return c;
  json j = read_json(path);
  take(j, "clouds_per_class", c.clouds_per_class);
  take(j, "n_points", c.n_points);
  take(j, "noise_sd", c.noise_sd);
  take(j, "data_seed", c.data_seed);
  take(j, "cv_seed", c.cv_seed);
  take(j, "outer_folds", c.outer_folds);
  take(j, "inner_folds", c.inner_folds);
  take(j, "bandwidth_q", c.bandwidth_q);
  take(j, "C_grid", c.C_grid);
  take(j, "ells", c.ells);
  take(j, "n_max", c.n_max);
  take(j, "K", c.K);
  take(j, "alpha", c.alpha);
  take(j, "padding", c.padding);
  if (j.contains("units")) c.units = parse_units(j.at("units").get<std::string>());
  if (j.contains("dims")) {
    auto d = j.at("dims").get<std::string>();
    if (d != "h0h1" && d != "h1") throw std::invalid_argument("dims must be h0h1 or h1");
    c.dims = d == "h1" ? DiagramDims::H1 : DiagramDims::H0H1;
  }
  if (j.contains("grid_radius")) {
    auto r = j.at("grid_radius").get<std::string>();
    if (r != "scaled-nn" && r != "three-halves") throw std::invalid_argument("grid_radius must be scaled-nn or three-halves");
    c.grid_radius = r == "three-halves" ? GridRadiusRule::ThreeHalvesSpacing : GridRadiusRule::ScaledNearestNeighbor;
  }
  if (j.contains("grid_layout")) {
    auto l = j.at("grid_layout").get<std::string>();
    if (l != "offset" && l != "lattice") throw std::invalid_argument("grid_layout must be offset or lattice");
    c.grid_layout = l == "lattice" ? GridLayout::Lattice : GridLayout::Offset;
  }
  if (c.outer_folds < 2 || c.inner_folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (c.ells.empty() || c.C_grid.empty()) throw std::invalid_argument("ells and C_grid must be non-empty");
  return c;
}

/// Command line, working state and manifest of one invocation.
struct Run {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  json seeds = json::array();
  json inputs = json::array();
  json outputs = json::array();

  void write_manifest(const std::string& primary_output) const {
    json m = {{"tool", "palace"},
              {"version", kVersion},
              {"command", command},
              {"argv", argv},
              {"config", config},
              {"seeds", seeds},
              {"inputs", inputs},
              {"outputs", outputs},
              {"versions",
               {{"palace", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION},
                {"compiler", __VERSION__},
                {"cxx_standard", __cplusplus}}}};
    std::ofstream out(primary_output + ".manifest.json");
    if (!out) throw std::runtime_error("cannot write " + primary_output + ".manifest.json");
    out << m.dump(2) << '\n';
  }
};

std::ofstream open_out(Run& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  run.outputs.push_back(path);
  return out;
}

std::vector<int> labels_of(const std::vector<PersistenceDiagram>& d, const std::string& source) {
  std::vector<int> y;
  y.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d[i].label()) throw std::runtime_error(source + ": diagram " + std::to_string(i) + " has no label");
    y.push_back(*d[i].label());
  }
  return y;
}

std::vector<DiagramPoint> pooled_points(std::span<const PersistenceDiagram> d) {
  std::vector<DiagramPoint> out;
  for (const auto& x : d) out.insert(out.end(), x.points().begin(), x.points().end());
  return out;
}

/// Up to max_pairs cross-class index pairs, drawn without replacement.
std::vector<std::pair<std::size_t, std::size_t>> cross_class_pairs(std::span<const int> y, std::size_t max_pairs,
                                                                   std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      if (y[i] != y[j]) all.emplace_back(i, j);
    }
  }
  if (all.size() > max_pairs) {
    Rng rng(seed);
    rng.shuffle(all);
    all.resize(max_pairs);
    std::sort(all.begin(), all.end());
  }
  return all;
}

double resolve_tau(const ExperimentConfig& c, std::span<const PersistenceDiagram> d, std::span<const int> y) {
  if (c.tau) return *c.tau;
  if (c.tau_strategy == "median-half-persistence") return tau_median_half_persistence(d);
  if (c.tau_strategy == "mean-strongest-half-persistence") return tau_mean_strongest_half_persistence(d);
  if (c.tau_strategy == "bottleneck-quantile") {
    if (y.empty()) throw std::invalid_argument("bottleneck-quantile tau needs labeled diagrams");
    return tau_hat(d, y, c.tau_pairs, c.tau_quantile, c.seed);
  }
  throw std::invalid_argument("unknown tau strategy " + c.tau_strategy);
}

LandmarkConfiguration fps_config(std::span<const PersistenceDiagram> d, double tau, const ExperimentConfig& c) {
  auto support = pooled_points(d);
  if (support.empty()) throw std::invalid_argument("diagrams contain no points to place landmarks on");
  auto fps = fps_place(support, std::min(c.K, support.size()), 0);
  auto radii = assign_radii(fps.positions, c.alpha, tau);
  return LandmarkConfiguration::equal_weights(fps.positions, radii, tau);
}

CVOptions cv_options(const ExperimentConfig& c) {
  CVOptions o;
  o.outer_folds = c.outer_folds;
  o.inner_folds = c.inner_folds;
  o.seeds = c.seeds;
  o.C_grid = c.C_grid;
  if (c.sigma) {
    o.bandwidth = BandwidthMode::Fixed;
    o.sigma_grid = {*c.sigma};
  } else {
    o.sigma_grid = c.q_grid;
  }
  o.kernel = c.kernel == "rbf" ? KernelKind::JointRbf : KernelKind::Landmark;
  o.solver.check_psd = true;
  return o;
}

double resolve_sigma(const ExperimentConfig& c, const Eigen::MatrixXd& E) {
  if (c.sigma) return *c.sigma;
  try {
    return bandwidth_quantile(E, c.q_grid.front());
  } catch (const DegenerateEmbedding&) {
    return 1.0;
  }
}

// ---------------------------------------------------------------------------
// Subcommands

struct Common {
  std::string config_path;
  std::string out;
  // Flags given on the command line override the JSON config.
  std::optional<std::size_t> K;
  std::optional<double> alpha, sigma, tau, delta;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::optional<std::string> tau_strategy, kernel;

  ExperimentConfig resolve() const {
    auto c = load_experiment(config_path);
    if (K) c.K = *K;
    if (alpha) c.alpha = *alpha;
    if (sigma) c.sigma = *sigma;
    if (tau) c.tau = *tau;
    if (delta) c.delta = *delta;
    if (seed) c.seed = *seed;
    if (folds) c.outer_folds = *folds;
    if (tau_strategy) c.tau_strategy = *tau_strategy;
    if (kernel) c.kernel = *kernel;
    validate(c);
    return c;
  }
};

void add_config(CLI::App* sub, Common& c) { sub->add_option("--config", c.config_path, "JSON experiment config")->check(CLI::ExistingFile); }
void add_out(CLI::App* sub, Common& c) { sub->add_option("-o,--out", c.out, "output path")->required(); }

int cmd_gen(Run& run, int classes, std::size_t per_class, std::size_t n_points, double noise, std::uint64_t seed,
            const std::string& out_path) {
  run.config = {{"classes", classes}, {"per_class", per_class}, {"n_points", n_points}, {"noise_sd", noise}};
  run.seeds = {seed};
  std::vector<PointCloud> clouds;
  std::uint64_t index = 0;
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++index) clouds.push_back(gen_annulus(c, n_points, noise, child_seed(seed, index)));
  }
  auto out = open_out(run, out_path);
  write_point_clouds(out, clouds);
  return 0;
}

int cmd_persist(Run& run, const std::string& in, const std::string& dims, const std::string& units, std::size_t n_max,
                const std::string& out_path) {
  run.config = {{"dims", dims}, {"units", units}, {"n_max", n_max}};
  run.inputs.push_back(in);
  auto u = parse_units(units);
  std::vector<PersistenceDiagram> out_d;
  for (const auto& cloud : read_point_clouds(in)) {
    auto r = rips_persistence(cloud);
    PersistenceDiagram d = r.h1;
    if (dims == "h0h1") {
      std::vector<DiagramPoint> pts = r.h0.points();
      pts.insert(pts.end(), r.h1.points().begin(), r.h1.points().end());
      d = PersistenceDiagram(std::move(pts), cloud.label, "rips-h0h1");
    } else if (dims == "h0") {
      d = r.h0;
    }
    d = convert_filtration(d, u);
    if (n_max > 0) d = top_persistence_filter(d, n_max);
    d.set_label(cloud.label);
    out_d.push_back(std::move(d));
  }
  auto out = open_out(run, out_path);
  write_diagrams(out, out_d);
  return 0;
}

int cmd_place(Run& run, const Common& opt, const std::string& in, const std::string& method, double grid_L,
              const std::string& layout) {
  auto c = opt.resolve();
  run.inputs.push_back(in);
  auto d = read_diagrams(in);
  std::vector<int> y;
  if (std::all_of(d.begin(), d.end(), [](const auto& x) { return x.label().has_value(); })) y = labels_of(d, in);
  double tau = resolve_tau(c, d, y);
  auto support = pooled_points(d);
  std::optional<LandmarkConfiguration> cfg;
  if (method == "fps") {
    cfg = fps_config(d, tau, c);
  } else {
    double L = grid_L > 0.0 ? grid_L : 1.05 * [&] {
      double m = 0.0;
      for (const auto& x : d) m = std::max(m, x.max_persistence());
      return m;
    }();
    auto lay = layout == "lattice" ? GridLayout::Lattice : GridLayout::Offset;
    double R = matched_grid_spacing(L, c.K, lay);
    auto grid = uniform_grid_positions(L, R, lay);
    auto radii = method == "grid-cover" ? std::vector<double>(grid.positions.size(), 1.5 * R)
                                        : assign_radii(grid.positions, c.alpha, tau);
    cfg = LandmarkConfiguration::equal_weights(grid.positions, radii, tau);
    run.config["grid"] = {{"L", L}, {"R", R}, {"layout", layout}};
  }
  run.config.update(to_json(c));
  run.config["method"] = method;
  run.config["resolved_tau"] = tau;
  run.seeds = {c.seed};

  json j = config_to_json(*cfg);
  if (!support.empty()) {
    auto adm = check_admissibility(*cfg, support);
    j["diagnostics"] = {{"lebesgue", adm.lebesgue},
                        {"admissible", adm.admissible},
                        {"cond_shrink", adm.cond_shrink},
                        {"cond_radius", adm.cond_radius},
                        {"covering_radius", covering_radius(cfg->positions(), support)},
                        {"rho_nu", rho_nu(*cfg).value},
                        {"rho_eff", rho_eff(*cfg, support).value}};
  }
  auto out = open_out(run, opt.out);
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_embed(Run& run, const std::string& in, const std::string& config_path, const std::string& out_path) {
  run.inputs = {in, config_path};
  auto d = read_diagrams(in);
  auto cfg = read_config(config_path);
  run.config = {{"K", cfg.size()}, {"tau", cfg.tau()}};
  auto out = open_out(run, out_path);
  write_embedding_csv(out, embed_batch(d, cfg));
  return 0;
}

int cmd_gram(Run& run, const Common& opt, const std::string& in) {
  auto c = opt.resolve();
  run.inputs.push_back(in);
  Eigen::MatrixXd E = read_matrix_csv(in);
  double sigma = resolve_sigma(c, E);
  Eigen::MatrixXd G = c.kernel == "rbf" ? rbf_gram(E, sigma) : gram(E, sigma).entries;
  run.config = {{"sigma", sigma}, {"q", c.sigma ? json(nullptr) : json(c.q_grid.front())}, {"kernel", c.kernel}};
  {
    auto out = open_out(run, opt.out);
    write_matrix_csv(out, G);
  }
  json side = {{"sigma", sigma}, {"K", E.cols()}, {"m", E.rows()}, {"kernel", c.kernel}};
  auto sc = open_out(run, opt.out + ".json");
  sc << side.dump(2) << '\n';
  return 0;
}

/// Per-fold featurizer: a fixed configuration, or FPS placement on the
/// training fold alone.
Featurizer make_featurizer(const std::vector<PersistenceDiagram>& d, const std::vector<int>& y,
                           const std::optional<LandmarkConfiguration>& fixed, const ExperimentConfig& c) {
  return [&d, &y, fixed, c](std::span<const std::size_t> tr, std::span<const std::size_t> te) {
    std::vector<PersistenceDiagram> train, test;
    std::vector<int> ytr;
    for (auto i : tr) {
      train.push_back(d[i]);
      ytr.push_back(y[i]);
    }
    for (auto i : te) test.push_back(d[i]);
    LandmarkConfiguration cfg = fixed ? *fixed : fps_config(train, resolve_tau(c, train, ytr), c);
    return FoldFeatures{embed_batch(train, cfg), embed_batch(test, cfg)};
  };
}

int cmd_train(Run& run, const Common& opt, const std::string& in, const std::string& config_path) {
  auto c = opt.resolve();
  run.inputs.push_back(in);
  auto d = read_diagrams(in);
  auto y = labels_of(d, in);
  std::optional<LandmarkConfiguration> fixed;
  if (!config_path.empty()) {
    fixed = read_config(config_path);
    run.inputs.push_back(config_path);
  }
  auto r = cross_validate(y, make_featurizer(d, y, fixed, c), cv_options(c));
  run.config = to_json(c);
  run.config["placement"] = fixed ? "fixed" : "fps-per-fold";
  run.seeds = c.seeds;
  auto out = open_out(run, opt.out);
  write_cv_csv(out, r);
  std::cout << "cv accuracy " << 100.0 * r.mean << " +- " << 100.0 * r.std << '\n';
  return 0;
}

int cmd_select(Run& run, const Common& opt, const std::string& in, const std::vector<std::string>& configs,
               bool with_cv) {
  auto c = opt.resolve();
  run.inputs.push_back(in);
  auto d = read_diagrams(in);
  auto y = labels_of(d, in);
  double th = tau_hat(d, y, c.tau_pairs, c.tau_quantile, c.seed);
  std::vector<SweepRow> rows;
  for (const auto& path : configs) {
    run.inputs.push_back(path);
    auto cfg = read_config(path);
    Eigen::MatrixXd E = embed_batch(d, cfg);
    Eigen::MatrixXd G = c.kernel == "rbf" ? rbf_gram(E, resolve_sigma(c, E)) : gram(E, resolve_sigma(c, E)).entries;
    SweepRow row;
    row.candidate_id = std::filesystem::path(path).stem().string();
    row.report = selector_report(G, y, cfg.size(), th);
    if (with_cv) row.cv_accuracy = cross_validate(y, make_featurizer(d, y, cfg, c), cv_options(c)).mean;
    else row.cv_accuracy = std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  run.config = to_json(c);
  run.config["with_cv"] = with_cv;
  run.seeds = c.seeds;
  run.seeds.push_back(c.seed);
  auto out = open_out(run, opt.out);
  write_sweep_csv(out, rows);
  if (with_cv && rows.size() >= 2) {
    std::vector<double> acc;
    for (const auto& r : rows) acc.push_back(r.cv_accuracy);
    auto column = [&](auto f) {
      std::vector<double> v;
      for (const auto& r : rows) v.push_back(f(r.report));
      return v;
    };
    std::cout << "spearman gamma_hat " << spearman(column([](const auto& s) { return s.gamma_hat; }), acc) << '\n'
              << "spearman score " << spearman(column([](const auto& s) { return s.score; }), acc) << '\n'
              << "spearman fisher_ker " << spearman(column([](const auto& s) { return s.fisher_ker; }), acc) << '\n'
              << "spearman rho_mah " << spearman(column([](const auto& s) { return s.rho_mah; }), acc) << '\n';
  }
  return 0;
}

int cmd_certify(Run& run, const Common& opt, const std::string& train_path, const std::string& test_path,
                const std::string& config_path, const std::string& dataset, const std::vector<std::string>& modes) {
  auto c = opt.resolve();
  run.inputs = {train_path, test_path, config_path};
  auto train = read_diagrams(train_path);
  auto test = read_diagrams(test_path);
  auto cfg = read_config(config_path);
  auto ytr = labels_of(train, train_path);
  auto yte = labels_of(test, test_path);
  auto stats = fit_class_stats(embed_batch(train, cfg), ytr, c.n_max, cfg.tau());
  Eigen::MatrixXd Ete = embed_batch(test, cfg);
  std::vector<CertificateReportRow> rows;
  for (const auto& m : modes) {
    CertifyOptions o;
    std::string base = m;
    if (base.size() > 7 && base.substr(base.size() - 7) == "-global") {
      o.global = true;
      base = base.substr(0, base.size() - 7);
    }
    if (base == "pinelis") o.mode = RadiusMode::Pinelis;
    else if (base == "gaussian") o.variant = QuantileVariant::Multivariate;
    else if (base == "gaussian-univariate") o.variant = QuantileVariant::Univariate;
    else throw std::invalid_argument("unknown certificate mode " + m);
    rows.push_back(certificate_report(dataset, stats, Ete, yte, c.delta, o));
  }
  run.config = to_json(c);
  run.config["modes"] = modes;
  auto out = open_out(run, opt.out);
  write_certificate_csv(out, rows);
  return 0;
}

const char* status_name(AuditStatus s) {
  switch (s) {
    case AuditStatus::Audited: return "audited";
    case AuditStatus::Vacuous: return "vacuous";
    case AuditStatus::ZeroDistance: return "zero-distance";
    case AuditStatus::NotAuditable: return "not-auditable";
  }
  return "?";
}

int cmd_audit_ni(Run& run, const Common& opt, const std::string& in, std::size_t max_pairs) {
  auto c = opt.resolve();
  run.inputs.push_back(in);
  auto d = read_diagrams(in);
  auto y = labels_of(d, in);
  auto pairs = cross_class_pairs(y, max_pairs, c.seed);
  run.config = {{"max_pairs", max_pairs}};
  run.seeds = {c.seed};
  auto out = open_out(run, opt.out);
  out.precision(10);
  out << "i,j,status,bottleneck,min_cross_ratio,passes,within_scale_ok\n";
  std::size_t audited = 0, passed = 0;
  for (auto [i, j] : pairs) {
    auto a = audit_noninterference(d[i], d[j]);
    audited += a.status == AuditStatus::Audited;
    passed += a.status == AuditStatus::Audited && a.passes;
    out << i << ',' << j << ',' << status_name(a.status) << ',' << a.distance << ',' << a.min_cross_ratio << ','
        << a.passes << ',' << a.within_scale_ok << '\n';
  }
  std::cout << passed << " of " << audited << " audited pairs pass (" << pairs.size() << " pairs)\n";
  return 0;
}

int cmd_audit_bound(Run& run, const Common& opt, const std::string& in, const std::string& config_path,
                    std::size_t max_pairs) {
  auto c = opt.resolve();
  run.inputs = {in, config_path};
  auto d = read_diagrams(in);
  auto y = labels_of(d, in);
  auto cfg = read_config(config_path);
  std::vector<std::pair<PersistenceDiagram, PersistenceDiagram>> pairs;
  for (auto [i, j] : cross_class_pairs(y, max_pairs, c.seed)) pairs.emplace_back(d[i], d[j]);
  auto a = audit_certificate(pairs, cfg);
  auto support = pooled_points(d);
  auto adm = check_admissibility(cfg, support);
  run.config = {{"max_pairs", max_pairs}};
  run.seeds = {c.seed};
  auto out = open_out(run, opt.out);
  out.precision(10);
  out << "n_pairs,n_tau_separated,bound_holds_pct,ratio_p25,ratio_p50,ratio_p75,ratio_min,admissible,lebesgue,rho_nu\n";
  out << a.n_pairs << ',' << a.n_tau << ',' << a.bound_pct << ',' << a.p25 << ',' << a.p50 << ',' << a.p75 << ','
      << a.min << ',' << adm.admissible << ',' << adm.lebesgue << ',' << rho_nu(cfg).value << '\n';
  return 0;
}

int cmd_bench_inflate(Run& run, const std::string& config_path, const std::string& out_path, bool quiet) {
  auto cfg = load_inflation(config_path);
  if (!config_path.empty()) run.inputs.push_back(config_path);
  run.config = inflation_config_json(cfg);
  run.seeds = {{"data_seed", cfg.data_seed}, {"cv_seed", cfg.cv_seed}};
  auto r = run_domain_inflation(cfg, quiet ? nullptr : &std::cerr);
  run.config["tau_all"] = r.tau_all;
  auto out = open_out(run, out_path);
  write_inflation_csv(out, r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"palace: adaptive landmark kernels for persistence diagrams"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Run run;
  for (int i = 0; i < argc; ++i) run.argv.push_back(argv[i]);

  auto add_common = [](CLI::App* sub, Common& c) {
    add_config(sub, c);
    add_out(sub, c);
    sub->add_option("--K", c.K, "landmark budget");
    sub->add_option("--alpha", c.alpha, "radius factor");
    sub->add_option("--sigma", c.sigma, "fixed bandwidth (overrides the quantile rule)");
    sub->add_option("--tau", c.tau, "separation scale (overrides the tau strategy)");
    sub->add_option("--tau-strategy", c.tau_strategy)
        ->check(CLI::IsMember({"median-half-persistence", "mean-strongest-half-persistence", "bottleneck-quantile"}));
    sub->add_option("--delta", c.delta, "failure probability");
    sub->add_option("--seed", c.seed);
    sub->add_option("--folds", c.folds, "outer CV folds");
    sub->add_option("--kernel", c.kernel, "landmark, or the joint rbf for comparison")
        ->check(CLI::IsMember({"landmark", "rbf"}));
  };

  Common common;
  std::string in, in2, config_path, method = "fps", layout = "offset", dims = "h1", units = "radius",
                                    dataset = "dataset";
  std::vector<std::string> configs, modes{"pinelis", "gaussian", "gaussian-univariate"};
  int classes = 4;
  std::size_t per_class = 100, n_points = 60, n_max = 30, max_pairs = 2000;
  double noise = 0.08, grid_L = 0.0;
  std::uint64_t gen_seed = 42;
  bool with_cv = false, quiet = false;

  auto* gen = app.add_subcommand("gen", "sample annulus point clouds");
  gen->add_option("--classes", classes)->check(CLI::Range(1, 4));
  gen->add_option("--per-class", per_class);
  gen->add_option("--points", n_points);
  gen->add_option("--noise", noise);
  gen->add_option("--seed", gen_seed);
  gen->add_option("-o,--out", common.out)->required();

  auto* persist = app.add_subcommand("persist", "Vietoris-Rips diagrams of point clouds");
  persist->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  persist->add_option("--dims", dims)->check(CLI::IsMember({"h0", "h1", "h0h1"}));
  persist->add_option("--units", units)->check(CLI::IsMember({"diameter", "radius", "squared-radius"}));
  persist->add_option("--n-max", n_max, "keep the n most persistent points (0 keeps all)");
  persist->add_option("-o,--out", common.out)->required();

  auto* place = app.add_subcommand("place", "place landmarks on a diagram set");
  place->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  place->add_option("--method", method)->check(CLI::IsMember({"fps", "grid", "grid-cover"}));
  place->add_option("--L", grid_L, "grid domain (default 1.05 x max persistence)");
  place->add_option("--layout", layout)->check(CLI::IsMember({"offset", "lattice"}));
  add_common(place, common);

  auto* emb = app.add_subcommand("embed", "embed diagrams under a landmark configuration");
  emb->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  emb->add_option("--landmarks", config_path)->required()->check(CLI::ExistingFile);
  emb->add_option("-o,--out", common.out)->required();

  auto* gr = app.add_subcommand("gram", "kernel gram of an embedding CSV");
  gr->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  add_common(gr, common);

  auto* train = app.add_subcommand("train", "stratified cross-validated SVM accuracy");
  train->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  train->add_option("--landmarks", config_path, "fixed configuration (default: FPS on each training fold)")
      ->check(CLI::ExistingFile);
  add_common(train, common);

  auto* sel = app.add_subcommand("select", "selector sweep over candidate configurations");
  sel->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  sel->add_option("--candidates", configs)->required()->check(CLI::ExistingFile);
  sel->add_flag("--cv", with_cv, "also run CV per candidate and report Spearman correlations");
  add_common(sel, common);

  auto* cert = app.add_subcommand("certify", "per-prediction certificate firing report");
  cert->add_option("--train", in)->required()->check(CLI::ExistingFile);
  cert->add_option("--test", in2)->required()->check(CLI::ExistingFile);
  cert->add_option("--landmarks", config_path)->required()->check(CLI::ExistingFile);
  cert->add_option("--dataset", dataset);
  cert->add_option("--modes", modes);
  add_common(cert, common);

  auto* ani = app.add_subcommand("audit-ni", "non-interference audit over cross-class pairs");
  ani->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  ani->add_option("--max-pairs", max_pairs);
  add_common(ani, common);

  auto* ab = app.add_subcommand("audit-bound", "lower-bound audit over tau-separated cross-class pairs");
  ab->add_option("-i,--in", in)->required()->check(CLI::ExistingFile);
  ab->add_option("--landmarks", config_path)->required()->check(CLI::ExistingFile);
  ab->add_option("--max-pairs", max_pairs);
  add_common(ab, common);

  auto* bench = app.add_subcommand("bench-inflate", "domain-inflation experiment");
  bench->add_option("--config", config_path, "JSON overrides of the experiment defaults")->check(CLI::ExistingFile);
  bench->add_option("-o,--out", common.out)->required();
  bench->add_flag("--quiet", quiet);

  CLI11_PARSE(app, argc, argv);

  try {
    int rc = 0;
    auto* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    if (sub == gen) rc = cmd_gen(run, classes, per_class, n_points, noise, gen_seed, common.out);
    else if (sub == persist) rc = cmd_persist(run, in, dims, units, n_max, common.out);
    else if (sub == place) rc = cmd_place(run, common, in, method, grid_L, layout);
    else if (sub == emb) rc = cmd_embed(run, in, config_path, common.out);
    else if (sub == gr) rc = cmd_gram(run, common, in);
    else if (sub == train) rc = cmd_train(run, common, in, config_path);
    else if (sub == sel) rc = cmd_select(run, common, in, configs, with_cv);
    else if (sub == cert) rc = cmd_certify(run, common, in, in2, config_path, dataset, modes);
    else if (sub == ani) rc = cmd_audit_ni(run, common, in, max_pairs);
    else if (sub == ab) rc = cmd_audit_bound(run, common, in, config_path, max_pairs);
    else if (sub == bench) rc = cmd_bench_inflate(run, config_path, common.out, quiet);
    run.write_manifest(common.out);
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
