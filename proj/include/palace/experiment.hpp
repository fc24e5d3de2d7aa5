// Synthetic annulus data and the domain-inflation experiment.
//
// Four classes of noisy annuli that differ only in hole size. Every diagram
// then gets one extra point (0, ell); the far point stretches the diagram
// domain while the class signal stays near the origin. A uniform grid of
// fixed cardinality spreads its landmarks over the stretched domain, an FPS
// placement follows the data.

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "palace/cover.hpp"
#include "palace/cv.hpp"
#include "palace/embed.hpp"
#include "palace/landmarks.hpp"
#include "palace/random.hpp"
#include "palace/rips.hpp"

namespace palace {

inline constexpr std::array<double, 4> kAnnulusInnerRadii{0.85, 0.70, 0.50, 0.00};

/// Area-uniform sample of the annulus [r_in, 1] for the class, plus isotropic
/// Gaussian noise.
inline PointCloud gen_annulus(int class_index, std::size_t n_points, double noise_sd, std::uint64_t seed) {
  if (class_index < 0 || class_index >= static_cast<int>(kAnnulusInnerRadii.size())) {
    throw std::invalid_argument("gen_annulus: class index must be 0..3");
  }
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("gen_annulus: noise_sd must be >= 0");
  const double r_in = kAnnulusInnerRadii[static_cast<std::size_t>(class_index)];
  Rng rng(seed);
  PointCloud c;
  c.label = class_index;
  c.points.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    double r = std::sqrt(rng.uniform() * (1.0 - r_in * r_in) + r_in * r_in);
    double a = 2.0 * std::numbers::pi * rng.uniform();
    double x = r * std::cos(a), y = r * std::sin(a);
    if (noise_sd > 0.0) {
      x += noise_sd * rng.normal();
      y += noise_sd * rng.normal();
    }
    c.points.push_back({x, y});
  }
  return c;
}

/// A with the point (0, ell) appended; ell = 0 would be a zero-persistence
/// point and leaves A unchanged.
inline PersistenceDiagram inflate_diagram(const PersistenceDiagram& A, double ell) {
  if (!(ell >= 0.0)) throw std::invalid_argument("inflate_diagram: ell must be >= 0");
  PersistenceDiagram out = A;
  if (ell > 0.0) out.push_back({0.0, ell});
  return out;
}

/// Scale in which Rips filtration values are reported. The Rips value of a
/// simplex is its diameter; radius halves it and squared radius squares the
/// half, which puts diagrams on the scale of an alpha filtration.
enum class FiltrationUnits { Diameter, Radius, SquaredRadius };

inline double convert_filtration(double diameter, FiltrationUnits u) {
  switch (u) {
    case FiltrationUnits::Diameter: return diameter;
    case FiltrationUnits::Radius: return diameter / 2.0;
    case FiltrationUnits::SquaredRadius: return diameter * diameter / 4.0;
  }
  return diameter;
}

inline PersistenceDiagram convert_filtration(const PersistenceDiagram& A, FiltrationUnits u) {
  std::vector<DiagramPoint> pts;
  for (const auto& p : A.points()) {
    DiagramPoint q{convert_filtration(p.birth, u), convert_filtration(p.death, u)};
    if (q.persistence() > 0.0) pts.push_back(q);
  }
  return PersistenceDiagram(std::move(pts), A.label(), A.tag());
}

inline std::string units_name(FiltrationUnits u) {
  switch (u) {
    case FiltrationUnits::Diameter: return "diameter";
    case FiltrationUnits::Radius: return "radius";
    case FiltrationUnits::SquaredRadius: return "squared-radius";
  }
  return "?";
}

inline FiltrationUnits parse_units(const std::string& s) {
  if (s == "diameter") return FiltrationUnits::Diameter;
  if (s == "radius") return FiltrationUnits::Radius;
  if (s == "squared-radius") return FiltrationUnits::SquaredRadius;
  throw std::invalid_argument("unknown filtration units '" + s + "' (diameter|radius|squared-radius)");
}

/// Homology entering each diagram.
enum class DiagramDims {
  H1,
  /// H0 and H1 points pooled in one diagram (essential class dropped).
  H0H1,
};

/// Radius rule for the uniform-grid arm.
enum class GridRadiusRule {
  /// Same scaled nearest-neighbor rule, clipped to [tau/2, 4 tau], as FPS.
  ScaledNearestNeighbor,
  /// 3R/2 balls of the covering construction.
  ThreeHalvesSpacing,
};

struct InflationConfig {
  std::size_t clouds_per_class = 100;
  std::size_t n_points = 60;
  double noise_sd = 0.08;
  std::uint64_t data_seed = 42;
  std::uint64_t cv_seed = 42;
  int outer_folds = 10;
  int inner_folds = 3;
  double bandwidth_q = 0.25;
  std::vector<double> C_grid{1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3};
  std::vector<double> ells{1, 2, 3, 4, 5, 8};
  std::size_t n_max = 30;
  std::size_t K = 11;
  double alpha = 1.75;
  double padding = 1.05;
  FiltrationUnits units = FiltrationUnits::Radius;
  DiagramDims dims = DiagramDims::H0H1;
  GridRadiusRule grid_radius = GridRadiusRule::ScaledNearestNeighbor;
  GridLayout grid_layout = GridLayout::Offset;
};

struct InflationRow {
  double ell = 0.0;
  /// Padded domain over the full inflated data set.
  double L = 0.0;
  double uniform_mean = 0.0, uniform_std = 0.0;
  double fps_mean = 0.0, fps_std = 0.0;
  std::size_t uniform_K = 0, fps_K = 0;
  /// Folds whose uniform-grid embedding was constant (all rows equal).
  int uniform_degenerate_folds = 0;
  CVResult uniform_cv, fps_cv;
};

struct InflationResult {
  /// Mean strongest-H1 half-persistence over all unperturbed diagrams.
  double tau_all = 0.0;
  std::vector<InflationRow> rows;
};

struct AnnulusData {
  /// Classifier input, top-n_max filtered, class-major cloud order.
  std::vector<PersistenceDiagram> diagrams;
  /// H1 alone, in the same units; the separation scale is read from these.
  std::vector<PersistenceDiagram> h1;
  std::vector<int> labels;
};

inline AnnulusData annulus_diagrams(const InflationConfig& cfg) {
  AnnulusData out;
  std::uint64_t index = 0;
  for (int c = 0; c < static_cast<int>(kAnnulusInnerRadii.size()); ++c) {
    for (std::size_t i = 0; i < cfg.clouds_per_class; ++i, ++index) {
      auto cloud = gen_annulus(c, cfg.n_points, cfg.noise_sd, child_seed(cfg.data_seed, index));
      auto rips = rips_persistence(cloud);
      PersistenceDiagram d = rips.h1;
      if (cfg.dims == DiagramDims::H0H1) {
        std::vector<DiagramPoint> pts = rips.h0.points();
        pts.insert(pts.end(), rips.h1.points().begin(), rips.h1.points().end());
        d = PersistenceDiagram(std::move(pts), cloud.label, "rips-h0h1");
      }
      out.diagrams.push_back(top_persistence_filter(convert_filtration(d, cfg.units), cfg.n_max));
      out.h1.push_back(convert_filtration(rips.h1, cfg.units));
      out.labels.push_back(c);
    }
  }
  return out;
}

namespace detail {

inline std::vector<PersistenceDiagram> take(std::span<const PersistenceDiagram> d, std::span<const std::size_t> idx) {
  std::vector<PersistenceDiagram> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(d[i]);
  return out;
}

inline double padded_domain(std::span<const PersistenceDiagram> d, double padding) {
  double m = 0.0;
  for (const auto& x : d) m = std::max(m, x.max_persistence());
  return padding * m;
}

}  // namespace detail

inline LandmarkConfiguration inflation_fps_config(std::span<const PersistenceDiagram> train, double tau,
                                                  const InflationConfig& cfg) {
  std::vector<DiagramPoint> support;
  for (const auto& d : train) support.insert(support.end(), d.points().begin(), d.points().end());
  auto fps = fps_place(support, std::min(cfg.K, support.size()), 0);
  auto radii = assign_radii(fps.positions, cfg.alpha, tau);
  return LandmarkConfiguration::equal_weights(fps.positions, radii, tau);
}

inline LandmarkConfiguration inflation_grid_config(std::span<const PersistenceDiagram> train, double tau,
                                                   const InflationConfig& cfg) {
  double L = detail::padded_domain(train, cfg.padding);
  double R = matched_grid_spacing(L, cfg.K, cfg.grid_layout);
  auto grid = uniform_grid_positions(L, R, cfg.grid_layout);
  std::vector<double> radii = cfg.grid_radius == GridRadiusRule::ThreeHalvesSpacing
                                  ? std::vector<double>(grid.positions.size(), 1.5 * R)
                                  : assign_radii(grid.positions, cfg.alpha, tau);
  return LandmarkConfiguration::equal_weights(grid.positions, radii, tau);
}

inline InflationResult run_domain_inflation(const InflationConfig& cfg,
                                            std::ostream* progress = nullptr) {
  auto data = annulus_diagrams(cfg);
  const auto& base = data.diagrams;
  const auto& labels = data.labels;

  InflationResult result;
  result.tau_all = tau_mean_strongest_half_persistence(data.h1);

  CVOptions cv;
  cv.outer_folds = cfg.outer_folds;
  cv.inner_folds = cfg.inner_folds;
  cv.seeds = {cfg.cv_seed};
  cv.sigma_grid = {cfg.bandwidth_q};
  cv.C_grid = cfg.C_grid;

  for (double ell : cfg.ells) {
    std::vector<PersistenceDiagram> inflated;
    for (const auto& d : base) inflated.push_back(inflate_diagram(d, ell));

    InflationRow row;
    row.ell = ell;
    row.L = detail::padded_domain(inflated, cfg.padding);

    auto arm = [&](bool uniform) {
      return [&, uniform](std::span<const std::size_t> tr, std::span<const std::size_t> te) {
        // tau comes from the unperturbed training diagrams.
        double tau = tau_mean_strongest_half_persistence(detail::take(data.h1, tr));
        auto train = detail::take(inflated, tr);
        auto config = uniform ? inflation_grid_config(train, tau, cfg) : inflation_fps_config(train, tau, cfg);
        (uniform ? row.uniform_K : row.fps_K) = config.size();
        auto test = detail::take(inflated, te);
        return FoldFeatures{embed_batch(train, config), embed_batch(test, config)};
      };
    };
    row.uniform_cv = cross_validate(labels, arm(true), cv);
    row.fps_cv = cross_validate(labels, arm(false), cv);
    row.uniform_mean = 100.0 * row.uniform_cv.mean;
    row.uniform_std = 100.0 * row.uniform_cv.std;
    row.fps_mean = 100.0 * row.fps_cv.mean;
    row.fps_std = 100.0 * row.fps_cv.std;
    for (const auto& f : row.uniform_cv.folds) row.uniform_degenerate_folds += f.degenerate_embedding;
    if (progress) {
      *progress << "ell=" << ell << " L=" << row.L << " uniform=" << row.uniform_mean << "+-" << row.uniform_std
                << " fps=" << row.fps_mean << "+-" << row.fps_std << '\n';
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

inline void write_inflation_csv(std::ostream& os, const InflationResult& r) {
  os.precision(6);
  os << std::fixed;
  os << "outlier_ell,domain_L,uniform_pct,uniform_std,nonuniform_pct,nonuniform_std,delta,uniform_K,nonuniform_K\n";
  for (const auto& row : r.rows) {
    os << row.ell << ',' << row.L << ',' << row.uniform_mean << ',' << row.uniform_std << ',' << row.fps_mean << ','
       << row.fps_std << ',' << row.fps_mean - row.uniform_mean << ',' << row.uniform_K << ',' << row.fps_K << '\n';
  }
  os.unsetf(std::ios::floatfield);
}

inline nlohmann::json inflation_config_json(const InflationConfig& c) {
  return {{"clouds_per_class", c.clouds_per_class},
          {"n_points", c.n_points},
          {"noise_sd", c.noise_sd},
          {"data_seed", c.data_seed},
          {"cv_seed", c.cv_seed},
          {"outer_folds", c.outer_folds},
          {"inner_folds", c.inner_folds},
          {"bandwidth_q", c.bandwidth_q},
          {"C_grid", c.C_grid},
          {"ells", c.ells},
          {"n_max", c.n_max},
          {"K", c.K},
          {"alpha", c.alpha},
          {"padding", c.padding},
          {"units", units_name(c.units)},
          {"dims", c.dims == DiagramDims::H0H1 ? "h0h1" : "h1"},
          {"grid_radius", c.grid_radius == GridRadiusRule::ThreeHalvesSpacing ? "three-halves" : "scaled-nn"},
          {"grid_layout", c.grid_layout == GridLayout::Offset ? "offset" : "lattice"}};
}

}  // namespace palace
