// Landmark configurations: K triples (position, radius, weight) plus the
// separation scale tau at which admissibility is judged.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "palace/diagram.hpp"

namespace palace {

struct Landmark {
  DiagramPoint position;
  double radius = 0.0;
  double weight = 0.0;
};

class LandmarkConfiguration {
 public:
  static constexpr double kWeightTolerance = 1e-9;

  LandmarkConfiguration(std::vector<Landmark> landmarks, double tau)
      : landmarks_(std::move(landmarks)), tau_(tau) {
    if (landmarks_.empty()) throw std::invalid_argument("landmark configuration needs K >= 1");
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) {
      throw std::invalid_argument("separation scale tau must be finite and > 0");
    }
    double sq = 0.0;
    for (const auto& l : landmarks_) {
      if (!l.position.is_finite() || l.position.death < l.position.birth) {
        throw std::invalid_argument("landmark position must be a finite diagram point");
      }
      if (!(l.radius > 0.0)) throw std::invalid_argument("landmark radius must be > 0");
      if (!(l.weight > 0.0)) throw std::invalid_argument("landmark weight must be > 0");
      sq += l.weight * l.weight;
    }
    if (std::abs(sq - 1.0) > kWeightTolerance) {
      throw std::invalid_argument("landmark weights must satisfy sum w^2 = 1, got " +
                                  std::to_string(sq));
    }
  }

  /// Equal weights K^{-1/2}.
  static LandmarkConfiguration equal_weights(std::span<const DiagramPoint> positions,
                                             std::span<const double> radii, double tau) {
    if (positions.size() != radii.size()) {
      throw std::invalid_argument("positions and radii differ in length");
    }
    const double w = 1.0 / std::sqrt(static_cast<double>(positions.size()));
    std::vector<Landmark> ls;
    ls.reserve(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) ls.push_back({positions[k], radii[k], w});
    return LandmarkConfiguration(std::move(ls), tau);
  }

  const std::vector<Landmark>& landmarks() const { return landmarks_; }
  std::size_t size() const { return landmarks_.size(); }
  const Landmark& operator[](std::size_t k) const { return landmarks_[k]; }
  double tau() const { return tau_; }

  double max_radius() const {
    double r = 0.0;
    for (const auto& l : landmarks_) r = std::max(r, l.radius);
    return r;
  }

  std::vector<DiagramPoint> positions() const {
    std::vector<DiagramPoint> out;
    out.reserve(landmarks_.size());
    for (const auto& l : landmarks_) out.push_back(l.position);
    return out;
  }

  /// FNV-1a over the raw field bytes; identifies the generating configuration
  /// of an embedding.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
      }
    };
    mix(tau_);
    for (const auto& l : landmarks_) {
      mix(l.position.birth);
      mix(l.position.death);
      mix(l.radius);
      mix(l.weight);
    }
    return h;
  }

 private:
  std::vector<Landmark> landmarks_;
  double tau_;
};

}  // namespace palace
