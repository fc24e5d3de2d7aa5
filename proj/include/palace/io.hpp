// File formats: JSON-lines diagrams and point clouds, JSON landmark
// configurations, CSV matrices with a JSON sidecar.

#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iostream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "palace/diagram.hpp"
#include "palace/landmarks.hpp"
#include "palace/rips.hpp"

namespace palace {

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink stderr_warnings() {
  return [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

namespace detail {

inline std::optional<int> parse_label(const nlohmann::json& obj) {
  if (!obj.contains("label") || obj["label"].is_null()) return std::nullopt;
  if (!obj["label"].is_number_integer()) throw std::invalid_argument("\"label\" must be an integer or null");
  return obj["label"].get<int>();
}

/// Death coordinate; null, "inf" and "infinity" read as +inf.
inline double parse_death(const nlohmann::json& v) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (v.is_string()) {
    auto s = v.get<std::string>();
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("death must be a number, null or \"inf\"");
  }
  if (!v.is_number()) throw std::invalid_argument("death must be a number");
  return v.get<double>();
}

template <class Fn>
void for_each_json_line(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line), no);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(source, no, e.what());
    }
  }
}

}  // namespace detail

/// One diagram per JSON line. Points with an infinite death are dropped and
/// reported through `warn`.
inline std::vector<PersistenceDiagram> read_diagrams(std::istream& in, const std::string& source = "<stream>",
                                                     const WarningSink& warn = stderr_warnings()) {
  std::vector<PersistenceDiagram> out;
  detail::for_each_json_line(in, source, [&](const nlohmann::json& obj, std::size_t no) {
    if (!obj.is_object() || !obj.contains("points") || !obj["points"].is_array()) {
      throw std::invalid_argument("expected an object with a \"points\" array");
    }
    PersistenceDiagram d;
    std::size_t dropped = 0;
    for (const auto& pt : obj["points"]) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number()) {
        throw std::invalid_argument("each point must be [birth, death]");
      }
      double b = pt[0].get<double>();
      double dd = detail::parse_death(pt[1]);
      if (!std::isfinite(dd)) {
        ++dropped;
        continue;
      }
      if (dd < b) throw std::invalid_argument("point has death < birth");
      d.push_back({b, dd});
    }
    if (dropped && warn) {
      warn(source + ":" + std::to_string(no) + ": dropped " + std::to_string(dropped) + " point(s) with infinite death");
    }
    d.set_label(detail::parse_label(obj));
    if (obj.contains("tag") && obj["tag"].is_string()) d.set_tag(obj["tag"].get<std::string>());
    out.push_back(std::move(d));
  });
  return out;
}

inline std::vector<PersistenceDiagram> read_diagrams(const std::string& path,
                                                     const WarningSink& warn = stderr_warnings()) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_diagrams(in, path, warn);
}

inline void write_diagrams(std::ostream& out, const std::vector<PersistenceDiagram>& diagrams) {
  for (const auto& d : diagrams) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : d.points()) pts.push_back({p.birth, p.death});
    nlohmann::json obj{{"points", pts}, {"label", nullptr}, {"tag", d.tag()}};
    if (d.label()) obj["label"] = *d.label();
    out << obj.dump() << '\n';
  }
}

inline void write_diagrams(const std::string& path, const std::vector<PersistenceDiagram>& diagrams) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_diagrams(out, diagrams);
}

inline std::vector<PointCloud> read_point_clouds(std::istream& in, const std::string& source = "<stream>") {
  std::vector<PointCloud> out;
  detail::for_each_json_line(in, source, [&](const nlohmann::json& obj, std::size_t) {
    if (!obj.is_object() || !obj.contains("points") || !obj["points"].is_array()) {
      throw std::invalid_argument("expected an object with a \"points\" array");
    }
    PointCloud c;
    for (const auto& pt : obj["points"]) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        throw std::invalid_argument("each point must be [x, y]");
      }
      c.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    c.label = detail::parse_label(obj);
    out.push_back(std::move(c));
  });
  return out;
}

inline std::vector<PointCloud> read_point_clouds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_point_clouds(in, path);
}

inline void write_point_clouds(std::ostream& out, const std::vector<PointCloud>& clouds) {
  for (const auto& c : clouds) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points) pts.push_back({p[0], p[1]});
    nlohmann::json obj{{"points", pts}, {"label", nullptr}};
    if (c.label) obj["label"] = *c.label;
    out << obj.dump() << '\n';
  }
}

inline void write_point_clouds(const std::string& path, const std::vector<PointCloud>& clouds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_point_clouds(out, clouds);
}

inline nlohmann::json config_to_json(const LandmarkConfiguration& config) {
  nlohmann::json ls = nlohmann::json::array();
  for (const auto& l : config.landmarks()) {
    ls.push_back({{"p", {l.position.birth, l.position.death}}, {"r", l.radius}, {"w", l.weight}});
  }
  return {{"tau", config.tau()}, {"landmarks", ls}};
}

inline LandmarkConfiguration config_from_json(const nlohmann::json& j) {
  std::vector<Landmark> ls;
  for (const auto& l : j.at("landmarks")) {
    const auto& p = l.at("p");
    ls.push_back({{p.at(0).get<double>(), p.at(1).get<double>()}, l.at("r").get<double>(), l.at("w").get<double>()});
  }
  return LandmarkConfiguration(std::move(ls), j.at("tau").get<double>());
}

inline LandmarkConfiguration read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return config_from_json(nlohmann::json::parse(in));
}

inline void write_config(const std::string& path, const LandmarkConfiguration& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << config_to_json(config).dump(2) << '\n';
}

/// Headerless numeric CSV; a header row of non-numbers is skipped.
inline Eigen::MatrixXd read_matrix_csv(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      try {
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
      if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && no == 1) continue;
      throw FormatError(source, no, "non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError(source, no, "ragged row");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return M;
}

inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_matrix_csv(in, path);
}

}  // namespace palace
