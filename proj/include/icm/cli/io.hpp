#pragma once

// File formats used by the command-line front end: numeric CSV tables,
// per-trial CSV reports, and JSON scenario / scene fixtures.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icm/contrasts.hpp"
#include "icm/error.hpp"
#include "icm/latent/trial.hpp"
#include "icm/linalg.hpp"
#include "icm/scenes.hpp"

namespace icm::cli {

using json = nlohmann::json;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("missing column '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
  std::vector<double> values(std::size_t col) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[col]);
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Header row then one sample per row; blank lines and lines starting with
/// '#' are skipped.
inline CsvTable parse_csv(std::istream& in, const std::string& source = "input") {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto cells = detail::split(s);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                      " fields, found " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty() || !std::isfinite(v))
        throw DataError(source + ":" + std::to_string(lineno) + ": not a finite number: '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw DataError(source + ": empty file");
  if (t.rows.empty()) throw DataError(source + ": no data rows");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

/// Columns named prefix0, prefix1, ... in index order, as a samples×k matrix.
inline Matrix prefixed_columns(const CsvTable& t, char prefix) {
  std::vector<std::size_t> cols;
  for (std::size_t k = 0;; ++k) {
    const std::string name = std::string(1, prefix) + std::to_string(k);
    if (!t.has_column(name)) break;
    cols.push_back(t.column(name));
  }
  if (cols.empty()) throw DataError(std::string("no columns named ") + prefix + "0, " + prefix + "1, ...");
  Matrix m(static_cast<Index>(t.rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = t.rows[i][cols[j]];
  return m;
}

/// Shortest text that round-trips the double; fixed across platforms.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline constexpr const char* kTrialCsvHeader = "trial_index,performance,ratio_est,ratio_truth,converged,p_value";

/// Per-trial table preceded by a "# {config}" comment line.
inline void write_trials_csv(std::ostream& out, const json& config, const std::vector<latent::TrialRecord>& trials) {
  out << "# " << config.dump() << "\n" << kTrialCsvHeader << "\n";
  for (const auto& r : trials) {
    out << r.trial_index << ',' << format_double(r.performance) << ',' << format_double(r.generic_ratio_estimated)
        << ',' << format_double(r.generic_ratio_ground_truth) << ',' << (r.converged ? 1 : 0) << ','
        << (r.p_value ? format_double(*r.p_value) : std::string()) << "\n";
  }
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw DataError(what + ": expected a list of rows");
  const std::size_t cols = j.front().size();
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw DataError(what + ": ragged rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw DataError(what + ": non-numeric entry");
      m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw DataError(what + ": expected a non-empty list");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(what + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace detail {

inline scenes::PlacedObject placed_object(const json& j, const std::string& what) {
  if (!j.contains("vertices")) throw DataError(what + ": missing 'vertices'");
  std::vector<scenes::Point> pts;
  for (const auto& p : j.at("vertices")) {
    if (!p.is_array() || p.size() != 2) throw DataError(what + ": vertices must be [x, y] pairs");
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  scenes::Placement at;
  if (j.contains("position")) {
    const auto& p = j.at("position");
    if (!p.is_array() || p.size() != 2) throw DataError(what + ": position must be [x, y]");
    at.position = {p[0].get<double>(), p[1].get<double>()};
  }
  at.orientation = j.value("orientation", 0.0);
  return {scenes::Polygon(std::move(pts), j.value("label", std::string())), at};
}

}  // namespace detail

struct SceneFixture {
  std::string name;
  std::vector<scenes::OcclusionHypothesis> hypotheses;
};

/// {"name": ..., "hypotheses": [{"name", "back": {...}, "front": {...}}, ...]}
/// where each object is {"label", "vertices": [[x, y], ...], "position", "orientation"}.
inline SceneFixture scene_fixture_from_json(const json& j) {
  SceneFixture f;
  try {
    f.name = j.value("name", std::string());
    if (!j.contains("hypotheses") || !j.at("hypotheses").is_array() || j.at("hypotheses").size() != 2)
      throw DataError("scene fixture: expected exactly two hypotheses");
    for (const auto& h : j.at("hypotheses")) {
      scenes::OcclusionHypothesis hyp;
      hyp.name = h.value("name", std::string());
      hyp.back = detail::placed_object(h.at("back"), "hypothesis '" + hyp.name + "' back");
      hyp.front = detail::placed_object(h.at("front"), "hypothesis '" + hyp.name + "' front");
      f.hypotheses.push_back(std::move(hyp));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scene fixture: ") + e.what());
  }
  return f;
}

inline SceneFixture read_scene_fixture(const std::string& path) { return scene_fixture_from_json(read_json(path)); }

}  // namespace icm::cli
