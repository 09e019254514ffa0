#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "foliate/almost_product.hpp"
#include "foliate/gallery.hpp"

namespace foliate {

inline constexpr char kManifestSchema[] = "foliate/1";

/// A weighted almost-product structure read from (or written to) a JSON
/// manifest, plus the chart metadata the quadrature needs.
struct Manifest {
  WeightedAlmostProduct W;
  std::vector<int> leaf_coordinates;
  bool collapsing_ends = false;
  std::string description;
};

namespace detail {

using nlohmann::json;

inline std::string strip_offset(const std::string& what) {
  auto at = what.rfind(" at byte ");
  return at == std::string::npos ? what : what.substr(0, at);
}

inline const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("manifest: missing field '") + key + "'");
  return j.at(key);
}

inline std::string expr_string(const json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return format_number(j.get<double>());
  throw InputError("manifest: " + path + " must be an expression string");
}

/// Parses with the field path prepended to positioned errors.
inline void check_expr(const std::string& text, int d, const std::string& path) {
  try {
    parse(text, d);
  } catch (const ParseError& e) {
    throw ParseError("manifest " + path + " '" + text + "': " + strip_offset(e.what()), e.offset());
  }
}

inline std::vector<std::string> expr_vector(const json& j, int d, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw InputError("manifest: " + path + " must be an array of " + std::to_string(d) + " expressions");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    std::string p = path + "[" + std::to_string(i) + "]";
    out.push_back(expr_string(j[i], p));
    check_expr(out.back(), d, p);
  }
  return out;
}

inline double real_field(const json& j, const std::string& path) {
  if (!j.is_number()) throw InputError("manifest: " + path + " must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError("manifest: " + path + " must be finite");
  return v;
}

inline std::vector<std::string> field_strings(const VectorFieldSpec& f) {
  std::vector<std::string> out;
  for (const auto& c : f.components) out.push_back(c.print());
  return out;
}

}  // namespace detail

inline Manifest manifest_from_json(const nlohmann::json& j) {
  using detail::require;
  if (!j.is_object()) throw InputError("manifest: top level must be an object");
  const auto& schema = require(j, "schema");
  if (!schema.is_string() || schema.get<std::string>() != kManifestSchema)
    throw InputError(std::string("manifest: schema must be \"") + kManifestSchema + "\"");
  const auto& dim = require(j, "dimension");
  if (!dim.is_number_integer()) throw InputError("manifest: dimension must be an integer");
  const int d = dim.get<int>();
  if (d < 2 || d > kMaxDim) throw InputError("manifest: dimension must lie in 2.." + std::to_string(kMaxDim));
  const auto& split = require(j, "split");
  if (!split.is_array() || split.size() != 2 || !split[0].is_number_integer() || !split[1].is_number_integer())
    throw InputError("manifest: split must be [nu, n]");
  const int nu = split[0].get<int>(), n = split[1].get<int>();
  if (nu < 1 || n < 1 || nu + n != d) throw InputError("manifest: split must be positive and sum to dimension");

  const auto& cj = require(j, "coordinates");
  if (!cj.is_array() || static_cast<int>(cj.size()) != d)
    throw InputError("manifest: coordinates must list " + std::to_string(d) + " entries");
  std::vector<Coordinate> coords;
  for (std::size_t i = 0; i < cj.size(); ++i) {
    std::string path = "coordinates[" + std::to_string(i) + "]";
    const auto& c = cj[i];
    if (c.contains("period")) {
      double per = detail::real_field(c["period"], path + ".period");
      if (!(per > 0.0)) throw InputError("manifest: " + path + ".period must be positive");
      coords.push_back(Coordinate::periodic(per));
    } else if (c.contains("interval")) {
      const auto& iv = c["interval"];
      if (!iv.is_array() || iv.size() != 2) throw InputError("manifest: " + path + ".interval must be [lo, hi]");
      double lo = detail::real_field(iv[0], path + ".interval[0]");
      double hi = detail::real_field(iv[1], path + ".interval[1]");
      if (!(lo < hi)) throw InputError("manifest: " + path + ".interval must have lo < hi");
      double margin = c.contains("margin") ? detail::real_field(c["margin"], path + ".margin") : 0.0;
      coords.push_back(Coordinate::interval(lo, hi, margin));
    } else {
      throw InputError("manifest: " + path + " needs 'period' or 'interval'");
    }
  }

  const auto& mj = require(j, "metric");
  if (!mj.is_array() || static_cast<int>(mj.size()) != d)
    throw InputError("manifest: metric must have " + std::to_string(d) + " rows");
  std::vector<std::vector<std::string>> metric;
  for (int i = 0; i < d; ++i) metric.push_back(detail::expr_vector(mj[i], d, "metric[" + std::to_string(i) + "]"));

  const auto& dj = require(j, "distribution");
  if (!dj.is_array() || static_cast<int>(dj.size()) != nu)
    throw InputError("manifest: distribution must list nu = " + std::to_string(nu) + " spanning fields");
  DistributionSpec D;
  for (int a = 0; a < nu; ++a) {
    std::string path = "distribution[" + std::to_string(a) + "]";
    D.spanning.push_back(VectorFieldSpec::from_strings(detail::expr_vector(dj[a], d, path), d, path));
  }
  VectorFieldSpec X = j.contains("X") ? VectorFieldSpec::from_strings(detail::expr_vector(j["X"], d, "X"), d, "X")
                                      : VectorFieldSpec::zero(d);
  double N = j.contains("N") ? detail::real_field(j["N"], "N") : n;
  double calN = j.contains("calN") ? detail::real_field(j["calN"], "calN") : nu;
  std::string label = j.contains("label") && j["label"].is_string() ? j["label"].get<std::string>() : "manifest";

  Manifest m;
  m.W = WeightedAlmostProduct(ChartedManifold(label, std::move(coords), metric), std::move(D), std::move(X), N,
                              calN, label);
  if (j.contains("leaf_coordinates")) {
    for (const auto& v : j["leaf_coordinates"]) {
      if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= d)
        throw InputError("manifest: leaf_coordinates must be coordinate indices");
      m.leaf_coordinates.push_back(v.get<int>());
    }
  }
  if (j.contains("collapsing_ends")) {
    if (!j["collapsing_ends"].is_boolean()) throw InputError("manifest: collapsing_ends must be a boolean");
    m.collapsing_ends = j["collapsing_ends"].get<bool>();
  }
  if (j.contains("description") && j["description"].is_string()) m.description = j["description"].get<std::string>();
  return m;
}

/// Parses manifest text; JSON syntax errors carry the byte offset.
inline Manifest parse_manifest(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest JSON: ") + detail::strip_offset(e.what()), e.byte);
  }
  return manifest_from_json(j);
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

inline nlohmann::json manifest_to_json(const Manifest& m) {
  using nlohmann::json;
  const auto& W = m.W;
  const auto& M = W.manifold();
  const int d = W.dim();
  json j;
  j["schema"] = kManifestSchema;
  j["label"] = W.label();
  if (!m.description.empty()) j["description"] = m.description;
  j["dimension"] = d;
  j["split"] = {W.nu(), W.n()};
  json coords = json::array();
  for (const auto& c : M.coordinates()) {
    json e;
    if (c.period) {
      e["period"] = *c.period;
    } else {
      e["interval"] = {c.lo, c.hi};
      if (c.margin != 0.0) e["margin"] = c.margin;
    }
    coords.push_back(e);
  }
  j["coordinates"] = coords;
  json metric = json::array();
  for (int i = 0; i < d; ++i) {
    json row = json::array();
    for (int k = 0; k < d; ++k) row.push_back(M.metric_entry(i, k).print());
    metric.push_back(row);
  }
  j["metric"] = metric;
  json dist = json::array();
  for (const auto& f : W.distribution().spanning) dist.push_back(detail::field_strings(f));
  j["distribution"] = dist;
  j["X"] = detail::field_strings(W.X());
  j["N"] = W.N();
  j["calN"] = W.calN();
  if (!m.leaf_coordinates.empty()) j["leaf_coordinates"] = m.leaf_coordinates;
  if (m.collapsing_ends) j["collapsing_ends"] = true;
  return j;
}

inline Manifest manifest_from_gallery(const GalleryItem& g) {
  Manifest m;
  m.W = g.W;
  m.leaf_coordinates = g.leaf_coordinates;
  for (const auto& c : g.W.manifold().coordinates())
    if (!c.period) m.collapsing_ends = true;  // the only gallery chart with ends is the polar Hopf chart
  m.description = g.description;
  return m;
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest '" + path + "'");
  out << manifest_to_json(m).dump(2) << "\n";
}

}  // namespace foliate
