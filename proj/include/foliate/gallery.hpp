#pragma once

/// \file gallery.hpp
/// Builtin example manifolds with known ground truth.

#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "foliate/almost_product.hpp"
#include "foliate/errors.hpp"

namespace foliate {

using Params = std::map<std::string, std::string>;

struct GalleryItem {
  std::string name;
  std::string description;
  WeightedAlmostProduct W;
  std::optional<double> mixed_sectional;  ///< constant K_mix when known
  std::optional<double> turbulence;       ///< a(L) when known
  bool totally_geodesic_top = false;      ///< D⊤ tangent to a totally geodesic foliation
  bool riemannian_foliation = false;      ///< h⊥ = 0
  /// Doubly-twisted warping functions (u on D⊥, v on D⊤) when applicable.
  std::optional<std::pair<Expr, Expr>> twisted_uv;
  /// Coordinates whose slices are closed D⊤ leaves, when the leaves are
  /// coordinate tori.
  std::vector<int> leaf_coordinates;
};

namespace detail {

inline std::string param(const Params& p, const std::string& key, const std::string& fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline int int_param(const Params& p, const std::string& key, int fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  try {
    std::size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw InputError("parameter '" + key + "' must be an integer, got '" + it->second + "'");
  }
}

inline double real_param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw InputError("parameter '" + key + "' must be a number, got '" + it->second + "'");
  }
}

/// Splits a semicolon-separated list of expressions.
inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline VectorFieldSpec field_param(const Params& p, const std::string& key, int d) {
  auto it = p.find(key);
  if (it == p.end()) return VectorFieldSpec::zero(d, key);
  return VectorFieldSpec::from_strings(split_list(it->second), d, key);
}

inline std::vector<std::vector<std::string>> diagonal_metric(const std::vector<std::string>& diag) {
  const std::size_t d = diag.size();
  std::vector<std::vector<std::string>> m(d, std::vector<std::string>(d, "0"));
  for (std::size_t i = 0; i < d; ++i) m[i][i] = diag[i];
  return m;
}

inline std::vector<Coordinate> torus_coordinates(int d) {
  return std::vector<Coordinate>(static_cast<std::size_t>(d),
                                 Coordinate::periodic(2.0 * std::numbers::pi));
}

inline DistributionSpec coordinate_distribution(int d, int nu) {
  DistributionSpec D;
  for (int a = 0; a < nu; ++a) {
    std::vector<std::string> comps(static_cast<std::size_t>(d), "0");
    comps[static_cast<std::size_t>(a)] = "1";
    D.spanning.push_back(VectorFieldSpec::from_strings(comps, d, "d" + std::to_string(a)));
  }
  return D;
}

inline void check_split(int d, int nu) {
  if (d < 2 || d > kMaxDim) throw InputError("dimension must lie in 2.." + std::to_string(kMaxDim));
  if (nu < 1 || nu >= d) throw InputError("split rank nu must lie in 1..d-1");
}

inline double default_N(const Params& p, int n) { return real_param(p, "N", n); }
inline double default_calN(const Params& p, int nu) { return real_param(p, "calN", nu); }

}  // namespace detail

inline GalleryItem flat_torus(const Params& p = {}) {
  int d = detail::int_param(p, "d", 3), nu = detail::int_param(p, "nu", 1);
  detail::check_split(d, nu);
  ChartedManifold M("flat_torus", detail::torus_coordinates(d),
                    detail::diagonal_metric(std::vector<std::string>(static_cast<std::size_t>(d), "1")));
  GalleryItem g;
  g.name = "flat_torus";
  g.description = "flat torus T^d with coordinate splitting; product, all extrinsic tensors vanish";
  g.W = WeightedAlmostProduct(std::move(M), detail::coordinate_distribution(d, nu),
                              detail::field_param(p, "X", d), detail::default_N(p, d - nu),
                              detail::default_calN(p, nu), "flat_torus");
  g.mixed_sectional = 0.0;
  g.turbulence = 0.0;
  g.totally_geodesic_top = true;
  g.riemannian_foliation = true;
  for (int a = 0; a < nu; ++a) g.leaf_coordinates.push_back(a);
  return g;
}

inline GalleryItem conformal_torus(const Params& p = {}) {
  int d = detail::int_param(p, "d", 3), nu = detail::int_param(p, "nu", 1);
  detail::check_split(d, nu);
  std::string phi = detail::param(p, "phi", "0.3*sin(x0)*cos(x1) + 0.2*sin(x2 + x0)");
  if (d < 3 && !p.count("phi")) phi = "0.3*sin(x0)*cos(x1)";
  std::string conf = "exp(2*(" + phi + "))";
  ChartedManifold M("conformal_torus", detail::torus_coordinates(d),
                    detail::diagonal_metric(std::vector<std::string>(static_cast<std::size_t>(d), conf)));
  GalleryItem g;
  g.name = "conformal_torus";
  g.description = "torus with metric exp(2 phi) times flat, coordinate splitting; umbilical, nontrivial h and H";
  g.W = WeightedAlmostProduct(std::move(M), detail::coordinate_distribution(d, nu),
                              detail::field_param(p, "X", d), detail::default_N(p, d - nu),
                              detail::default_calN(p, nu), "conformal_torus");
  return g;
}

inline GalleryItem doubly_twisted_torus(const Params& p = {}) {
  int nu = detail::int_param(p, "nu", 1), n = detail::int_param(p, "n", 2);
  int d = nu + n;
  detail::check_split(d, nu);
  std::string u = detail::param(p, "u", "exp(0.1*sin(x0) + 0.15*cos(x0)*sin(x1))");
  std::string v = detail::param(p, "v", "1 + 0.2*sin(x" + std::to_string(d - 1) + ")");
  std::vector<std::string> diag;
  for (int a = 0; a < nu; ++a) diag.push_back("(" + v + ")^2");
  for (int i = 0; i < n; ++i) diag.push_back("(" + u + ")^2");
  ChartedManifold M("doubly_twisted_torus", detail::torus_coordinates(d),
                    detail::diagonal_metric(diag));
  GalleryItem g;
  g.name = "doubly_twisted_torus";
  g.description =
      "doubly-twisted product T^nu x_(v,u) T^n: g = v^2 g_B + u^2 g_F, D-top tangent to the "
      "base factor; both distributions totally umbilical";
  g.W = WeightedAlmostProduct(std::move(M), detail::coordinate_distribution(d, nu),
                              detail::field_param(p, "X", d), detail::default_N(p, n),
                              detail::default_calN(p, nu), "doubly_twisted_torus");
  g.twisted_uv = std::make_pair(parse(u, d), parse(v, d));
  for (int a = 0; a < nu; ++a) g.leaf_coordinates.push_back(a);
  return g;
}

/// Doubly-twisted torus with v depending on base coordinates only, so the
/// base leaves are closed coordinate tori with H⊤ = 0; X tangent to them.
inline GalleryItem twisted_leaf_torus(const Params& p = {}) {
  int nu = detail::int_param(p, "nu", 2), n = detail::int_param(p, "n", 1);
  int d = nu + n;
  Params q = p;
  if (!q.count("nu")) q["nu"] = std::to_string(nu);
  if (!q.count("n")) q["n"] = std::to_string(n);
  if (!q.count("u")) q["u"] = "exp(0.2*sin(x0)*cos(x1) + 0.1*cos(x" + std::to_string(d - 1) + "))";
  if (!q.count("v")) q["v"] = "exp(0.1*cos(x0 - x1))";
  if (!q.count("X")) {
    std::string X;
    for (int i = 0; i < d; ++i) {
      if (i) X += ";";
      X += i == 0 ? "0.4*cos(x1) + 0.2*sin(x" + std::to_string(d - 1) + ")"
                  : (i < nu ? "0.3*sin(x0)" : "0");
    }
    q["X"] = X;
  }
  GalleryItem g = doubly_twisted_torus(q);
  g.name = "twisted_leaf_torus";
  g.description =
      "doubly-twisted torus whose base leaves are closed coordinate tori with H-top = 0, "
      "weighted by a field tangent to the leaves";
  return g;
}

inline GalleryItem hopf_s3(const Params& p = {}) {
  using std::numbers::pi;
  const double margin = detail::real_param(p, "margin", 1e-2);
  std::vector<Coordinate> coords{Coordinate::interval(0.0, pi / 2, margin),
                                 Coordinate::periodic(2 * pi), Coordinate::periodic(2 * pi)};
  ChartedManifold M("hopf_s3", coords,
                    detail::diagonal_metric({"1", "cos(x0)^2", "sin(x0)^2"}));
  DistributionSpec D;
  D.spanning.push_back(VectorFieldSpec::from_strings({"0", "1", "1"}, 3, "hopf"));
  GalleryItem g;
  g.name = "hopf_s3";
  g.description =
      "unit S^3 in Hopf coordinates (eta, xi1, xi2), D-top spanned by the Hopf field; "
      "totally geodesic fibres, K_mix = 1, a(L) = 1";
  g.W = WeightedAlmostProduct(std::move(M), std::move(D), detail::field_param(p, "X", 3),
                              detail::default_N(p, 2), detail::default_calN(p, 1), "hopf_s3");
  g.mixed_sectional = 1.0;
  g.turbulence = 1.0;
  g.totally_geodesic_top = true;
  g.riemannian_foliation = true;
  return g;
}

/// Hopf S³ weighted by a small multiple of the (Killing) Hopf field.
inline GalleryItem weighted_hopf_s3(const Params& p = {}) {
  double eps = detail::real_param(p, "eps", 0.2);
  Params q = p;
  if (!q.count("X")) {
    std::string c = detail::format_number(eps);
    q["X"] = "0;" + c + ";" + c;
  }
  GalleryItem g = hopf_s3(q);
  g.name = "weighted_hopf_s3";
  g.description = "hopf_s3 weighted by eps times the Hopf field (Killing, tangent to the fibres)";
  return g;
}

/// Flat torus with a rotating line field: non-integrable complement,
/// nonzero h and T on both sides.
inline GalleryItem helical_torus(const Params& p = {}) {
  double a = detail::real_param(p, "a", 0.3);
  std::string ac = detail::format_number(a);
  ChartedManifold M("helical_torus", detail::torus_coordinates(3),
                    detail::diagonal_metric({"1", "exp(0.2*sin(x0))", "1"}));
  DistributionSpec D;
  D.spanning.push_back(VectorFieldSpec::from_strings(
      {"cos(x2)", "sin(x2)", ac + "*sin(x0)"}, 3, "helix"));
  GalleryItem g;
  g.name = "helical_torus";
  g.description =
      "torus with metric diag(1, exp(0.2 sin x0), 1) and D-top spanned by a rotating, tilted "
      "line field; D-perp not integrable";
  g.W = WeightedAlmostProduct(std::move(M), std::move(D), detail::field_param(p, "X", 3),
                              detail::default_N(p, 2), detail::default_calN(p, 1), "helical_torus");
  return g;
}

inline const std::vector<std::string>& gallery_names() {
  static const std::vector<std::string> names{"flat_torus",         "conformal_torus",
                                              "doubly_twisted_torus", "twisted_leaf_torus",
                                              "hopf_s3",            "weighted_hopf_s3",
                                              "helical_torus"};
  return names;
}

inline GalleryItem builtin(const std::string& name, const Params& p = {}) {
  if (name == "flat_torus") return flat_torus(p);
  if (name == "conformal_torus") return conformal_torus(p);
  if (name == "doubly_twisted_torus") return doubly_twisted_torus(p);
  if (name == "twisted_leaf_torus") return twisted_leaf_torus(p);
  if (name == "hopf_s3") return hopf_s3(p);
  if (name == "weighted_hopf_s3") return weighted_hopf_s3(p);
  if (name == "helical_torus") return helical_torus(p);
  throw InputError("unknown gallery item '" + name + "'");
}

}  // namespace foliate
