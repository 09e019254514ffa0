#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "foliate/acceptance.hpp"
#include "foliate/almost_product.hpp"
#include "foliate/geodesic.hpp"
#include "foliate/identity.hpp"
#include "foliate/weighted.hpp"

namespace foliate {

using nlohmann::json;

namespace detail {

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vec(m.row(i).transpose())));
  return a;
}

/// JSON has no infinities; non-finite values become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

/// Everything computable at one point: metric, connection summary, adapted
/// frame, extrinsic geometry, mixed and weighted curvatures, co-nullity and
/// weighted Jacobi operator spectra.
inline json curvature_report(const WeightedAlmostProduct& W, std::span<const double> p) {
  using detail::to_json;
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  MixedScalar s = mixed_scalar(W, A);
  json j;
  j["label"] = W.label();
  j["point"] = A.G.p;
  j["dimension"] = A.d;
  j["split"] = {A.nu, A.n};
  j["N"] = W.N();
  j["calN"] = W.calN();
  j["metric"] = to_json(A.g());
  j["sqrt_det_g"] = A.G.sqrt_det;

  double gmax = 0.0;
  int nonzero = 0;
  for (const auto& G : A.G.gamma)
    for (Eigen::Index a = 0; a < G.size(); ++a) {
      gmax = std::max(gmax, std::fabs(G.data()[a]));
      if (std::fabs(G.data()[a]) > 1e-14) ++nonzero;
    }
  j["christoffel"] = {{"max_abs", gmax}, {"nonzero", nonzero}};

  j["frame"] = {{"E", to_json(A.E)}, {"span_condition", A.span_condition}};
  j["extrinsic"] = {{"h_top_norm2", P.h_top2}, {"h_bot_norm2", P.h_bot2},   {"T_top_norm2", P.T_top2},
                    {"T_bot_norm2", P.T_bot2}, {"H_top", to_json(P.Htop)}, {"H_bot", to_json(P.Hbot)},
                    {"H_top_norm2", P.H_top2}, {"H_bot_norm2", P.H_bot2}};
  j["weight"] = {{"X", to_json(A.Xv)}, {"X_top_norm2", s.X_top2}, {"X_bot_norm2", s.X_bot2}, {"div_X", s.divX}};

  Mat K(A.nu, A.n);
  for (int a = 0; a < A.nu; ++a)
    for (int i = 0; i < A.n; ++i) K(a, i) = A.G.R(A.top(a), A.bot(i), A.bot(i), A.top(a));
  j["mixed"] = {{"K", to_json(K)},
                {"S_mix", s.S_mix},
                {"S_mix_weighted", s.weighted},
                {"S_mix_rank_weighted", s.rank_weighted},
                {"weighted_minus_rank_weighted", s.weighted - s.rank_weighted}};

  json cn = json::array();
  for (int a = 0; a < A.nu; ++a) {
    CoNullity C = co_nullity(A, P, A.top(a));
    cn.push_back({{"x", "E" + std::to_string(a)}, {"B", to_json(C.B)}, {"BX", to_json(C.BX)}});
  }
  j["co_nullity"] = {{"totally_geodesic", std::sqrt(P.h_top2) < kTotallyGeodesicTolerance}, {"operators", cn}};

  json ops = json::array();
  for (int a = 0; a < A.nu; ++a)
    ops.push_back({{"x", "E" + std::to_string(a)}, {"eigenvalues", to_json(sym_eigenvalues(weighted_jacobi_operator(A, A.top(a))))}});
  SpectrumBracket b = jacobi_spectrum(A);
  j["jacobi"] = {{"operators", ops}, {"k1", b.k1}, {"k2", b.k2}, {"directions", b.samples}};
  return j;
}

inline json to_json(const ResidualReport& r) {
  return {{"id", r.id},     {"samples", r.samples},       {"max", r.max},
          {"mean", r.mean}, {"worst_point", r.worst_point}, {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

inline json to_json(const IntegralReport& r) {
  json h = json::array();
  for (const auto& [nodes, v] : r.history) h.push_back({{"nodes", nodes}, {"value", v}});
  return {{"id", r.id},          {"value", r.value},     {"abs_integrand", r.magnitude},
          {"nodes", r.nodes},    {"history", h},         {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

inline json to_json(const CriterionResult& r) {
  json m = json::array();
  for (const auto& x : r.metrics)
    m.push_back({{"name", x.name}, {"value", detail::number(x.value)}, {"limit", detail::number(x.limit)}});
  json j = {{"id", r.id},           {"key", r.key},         {"title", r.title}, {"pass", r.pass},
            {"seconds", r.seconds}, {"summary", r.summary}, {"metrics", m}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline json suite_json(const std::vector<CriterionResult>& results, std::uint64_t seed, double seconds) {
  json items = json::array();
  int passed = 0;
  for (const auto& r : results) {
    items.push_back(to_json(r));
    if (r.pass) ++passed;
  }
  return {{"schema", "foliate-suite/1"},
          {"seed", seed},
          {"seconds", seconds},
          {"passed", passed},
          {"failed", static_cast<int>(results.size()) - passed},
          {"items", items}};
}

/// One row per sample point: index, coordinates, residual.
inline void write_residual_csv(std::ostream& os, const ResidualReport& r) {
  os << "index";
  const std::size_t d = r.points.empty() ? 0 : r.points[0].size();
  for (std::size_t k = 0; k < d; ++k) os << ",x" << k;
  os << ",residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    os << i;
    for (double x : r.points[i]) os << "," << x;
    os << "," << r.residuals[i] << "\n";
  }
}

/// t, geodesic coordinates (when present), |B| and eigenvalue re/im pairs,
/// plus V(t) when supplied.
inline void write_riccati_csv(std::ostream& os, const RiccatiTrace& tr, const std::vector<double>& V = {}) {
  const std::size_t d = tr.points.empty() ? 0 : static_cast<std::size_t>(tr.points[0].size());
  const Eigen::Index n = tr.B.empty() ? 0 : tr.B[0].rows();
  os << "t";
  for (std::size_t k = 0; k < d; ++k) os << ",x" << k;
  os << ",B_norm";
  for (Eigen::Index k = 0; k < n; ++k) os << ",ev" << k << "_re,ev" << k << "_im";
  if (!V.empty()) os << ",V";
  os << "\n";
  os.precision(17);
  for (std::size_t i = 0; i < tr.B.size(); ++i) {
    os << tr.t[i];
    for (std::size_t k = 0; k < d; ++k) os << "," << tr.points[i](static_cast<Eigen::Index>(k));
    os << "," << tr.B[i].norm();
    Eigen::EigenSolver<Mat> es(tr.B[i], false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
    for (const auto& e : ev) os << "," << e.real() << "," << e.imag();
    if (!V.empty()) os << "," << (i < V.size() ? V[i] : std::nan(""));
    os << "\n";
  }
}

}  // namespace foliate
