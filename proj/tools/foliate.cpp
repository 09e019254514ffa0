#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "foliate/foliate.hpp"

namespace {

using namespace foliate;

enum Exit { kPass = 0, kToleranceFailure = 1, kInputFailure = 2, kNumericalFailure = 3 };

/// --gallery/--param/--manifest, shared by every subcommand that needs a model.
struct ModelArgs {
  std::string gallery;
  std::vector<std::string> params;
  std::string manifest;

  void attach(CLI::App* app) {
    app->add_option("--gallery", gallery, "built-in example name (see `gallery list`)");
    app->add_option("--param", params, "gallery parameter key=value (repeatable)");
    app->add_option("--manifest", manifest, "JSON manifest file");
  }

  Manifest load() const {
    if (gallery.empty() == manifest.empty()) throw InputError("give exactly one of --gallery or --manifest");
    if (!manifest.empty()) return load_manifest(manifest);
    return manifest_from_gallery(builtin(gallery, parse_params()));
  }

  Params parse_params() const {
    Params p;
    for (const auto& kv : params) {
      auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw InputError("--param expects key=value, got '" + kv + "'");
      p[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return p;
  }
};

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  body(out);
}

std::vector<double> require_point(const WeightedAlmostProduct& W, const std::vector<double>& p) {
  if (static_cast<int>(p.size()) != W.dim())
    throw InputError("--point needs " + std::to_string(W.dim()) + " coordinates");
  return p;
}

/// Unit vector in D⊤ at p from frame coefficients (default E_0).
Vec top_direction(const AdaptedPoint& A, const std::vector<double>& coeffs) {
  Vec c = Vec::Zero(A.nu);
  if (coeffs.empty()) {
    c(0) = 1.0;
  } else {
    if (static_cast<int>(coeffs.size()) != A.nu)
      throw InputError("--direction needs " + std::to_string(A.nu) + " frame coefficients");
    for (int a = 0; a < A.nu; ++a) c(a) = coeffs[static_cast<std::size_t>(a)];
  }
  if (c.norm() == 0.0) throw InputError("--direction must be nonzero");
  return A.top_basis() * (c / c.norm());
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"foliate: weighted almost-product geometry workbench"};
  app.require_subcommand(1);
  std::uint64_t seed = kDefaultSeed;
  app.add_option("--seed", seed, "seed for randomized checks")->capture_default_str();
  int status = kPass;

  // report ------------------------------------------------------------------
  auto* report = app.add_subcommand("report", "curvature report at a point (JSON)");
  ModelArgs report_model;
  report_model.attach(report);
  std::vector<double> report_point;
  report->add_option("--point", report_point, "chart coordinates, comma separated")->delimiter(',')->required();
  report->callback([&] {
    Manifest m = report_model.load();
    emit(curvature_report(m.W, require_point(m.W, report_point)));
  });

  // verify ------------------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "tolerance checks (JSON, exit 1 on failure)");
  verify->require_subcommand(1);

  auto* v_pw = verify->add_subcommand("pointwise", "pointwise identities at random points");
  ModelArgs pw_model;
  pw_model.attach(v_pw);
  int pw_points = 200;
  double pw_tol = kDefaultIdentityTolerance;
  std::string pw_csv;
  v_pw->add_option("--points", pw_points, "number of sample points")->capture_default_str();
  v_pw->add_option("--tol", pw_tol, "residual tolerance")->capture_default_str();
  v_pw->add_option("--csv", pw_csv, "write per-point residuals (CSV prefix)");
  v_pw->callback([&] {
    Manifest m = pw_model.load();
    std::mt19937_64 rng(seed);
    auto xi = random_trig_field(m.W.dim(), rng);
    auto pts = sample_points(m.W.manifold(), pw_points, seed + 1);
    auto reps = pointwise_suite(m.W, xi, pts, pw_tol);
    json out = {{"label", m.W.label()}, {"seed", seed}, {"reports", json::array()}};
    for (const auto& r : reps) {
      out["reports"].push_back(to_json(r));
      if (!r.pass) status = kToleranceFailure;
      if (!pw_csv.empty())
        write_file(pw_csv + "-" + r.id + ".csv", [&](std::ostream& os) { write_residual_csv(os, r); });
    }
    out["pass"] = status == kPass;
    emit(out);
  });

  auto* v_int = verify->add_subcommand("integral", "integral formulas by quadrature");
  ModelArgs int_model;
  int_model.attach(v_int);
  int grid = 64, formula = 1;
  double int_tol = kDefaultIdentityTolerance;
  std::vector<double> leaf_base;
  v_int->add_option("--grid", grid, "nodes per coordinate on the finest grid")->capture_default_str();
  v_int->add_option("--formula", formula, "1: whole manifold, 2: leafwise")->check(CLI::IsMember({1, 2}))->capture_default_str();
  v_int->add_option("--leaf-base", leaf_base, "point selecting the leaf (formula 2)")->delimiter(',');
  v_int->add_option("--tol", int_tol, "tolerance on |integral|")->capture_default_str();
  v_int->callback([&] {
    Manifest m = int_model.load();
    require_weights(m.W);
    if (grid < 4 || grid > 1024) throw InputError("--grid must lie in 4..1024");
    QuadratureOptions o;
    o.nodes = std::max(4, grid / 4);
    o.collapsing_ends = m.collapsing_ends;
    IntegralReport r;
    if (formula == 1) {
      auto f = [&](std::span<const double> p) { return integral_formula_1_integrand(m.W, p); };
      std::vector<double> base(static_cast<std::size_t>(m.W.dim()), 0.0);
      r = refine_integral("integral-formula-1", m.W.manifold(), f, detail::all_axes(m.W.manifold()), base, o, grid,
                          int_tol, -1.0);
    } else {
      if (m.leaf_coordinates.empty()) throw InputError("formula 2 needs leaf_coordinates in the model");
      std::vector<double> base = leaf_base.empty() ? std::vector<double>(static_cast<std::size_t>(m.W.dim()), 0.0)
                                                   : require_point(m.W, leaf_base);
      r = integral_formula_2_leafwise(m.W, m.leaf_coordinates, base, o, grid, int_tol);
    }
    if (!r.pass) status = kToleranceFailure;
    json out = to_json(r);
    out["label"] = m.W.label();
    emit(out);
  });

  auto* v_cd = verify->add_subcommand("cd", "mixed curvature-dimension condition on sample points");
  ModelArgs cd_model;
  cd_model.attach(v_cd);
  double cd_c = 1.0;
  int cd_q = 1, cd_points = 16;
  std::string cd_side = "top";
  v_cd->add_option("--c", cd_c, "lower bound c")->capture_default_str();
  v_cd->add_option("--q", cd_q, "q")->capture_default_str();
  v_cd->add_option("--side", cd_side, "top or bot")->check(CLI::IsMember({"top", "bot"}))->capture_default_str();
  v_cd->add_option("--points", cd_points, "number of sample points")->capture_default_str();
  v_cd->callback([&] {
    Manifest m = cd_model.load();
    auto pts = sample_points(m.W.manifold(), cd_points, seed);
    CDResult r = cd_check(m.W, cd_c, cd_q, cd_side == "top" ? Side::Top : Side::Bot, pts);
    if (!r.holds) status = kToleranceFailure;
    emit({{"label", m.W.label()},
          {"c", cd_c},
          {"q", cd_q},
          {"side", cd_side},
          {"holds", r.holds},
          {"minimum", r.minimum},
          {"margin", r.margin},
          {"witness_point", r.witness_point},
          {"points", r.points},
          {"directions", r.directions},
          {"seed", seed}});
  });

  auto* v_ric = verify->add_subcommand("riccati", "Riccati blow-up and Riccati-Jacobi checks");
  v_ric->callback([&] {
    auto res = run_acceptance({seed}, {"riccati"}, false);
    json out = json::array();
    for (const auto& r : res) {
      out.push_back(to_json(r));
      if (!r.pass) status = kToleranceFailure;
    }
    emit(out);
  });

  auto* v_bounds = verify->add_subcommand("bounds", "arithmetic of the dimension and diameter bounds");
  std::int64_t rho_max = 4096;
  v_bounds->add_option("--rho-max", rho_max, "check rho(n) for 2 <= n <= rho-max")->capture_default_str();
  v_bounds->callback([&] {
    if (rho_max < 2) throw InputError("--rho-max must be at least 2");
    RhoBoundCheck rb = rho_bound_check(rho_max);
    double f07 = f_delta(0.7);
    int grid_fail = 0;
    for (int i = 0; i <= 300; ++i)
      if (!sufficient_inequality(0.5, 0.7 + 1e-3 * i).holds) ++grid_fail;
    DiameterBound hopf = diameter_bound({1.0, 1, 2, 1, 0.0, 0.0});
    bool pass = rb.holds && f07 > 0.63 && grid_fail == 0 && hopf.diam == std::numbers::pi / 2;
    if (!pass) status = kToleranceFailure;
    emit({{"rho_max", rho_max},
          {"rho_log_bound_holds", rb.holds},
          {"rho_first_failure", rb.first_failure ? json(*rb.first_failure) : json(nullptr)},
          {"log_bound_below_n_from", rb.upper_from},
          {"f_delta_0.7", f07},
          {"sufficient_grid_failures", grid_fail},
          {"hopf_diameter_bound", hopf.diam},
          {"pass", pass}});
  });

  // riccati -----------------------------------------------------------------
  auto* ric = app.add_subcommand("riccati", "Riccati flow along a leaf geodesic (JSON, optional CSV trace)");
  ModelArgs ric_model;
  ric_model.attach(ric);
  std::vector<double> ric_point, ric_dir;
  double ric_T = 0.0;
  std::optional<double> ric_lambda;
  bool ric_weighted = false;
  std::string ric_csv;
  ric->add_option("--point", ric_point, "start point")->delimiter(',')->required();
  ric->add_option("--direction", ric_dir, "coefficients of the initial velocity in the D-top frame")->delimiter(',');
  ric->add_option("--T", ric_T, "integration length (default pi)");
  ric->add_option("--lambda0", ric_lambda, "start from B0 = lambda0 id instead of the co-nullity operator");
  ric->add_flag("--weighted", ric_weighted, "use the weighted equation");
  ric->add_option("--csv", ric_csv, "write the trace as CSV");
  ric->callback([&] {
    Manifest m = ric_model.load();
    auto p = require_point(m.W, ric_point);
    AdaptedPoint A = adapt(m.W, p);
    Vec v = top_direction(A, ric_dir);
    std::optional<Mat> B0;
    if (ric_lambda) B0 = *ric_lambda * Mat::Identity(A.n, A.n);
    double T = ric_T > 0.0 ? ric_T : std::numbers::pi;
    RiccatiTrace tr = riccati_flow(m.W, p, v, T, B0, ric_weighted);
    if (!ric_csv.empty()) write_file(ric_csv, [&](std::ostream& os) { write_riccati_csv(os, tr); });
    emit({{"label", m.W.label()},
          {"T", T},
          {"weighted", ric_weighted},
          {"blow_up", opt_json(tr.blow_up)},
          {"bracket", {tr.bracket_lo, tr.bracket_hi}},
          {"nodes", tr.t.size()},
          {"final_B_norm", tr.B.empty() ? 0.0 : tr.B.back().norm()},
          {"max_s2", tr.max_s2},
          {"max_error_estimate", tr.max_error_estimate}});
  });

  // geodesic ----------------------------------------------------------------
  auto* geo = app.add_subcommand("geodesic", "leaf geodesic with parallel frame (JSON, optional CSV)");
  ModelArgs geo_model;
  geo_model.attach(geo);
  std::vector<double> geo_point, geo_dir;
  double geo_T = 1.0;
  std::string geo_csv;
  geo->add_option("--point", geo_point, "start point")->delimiter(',')->required();
  geo->add_option("--direction", geo_dir, "coefficients of the initial velocity in the D-top frame")->delimiter(',');
  geo->add_option("--T", geo_T, "length")->capture_default_str();
  geo->add_option("--csv", geo_csv, "write t and coordinates as CSV");
  geo->callback([&] {
    Manifest m = geo_model.load();
    auto p = require_point(m.W, geo_point);
    AdaptedPoint A = adapt(m.W, p);
    LeafGeodesicTrace tr = integrate_geodesic(m.W, p, top_direction(A, geo_dir), geo_T);
    if (!geo_csv.empty())
      write_file(geo_csv, [&](std::ostream& os) {
        os << "t";
        for (int k = 0; k < A.d; ++k) os << ",x" << k;
        os << "\n";
        os.precision(17);
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
          os << tr.t[i];
          for (int k = 0; k < A.d; ++k) os << "," << tr.points[i](k);
          os << "\n";
        }
      });
    emit({{"label", m.W.label()},
          {"T", geo_T},
          {"end", detail::to_json(tr.points.back())},
          {"speed_drift", tr.speed_drift},
          {"tangency_drift", tr.tangency_drift},
          {"frame_drift", tr.frame_drift},
          {"nodes", tr.t.size()}});
  });

  // turbulence --------------------------------------------------------------
  auto* turb = app.add_subcommand("turbulence", "turbulence a(L) of a totally geodesic foliation");
  ModelArgs turb_model;
  turb_model.attach(turb);
  int turb_points = 16;
  turb->add_option("--points", turb_points, "number of sample points")->capture_default_str();
  turb->callback([&] {
    Manifest m = turb_model.load();
    Turbulence t = turbulence(m.W, sample_points(m.W.manifold(), turb_points, seed));
    emit({{"label", m.W.label()},
          {"a", t.a},
          {"antisymmetric_norm", t.antisymmetric},
          {"totally_geodesic", t.totally_geodesic},
          {"h_top_max", t.h_top_max},
          {"witness_point", t.witness_point},
          {"samples", t.samples},
          {"seed", seed}});
  });

  // bounds ------------------------------------------------------------------
  auto* bounds = app.add_subcommand("bounds", "closed-form bounds");
  bounds->require_subcommand(1);
  auto* b_rho = bounds->add_subcommand("rho", "Radon-Hurwitz number");
  std::int64_t b_n = 2;
  b_rho->add_option("--n", b_n, "n")->required();
  b_rho->callback([&] {
    if (b_n < 1) throw InputError("--n must be positive");
    emit({{"n", b_n}, {"rho", radon_hurwitz(b_n)}});
  });
  auto* b_nu = bounds->add_subcommand("nu", "largest t < rho(n - t)");
  int b_nu_n = 2;
  b_nu->add_option("--n", b_nu_n, "n")->required();
  b_nu->callback([&] { emit({{"n", b_nu_n}, {"nu", nullity_threshold(b_nu_n)}}); });

  auto* b_diam = bounds->add_subcommand("diameter", "leaf diameter bound");
  DiameterBoundInput din;
  b_diam->add_option("--c", din.c, "c")->capture_default_str();
  b_diam->add_option("--q", din.q, "q")->capture_default_str();
  b_diam->add_option("--n", din.n, "rank of D-perp")->capture_default_str();
  b_diam->add_option("--nu", din.nu, "rank of D-top")->capture_default_str();
  b_diam->add_option("--x-bot", din.X_bot, "|X-perp|")->capture_default_str();
  b_diam->add_option("--h-f", din.h_F, "|h_F|")->capture_default_str();
  b_diam->callback([&] {
    DiameterBound b = diameter_bound(din);
    emit({{"branch", b.branch}, {"diam2", b.diam2}, {"diam", b.diam}});
  });

  auto* b_f = bounds->add_subcommand("f-delta", "f(delta) and the two scalar inequalities");
  double f_d = 0.7, f_tau = 0.5, f_a2k = 1.0;
  b_f->add_option("--delta", f_d, "delta")->capture_default_str();
  b_f->add_option("--tau", f_tau, "tau")->capture_default_str();
  b_f->add_option("--a2-over-k", f_a2k, "a(L)^2 / k")->capture_default_str();
  b_f->callback([&] {
    ScalarInequality suff = sufficient_inequality(f_tau, f_d), nec = necessary_inequality(f_tau, f_d, f_a2k);
    emit({{"delta", f_d},
          {"f", f_delta(f_d)},
          {"tau", f_tau},
          {"sufficient", {{"lhs", suff.lhs}, {"rhs", suff.rhs}, {"holds", suff.holds}}},
          {"necessary", {{"lhs", nec.lhs}, {"rhs", nec.rhs}, {"holds", nec.holds}}}});
  });

  auto* b_t = bounds->add_subcommand("thm418", "curvature pinching hypothesis of the leaf-dimension theorem");
  Thm418Params tp;
  std::string t_variant = "local";
  b_t->add_option("--k1", tp.k1, "k1")->capture_default_str();
  b_t->add_option("--k2", tp.k2, "k2")->capture_default_str();
  b_t->add_option("--eps", tp.eps, "epsilon")->capture_default_str();
  b_t->add_option("--a", tp.a, "turbulence a(L)")->capture_default_str();
  b_t->add_option("--variant", t_variant, "local or decomposition")
      ->check(CLI::IsMember({"local", "decomposition"}))
      ->capture_default_str();
  b_t->callback([&] {
    PinchingCheck c = thm418_hypothesis(tp, t_variant == "local" ? PinchingVariant::Local : PinchingVariant::Decomposition);
    emit({{"variant", t_variant},
          {"k", c.k},
          {"delta", c.delta},
          {"constant", c.constant},
          {"lhs", c.lhs},
          {"rhs", c.rhs},
          {"holds", c.holds}});
  });

  // gallery -----------------------------------------------------------------
  auto* gal = app.add_subcommand("gallery", "built-in examples");
  gal->require_subcommand(1);
  auto* g_list = gal->add_subcommand("list", "list examples");
  g_list->callback([&] {
    json out = json::array();
    for (const auto& name : gallery_names()) {
      GalleryItem g = builtin(name);
      out.push_back({{"name", name}, {"dimension", g.W.dim()}, {"split", {g.W.nu(), g.W.n()}},
                     {"description", g.description}});
    }
    emit(out);
  });
  auto* g_exp = gal->add_subcommand("export", "write an example as a manifest");
  std::string exp_name, exp_out;
  std::vector<std::string> exp_params;
  g_exp->add_option("name", exp_name, "example name")->required();
  g_exp->add_option("--param", exp_params, "parameter key=value (repeatable)");
  g_exp->add_option("-o,--output", exp_out, "output file (default stdout)");
  g_exp->callback([&] {
    ModelArgs a;
    a.gallery = exp_name;
    a.params = exp_params;
    Manifest m = a.load();
    if (exp_out.empty())
      emit(manifest_to_json(m));
    else
      save_manifest(m, exp_out);
  });

  // suite -------------------------------------------------------------------
  auto* suite = app.add_subcommand("suite", "run the acceptance criteria");
  bool suite_json_out = false, suite_serial = false;
  std::vector<std::string> only;
  suite->add_flag("--json", suite_json_out, "machine-readable summary");
  suite->add_option("--only", only, "criterion id, key or tag (repeatable)");
  suite->add_flag("--serial", suite_serial, "run criteria one after another");
  suite->callback([&] {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = run_acceptance({seed}, only, !suite_serial);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& r : res)
      if (!r.pass) status = kToleranceFailure;
    if (suite_json_out) {
      emit(suite_json(res, seed, secs));
      return;
    }
    for (const auto& r : res)
      std::printf("%s %2d %-15s %6.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.key.c_str(), r.seconds,
                  r.summary.c_str());
    std::printf("seed %llu, %.1f s\n", static_cast<unsigned long long>(seed), secs);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kInputFailure;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return status;
}
