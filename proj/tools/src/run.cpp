#include "csol_cli/run.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>

#include "csol_cli/json_io.hpp"

namespace csol::cli {

namespace {

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnboundedPolytope:
    case ErrorCode::DegenerateInput:
    case ErrorCode::UnboundedSlice:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidDecomposition:
    case ErrorCode::ArityMismatch:
    case ErrorCode::GridTooCoarse:
    case ErrorCode::BoxTooSmall:
      return true;
    default:
      return false;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// Per-run bookkeeping shared by all subcommands.
struct Context {
  std::string subcommand;
  json options = json::object();
  json inputs = json::array();
  std::string digest_bytes;
  json result = json::object();
  bool pass = true;
  std::optional<json> failure;

  json load(const std::string& role, const std::string& path) {
    std::string text = read_file(path);
    inputs.push_back({{"role", role}, {"path", path}, {"digest", "fnv1a64:" + hex64(fnv1a(text))}});
    digest_bytes.push_back('\0');
    digest_bytes += text;
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw InputError("MalformedInput", e.what(), path + ":byte " + std::to_string(e.byte));
    }
  }

  std::string digest() const {
    std::uint64_t h = fnv1a(subcommand);
    h = fnv1a(std::string(1, '\0') + options.dump(), h);
    h = fnv1a(digest_bytes, h);
    return "fnv1a64:" + hex64(h);
  }
};

json error_object(const std::string& code, const std::string& message, const std::string& location) {
  return {{"schema", "v1"}, {"error", {{"code", code}, {"message", message}, {"location", location}}}};
}

// Appends `--key value` for config entries not already given on the command line.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  json cfg = read_json_file(path);
  if (!cfg.is_object()) throw InputError("MalformedInput", "config must be a JSON object", path);
  std::string sub;
  for (const auto& a : args)
    if (!a.empty() && a[0] != '-') {
      sub = a;
      break;
    }
  json flat = json::object();
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (!it.value().is_object()) flat[it.key()] = it.value();
  if (cfg.contains(sub) && cfg[sub].is_object())
    for (auto it = cfg[sub].begin(); it != cfg[sub].end(); ++it) flat[it.key()] = it.value();
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    const std::string flag = "--" + it.key();
    bool given = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
    if (given) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_string()) {
      args.push_back(flag);
      args.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      args.push_back(flag);
      args.push_back(v.dump());
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) {
        if (!e.is_number()) throw InputError("MalformedInput", "array entries must be numbers", path + ":/" + it.key());
        joined += (joined.empty() ? "" : ",") + e.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else {
      throw InputError("MalformedInput", "unsupported config value", path + ":/" + it.key());
    }
  }
  return args;
}

Decomposition load_decomposition(Context& ctx, const std::string& path, double geom_tol) {
  return decomposition_from_json(ctx.load("decomp", path), path + ":", GeomTolerance{geom_tol});
}

std::vector<Vec> load_weights(Context& ctx, const std::string& path, const Decomposition& d) {
  if (path.empty()) return std::vector<Vec>(d.arity(), Vec::Zero(d.dim()));
  auto w = weights_from_json(ctx.load("weights", path), path + ":");
  if (static_cast<int>(w.size()) != d.arity())
    throw InputError("ArityMismatch", "expected one weight per summand", path + ":");
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i].size() != d.dim())
      throw InputError("DimensionMismatch", "weight length differs from the dimension", path + ":/" + std::to_string(i));
  return w;
}

double or_default(double v, double fallback) { return v < 0.0 ? fallback : v; }

json path_summary(const PathState& ps) {
  json hist = json::array();
  for (const auto& h : ps.history)
    hist.push_back({{"t", h.t},
                    {"dt", h.dt},
                    {"accepted", h.accepted},
                    {"newton_iterations", h.newton_iterations},
                    {"merit", h.merit},
                    {"failure", h.failure}});
  return {{"reached_t", ps.t},
          {"residual", ps.residual},
          {"min_gradient_slack", ps.min_gradient_slack},
          {"steps", ps.history.size()},
          {"history", hist}};
}

json state_summary(const PotentialGrid& s) {
  ResidualReport r = residual(s);
  json consts = json::array();
  for (int a = 0; a < s.arity(); ++a) consts.push_back(s.additive_constant(a));
  return {{"t", s.t},
          {"merit", r.merit},
          {"pde_sup", to_json(r.pde_sup)},
          {"boundary_sup", r.boundary_sup},
          {"mass_error", r.mass},
          {"tail_mass", r.tail_mass},
          {"volume_defect", to_json(r.volume_defect)},
          {"weight_correction", to_json(s.weight_correction)},
          {"additive_constants", consts}};
}

// Spectral data for summand `alpha` of a one-dimensional t = 1 state.
json spectral_summary(const PotentialGrid& s, int alpha) {
  SturmLiouvilleProblem p = make_sturm_liouville(s, alpha);
  EigenResult e = first_eigenvalue(p);
  Grid grid(s.grid);
  Vec f = s.potential(alpha), g(f.size());
  const double h = grid.spacing();
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(i - 1, 0), hi = std::min<Eigen::Index>(i + 1, f.size() - 1);
    g(i) = (f(hi) - f(lo)) / ((hi - lo) * h);
  }
  return {{"alpha", alpha},
          {"lambda", e.lambda},
          {"lambda0", e.lambda0},
          {"symmetry_defect", e.symmetry_defect},
          {"gradient_correlation", mass_correlation(p, e.vector, g)}};
}

struct Common {
  bool pretty = false;
  bool timing = false;
  std::string out;
  std::string config;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_flag("--pretty", c.pretty, "Indent the JSON report");
  sub->add_flag("--timing", c.timing, "Include wall-clock seconds in the report");
  sub->add_option("--out", c.out, "Write the report to FILE instead of stdout");
  sub->add_option("--config", c.config, "JSON file of option defaults (flat or keyed by subcommand)");
}

}  // namespace

RunResult run(const std::vector<std::string>& raw_args) {
  RunResult rr;
  std::vector<std::string> args;
  try {
    args = apply_config(raw_args);
  } catch (const InputError& e) {
    rr.exit_code = 1;
    rr.out = error_object(e.code(), e.what(), e.location()).dump() + "\n";
    return rr;
  }

  CLI::App app{"Toric coupled Kaehler-Einstein and soliton toolkit", "csol"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  double geom_tol = 1e-9;

  // canonical
  std::string fan;
  auto* canonical = app.add_subcommand("canonical", "Canonical polytope of a fan");
  canonical->add_option("--fan", fan, "JSON list of fan normals")->required();
  canonical->add_option("--geom-tol", geom_tol, "Relative geometric tolerance");
  add_common(canonical, common);

  // slice
  std::string cone_path, xi_text;
  auto* slice = app.add_subcommand("slice", "Reeb slice of a moment cone");
  slice->add_option("--cone", cone_path, "JSON cone {dim, normals}")->required();
  slice->add_option("--xi", xi_text, "Reeb vector as comma-separated numbers")->required();
  slice->add_option("--geom-tol", geom_tol, "Relative geometric tolerance");
  add_common(slice, common);

  // check-decomp / futaki / soliton / solve share --decomp
  std::string decomp_path, weights_path, v_text;
  double tol = -1.0;
  auto* check = app.add_subcommand("check-decomp", "Minkowski decomposition and normalization checks");
  check->add_option("--decomp", decomp_path, "Decomposition JSON")->required();
  check->add_option("--tol", tol, "Support-deviation tolerance (default 1e-9 max(1, R))");
  check->add_option("--geom-tol", geom_tol, "Relative geometric tolerance");
  add_common(check, common);

  auto* futaki_cmd = app.add_subcommand("futaki", "Coupled Futaki invariant");
  futaki_cmd->add_option("--decomp", decomp_path, "Decomposition JSON")->required();
  futaki_cmd->add_option("--weights", weights_path, "One weight vector per summand (default zero)");
  futaki_cmd->add_option("--v", v_text, "Evaluate Fut(V) at this vector");
  futaki_cmd->add_option("--tol", tol, "Vanishing tolerance (default 1e-9 max(1, R))");
  futaki_cmd->add_option("--geom-tol", geom_tol, "Relative geometric tolerance");
  add_common(futaki_cmd, common);

  SolitonOptions sopts;
  bool trace = false;
  auto* soliton = app.add_subcommand("soliton", "Soliton vector field W");
  soliton->add_option("--decomp", decomp_path, "Decomposition JSON")->required();
  soliton->add_option("--tol", sopts.tol, "Gradient-norm tolerance");
  soliton->add_option("--max-iter", sopts.max_iter, "Newton iteration budget");
  soliton->add_flag("--trace", trace, "Include the iteration trace");
  soliton->add_option("--geom-tol", geom_tol, "Relative geometric tolerance");
  add_common(soliton, common);

  MaOptions mopts;
  GridSpec spec;
  std::string save_path;
  auto* solve = app.add_subcommand("solve", "Continuity-path solve of the coupled Monge-Ampere system");
  solve->add_option("--decomp", decomp_path, "Decomposition JSON")->required();
  solve->add_option("--dim", spec.dim, "Grid dimension (1 or 2)")->check(CLI::IsMember({1, 2}));
  solve->add_option("--grid", spec.n, "Cells per axis");
  solve->add_option("--box", spec.half_width, "Box half-width R");
  solve->add_option("--t-step", mopts.dt0, "Initial continuation step");
  solve->add_option("--dt-min", mopts.dt_min, "Smallest continuation step");
  solve->add_option("--tol", mopts.tol, "Newton tolerance");
  solve->add_option("--max-newton", mopts.max_newton, "Newton iterations per step");
  solve->add_option("--box-tol", mopts.guillemin.box_tol, "Admissible facet gap of the reference gradient image");
  solve->add_option("--weight-correction-tol", mopts.weight_correction_tol, "Admissible translation correction at t = 1");
  solve->add_option("--weights", weights_path, "One weight vector per summand (default zero)");
  solve->add_flag("--paper-sign", mopts.paper_sign, "Use the exponent t*sum f - (1-t)*sum h (infinite mass, stalls)");
  solve->add_option("--save", save_path, "Write the solution grid dump to FILE");
  solve->add_option("--geom-tol", geom_tol, "Relative geometric tolerance");
  add_common(solve, common);

  std::string solution_path;
  int alpha = 0;
  auto* spectrum = app.add_subcommand("spectrum", "First eigenvalue of the twisted Laplacian");
  spectrum->add_option("--solution", solution_path, "Saved solution JSON")->required();
  spectrum->add_option("--alpha", alpha, "Summand index");
  add_common(spectrum, common);

  double push_tol = 1e-4, lambda_tol = 1e-3, slack_tol = 1e-8;
  auto* verify = app.add_subcommand("verify", "Invariant, pushforward and spectral checks on a saved solution");
  verify->add_option("--solution", solution_path, "Saved solution JSON")->required();
  verify->add_option("--pushforward-tol", push_tol, "Relative moment deviation bound");
  verify->add_option("--lambda-tol", lambda_tol, "Allowed shortfall of the first eigenvalue below 1");
  verify->add_option("--slack-tol", slack_tol, "Allowed facet violation of the gradient image");
  add_common(verify, common);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    rr.out = app.help();
    return rr;
  } catch (const CLI::CallForAllHelp&) {
    rr.out = app.help("", CLI::AppFormatMode::All);
    return rr;
  } catch (const CLI::CallForVersion&) {
    rr.out = std::string(kVersion) + "\n";
    return rr;
  } catch (const CLI::ParseError& e) {
    rr.exit_code = 1;
    rr.out = error_object("InvalidArguments", e.what(), "argv").dump() + "\n";
    return rr;
  }

  Context ctx;
  CLI::App* chosen = app.get_subcommands().front();
  ctx.subcommand = chosen->get_name();
  const auto start = std::chrono::steady_clock::now();

  std::function<void()> body;
  if (chosen == canonical) {
    ctx.options = {{"geom_tol", geom_tol}};
    body = [&] {
      auto normals = fan_from_json(ctx.load("fan", fan), fan + ":");
      Polytope p = canonical_polytope(normals, GeomTolerance{geom_tol});
      ctx.result = {{"polytope", polytope_to_json(p)}, {"volume", volume(p)}, {"min_slack_at_origin", min_slack(p, Vec::Zero(p.dim()))}};
    };
  } else if (chosen == slice) {
    ctx.options = {{"geom_tol", geom_tol}};
    body = [&] {
      MomentCone cone = cone_from_json(ctx.load("cone", cone_path), cone_path + ":");
      Vec xi = vec_from_list(xi_text, "argv:--xi");
      ctx.options["xi"] = to_json(xi);
      ReebSlice s = reeb_slice(cone, xi, GeomTolerance{geom_tol});
      ctx.result = {{"polytope", polytope_to_json(s.polytope)},
                    {"chart", {{"dropped_axis", s.dropped_axis}, {"xi", to_json(s.xi)}}},
                    {"volume", volume(s.polytope)}};
    };
  } else if (chosen == check) {
    body = [&] {
      Decomposition d = load_decomposition(ctx, decomp_path, geom_tol);
      const double t = or_default(tol, default_decomposition_tolerance(d));
      ctx.options = {{"geom_tol", geom_tol}, {"tol", t}};
      DecompositionCheck c = check_decomposition(d.summands, d.target, t);
      NormalizationReport n = check_normalizations(d, t);
      ctx.result = {{"check", check_to_json(c)}, {"normalizations", normalizations_to_json(n)}};
      ctx.pass = c.pass && c.facets_parallel;
    };
  } else if (chosen == futaki_cmd) {
    body = [&] {
      Decomposition d = load_decomposition(ctx, decomp_path, geom_tol);
      auto w = load_weights(ctx, weights_path, d);
      const double t = or_default(tol, default_vanishing_tolerance(d));
      ctx.options = {{"geom_tol", geom_tol}, {"tol", t}};
      FutakiReport r = futaki_twisted(d, w, t);
      ctx.result = {{"report", futaki_to_json(r)}};
      bool zero = true;
      for (const auto& wi : w) zero = zero && wi.isZero(0.0);
      if (zero) ctx.result["coupled_ke_exists"] = r.vanishes;
      if (!v_text.empty()) {
        Vec v = vec_from_list(v_text, "argv:--v");
        if (v.size() != d.dim()) throw InputError("DimensionMismatch", "V length differs from the dimension", "argv:--v");
        ctx.options["v"] = to_json(v);
        ctx.result["value"] = zero ? futaki(d, v) : r.vector.dot(v);
      }
      ctx.pass = r.vanishes;
    };
  } else if (chosen == soliton) {
    ctx.options = {{"geom_tol", geom_tol}, {"tol", sopts.tol}, {"max_iter", sopts.max_iter}};
    body = [&] {
      Decomposition d = load_decomposition(ctx, decomp_path, geom_tol);
      SolitonSolution s = soliton_field(d, sopts);
      FutakiReport check_w = futaki_twisted(d, std::vector<Vec>(d.arity(), s.w));
      ctx.result = {{"solution", soliton_to_json(s, trace)}, {"futaki_at_W", futaki_to_json(check_w)}};
    };
  } else if (chosen == solve) {
    ctx.options = {{"geom_tol", geom_tol},
                   {"dim", spec.dim},
                   {"grid", spec.n},
                   {"box", spec.half_width},
                   {"t_step", mopts.dt0},
                   {"dt_min", mopts.dt_min},
                   {"tol", mopts.tol},
                   {"max_newton", mopts.max_newton},
                   {"box_tol", mopts.guillemin.box_tol},
                   {"weight_correction_tol", mopts.weight_correction_tol},
                   {"paper_sign", mopts.paper_sign}};
    body = [&] {
      Decomposition d = load_decomposition(ctx, decomp_path, geom_tol);
      auto w = load_weights(ctx, weights_path, d);
      auto save = [&](const PotentialGrid& s) {
        if (save_path.empty()) return;
        std::ofstream f(save_path, std::ios::binary);
        if (!f) throw InputError("FileNotWritable", "cannot write solution", save_path);
        f << solution_to_json(d, s, mopts).dump() << "\n";
      };
      try {
        PathState ps = continuity_solve(d, w, spec, mopts);
        ctx.result = {{"converged", true},
                      {"path", path_summary(ps)},
                      {"state", state_summary(ps.state)},
                      {"pushforward", pushforward_to_json(verify_pushforward(ps.state))}};
        save(ps.state);
      } catch (const PathStuckError& e) {
        const PathState& last = e.last_good();
        ctx.result = {{"converged", false}, {"path", path_summary(last)}, {"state", state_summary(last.state)}};
        save(last.state);
        ctx.pass = false;
        ctx.failure = json{{"code", error_name(e.code())}, {"message", e.detail()}};
      }
    };
  } else if (chosen == spectrum) {
    ctx.options = {{"alpha", alpha}};
    body = [&] {
      LoadedSolution sol = solution_from_json(ctx.load("solution", solution_path), solution_path + ":");
      if (alpha < 0 || alpha >= sol.state.arity())
        throw InputError("ArityMismatch", "alpha is not a summand index", "argv:--alpha");
      if (sol.state.dim() != 1) throw InputError("DimensionMismatch", "spectra are one-dimensional", solution_path + ":/grid/dim");
      ctx.result = spectral_summary(sol.state, alpha);
    };
  } else if (chosen == verify) {
    ctx.options = {{"pushforward_tol", push_tol}, {"lambda_tol", lambda_tol}, {"slack_tol", slack_tol}};
    body = [&] {
      LoadedSolution sol = solution_from_json(ctx.load("solution", solution_path), solution_path + ":");
      const Decomposition& d = sol.decomposition;
      const PotentialGrid& s = sol.state;
      json checks = json::object();
      bool ok = true;
      auto record = [&](const std::string& name, bool pass, json detail) {
        detail["pass"] = pass;
        checks[name] = std::move(detail);
        ok = ok && pass;
      };
      DecompositionCheck dc = check_decomposition(d.summands, d.target, default_decomposition_tolerance(d));
      record("decomposition", dc.pass && dc.facets_parallel, {{"max_deviation", dc.max_deviation}});
      std::vector<Vec> eff;
      for (int a = 0; a < s.arity(); ++a) eff.push_back(s.effective_weight(a));
      FutakiReport fr = futaki_twisted(d, eff);
      record("futaki_twisted", fr.vanishes || s.t < 1.0, futaki_to_json(fr));
      record("normalizations", true, normalizations_to_json(check_normalizations(d)));
      record("converged", s.t == 1.0, {{"t", s.t}});
      json st = state_summary(s);
      record("residual", true, st);
      PushforwardReport pf = verify_pushforward(s);
      record("pushforward", pf.max_rel_deviation < push_tol, pushforward_to_json(pf));
      const double slack = min_gradient_slack(s);
      record("gradient_confinement", slack >= -slack_tol, {{"min_gradient_slack", slack}});
      if (s.dim() == 1 && s.t == 1.0) {
        IdentityReport id = verify_holomorphic_identity(s);
        record("holomorphic_identity", true, {{"sup", to_json(id.sup)}, {"constants", to_json(id.constants)}});
        if (s.arity() == 1) {
          json sp = spectral_summary(s, 0);
          record("first_eigenvalue", sp["lambda"].get<double>() >= 1.0 - lambda_tol, sp);
        }
      }
      ctx.result = {{"checks", checks}};
      ctx.pass = ok;
    };
  }

  try {
    body();
  } catch (const InputError& e) {
    rr.exit_code = 1;
    rr.out = error_object(e.code(), e.what(), e.location()).dump() + "\n";
    return rr;
  } catch (const Error& e) {
    if (is_input_error(e.code())) {
      rr.exit_code = 1;
      rr.out = error_object(std::string(error_name(e.code())), e.detail(), ctx.subcommand).dump() + "\n";
      return rr;
    }
    ctx.pass = false;
    ctx.failure = json{{"code", error_name(e.code())}, {"message", e.detail()}};
  }

  json report = {{"schema", "v1"},
                 {"tool", {{"name", "csol"}, {"version", kVersion}}},
                 {"subcommand", ctx.subcommand},
                 {"input_digest", ctx.digest()},
                 {"inputs", ctx.inputs},
                 {"options", ctx.options},
                 {"status", ctx.pass ? "pass" : "fail"},
                 {"result", ctx.result}};
  if (ctx.failure) report["failure"] = *ctx.failure;
  if (common.timing)
    report["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string text = (common.pretty ? report.dump(2) : report.dump()) + "\n";
  rr.exit_code = ctx.pass ? 0 : 2;
  if (!common.out.empty()) {
    std::ofstream f(common.out, std::ios::binary);
    if (!f) {
      rr.exit_code = 1;
      rr.out = error_object("FileNotWritable", "cannot write report", common.out).dump() + "\n";
      return rr;
    }
    f << text;
  } else {
    rr.out = std::move(text);
  }
  return rr;
}

}  // namespace csol::cli
