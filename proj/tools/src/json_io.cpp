#include "csol_cli/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace csol::cli {

namespace {

[[noreturn]] void bad(const std::string& loc, const std::string& message) {
  throw InputError("MalformedInput", message, loc);
}

double number_at(const json& j, const std::string& loc) {
  if (!j.is_number()) bad(loc, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) bad(loc, "expected a finite number");
  return v;
}

const json& field(const json& j, const char* key, const std::string& loc) {
  if (!j.is_object()) bad(loc, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(loc, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string child(const std::string& loc, const std::string& key) { return loc + "/" + key; }
std::string child(const std::string& loc, std::size_t i) { return loc + "/" + std::to_string(i); }

std::vector<Vec> rows(const Mat& m) {
  std::vector<Vec> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
  return out;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("FileNotReadable", "cannot open file", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("MalformedInput", e.what(), path + ":byte " + std::to_string(e.byte));
  }
}

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i) + 0.0);  // no negative zeros
  return a;
}

json to_json(const Mat& m) {
  json a = json::array();
  for (const auto& r : rows(m)) a.push_back(to_json(r));
  return a;
}

Vec vec_from_json(const json& j, const std::string& loc) {
  if (j.is_number()) return Vec::Constant(1, number_at(j, loc));
  if (!j.is_array() || j.empty()) bad(loc, "expected a non-empty array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number_at(j[i], child(loc, i));
  return v;
}

std::vector<Vec> vec_list_from_json(const json& j, const std::string& loc) {
  if (!j.is_array() || j.empty()) bad(loc, "expected a non-empty array");
  std::vector<Vec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(vec_from_json(j[i], child(loc, i)));
    if (out.back().size() != out.front().size()) bad(child(loc, i), "entries differ in length");
  }
  return out;
}

Vec vec_from_list(const std::string& text, const std::string& loc) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
      vals.push_back(v);
    } catch (const std::exception&) {
      bad(loc, "expected a comma-separated list of numbers");
    }
  }
  if (vals.empty()) bad(loc, "expected a comma-separated list of numbers");
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

json polytope_to_json(const Polytope& p) {
  json normals = json::array(), offsets = json::array(), verts = json::array();
  for (const auto& h : p.halfspaces()) {
    normals.push_back(to_json(h.normal));
    offsets.push_back(h.offset + 0.0);
  }
  for (const auto& v : p.vertices()) verts.push_back(to_json(v));
  return {{"dim", p.dim()}, {"halfspaces", {{"normals", normals}, {"offsets", offsets}}}, {"vertices", verts}};
}

Polytope polytope_from_json(const json& j, const std::string& loc, GeomTolerance tol) {
  if (!j.is_object()) bad(loc, "expected a polytope object");
  const bool has_h = j.contains("halfspaces"), has_v = j.contains("vertices");
  if (!has_h && !has_v) bad(loc, "polytope needs \"halfspaces\" or \"vertices\"");
  std::optional<int> dim;
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1) bad(child(loc, "dim"), "expected a positive integer");
    dim = j["dim"].get<int>();
  }
  std::vector<Vec> given_vertices;
  if (has_v) given_vertices = vec_list_from_json(j["vertices"], child(loc, "vertices"));
  Polytope p;
  try {
    if (has_h) {
      const std::string hl = child(loc, "halfspaces");
      auto normals = vec_list_from_json(field(j["halfspaces"], "normals", hl), child(hl, "normals"));
      const json& off = field(j["halfspaces"], "offsets", hl);
      if (!off.is_array() || off.size() != normals.size()) bad(child(hl, "offsets"), "expected one offset per normal");
      std::vector<Halfspace> hs;
      for (std::size_t i = 0; i < normals.size(); ++i)
        hs.push_back({normals[i], number_at(off[i], child(child(hl, "offsets"), i))});
      p = Polytope::from_halfspaces(hs, tol);
    } else {
      p = Polytope::from_vertices(given_vertices, tol);
    }
  } catch (const Error& e) {
    throw InputError(std::string(error_name(e.code())), e.detail(), loc);
  }
  if (dim && *dim != p.dim()) bad(child(loc, "dim"), "dim differs from the coordinate length");
  if (has_h && has_v) {
    const double eps = p.tolerance();
    bool same = given_vertices.size() == p.vertices().size();
    for (const auto& v : given_vertices) {
      if (!same) break;
      bool found = false;
      for (const auto& w : p.vertices())
        if (v.size() == w.size() && (v - w).norm() <= eps) found = true;
      same = found;
    }
    if (!same) throw InputError("InconsistentRepresentations", "vertices do not match the halfspaces", loc);
  }
  return p;
}

MomentCone cone_from_json(const json& j, const std::string& loc) {
  MomentCone c;
  c.normals = vec_list_from_json(field(j, "normals", loc), child(loc, "normals"));
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() != c.dim())
      bad(child(loc, "dim"), "dim differs from the normal length");
  }
  return c;
}

std::vector<Vec> fan_from_json(const json& j, const std::string& loc) {
  if (j.is_object()) return vec_list_from_json(field(j, "normals", loc), child(loc, "normals"));
  return vec_list_from_json(j, loc);
}

json decomposition_to_json(const Decomposition& d) {
  json s = json::array();
  for (const auto& p : d.summands) s.push_back(polytope_to_json(p));
  return {{"target", polytope_to_json(d.target)}, {"summands", s}};
}

Decomposition decomposition_from_json(const json& j, const std::string& loc, GeomTolerance tol) {
  Decomposition d;
  d.target = polytope_from_json(field(j, "target", loc), child(loc, "target"), tol);
  const json& s = field(j, "summands", loc);
  if (!s.is_array() || s.empty()) bad(child(loc, "summands"), "expected a non-empty array of polytopes");
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.summands.push_back(polytope_from_json(s[i], child(child(loc, "summands"), i), tol));
    if (d.summands.back().dim() != d.target.dim())
      throw InputError("DimensionMismatch", "summand dimension differs from the target", child(child(loc, "summands"), i));
  }
  return d;
}

std::vector<Vec> weights_from_json(const json& j, const std::string& loc) {
  if (j.is_object()) return vec_list_from_json(field(j, "weights", loc), child(loc, "weights"));
  return vec_list_from_json(j, loc);
}

json check_to_json(const DecompositionCheck& c) {
  json np = json::array();
  for (const auto& [a, f] : c.non_parallel_facets) np.push_back({{"summand", a}, {"facet", f}});
  return {{"pass", c.pass},
          {"max_deviation", c.max_deviation},
          {"worst_signed_deviation", c.worst_signed_deviation},
          {"worst_direction", c.worst_direction.size() ? to_json(c.worst_direction) : json::array()},
          {"directions_tested", c.directions_tested},
          {"facets_parallel", c.facets_parallel},
          {"non_parallel_facets", np},
          {"dimension_mismatch", c.dimension_mismatch},
          {"tolerance", c.tolerance}};
}

json normalizations_to_json(const NormalizationReport& r) {
  return {{"support_deviation", r.support_deviation},
          {"support_pass", r.support_pass},
          {"facets_parallel", r.facets_parallel},
          {"first_moment_sum", to_json(r.first_moment_sum)},
          {"first_moment_pass", r.first_moment_pass},
          {"minkowski_barycenter", to_json(r.minkowski_barycenter)},
          {"tolerance", r.tolerance}};
}

json futaki_to_json(const FutakiReport& r) {
  json per = json::array();
  for (const auto& v : r.per_summand) per.push_back(to_json(v));
  return {{"vector", to_json(r.vector)},
          {"per_summand", per},
          {"norm", r.norm},
          {"vanishes", r.vanishes},
          {"tolerance", r.tolerance}};
}

json soliton_to_json(const SolitonSolution& s, bool trace) {
  json out = {{"W", to_json(s.w)}, {"residual", s.residual}, {"iterations", s.iterations}, {"g_value", s.g_value}};
  if (trace) {
    json t = json::array();
    for (const auto& r : s.trace)
      t.push_back({{"iteration", r.iteration},
                   {"W", to_json(r.w)},
                   {"g_value", r.g_value},
                   {"gradient_norm", r.gradient_norm},
                   {"step", r.step}});
    out["trace"] = t;
  }
  return out;
}

json pushforward_to_json(const PushforwardReport& r) {
  json per = json::array();
  for (const auto& s : r.summands)
    per.push_back({{"i0_rel", s.i0_rel},
                   {"i1_rel", s.i1_rel},
                   {"i2_rel", s.i2_rel},
                   {"barycenter", to_json(s.barycenter)},
                   {"exact_barycenter", to_json(s.exact_barycenter)},
                   {"min_gradient_slack", s.min_gradient_slack},
                   {"volume_defect", s.volume_defect}});
  return {{"summands", per}, {"solvability_mass", r.solvability_mass}, {"max_rel_deviation", r.max_rel_deviation}};
}

json solution_to_json(const Decomposition& d, const PotentialGrid& s, const MaOptions& opts) {
  json phi = json::array(), weights = json::array();
  for (const auto& p : s.phi) phi.push_back(to_json(p));
  for (const auto& w : s.weights) weights.push_back(to_json(w));
  return {{"schema", "v1"},
          {"kind", "solution"},
          {"decomposition", decomposition_to_json(d)},
          {"weights", weights},
          {"grid", {{"dim", s.grid.dim}, {"n", s.grid.n}, {"half_width", s.grid.half_width}}},
          {"options",
           {{"paper_sign", opts.paper_sign},
            {"matched_reference", opts.matched_reference},
            {"box_tol", opts.guillemin.box_tol}}},
          {"t", s.t},
          {"augmented", s.augmented},
          {"c", s.c},
          {"c0", s.c0},
          {"log_volume", to_json(s.log_volume)},
          {"weight_correction", to_json(s.weight_correction)},
          {"phi", phi}};
}

LoadedSolution solution_from_json(const json& j, const std::string& loc) {
  if (!j.is_object() || j.value("kind", "") != "solution") bad(loc, "not a solution file");
  if (j.value("schema", "") != "v1") bad(child(loc, "schema"), "unsupported schema version");
  LoadedSolution out;
  out.decomposition = decomposition_from_json(field(j, "decomposition", loc), child(loc, "decomposition"));
  auto weights = weights_from_json(field(j, "weights", loc), child(loc, "weights"));
  const json& g = field(j, "grid", loc);
  GridSpec spec;
  try {
    spec.dim = g.at("dim").get<int>();
    spec.n = g.at("n").get<int>();
    spec.half_width = g.at("half_width").get<double>();
  } catch (const json::exception&) {
    bad(child(loc, "grid"), "expected integer dim and n and numeric half_width");
  }
  const json& o = field(j, "options", loc);
  out.options.paper_sign = o.value("paper_sign", false);
  out.options.matched_reference = o.value("matched_reference", true);
  out.options.guillemin.box_tol = o.value("box_tol", out.options.guillemin.box_tol);
  try {
    out.state = initial_state(out.decomposition, weights, spec, out.options);
  } catch (const Error& e) {
    throw InputError(std::string(error_name(e.code())), e.detail(), loc);
  }
  PotentialGrid& s = out.state;
  s.t = number_at(field(j, "t", loc), child(loc, "t"));
  if (!field(j, "augmented", loc).is_boolean()) bad(child(loc, "augmented"), "expected a boolean");
  s.augmented = j["augmented"].get<bool>();
  s.c = number_at(field(j, "c", loc), child(loc, "c"));
  s.c0 = number_at(field(j, "c0", loc), child(loc, "c0"));
  s.log_volume = vec_from_json(field(j, "log_volume", loc), child(loc, "log_volume"));
  s.weight_correction = vec_from_json(field(j, "weight_correction", loc), child(loc, "weight_correction"));
  const json& phi = field(j, "phi", loc);
  if (!phi.is_array() || static_cast<int>(phi.size()) != s.arity()) bad(child(loc, "phi"), "expected one field per summand");
  for (int a = 0; a < s.arity(); ++a) {
    Vec v = vec_from_json(phi[a], child(child(loc, "phi"), a));
    if (v.size() != s.phi[a].size()) bad(child(child(loc, "phi"), a), "field length differs from the grid");
    s.phi[a] = v;
  }
  if (s.log_volume.size() != s.arity()) bad(child(loc, "log_volume"), "expected one entry per summand");
  if (s.weight_correction.size() != s.dim()) bad(child(loc, "weight_correction"), "expected one entry per axis");
  return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace csol::cli
