#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "csol/csol.hpp"

namespace csol::cli {

using json = nlohmann::ordered_json;

// Malformed input; `location` is "<source>:<json pointer>".
class InputError : public std::runtime_error {
 public:
  InputError(std::string code, const std::string& message, std::string location)
      : std::runtime_error(message), code_(std::move(code)), location_(std::move(location)) {}
  const std::string& code() const { return code_; }
  const std::string& location() const { return location_; }

 private:
  std::string code_;
  std::string location_;
};

json read_json_file(const std::string& path);
std::string read_file(const std::string& path);

json to_json(const Vec& v);
json to_json(const Mat& m);
Vec vec_from_json(const json& j, const std::string& loc);
std::vector<Vec> vec_list_from_json(const json& j, const std::string& loc);
// "1,2.5,-3" -> (1, 2.5, -3)
Vec vec_from_list(const std::string& text, const std::string& loc);

// {"dim", "halfspaces": {"normals", "offsets"}, "vertices"}; both representations are emitted.
json polytope_to_json(const Polytope& p);
// Either representation, or both when they agree.
Polytope polytope_from_json(const json& j, const std::string& loc, GeomTolerance tol = {});
MomentCone cone_from_json(const json& j, const std::string& loc);
// {"normals": [...]} or a bare list of normals.
std::vector<Vec> fan_from_json(const json& j, const std::string& loc);

json decomposition_to_json(const Decomposition& d);
Decomposition decomposition_from_json(const json& j, const std::string& loc, GeomTolerance tol = {});
// {"weights": [...]} or a bare list, one vector per summand.
std::vector<Vec> weights_from_json(const json& j, const std::string& loc);

json check_to_json(const DecompositionCheck& c);
json normalizations_to_json(const NormalizationReport& r);
json futaki_to_json(const FutakiReport& r);
json soliton_to_json(const SolitonSolution& s, bool trace);
json pushforward_to_json(const PushforwardReport& r);

// Grid dump of a solved state together with what is needed to rebuild it.
json solution_to_json(const Decomposition& d, const PotentialGrid& s, const MaOptions& opts);

struct LoadedSolution {
  Decomposition decomposition;
  MaOptions options;
  PotentialGrid state;
};
LoadedSolution solution_from_json(const json& j, const std::string& loc);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace csol::cli
