#pragma once

// Run configuration for the pipeline driver: field specification, chaos
// orders, tolerances, path selection, and output routing. Parsed from JSON
// with strict key checking so typos fail loudly instead of silently running
// the defaults.

#include "ttchaos/errors.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace ttchaos {

enum class PathChoice { TT, Sparse, Both };

inline PathChoice path_from_string(const std::string& s) {
  if (s == "tt") return PathChoice::TT;
  if (s == "sparse") return PathChoice::Sparse;
  if (s == "both") return PathChoice::Both;
  throw config_error("config: path must be one of tt|sparse|both, got '" + s + "'");
}

struct FrequencySpec {
  bool enabled = false;
  double lo = 0.0;
  double hi = 0.0;
  std::string functional = "mean";  // "mean" | "point"
  int node = 0;                     // dof index for "point"
};

struct RunConfig {
  // field specification
  std::string domain = "lshape";
  int refinement = 4;
  std::string covariance = "gaussian";  // "gaussian" | "exponential"
  double sigma = 0.3;
  double marginal_a = 5.0;
  double marginal_b = 2.0;
  double shift = 1.0;

  // stochastic discretization
  int M = 5;  // Gaussian germ modes
  int L = 6;  // field expansion modes
  int p = 3;  // chaos order of the solution
  int Q = 0;  // transform expansion order; 0 selects 2p + 4

  // tolerances
  double cross_eps = 1e-4;
  double solver_eps = 1e-6;
  int solver_max_iter = 400;

  // theta grid for the characteristic functionals
  int theta_count = 9;
  double theta_extent = 4.0;

  // plumbing
  PathChoice path = PathChoice::TT;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool trace = false;
  std::string reference;  // solution artifact for the covariance-error table
  FrequencySpec frequency;

  int transform_order() const { return Q > 0 ? Q : 2 * p + 4; }
  int coefficient_order() const { return 2 * p; }

  void validate() const {
    if (refinement < 0 || refinement > 10) throw config_error("config: refinement out of range");
    if (!(sigma > 0)) throw config_error("config: sigma must be positive");
    if (!(marginal_a > 0) || !(marginal_b > 0))
      throw config_error("config: beta marginal parameters must be positive");
    if (M < 1 || M > 30) throw config_error("config: M out of range [1, 30]");
    if (L < 1 || L > 64) throw config_error("config: L out of range [1, 64]");
    if (p < 0 || p > 10) throw config_error("config: p out of range [0, 10]");
    if (Q < 0) throw config_error("config: Q must be nonnegative");
    if (Q > 0 && Q < coefficient_order())
      throw config_error("config: Q must cover the coefficient order 2p");
    if (!(cross_eps > 0.0 && cross_eps < 1.0))
      throw config_error("config: cross eps must lie in (0, 1)");
    if (!(solver_eps > 0.0 && solver_eps < 1.0))
      throw config_error("config: solver eps must lie in (0, 1)");
    if (solver_max_iter < 1) throw config_error("config: solver max_iter must be positive");
    if (theta_count < 1) throw config_error("config: theta grid needs at least one node");
    if (!(theta_extent > 0)) throw config_error("config: theta extent must be positive");
    if (frequency.enabled) {
      if (!(frequency.lo <= frequency.hi))
        throw config_error("config: frequency interval must satisfy lo <= hi");
      if (frequency.functional != "mean" && frequency.functional != "point")
        throw config_error("config: frequency functional must be mean|point");
      if (frequency.node < 0) throw config_error("config: frequency node must be nonnegative");
    }
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw config_error("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
inline T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config: bad value for '" + key + "': " + e.what());
  }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  using nlohmann::json;
  RunConfig c;
  detail::reject_unknown_keys(
      j,
      {"domain", "refinement", "covariance", "marginal", "modes", "chaos", "tolerances",
       "theta_grid", "path", "out", "seed", "reference", "frequency"},
      "the top level");

  c.domain = detail::get_or<std::string>(j, "domain", c.domain);
  c.refinement = detail::get_or<int>(j, "refinement", c.refinement);

  if (j.contains("covariance")) {
    const json& cv = j.at("covariance");
    detail::reject_unknown_keys(cv, {"family", "sigma"}, "covariance");
    c.covariance = detail::get_or<std::string>(cv, "family", c.covariance);
    c.sigma = detail::get_or<double>(cv, "sigma", c.sigma);
  }
  if (j.contains("marginal")) {
    const json& mg = j.at("marginal");
    detail::reject_unknown_keys(mg, {"a", "b", "shift"}, "marginal");
    c.marginal_a = detail::get_or<double>(mg, "a", c.marginal_a);
    c.marginal_b = detail::get_or<double>(mg, "b", c.marginal_b);
    c.shift = detail::get_or<double>(mg, "shift", c.shift);
  }
  if (j.contains("modes")) {
    const json& md = j.at("modes");
    detail::reject_unknown_keys(md, {"M", "L"}, "modes");
    c.M = detail::get_or<int>(md, "M", c.M);
    c.L = detail::get_or<int>(md, "L", c.L);
  }
  if (j.contains("chaos")) {
    const json& ch = j.at("chaos");
    detail::reject_unknown_keys(ch, {"p", "Q"}, "chaos");
    c.p = detail::get_or<int>(ch, "p", c.p);
    c.Q = detail::get_or<int>(ch, "Q", c.Q);
  }
  if (j.contains("tolerances")) {
    const json& tl = j.at("tolerances");
    detail::reject_unknown_keys(tl, {"cross", "solver", "solver_max_iter"}, "tolerances");
    c.cross_eps = detail::get_or<double>(tl, "cross", c.cross_eps);
    c.solver_eps = detail::get_or<double>(tl, "solver", c.solver_eps);
    c.solver_max_iter = detail::get_or<int>(tl, "solver_max_iter", c.solver_max_iter);
  }
  if (j.contains("theta_grid")) {
    const json& tg = j.at("theta_grid");
    detail::reject_unknown_keys(tg, {"count", "extent"}, "theta_grid");
    c.theta_count = detail::get_or<int>(tg, "count", c.theta_count);
    c.theta_extent = detail::get_or<double>(tg, "extent", c.theta_extent);
  }
  if (j.contains("path")) c.path = path_from_string(j.at("path").get<std::string>());
  c.out_dir = detail::get_or<std::string>(j, "out", c.out_dir);
  c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
  c.reference = detail::get_or<std::string>(j, "reference", c.reference);
  if (j.contains("frequency")) {
    const json& fr = j.at("frequency");
    detail::reject_unknown_keys(fr, {"lo", "hi", "functional", "node"}, "frequency");
    c.frequency.enabled = true;
    c.frequency.lo = detail::get_or<double>(fr, "lo", c.frequency.lo);
    c.frequency.hi = detail::get_or<double>(fr, "hi", c.frequency.hi);
    c.frequency.functional = detail::get_or<std::string>(fr, "functional", c.frequency.functional);
    c.frequency.node = detail::get_or<int>(fr, "node", c.frequency.node);
  }
  c.validate();
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: JSON parse failure: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace ttchaos
