#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "apx/experiment.hpp"

namespace apx {

namespace {

double to_double(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || std::isnan(v)) throw std::invalid_argument("not a number");
  return v;
}

template <class I>
I to_int(const std::string& s) {
  I v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::invalid_argument("not an integer");
  return v;
}

// NaN marks an unset optional value and is left out of the resolved config
std::string fmt(double v) { return std::isnan(v) ? "" : std::isinf(v) ? "inf" : format_double(v); }

struct Key {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Key num(T ExperimentConfig::*m) {
  if constexpr (std::is_floating_point_v<T>)
    return {[m](ExperimentConfig& c, const std::string& v) { c.*m = to_double(v); },
            [m](const ExperimentConfig& c) { return fmt(c.*m); }};
  else
    return {[m](ExperimentConfig& c, const std::string& v) { c.*m = to_int<T>(v); },
            [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Key str(std::string ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.*m = v; },
          [m](const ExperimentConfig& c) { return c.*m; }};
}

// Ordered as written to manifests.
const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> k = {
      {"command", str(&ExperimentConfig::command)},
      {"domain", str(&ExperimentConfig::domain)},
      {"rule",
       {[](ExperimentConfig& c, const std::string& v) {
          try {
            c.rule = parse_rule(v);
          } catch (const MeshError&) {
            throw std::invalid_argument("expected nvb or red");
          }
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.rule)); }}},
      {"m", num(&ExperimentConfig::m)},
      {"d", num(&ExperimentConfig::d)},
      {"field", str(&ExperimentConfig::field)},
      {"rho", str(&ExperimentConfig::rho)},
      {"space", str(&ExperimentConfig::space)},
      {"backend", str(&ExperimentConfig::backend)},
      {"p", num(&ExperimentConfig::p)},
      {"q", num(&ExperimentConfig::q)},
      {"alpha", num(&ExperimentConfig::alpha)},
      {"sigma", num(&ExperimentConfig::sigma)},
      {"theta", num(&ExperimentConfig::theta)},
      {"delta", num(&ExperimentConfig::delta)},
      {"p0", num(&ExperimentConfig::p0)},
      {"depth", num(&ExperimentConfig::depth)},
      {"eps0", num(&ExperimentConfig::eps0)},
      {"eps_factor", num(&ExperimentConfig::eps_factor)},
      {"steps", num(&ExperimentConfig::steps)},
      {"max_iterations", num(&ExperimentConfig::max_iterations)},
      {"uniform_levels", num(&ExperimentConfig::uniform_levels)},
      {"fit_min_n", num(&ExperimentConfig::fit_min_n)},
      {"problem", str(&ExperimentConfig::problem)},
      {"theta_D", num(&ExperimentConfig::theta_d)},
      {"max_iter", num(&ExperimentConfig::max_iter)},
      {"rounds", num(&ExperimentConfig::rounds)},
      {"mark", str(&ExperimentConfig::mark)},
      {"seed", num(&ExperimentConfig::seed)},
      {"out", str(&ExperimentConfig::out)},
      {"max_cells", num(&ExperimentConfig::max_cells)},
  };
  return k;
}

const Key* find_key(std::string_view name) {
  for (const auto& [n, k] : keys())
    if (n == name) return &k;
  return nullptr;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void assign(ExperimentConfig& c, const std::string& key, const std::string& value, int line) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", key, line);
  if (value.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value for '" + key + "'", key, line);
  try {
    k->set(c, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("line " + std::to_string(line) + ": bad value '" + value + "' for '" + key + "': " + e.what(),
                      key, line);
  }
  c.given.insert(key);
}

[[noreturn]] void reject(const std::string& key, const std::string& why) {
  throw ConfigError("invalid " + key + ": " + why, key, 0);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [n, k] : keys()) out.push_back(n);
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line;
    if (auto h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
    std::string s = trim(raw);
    if (s.empty()) continue;
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value", s, line);
    if (s.find('=', eq + 1) == std::string::npos) {
      assign(c, trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1)), line);
      continue;
    }
    // several key=value pairs separated by blanks
    std::istringstream is(s);
    for (std::string tok; is >> tok;) {
      auto e = tok.find('=');
      if (e == std::string::npos || e == 0)
        throw ConfigError("line " + std::to_string(line) + ": expected key=value, got '" + tok + "'", tok, line);
      assign(c, tok.substr(0, e), tok.substr(e + 1), line);
    }
  }
  // theta is the Doerfler parameter of an AFEM run unless theta_D is given
  if (c.command == "afem" && c.given.contains("theta") && !c.given.contains("theta_D")) c.theta_d = c.theta;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", "config", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(ExperimentConfig& c) {
  auto warn = [&](std::string w) { c.warnings.push_back(std::move(w)); };
  const std::set<std::string> commands{"mesh", "rates", "afem", "check"};
  if (!commands.contains(c.command)) reject("command", "'" + c.command + "' is not one of mesh, rates, afem, check");
  if (!c.domain.empty() && c.domain != "unit_square" && c.domain != "l_shape" &&
      !std::filesystem::is_regular_file(c.domain))
    reject("domain", "'" + c.domain + "' is neither a built-in domain nor a readable mesh file");
  if (c.space != "continuous" && c.space != "discontinuous") reject("space", "expected continuous or discontinuous");
  bool broken = c.space == "discontinuous";
  if (broken ? (c.m < 0 || c.m > max_poly_degree) : (c.m < 1 || c.m > 4))
    reject("m", broken ? "broken spaces take degrees 0..6" : "continuous spaces take degrees 1..4");
  if (c.d >= 0 && c.d < c.m - 2) reject("d", "the total error needs d >= m - 2");
  if (c.d > max_poly_degree) reject("d", "oscillation degree above 6");
  if (c.command == "mesh") {
    if (c.rounds < 0) reject("rounds", "must be >= 0");
    if (c.mark != "corner" && c.mark != "corner_cell" && c.mark != "random")
      reject("mark", "expected corner, corner_cell or random");
  }
  if (c.command == "rates") {
    try {
      const auto& f = catalog_field(c.field);
      if (f.native_level >= 0 && !c.domain.empty() && c.domain != f.domain)
        reject("field", "'" + c.field + "' is only defined on " + f.domain);
    } catch (const CatalogError& e) {
      reject("field", e.what());
    }
    if (c.rho != "h1" && c.rho != "lp" && c.rho != "weighted_lp") reject("rho", "expected h1, lp or weighted_lp");
    if (c.backend != "interp" && c.backend != "seminorm") reject("backend", "expected interp or seminorm");
    if (!(c.p > 0)) reject("p", "must be positive");
    if (!(c.q > 0)) reject("q", "must be positive");
    if (c.rho == "h1") {
      if (broken) reject("space", "the energy distance needs a continuous space");
      if (c.given.contains("p") && c.p != 2) warn("rho = h1 measures in H^1 = W^1_2; p is taken as 2");
      c.p = 2;
    }
    if (c.rho == "weighted_lp" && !broken)
      warn("weighted classes are characterized for broken spaces; on a continuous space the greedy rate is only an upper bound");
    if (c.rho != "weighted_lp" && c.theta != 0) warn("theta is only used by rho = weighted_lp");
    if (!(c.eps_factor > 0 && c.eps_factor < 1)) reject("eps_factor", "must lie in (0,1)");
    if (c.steps < 1) reject("steps", "must be >= 1");
    if (c.max_iterations < 0) reject("max_iterations", "must be >= 0");
    if (c.uniform_levels < 0 || c.uniform_levels > 14) reject("uniform_levels", "must lie in 0..14");
    if (!(c.p0 > 0)) reject("p0", "must be positive");
    if (c.backend == "seminorm") {
      if (std::isinf(c.q)) reject("q", "the seminorm indicator needs finite q");
      if (c.depth < 0) reject("depth", "must be >= 0");
      double sigma = c.sigma >= 0 ? c.sigma : (c.rho == "h1" ? 1.0 : 0.0);
      double ip = std::isinf(c.p) ? 0.0 : 1 / c.p;
      double dflt = (c.alpha - sigma) / 2 + ip - 1 / c.q;
      if (std::isnan(c.delta)) c.delta = dflt;
      else if (std::abs(c.delta - dflt) > 1e-12)
        warn("delta = " + format_double(c.delta) + " differs from (alpha - sigma)/n + 1/p - 1/q = " + format_double(dflt));
      if (!(c.delta > 0))
        warn("delta = " + format_double(c.delta) +
             " <= 0: the direct estimate needs alpha/n + 1/p - 1/q > 0, so no rate is predicted");
      if (c.alpha <= sigma) warn("alpha <= sigma: the predicted rate (alpha - sigma)/n is not positive");
      int r = c.m + 1;
      if (c.alpha >= r - sigma + (broken ? 0.0 : 1.0 / c.q))
        warn("alpha beyond the saturation of degree " + std::to_string(c.m) + ": the class may contain only polynomials");
    }
  }
  if (c.command == "afem") {
    try {
      catalog_problem(c.problem);
    } catch (const CatalogError& e) {
      reject("problem", e.what());
    }
    if (broken) reject("space", "the Galerkin solver needs a continuous space");
    if (!(c.theta_d > 0 && c.theta_d <= 1)) reject("theta_D", "Doerfler parameter must lie in (0,1]");
    if (c.max_iter < 0) reject("max_iter", "must be >= 0");
    if (c.theta_d == 1) warn("theta_D = 1 marks every element: uniform refinement");
  }
  if (c.out.empty()) reject("out", "empty output directory");
}

std::string resolved_config(const ExperimentConfig& c) {
  std::string s;
  for (const auto& [n, k] : keys())
    if (auto v = k.get(c); !v.empty()) s += n + " = " + v + "\n";
  return s;
}

}  // namespace apx
