#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "apx/elliptic.hpp"

namespace apx {

inline constexpr const char* apxlab_version = "1.0.0";

// Bad key or value; line is 0 for errors that are not tied to one line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExitCode { ok = 0, invalid_config = 1, numerical = 2, iteration_cap = 3 };

struct ExperimentConfig {
  std::string command = "check";  // mesh | rates | afem | check
  std::string domain;             // unit_square | l_shape | mesh file; empty: the catalog default
  Rule rule = Rule::nvb;
  int m = 1;
  int d = -1;  // oscillation degree, < 0: max(m - 2, 0)

  // rates
  std::string field = "smooth_sine";
  std::string rho = "h1";  // h1 | lp | weighted_lp
  std::string space = "continuous";
  std::string backend = "interp";  // interp | seminorm
  double p = 2, q = 2;
  double alpha = 1;
  double sigma = -1;  // smoothness index of rho; < 0: 1 for h1, 0 otherwise
  double theta = 0;   // weight exponent of weighted_lp (the Doerfler parameter for afem)
  double delta = std::numeric_limits<double>::quiet_NaN();  // NaN: (alpha - sigma)/2 + 1/p - 1/q
  double p0 = 2;
  int depth = 3;
  double eps0 = -1;
  double eps_factor = 0.5;
  int steps = 16;
  int max_iterations = 60;
  int uniform_levels = 8;
  double fit_min_n = -1;  // fits use N >= fit_min_n; < 0: 10 #P0

  // afem
  std::string problem = "poisson_lshape";
  double theta_d = 0.5;
  int max_iter = 10;

  // mesh
  int rounds = 8;
  std::string mark = "corner";  // corner (all cells at the origin) | corner_cell (the first of them) | random

  std::uint64_t seed = 1;
  std::string out = "apxlab_out";
  std::size_t max_cells = 0;  // 0: unlimited

  std::set<std::string> given;        // keys set explicitly
  std::vector<std::string> warnings;  // filled by validate_config
};

// Line-based "key = value" text; '#' starts a comment. Unknown keys and
// malformed values throw ConfigError naming the key and the line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
// Checks hypotheses and catalog names; throws ConfigError on violated
// preconditions, appends warnings when only sharpness is at stake.
void validate_config(ExperimentConfig& c);
// Every key with its effective value, one "key = value" line each.
std::string resolved_config(const ExperimentConfig& c);
std::vector<std::string> config_keys();

struct FieldCatalogEntry {
  std::string name;
  Field field;
  std::string domain;      // domain the evaluator is total on
  std::string regularity;  // expected memberships, measured by level sweeps
  int native_level = -1;   // fe_native: the field lies in S_j for j >= native_level
};

struct ProblemCatalogEntry {
  std::string name;
  std::string domain;
  std::string notes;
  std::function<EllipticProblem(const Forest&)> make;
};

const std::vector<FieldCatalogEntry>& catalog_list();
const FieldCatalogEntry& catalog_field(std::string_view name);
const std::vector<ProblemCatalogEntry>& problem_list();
const ProblemCatalogEntry& catalog_problem(std::string_view name);

// Columns N, error, log2_N, log2_error, fit_log2_error, in_window, slope with
// the fitted line through the window of r (slope = -r.s).
void emit_plot_data(std::ostream& os, const BudgetCurve& c, const RateReport& r);
void emit_plot_data(std::ostream& os, std::span<const std::pair<std::size_t, double>> pts, const RateReport& r);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0;  // worst deviation seen
  double tolerance = 0;
};

// Structural invariants on seeded random meshes: measure conservation, child
// areas, conformity, overlay cardinality, biorthogonality, partition of unity,
// reproduction by Q and Q~, Pi_2 as the L2 projection, osc <= eta.
std::vector<CheckResult> invariant_suite(std::uint64_t seed = 1);
void write_check_csv(std::ostream& os, std::span<const CheckResult> r);

struct RunResult {
  ExitCode code = ExitCode::ok;
  std::string message;
  std::vector<std::string> artifacts;  // file names inside the output directory
};

// Executes the configured command and writes its CSVs, a mesh snapshot where
// applicable and manifest.txt into c.out. Numerical and cap failures are
// reported through the exit code; invalid configs throw ConfigError.
RunResult run(ExperimentConfig c);

}  // namespace apx
