#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "apx/experiment.hpp"

namespace apx {

namespace {

namespace fs = std::filesystem;

struct Outputs {
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  std::vector<std::string> warnings;
  void add(std::string name, std::string text) { files.emplace_back(std::move(name), std::move(text)); }
};

bool builtin_domain(const std::string& d) { return d == "unit_square" || d == "l_shape"; }

Partition initial_partition(const ExperimentConfig& c) {
  if (builtin_domain(c.domain)) return Partition::initial(make_domain(c.domain, c.rule));
  return mesh_load(c.domain);
}

std::string default_domain(const ExperimentConfig& c) {
  if (c.command == "rates") return catalog_field(c.field).domain;
  if (c.command == "afem") return catalog_problem(c.problem).domain;
  return "l_shape";
}

// Cells whose closure contains x.
std::vector<int> cells_at(const Partition& P, Point x) {
  std::vector<int> out;
  for (int c : P.cells()) {
    const auto& cell = P.forest().cell(c);
    for (int v : cell.v)
      if (norm(P.forest().vertex(v) - x) < 1e-14) {
        out.push_back(c);
        break;
      }
  }
  return out;
}

ExitCode run_mesh(const ExperimentConfig& c, Outputs& o) {
  Partition P = initial_partition(c);
  CompletionLedger ledger;
  ledger.initial = P.size();
  std::mt19937_64 rng(c.seed);
  std::ostringstream csv;
  csv << "round,N,marked,conforming,admissible,ledger_ratio\n";
  auto row = [&](int r, std::size_t marked) {
    csv << r << ',' << P.size() << ',' << marked << ',' << (is_conforming(P) ? 1 : 0) << ','
        << (is_admissible(P) ? 1 : 0) << ',' << format_double(ledger.marked.empty() ? 0.0 : ledger.ratio()) << '\n';
  };
  row(0, 0);
  Point corner{0, 0};
  for (int r = 1; r <= c.rounds; ++r) {
    if (c.max_cells > 0 && P.size() >= c.max_cells) {
      o.warnings.push_back("max_cells reached after " + std::to_string(r - 1) + " rounds");
      break;
    }
    std::vector<int> marked;
    if (c.mark != "random") {
      marked = cells_at(P, corner);
      if (marked.empty()) marked.push_back(P.cell(0));
      if (c.mark == "corner_cell") marked.resize(1);
    } else {
      for (int id : P.cells())
        if (rng() % 4 == 0) marked.push_back(id);
    }
    P = refine(P, marked, &ledger);
    row(r, marked.size());
  }
  o.add("mesh_stats.csv", csv.str());
  o.add("mesh_final.txt", mesh_to_string(P));
  return ExitCode::ok;
}

double fit_floor(const ExperimentConfig& c, const Partition& P0) {
  return c.fit_min_n >= 0 ? c.fit_min_n : 10.0 * static_cast<double>(P0.size());
}

DistanceFunction distance_of(const ExperimentConfig& c) {
  if (c.rho == "h1") return DistanceFunction::energy();
  if (c.rho == "lp") return DistanceFunction::lp(c.p);
  return DistanceFunction::weighted_lp(c.p, c.theta);
}

Indicator indicator_of(const ExperimentConfig& c, const Field& u, const SpaceSpec& S) {
  double theta = c.rho == "weighted_lp" ? c.theta : 0.0;
  if (c.backend == "seminorm")
    return Indicator::local_seminorm(
        u, {.alpha = c.alpha, .q = c.q, .p = c.p, .delta = c.delta, .theta = theta, .space = S, .depth = c.depth, .p0 = c.p0});
  // the energy distance is driven by |tau|^{-1} ||u - Q~u||^2, the L2 error scaled like a gradient
  if (c.rho == "h1") theta = -1;
  return Indicator::interp_error(u, {.p = c.p, .theta = theta, .space = S, .p0 = c.p0});
}

std::string csv_of(const BudgetCurve& b) {
  std::ostringstream os;
  write_budget_csv(os, b);
  return os.str();
}

ExitCode run_rates(const ExperimentConfig& c, Outputs& o) {
  const auto& entry = catalog_field(c.field);
  Partition P0 = initial_partition(c);
  SpaceSpec S{c.space == "continuous" ? SpaceKind::continuous : SpaceKind::discontinuous, c.m};
  auto rho = distance_of(c);
  auto ind = indicator_of(c, entry.field, S);
  EpsSchedule sched{.eps0 = c.eps0, .factor = c.eps_factor, .steps = c.steps, .max_iterations = c.max_iterations,
                    .max_cells = c.max_cells};
  BudgetCurve greedy = budget_curve(entry.field, rho, ind, S, P0, sched);

  BudgetCurve uni;
  uni.N0 = P0.size();
  uni.backend = "uniform";
  {
    UniformChain chain(P0);
    for (int j = 0; j <= c.uniform_levels; ++j) {
      const Partition& Pj = chain.level(j);
      if (c.max_cells > 0 && Pj.size() > c.max_cells) break;
      auto b = best_error(rho, entry.field, S.make(Pj));
      uni.samples.push_back({Pj.size(), b.error, 0, b.surrogate, 0});
    }
    uni.envelope = lower_envelope(uni.samples);
  }

  o.add("greedy.csv", csv_of(greedy));
  o.add("uniform.csv", csv_of(uni));
  std::vector<RateReport> reps;
  for (auto* curve : {&greedy, &uni}) {
    try {
      auto r = fit_rate(*curve, fit_floor(c, P0));
      reps.push_back(r);
      std::ostringstream os;
      emit_plot_data(os, *curve, r);
      o.add("plot_" + std::string(curve == &greedy ? "greedy" : "uniform") + ".csv", os.str());
    } catch (const AdaptiveError& e) {
      o.warnings.push_back(curve->backend + " curve: no rate fitted (" + e.what() + ")");
    }
  }
  std::ostringstream rs;
  write_rate_csv(rs, reps);
  o.add("rates.csv", rs.str());
  return reps.empty() ? ExitCode::numerical : ExitCode::ok;
}

ExitCode write_afem(const AfemTrace& tr, bool exact, double fit_min_n, Outputs& o) {
  std::ostringstream os;
  write_afem_csv(os, tr);
  o.add("afem.csv", os.str());
  if (tr.final_partition) o.add("afem_final_mesh.txt", mesh_to_string(*tr.final_partition));
  std::vector<RateReport> reps;
  std::vector<std::pair<std::size_t, double>> plot;
  std::vector<std::pair<std::string, double AfemStep::*>> series{{"eta", &AfemStep::eta}, {"osc", &AfemStep::osc}};
  if (exact) series.insert(series.begin(), {{"rho_d", &AfemStep::rho_d}, {"energy_err", &AfemStep::energy_err}});
  for (const auto& [name, member] : series) {
    std::vector<double> x, y;
    for (const auto& s : tr.steps) x.push_back(static_cast<double>(s.N)), y.push_back(s.*member);
    try {
      auto r = fit_loglog(x, y, fit_min_n);
      r.backend = "afem:" + name;
      if (reps.empty()) {
        for (const auto& s : tr.steps) plot.emplace_back(s.N, s.*member);
        std::ostringstream ps;
        emit_plot_data(ps, plot, r);
        o.add("plot_afem.csv", ps.str());
      }
      reps.push_back(r);
    } catch (const AdaptiveError& e) {
      o.warnings.push_back(name + ": no rate fitted (" + e.what() + ")");
    }
  }
  std::ostringstream rs;
  write_rate_csv(rs, reps);
  o.add("rates.csv", rs.str());
  return ExitCode::ok;
}

ExitCode run_afem(const ExperimentConfig& c, Outputs& o) {
  Partition P0 = initial_partition(c);
  auto prob = catalog_problem(c.problem).make(P0.forest());
  if (!builtin_domain(c.domain)) prob.gamma = whole_boundary(P0.forest());
  double lmin = min_coefficient_eigenvalue(prob, P0);
  if (!(lmin > 0)) o.warnings.push_back("coefficient matrix not positive definite at a centroid");
  AfemOptions opt{.m = c.m, .d = c.d, .theta = c.theta_d, .max_iter = c.max_iter, .max_elements = c.max_cells};
  try {
    auto tr = afem_loop(prob, P0, opt);
    return write_afem(tr, prob.u_exact.has_value(), fit_floor(c, P0), o);
  } catch (const AfemError& e) {
    write_afem(e.partial(), prob.u_exact.has_value(), fit_floor(c, P0), o);
    throw;
  }
}

ExitCode run_check(const ExperimentConfig& c, Outputs& o) {
  auto r = invariant_suite(c.seed);
  std::ostringstream os;
  write_check_csv(os, r);
  o.add("check.csv", os.str());
  bool ok = std::all_of(r.begin(), r.end(), [](const CheckResult& x) { return x.passed; });
  for (const auto& x : r)
    if (!x.passed) o.warnings.push_back("check " + x.name + " failed: " + format_double(x.value) + " > " + format_double(x.tolerance));
  return ok ? ExitCode::ok : ExitCode::numerical;
}

std::string manifest(const ExperimentConfig& c, const RunResult& r, const std::vector<std::string>& warnings) {
  std::ostringstream os;
  os << "# apxlab run manifest\n";
  os << "apxlab_version = " << apxlab_version << "\n";
#ifdef __VERSION__
  os << "compiler = " << __VERSION__ << "\n";
#endif
  os << "cxx_standard = " << __cplusplus << "\n";
  os << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << "\n";
  os << "exit_code = " << static_cast<int>(r.code) << "\n";
  if (!r.message.empty()) os << "message = " << r.message << "\n";
  os << "\n# resolved config\n" << resolved_config(c);
  os << "\n# warnings\n";
  for (const auto& w : warnings) os << w << "\n";
  os << "\n# artifacts\n";
  for (const auto& a : r.artifacts) os << a << "\n";
  return os.str();
}

}  // namespace

RunResult run(ExperimentConfig c) {
  validate_config(c);
  if (c.domain.empty()) c.domain = default_domain(c);
  if (!builtin_domain(c.domain)) {
    try {
      c.rule = mesh_load(c.domain).rule();
    } catch (const MeshError& e) {
      throw ConfigError(std::string("invalid domain: ") + e.what(), "domain", 0);
    }
  }
  Outputs o;
  RunResult res;
  try {
    if (c.command == "mesh") res.code = run_mesh(c, o);
    else if (c.command == "rates") res.code = run_rates(c, o);
    else if (c.command == "afem") res.code = run_afem(c, o);
    else res.code = run_check(c, o);
  } catch (const GreedyCapError& e) {
    res.code = ExitCode::iteration_cap;
    res.message = e.what();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    res.code = ExitCode::numerical;
    res.message = e.what();
  }
  std::vector<std::string> warnings = c.warnings;
  warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
  for (const auto& [name, text] : o.files) res.artifacts.push_back(name);
  res.artifacts.push_back("manifest.txt");
  o.add("manifest.txt", manifest(c, res, warnings));

  fs::create_directories(c.out);
  for (const auto& [name, text] : o.files) {
    std::ofstream f(fs::path(c.out) / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (fs::path(c.out) / name).string());
  }
  if (res.message.empty() && !warnings.empty() && res.code != ExitCode::ok) res.message = warnings.back();
  return res;
}

}  // namespace apx
