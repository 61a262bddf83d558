// Acceptance run: one PASS/FAIL line per criterion. Rates are fitted here
// from the CSVs that apxlab writes, with an independent least-squares fit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "apx/experiment.hpp"

using namespace apx;
namespace fs = std::filesystem;

namespace {

struct Table {
  std::vector<std::string> head;
  std::vector<std::vector<double>> rows;
  std::vector<double> col(const std::string& name) const {
    auto it = std::find(head.begin(), head.end(), name);
    if (it == head.end()) throw std::runtime_error("missing column " + name);
    auto k = static_cast<std::size_t>(it - head.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
  }
};

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  Table t;
  std::string line;
  std::getline(in, line);
  std::stringstream hs(line);
  for (std::string tok; std::getline(hs, tok, ',');) t.head.push_back(tok);
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ls(line);
    for (std::string tok; std::getline(ls, tok, ',');) r.push_back(std::strtod(tok.c_str(), nullptr));
    t.rows.push_back(r);
  }
  return t;
}

// Slope of log y against log x over x >= lo (negated: decay rates come out positive).
double decay(const std::vector<double>& x, const std::vector<double>& y, double lo = 0, double hi = 1e300) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi || !(y[i] > 0)) continue;
    double a = std::log(x[i]), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b, ++n;
  }
  if (n < 3) throw std::runtime_error("too few points for a slope");
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Running minimum of the error over increasing N.
std::pair<std::vector<double>, std::vector<double>> envelope(const Table& t) {
  auto N = t.col("N"), E = t.col("error");
  std::vector<std::size_t> idx(N.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return N[a] < N[b]; });
  std::vector<double> x, y;
  double best = 1e300;
  for (auto i : idx) {
    best = std::min(best, E[i]);
    if (!x.empty() && x.back() == N[i]) y.back() = best;
    else x.push_back(N[i]), y.push_back(best);
  }
  return {x, y};
}

struct Study {
  std::string name, text;
};

// Every CSV-producing run of criteria 2-8; rerun for the determinism check.
const std::vector<Study>& studies() {
  static const std::vector<Study> s = {
      {"c2_corner_20", "command = mesh\ndomain = l_shape\nmark = corner\nrounds = 20\n"},
      {"c2_corner_40", "command = mesh\ndomain = l_shape\nmark = corner\nrounds = 40\n"},
      {"c2_cell_20", "command = mesh\ndomain = l_shape\nmark = corner_cell\nrounds = 20\n"},
      {"c2_cell_40", "command = mesh\ndomain = l_shape\nmark = corner_cell\nrounds = 40\n"},
      {"c3_m1", "command = rates\nfield = smooth_sine\nm = 1\nrho = h1\nsteps = 26\nuniform_levels = 14\n"},
      {"c3_m2", "command = rates\nfield = smooth_sine\nm = 2\nrho = h1\nsteps = 24\nuniform_levels = 13\n"},
      {"c4_uniform", "command = rates\nfield = lshape_corner\nrule = red\nrho = h1\nsteps = 1\nuniform_levels = 6\n"},
      {"c4_interp", "command = rates\nfield = lshape_corner\nrho = h1\nsteps = 22\nuniform_levels = 0\n"},
      {"c4_seminorm",
       "command = rates\nfield = lshape_corner\nrho = h1\nbackend = seminorm\nalpha = 1.4\nsteps = 14\nuniform_levels = 0\n"},
      {"c5_theta0",
       "command = rates\nfield = lshape_corner\nspace = discontinuous\nm = 0\nrho = weighted_lp\np = 2\ntheta = 0\nsteps = 22\n"
       "uniform_levels = 0\n"},
      {"c5_theta1",
       "command = rates\nfield = lshape_corner\nspace = discontinuous\nm = 0\nrho = weighted_lp\np = 2\ntheta = 1\nsteps = 30\n"
       "uniform_levels = 0\n"},
      {"c6_afem", "command = afem\nproblem = poisson_lshape\nm = 1\ntheta_D = 0.5\nmax_iter = 24\n"},
      {"c7_afem_m2", "command = afem\nproblem = poisson_lshape\nm = 2\ntheta_D = 0.5\nmax_iter = 20\n"},
      {"c7_afem_theta03", "command = afem\nproblem = poisson_lshape\nm = 1\ntheta_D = 0.3\nmax_iter = 30\n"},
      {"c8_card",
       "command = rates\nfield = lshape_corner\nrho = lp\np = 2\nq = 1\nalpha = 1.9\nbackend = seminorm\nsteps = 22\n"
       "uniform_levels = 0\n"},
  };
  return s;
}

void run_study(const Study& s, const fs::path& root) {
  auto c = parse_config(s.text);
  c.out = (root / s.name).string();
  auto r = run(c);
  if (r.code != ExitCode::ok) throw std::runtime_error(s.name + ": exit " + std::to_string(static_cast<int>(r.code)) + " " + r.message);
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

}  // namespace

int main(int argc, char** argv) {
  fs::path root = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_out";
  fs::remove_all(root);
  fs::path run1 = root / "run1", run2 = root / "run2";
  int failed = 0;
  auto report = [&](int id, const std::string& title, const std::function<std::pair<bool, std::string>()>& body) {
    auto t0 = Clock::now();
    bool ok = false;
    std::string detail;
    try {
      std::tie(ok, detail) = body();
    } catch (const std::exception& e) {
      detail = std::string("error: ") + e.what();
    }
    if (!ok) ++failed;
    std::printf("criterion %2d %-32s %s  %s  [%.1fs]\n", id, title.c_str(), ok ? "PASS" : "FAIL", detail.c_str(), since(t0));
    std::fflush(stdout);
  };

  report(1, "structural suite", [] {
    auto t0 = Clock::now();
    std::string bad;
    int n = 0;
    for (std::uint64_t seed : {1u, 2u})
      for (const auto& c : invariant_suite(seed)) {
        ++n;
        if (!c.passed) bad += " " + c.name + "=" + fmt(c.value);
      }
    double t = since(t0);
    return std::pair{bad.empty() && t < 60, std::to_string(n) + " checks" + (bad.empty() ? "" : ", failed:" + bad) + ", " + fmt(t) + "s < 60s"};
  });

  report(2, "completion ledger", [&] {
    auto t0 = Clock::now();
    std::string d;
    bool ok = true;
    for (const char* mark : {"corner", "cell"}) {
      run_study(studies()[mark[0] == 'c' && mark[1] == 'o' ? 0 : 2], run1);
      run_study(studies()[mark[0] == 'c' && mark[1] == 'o' ? 1 : 3], run1);
      std::string base = std::string("c2_") + mark;
      double r20 = read_csv(run1 / (base + "_20") / "mesh_stats.csv").col("ledger_ratio").back();
      double r40 = read_csv(run1 / (base + "_40") / "mesh_stats.csv").col("ledger_ratio").back();
      double ch = std::abs(r40 - r20) / r20;
      ok = ok && ch < 0.25;
      d += std::string(mark) + ": ratio " + fmt(r20) + " -> " + fmt(r40) + " (change " + fmt(100 * ch) + "%); ";
    }
    double t = since(t0);
    return std::pair{ok && t < 30, d + fmt(t) + "s"};
  });

  report(3, "smooth-field rates", [&] {
    auto t0 = Clock::now();
    run_study(studies()[4], run1);
    run_study(studies()[5], run1);
    auto u1 = read_csv(run1 / "c3_m1" / "uniform.csv"), u2 = read_csv(run1 / "c3_m2" / "uniform.csv");
    double su1 = decay(u1.col("N"), u1.col("error"), 64), su2 = decay(u2.col("N"), u2.col("error"), 64);
    auto [g1x, g1y] = envelope(read_csv(run1 / "c3_m1" / "greedy.csv"));
    auto [g2x, g2y] = envelope(read_csv(run1 / "c3_m2" / "greedy.csv"));
    double sg1 = decay(g1x, g1y, 64), sg2 = decay(g2x, g2y, 64);
    double Nmax = u1.col("N").back();
    double t = since(t0);
    bool ok = std::abs(su1 - 0.5) <= 0.05 && std::abs(sg1 - su1) <= 0.05 && std::abs(su2 - 1.0) <= 0.1 &&
              std::abs(sg2 - 1.0) <= 0.1 && t < 180;
    return std::pair{ok, "m=1 uniform " + fmt(su1) + ", greedy " + fmt(sg1) + "; m=2 uniform " + fmt(su2) + ", greedy " +
                             fmt(sg2) + "; up to " + fmt(Nmax) + " cells"};
  });

  report(4, "corner singularity", [&] {
    auto t0 = Clock::now();
    for (int k : {6, 7, 8, 11}) run_study(studies()[static_cast<std::size_t>(k)], run1);
    auto u = read_csv(run1 / "c4_uniform" / "uniform.csv");
    double su = decay(u.col("N"), u.col("error"), 96);
    auto [ix, iy] = envelope(read_csv(run1 / "c4_interp" / "greedy.csv"));
    auto [sx, sy] = envelope(read_csv(run1 / "c4_seminorm" / "greedy.csv"));
    double si = decay(ix, iy, 60), ss = decay(sx, sy, 60);
    auto a = read_csv(run1 / "c6_afem" / "afem.csv");
    double sa = decay(a.col("N"), a.col("energy_err"), 200);
    double t = since(t0);
    bool ok = std::abs(su - 1.0 / 3) <= 0.05 && si >= 0.45 && ss >= 0.45 && sa >= 0.45 && t < 300;
    return std::pair{ok, "uniform " + fmt(su) + " (1/3), greedy interp " + fmt(si) + ", greedy seminorm " + fmt(ss) +
                             ", AFEM " + fmt(sa) + " (>= 0.45)"};
  });

  report(5, "weighted broken classes", [&] {
    run_study(studies()[9], run1);
    run_study(studies()[10], run1);
    auto [x0, y0] = envelope(read_csv(run1 / "c5_theta0" / "greedy.csv"));
    auto [x1, y1] = envelope(read_csv(run1 / "c5_theta1" / "greedy.csv"));
    double s0 = decay(x0, y0, 60), s1 = decay(x1, y1, 60);
    return std::pair{std::abs(s1 - s0 - 0.5) <= 0.1,
                     "theta=0 " + fmt(s0) + ", theta=1 " + fmt(s1) + ", shift " + fmt(s1 - s0) + " (0.5 +- 0.1)"};
  });

  report(6, "total-error characterization", [&] {
    auto a = read_csv(run1 / "c6_afem" / "afem.csv");
    auto N = a.col("N");
    double sr = decay(N, a.col("rho_d"), 200), se = decay(N, a.col("energy_err"), 200), so = decay(N, a.col("osc"), 200);
    bool ok = std::abs(sr - std::min(se, so)) <= 0.1;
    // osc vanishes for f in P_d with constant coefficients
    auto P0 = Partition::initial(make_domain("l_shape", Rule::nvb));
    std::mt19937_64 rng(5);
    auto P = uniform_refine(P0);
    for (int r = 0; r < 4; ++r) {
      std::vector<int> mk;
      for (int c : P.cells())
        if (rng() % 3 == 0) mk.push_back(c);
      P = refine(P, mk);
    }
    double worst = 0;
    struct Load {
      Field f;
      int d, m;
    };
    std::vector<Load> loads{{constant_field(1.0), 0, 1},
                            {{[](Point x) { return 1 + x.x - 2 * x.y; }, {}, "affine"}, 1, 1},
                            {{[](Point x) { return x.x * x.y - 0.5 * x.y * x.y + 3; }, {}, "quadratic"}, 2, 2},
                            {{[](Point x) { return x.x * x.x; }, {}, "x2"}, 2, 3}};
    for (const auto& l : loads) {
      auto prob = poisson(l.f, whole_boundary(P.forest()));
      auto V = FeSpace::continuous(P, l.m, prob.gamma);
      auto est = estimate(prob, galerkin_solve(prob, V), l.d);
      worst = std::max(worst, est.osc() / est.eta());
    }
    ok = ok && worst <= 1e-12;
    return std::pair{ok, "rho_d " + fmt(sr) + " vs min(energy " + fmt(se) + ", osc " + fmt(so) + "); osc/eta for f in P_d " +
                             fmt(worst)};
  });

  report(7, "estimator equivalence", [&] {
    run_study(studies()[12], run1);
    run_study(studies()[13], run1);
    double lo = 1e300, hi = 0, osc_excess = 0;
    std::size_t its = 1 << 20;
    for (const char* name : {"c6_afem", "c7_afem_m2", "c7_afem_theta03"}) {
      auto a = read_csv(run1 / name / "afem.csv");
      auto eta = a.col("eta"), rho = a.col("rho_d"), osc = a.col("osc");
      its = std::min(its, eta.size());
      for (std::size_t i = 0; i < eta.size(); ++i) {
        lo = std::min(lo, eta[i] / rho[i]), hi = std::max(hi, eta[i] / rho[i]);
        osc_excess = std::max(osc_excess, osc[i] - eta[i]);
      }
    }
    bool ok = hi / lo <= 10 && its >= 7 && osc_excess <= 0;
    return std::pair{ok, "eta/rho_d in [" + fmt(lo) + ", " + fmt(hi) + "], c2/c1 = " + fmt(hi / lo) + " over >= " +
                             std::to_string(its - 1) + " iterations per run; osc <= eta on every iterate"};
  });

  report(8, "greedy cardinality law", [&] {
    run_study(studies()[14], run1);
    auto g = read_csv(run1 / "c8_card" / "greedy.csv");
    auto N = g.col("N"), eps = g.col("epsilon");
    double N0 = N.front();
    std::vector<double> x, y;
    for (std::size_t i = N.size() - 10; i < N.size(); ++i) x.push_back(1 / eps[i]), y.push_back(N[i] - N0);
    double slope = -decay(x, y);
    double s = 1.9 / 2, pred = 1 / (1 + 2 * s);
    return std::pair{std::abs(slope / pred - 1) <= 0.15,
                     "slope " + fmt(slope) + " vs 1/(1+ps) = " + fmt(pred) + " (" + fmt(100 * (slope / pred - 1)) + "%)"};
  });

  report(9, "inverse inequality", [] {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1, 1);
    double worst = -1e300;
    int n = 0;
    for (int m = 2; m <= 6; ++m)
      for (int k = 0; k < 10; ++k, ++n) {
        Rule rule = k % 2 ? Rule::red : Rule::nvb;
        if (rule == Rule::red && m > 5) rule = Rule::nvb;
        UniformChain chain(Partition::initial(make_domain(k % 3 ? "unit_square" : "l_shape", rule)));
        auto V = FeSpace::continuous(chain.level(m), 1);
        FeFunction v(V);
        for (int i = 0; i < V.dim(); ++i) v.coef()[i] = U(rng);
        double p = k % 4 == 3 ? 1.0 : 2.0, q = k % 5 == 4 ? 1.0 : 2.0, alpha = 0.5 + 0.25 * (k % 3);
        SmoothnessParams s{.r = 2, .alpha = alpha, .p = p, .q = q, .lambda = 0, .J = m + 2};
        double semi = multilevel_seminorm(v.field(), s, chain, 1).value;
        double bound = inverse_bound(alpha, q, m, chain.lambda()) * lp_norm(v.field(), chain.level(m), p);
        worst = std::max(worst, semi - bound);
      }
    return std::pair{worst <= 1e-10, std::to_string(n) + " members of S_m, m = 2..6; max(|v|_A - bound) = " + fmt(worst)};
  });

  report(10, "determinism", [&] {
    setenv("APXLAB_THREADS", "2", 1);
    for (const auto& s : studies()) run_study(s, run2);
    unsetenv("APXLAB_THREADS");
    int files = 0;
    std::string diff;
    for (const auto& s : studies())
      for (const auto& e : fs::directory_iterator(run1 / s.name)) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        std::ifstream a(e.path(), std::ios::binary), b(run2 / s.name / e.path().filename(), std::ios::binary);
        std::stringstream sa, sb;
        sa << a.rdbuf(), sb << b.rdbuf();
        if (sa.str() != sb.str()) diff += " " + s.name + "/" + e.path().filename().string();
      }
    return std::pair{diff.empty() && files > 0,
                     std::to_string(files) + " CSVs compared across two runs" + (diff.empty() ? ", all identical" : ", differ:" + diff)};
  });

  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
