#include "apx/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "apx/nodal_set.hpp"
#include "apx/parallel.hpp"

namespace apx {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string DistanceFunction::tag() const {
  switch (kind) {
    case DistanceKind::energy_h1: return "energy_h1";
    case DistanceKind::lp: return "lp(" + format_double(p) + ")";
    case DistanceKind::weighted_lp: return "weighted_lp(" + format_double(p) + "," + format_double(theta) + ")";
    case DistanceKind::total_error: return "total_error";
  }
  return "unknown";
}

namespace {

double area_of(const Partition& P, int e) { return P.forest().cell(P.cell(static_cast<std::size_t>(e))).area; }

double weighted_aggregate(const Partition& P, std::vector<double> pw, double p, double theta) {
  if (theta != 0)
    for (std::size_t i = 0; i < pw.size(); ++i) {
      double a = area_of(P, static_cast<int>(i));
      pw[i] *= std::isinf(p) ? std::pow(a, theta / 2) : std::pow(a, theta * p / 2);
    }
  return aggregate(pw, p);
}

// Elementwise Pi_tau of u on a broken space, as a function in that space.
FeFunction broken_fit(const FeSpace& V, const Field& u, double p0) {
  FeFunction v(V);
  int d = V.degree();
  std::vector<std::vector<double>> loc(static_cast<std::size_t>(V.num_elements()));
  parallel_for(loc.size(), [&](std::size_t e) {
    loc[e] = local_poly_approx(u, V.affine(static_cast<int>(e)), p0, d, default_local_order(d)).coef;
  }, 16);
  for (int e = 0; e < V.num_elements(); ++e) {
    auto dofs = V.element_dofs(e);
    for (std::size_t k = 0; k < dofs.size(); ++k) v.coef()[dofs[k]] = loc[static_cast<std::size_t>(e)][k];
  }
  return v;
}

}  // namespace

double eval_distance(const DistanceFunction& rho, const Field& u, const FeFunction& v) {
  switch (rho.kind) {
    case DistanceKind::energy_h1: return h1_distance(u, v);
    case DistanceKind::lp: return lp_distance(u, v, rho.p);
    case DistanceKind::weighted_lp:
      return weighted_aggregate(v.space().partition(), element_lp_pow(u, v, rho.p), rho.p, rho.theta);
    case DistanceKind::total_error:
      if (!rho.custom_eval) throw AdaptiveError("total_error distance without an evaluator");
      return rho.custom_eval(u, v);
  }
  throw AdaptiveError("unknown distance kind");
}

BestApprox best_error(const DistanceFunction& rho, const Field& u, const FeSpace& V) {
  BestApprox b;
  switch (rho.kind) {
    case DistanceKind::energy_h1:
      b.error = h1_distance(u, h1_projection(V, u));
      return b;
    case DistanceKind::lp: return best_approx_error(u, V, rho.p);
    case DistanceKind::weighted_lp: {
      if (rho.theta == 0) return best_approx_error(u, V, rho.p);
      FeFunction v(V);
      if (V.kind() == SpaceKind::discontinuous) {
        // the weighted norm decouples over elements, so the local fits are the best member
        b.p0 = rho.p == 2.0 ? 2.0 : (std::isinf(rho.p) ? 2.0 : rho.p);
        b.surrogate = rho.p != 2.0;
        v = rho.p == 2.0 ? l2_projection(V, u) : broken_fit(V, u, b.p0);
      } else {
        b.p0 = default_p0(rho.p);
        b.surrogate = true;
        v = q_tilde(V, u, b.p0);
      }
      b.error = eval_distance(rho, u, v);
      return b;
    }
    case DistanceKind::total_error:
      if (!rho.custom_best) throw AdaptiveError("total_error distance without a best-member solver");
      return rho.custom_best(u, V);
  }
  throw AdaptiveError("unknown distance kind");
}

struct Indicator::State {
  Field u;
  bool seminorm = false;
  SeminormIndicatorParams sp;
  InterpIndicatorParams ip;
  mutable std::mutex mu;
  mutable std::map<std::vector<int>, double> cache;  // patch cell ids -> seminorm without the generation weight

  double patch_value(const Forest& f, const std::vector<int>& cells) const;
};

Indicator Indicator::local_seminorm(Field u, SeminormIndicatorParams s) {
  if (!(s.q > 0) || std::isinf(s.q)) throw AdaptiveError("seminorm indicator needs 0 < q < inf");
  if (s.depth < 0) throw AdaptiveError("negative sub-chain depth");
  Indicator ind;
  ind.s_ = std::make_shared<State>();
  ind.s_->u = std::move(u);
  ind.s_->seminorm = true;
  ind.s_->sp = s;
  return ind;
}

Indicator Indicator::interp_error(Field u, InterpIndicatorParams s) {
  if (!(s.p > 0)) throw AdaptiveError("interpolation indicator needs p > 0");
  Indicator ind;
  ind.s_ = std::make_shared<State>();
  ind.s_->u = std::move(u);
  ind.s_->ip = s;
  return ind;
}

std::string Indicator::backend() const { return s_->seminorm ? "seminorm" : "interp"; }

std::size_t Indicator::cache_size() const {
  std::lock_guard lock(s_->mu);
  return s_->cache.size();
}

namespace {

// Standalone forest whose roots are the given cells, labels kept.
Partition patch_partition(const Forest& f, std::span<const int> cells) {
  ForestBuilder b("patch", f.rule());
  std::map<int, int> vid;
  for (int c : cells)
    for (int v : f.cell(c).v)
      if (vid.emplace(v, static_cast<int>(vid.size())).second) b.vertex(vid[v], f.vertex(v));
  int id = 0;
  for (int c : cells) {
    auto v = f.cell(c).v;
    b.cell(id++, {vid[v[0]], vid[v[1]], vid[v[2]]}, 0, -1);
  }
  return Partition::initial(b.finish());
}

double patch_seminorm(const Field& u, const Forest& f, std::span<const int> cells, const SeminormIndicatorParams& s) {
  UniformChain chain(patch_partition(f, cells));
  SmoothnessParams sp{.r = s.space.degree + 1, .alpha = s.alpha, .p = s.q, .q = s.q, .lambda = 0, .J = s.depth};
  return multilevel_seminorm(u, sp, chain, s.space.degree, {}, s.p0, s.space.kind).value;
}

}  // namespace

double Indicator::State::patch_value(const Forest& f, const std::vector<int>& cells) const {
  {
    std::lock_guard lock(mu);
    auto it = cache.find(cells);
    if (it != cache.end()) return it->second;
  }
  double v = patch_seminorm(u, f, cells, sp);
  std::lock_guard lock(mu);
  cache.emplace(cells, v);
  return v;
}

double Indicator::local_seminorm_of(const Partition& P, int e) const {
  if (!s_->seminorm) throw AdaptiveError("local seminorm requested from the interpolation backend");
  const auto& sp = s_->sp;
  int id = P.cell(static_cast<std::size_t>(e));
  std::vector<int> cells{id};
  if (sp.space.kind == SpaceKind::continuous) cells = support_extension(P, id, sp.space.degree);
  std::sort(cells.begin(), cells.end());
  return s_->patch_value(P.forest(), cells) * std::pow(refinement_lambda(P.rule()), P.forest().cell(id).gen * sp.alpha);
}

std::vector<double> Indicator::evaluate(const Partition& P) const {
  std::vector<double> out(P.size());
  if (s_->seminorm) {
    const auto& sp = s_->sp;
    std::vector<std::vector<int>> patches(P.size());
    if (sp.space.kind == SpaceKind::continuous) {
      auto ns = build_nodal_set(P, sp.space.degree);
      for (std::size_t e = 0; e < P.size(); ++e) {
        for (int k : support_extension(ns, static_cast<int>(e))) patches[e].push_back(P.cell(static_cast<std::size_t>(k)));
        std::sort(patches[e].begin(), patches[e].end());
      }
    } else {
      for (std::size_t e = 0; e < P.size(); ++e) patches[e] = {P.cell(e)};
    }
    double lambda = refinement_lambda(P.rule());
    parallel_for(P.size(), [&](std::size_t e) {
      double v = s_->patch_value(P.forest(), patches[e]);
      const Cell& c = P.forest().cell(P.cell(e));
      double L = v * std::pow(lambda, c.gen * sp.alpha), a = c.area;
      if (std::isinf(sp.p)) out[e] = std::pow(a, sp.delta + sp.theta / 2) * L;
      else out[e] = std::pow(a, sp.p * sp.delta + sp.theta * sp.p / 2) * std::pow(L, sp.p);
    }, 4);
    return out;
  }
  const auto& ip = s_->ip;
  FeSpace V = ip.space.make(P);
  FeFunction v(V);
  if (ip.space.kind == SpaceKind::continuous) {
    v = q_tilde(V, s_->u, ip.p0 > 0 ? ip.p0 : default_p0(ip.p));
  } else {
    v = broken_fit(V, s_->u, ip.p0 > 0 ? ip.p0 : (std::isinf(ip.p) ? 2.0 : ip.p));
  }
  auto pw = element_lp_pow(s_->u, v, ip.p);
  for (std::size_t e = 0; e < P.size(); ++e) {
    double a = area_of(P, static_cast<int>(e));
    out[e] = pw[e] * (std::isinf(ip.p) ? std::pow(a, ip.theta / 2) : std::pow(a, ip.theta * ip.p / 2));
  }
  return out;
}

GreedyResult greedy_partition(const Indicator& ind, double eps, const Partition& P0, int max_iterations) {
  if (!(eps > 0)) throw AdaptiveError("greedy threshold must be positive");
  GreedyResult r{P0, {}, 0, 0};
  r.ledger.initial = P0.size();
  for (;;) {
    auto e = ind.evaluate(r.partition);
    std::vector<int> marked;
    double mx = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      mx = std::max(mx, e[i]);
      if (e[i] > eps) marked.push_back(r.partition.cell(i));
    }
    r.max_indicator = mx;
    if (marked.empty()) return r;
    if (r.iterations >= max_iterations)
      throw GreedyCapError("greedy iteration cap " + std::to_string(max_iterations) + " reached at eps " +
                               format_double(eps),
                           r);
    r.partition = refine(r.partition, marked, &r.ledger);
    ++r.iterations;
  }
}

std::vector<std::pair<std::size_t, double>> lower_envelope(std::span<const BudgetSample> s) {
  std::vector<std::size_t> idx(s.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a].N < s[b].N; });
  std::vector<std::pair<std::size_t, double>> env;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : idx) {
    best = std::min(best, s[i].error);
    if (!env.empty() && env.back().first == s[i].N) env.back().second = best;
    else env.emplace_back(s[i].N, best);
  }
  return env;
}

BudgetCurve budget_curve(const Field& u, const DistanceFunction& rho, const Indicator& ind, const SpaceSpec& space,
                         const Partition& P0, const EpsSchedule& sched) {
  if (!(sched.factor > 0 && sched.factor < 1)) throw AdaptiveError("eps schedule factor must lie in (0,1)");
  BudgetCurve c;
  c.N0 = P0.size();
  c.backend = ind.backend();
  double eps = sched.eps0;
  if (!(eps > 0)) {
    auto e0 = ind.evaluate(P0);
    eps = e0.empty() ? 1.0 : *std::max_element(e0.begin(), e0.end());
    if (!(eps > 0)) eps = 1.0;
  }
  for (int k = 0; k < sched.steps; ++k, eps *= sched.factor) {
    auto g = greedy_partition(ind, eps, P0, sched.max_iterations);
    if (sched.max_cells > 0 && g.partition.size() > sched.max_cells) break;
    auto b = best_error(rho, u, space.make(g.partition));
    c.samples.push_back({g.partition.size(), b.error, eps, b.surrogate, g.ledger.total_marked()});
  }
  c.envelope = lower_envelope(c.samples);
  return c;
}

RateReport fit_loglog(std::span<const double> x, std::span<const double> y, double lo, double hi) {
  if (x.size() != y.size()) throw AdaptiveError("fit: size mismatch");
  std::vector<double> lx, ly;
  double xmin = std::numeric_limits<double>::infinity(), xmax = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= lo && x[i] <= hi) {
      if (!(x[i] > 0) || !(y[i] > 0)) throw AdaptiveError("fit: nonpositive value in window");
      xmin = std::min(xmin, x[i]), xmax = std::max(xmax, x[i]);
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 4) throw AdaptiveError("fit: fewer than 4 points in window");
  double n = static_cast<double>(lx.size()), mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxx += (lx[i] - mx) * (lx[i] - mx), sxy += (lx[i] - mx) * (ly[i] - my);
  if (!(sxx > 0)) throw AdaptiveError("fit: degenerate window");
  double slope = sxy / sxx, rss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double r = ly[i] - (my + slope * (lx[i] - mx));
    rss += r * r;
  }
  RateReport rep;
  rep.s = -slope;
  rep.N_lo = xmin;
  rep.N_hi = xmax;
  rep.rms = std::sqrt(rss / n);
  rep.points = lx.size();
  return rep;
}

RateReport fit_rate(const BudgetCurve& c, double N_lo, double N_hi) {
  std::vector<double> x, y;
  for (auto [N, E] : c.envelope) x.push_back(static_cast<double>(N)), y.push_back(E);
  auto r = fit_loglog(x, y, N_lo, N_hi);
  r.backend = c.backend;
  for (const auto& s : c.samples) r.surrogate = r.surrogate || s.surrogate;
  return r;
}

double approx_class_seminorm(const BudgetCurve& c, double s, double q) {
  if (c.envelope.empty() || c.N0 == 0) return 0;
  std::vector<double> terms;
  std::size_t Nmax = c.envelope.back().first;
  for (int k = 0; (std::size_t{1} << k) * c.N0 <= Nmax && k < 62; ++k) {
    std::size_t budget = (std::size_t{1} << k) * c.N0;
    double Ek = std::numeric_limits<double>::infinity();
    for (auto [N, E] : c.envelope)
      if (N <= budget) Ek = std::min(Ek, E);
    if (std::isinf(Ek)) continue;
    terms.push_back(std::pow(2.0, k * s) * Ek);
  }
  return lq_aggregate(terms, q);
}

void write_budget_csv(std::ostream& os, const BudgetCurve& c) {
  os << "N,error,epsilon,surrogate\n";
  for (const auto& s : c.samples)
    os << s.N << ',' << format_double(s.error) << ',' << format_double(s.epsilon) << ',' << (s.surrogate ? 1 : 0)
       << '\n';
}

void write_rate_csv(std::ostream& os, std::span<const RateReport> r) {
  os << "s,N_lo,N_hi,rms,backend\n";
  for (const auto& x : r)
    os << format_double(x.s) << ',' << format_double(x.N_lo) << ',' << format_double(x.N_hi) << ','
       << format_double(x.rms) << ',' << x.backend << '\n';
}

}  // namespace apx
