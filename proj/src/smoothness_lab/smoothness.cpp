#include "apx/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_set>

#include "apx/parallel.hpp"
#include "apx/quadrature.hpp"
#include "apx/quasi_interp.hpp"

namespace apx {

double lq_aggregate(std::span<const double> c, double q) {
  if (std::isinf(q)) {
    double m = 0;
    for (double v : c) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0;
  for (double v : c) s += std::pow(std::abs(v), q);
  return std::pow(s, 1.0 / q);
}

Region::Region(std::vector<Affine> tris) : tris_(std::move(tris)) {
  if (tris_.empty()) throw FeError("empty region");
  for (auto& A : tris_) {
    if (A.det < 0) A = Affine(A.o, A.map(0, 1), A.map(1, 0));
    area_ += A.area();
    scale_.push_back(std::sqrt(A.area()));
  }
}

Region Region::domain(const Forest& f) {
  std::vector<Affine> t;
  for (int i = 0; i < f.num_roots(); ++i) t.push_back(f.affine(i));
  return Region(std::move(t));
}

Region Region::cells(const Forest& f, std::span<const int> ids) {
  std::vector<Affine> t;
  for (int c : ids) t.push_back(f.affine(c));
  return Region(std::move(t));
}

bool Region::contains_segment(Point a, Point b) const {
  // parameter intervals of a + s (b - a) inside each triangle, then a cover test
  std::array<std::pair<double, double>, 64> small{};
  std::vector<std::pair<double, double>> big;
  std::size_t n = 0;
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    const Affine& A = tris_[i];
    Point v[3] = {A.o, A.map(1, 0), A.map(0, 1)};
    double lo = 0, hi = 1, tol = 1e-12 * scale_[i] * scale_[i];
    bool empty = false;
    for (int k = 0; k < 3 && !empty; ++k) {
      Point e = v[(k + 1) % 3] - v[k];
      double f0 = cross(e, a - v[k]), f1 = cross(e, b - v[k]);
      if (f0 < -tol && f1 < -tol) empty = true;
      else if (f0 < -tol) lo = std::max(lo, (-tol - f0) / (f1 - f0));
      else if (f1 < -tol) hi = std::min(hi, (-tol - f0) / (f1 - f0));
    }
    if (empty || lo > hi) continue;
    if (lo <= 1e-12 && hi >= 1 - 1e-12) return true;
    if (n < small.size()) small[n++] = {lo, hi};
    else big.emplace_back(lo, hi);
  }
  big.insert(big.end(), small.begin(), small.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(big.begin(), big.end());
  double cur = 0;
  for (auto [lo, hi] : big) {
    if (lo > cur + 1e-12) return false;
    cur = std::max(cur, hi);
  }
  return cur >= 1 - 1e-12;
}

namespace {

struct Grid {
  std::vector<Point> x;
  std::vector<double> w;
};

// Each region triangle is cut into k^2 congruent pieces, k sized to the
// finest shift but capped by the point budget.
Grid integration_grid(const Region& G, double t, const ModulusOptions& o) {
  const auto& rule = triangle_rule(o.quad_order);
  auto tris = G.triangles();
  std::vector<int> k(tris.size());
  double target = std::max(t / 2, 1e-12), total = 0;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const Affine& A = tris[i];
    double d = diameter(A.o, A.map(1, 0), A.map(0, 1));
    k[i] = std::max(1, static_cast<int>(std::ceil(d / target)));
    total += static_cast<double>(k[i]) * k[i] * static_cast<double>(rule.points.size());
  }
  if (total > o.max_points) {
    double f = std::sqrt(o.max_points / total);
    for (auto& ki : k) ki = std::max(1, static_cast<int>(std::floor(ki * f)));
  }
  Grid g;
  for (std::size_t i = 0; i < tris.size(); ++i) {
    const Affine& A = tris[i];
    int n = k[i];
    double h = 1.0 / n, w = 2 * A.area() * h * h;
    auto add = [&](Point a, Point b, Point c) {
      Affine S(a, b, c);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        g.x.push_back(A.map(S.map(rule.points[q])));
        g.w.push_back(rule.weights[q] * w);
      }
    };
    for (int a = 0; a < n; ++a)
      for (int b = 0; a + b < n; ++b) {
        add({a * h, b * h}, {(a + 1) * h, b * h}, {a * h, (b + 1) * h});
        if (a + b < n - 1) add({(a + 1) * h, b * h}, {(a + 1) * h, (b + 1) * h}, {a * h, (b + 1) * h});
      }
  }
  return g;
}

// Shift directions on the half circle (the other half is covered by symmetry
// of |Delta_h^r|). Axes and diagonals stay exact, the rest is jittered.
std::vector<Point> shift_directions(const ModulusOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  std::vector<Point> d;
  for (int i = 0; i < o.directions; ++i) {
    double jit = U(rng);
    bool exact = (4 * i) % o.directions == 0;
    double a = std::numbers::pi * (i + (exact ? 0.0 : jit)) / o.directions;
    d.push_back({std::cos(a), std::sin(a)});
  }
  return d;
}

std::vector<double> shift_fractions(const ModulusOptions& o) {
  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> U(0.0, 0.5);
  std::vector<double> f;
  for (int k = 1; k <= o.magnitudes; ++k) f.push_back(k == o.magnitudes ? 1.0 : (k - U(rng)) / o.magnitudes);
  return f;
}

double binom(int r, int k) {
  double b = 1;
  for (int i = 1; i <= k; ++i) b = b * (r - k + i) / i;
  return b;
}

double difference_norm(const Field& u, const std::vector<double>& u0, int r, Point h, double p, const Region& G,
                       const Grid& g) {
  double acc = 0;
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    Point x = g.x[i];
    if (!G.contains_segment(x, x + static_cast<double>(r) * h)) continue;
    double d = (r % 2 == 0 ? 1.0 : -1.0) * u0[i];
    for (int k = 1; k <= r; ++k) d += ((r + k) % 2 == 0 ? 1.0 : -1.0) * binom(r, k) * u(x + static_cast<double>(k) * h);
    if (std::isinf(p)) acc = std::max(acc, std::abs(d));
    else acc += g.w[i] * std::pow(std::abs(d), p);
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

}  // namespace

std::vector<double> modulus_curve(const Field& u, int r, std::span<const double> ts, double p, const Region& G,
                                  const ModulusOptions& o) {
  if (r < 1) throw FeError("difference order must be >= 1");
  if (!(p > 0)) throw FeError("exponent p must be positive");
  if (ts.empty()) return {};
  for (double t : ts)
    if (!(t > 0)) throw FeError("modulus step t must be positive");
  auto grid = integration_grid(G, *std::min_element(ts.begin(), ts.end()), o);
  std::vector<double> u0(grid.x.size());
  for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = u(grid.x[i]);
  auto dirs = shift_directions(o);
  auto fr = shift_fractions(o);
  // all shifts of all t, evaluated once
  std::vector<double> len;
  for (double t : ts)
    for (double f : fr) len.push_back(t * f);
  std::sort(len.begin(), len.end());
  len.erase(std::unique(len.begin(), len.end()), len.end());
  std::vector<double> val(len.size() * dirs.size());
  parallel_for(val.size(), [&](std::size_t i) {
    double l = len[i / dirs.size()];
    Point h = l * dirs[i % dirs.size()];
    val[i] = difference_norm(u, u0, r, h, p, G, grid);
  }, 1);
  std::vector<double> out;
  for (double t : ts) {
    double m = 0;
    for (std::size_t i = 0; i < val.size(); ++i)
      if (len[i / dirs.size()] <= t * (1 + 1e-14)) m = std::max(m, val[i]);
    out.push_back(m);
  }
  return out;
}

double modulus(const Field& u, int r, double t, double p, const Region& G, const ModulusOptions& o) {
  return modulus_curve(u, r, std::span<const double>(&t, 1), p, G, o).front();
}

SeminormValue besov_seminorm(const Field& u, const SmoothnessParams& s, const Region& G, const ModulusOptions& o) {
  if (s.J < 0) throw FeError("truncation depth must be >= 0");
  double lambda = s.lambda > 1 ? s.lambda : 2.0;
  SeminormValue v;
  v.truncation_J = s.J;
  v.q = s.q;
  v.surrogate = true;
  double shift = std::isinf(s.p) ? 0.0 : std::max(0.0, 1.0 / s.p - 1.0);
  if (!(s.r > s.alpha - shift))
    v.warnings.push_back("trivial-space regime: r <= alpha - max(0, 1/p - 1)");
  std::vector<double> ts;
  for (int j = 0; j <= s.J; ++j) ts.push_back(std::pow(lambda, -j));
  v.levels = modulus_curve(u, s.r, ts, s.p, G, o);
  for (int j = 0; j <= s.J; ++j) v.contributions.push_back(std::pow(lambda, j * s.alpha) * v.levels[static_cast<std::size_t>(j)]);
  v.value = lq_aggregate(v.contributions, s.q);
  return v;
}

UniformChain::UniformChain(Partition base) { levels_.push_back(std::move(base)); }

const Partition& UniformChain::level(int j) {
  if (j < 0) throw FeError("negative chain level");
  while (static_cast<int>(levels_.size()) <= j) levels_.push_back(uniform_refine(levels_.back()));
  return levels_[static_cast<std::size_t>(j)];
}

std::vector<int> UniformChain::restrict_to(int j, std::span<const int> G) {
  const Partition& P = level(j);
  std::vector<int> out;
  if (G.empty()) {
    out.resize(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) out[i] = static_cast<int>(i);
    return out;
  }
  const Partition& B = levels_.front();
  std::unordered_set<int> g;
  for (int c : G) {
    if (!B.contains(c)) throw FeError("region cell " + std::to_string(c) + " is not a base cell of the chain");
    g.insert(c);
  }
  const Forest& f = P.forest();
  for (std::size_t i = 0; i < P.size(); ++i) {
    int id = P.cell(i);
    while (id >= 0 && !g.contains(id)) id = f.cell(id).parent;
    if (id >= 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

SeminormValue multilevel_seminorm(const Field& u, const SmoothnessParams& s, UniformChain& chain, int m,
                                  std::span<const int> G, double p0, SpaceKind kind) {
  if (s.J < 0) throw FeError("truncation depth must be >= 0");
  double lambda = s.lambda > 1 ? s.lambda : chain.lambda();
  SeminormValue v;
  v.truncation_J = s.J;
  v.q = s.q;
  for (int j = 0; j <= s.J; ++j) {
    auto elems = chain.restrict_to(j, G);
    auto V = kind == SpaceKind::continuous ? FeSpace::continuous(chain.level(j), m)
                                           : FeSpace::discontinuous(chain.level(j), m);
    auto b = best_approx_error(u, V, s.p, elems, p0);
    double e = b.error;
    if (b.surrogate) e = std::min(e, lp_norm(u, chain.level(j), s.p, elems, default_quad_order(m)));
    v.surrogate = v.surrogate || b.surrogate;
    v.levels.push_back(e);
    v.contributions.push_back(std::pow(lambda, j * s.alpha) * e);
  }
  v.value = lq_aggregate(v.contributions, s.q);
  return v;
}

double inverse_bound(double alpha, double q, int level, double lambda) {
  if (std::isinf(q)) return std::pow(lambda, alpha * level);
  return std::pow(std::pow(lambda, alpha * q * level) / (std::pow(lambda, alpha * q) - 1), 1.0 / q);
}

std::vector<double> weighted_powers(const Field& u, const Partition& P, double theta, double p, int quad_order) {
  if (!(p > 0)) throw FeError("exponent p must be positive");
  const auto& rule = triangle_rule(quad_order);
  const Forest& f = P.forest();
  std::vector<double> out(P.size());
  parallel_for(P.size(), [&](std::size_t i) {
    Affine A = f.affine(P.cell(i));
    double acc = 0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double d = std::abs(u(A.map(rule.points[q])));
      if (std::isinf(p)) acc = std::max(acc, d);
      else acc += rule.weights[q] * 2 * A.area() * std::pow(d, p);
    }
    out[i] = std::isinf(p) ? std::pow(A.area(), theta / 2) * acc : std::pow(A.area(), theta * p / 2) * acc;
  });
  return out;
}

double weighted_norm(const Field& u, const Partition& P, double theta, double p, int quad_order) {
  return aggregate(weighted_powers(u, P, theta, p, quad_order), p);
}

KCandidates k_functional_candidates(const Field& u, double alpha, double p, UniformChain& chain, int m, int J) {
  double lambda = chain.lambda();
  KCandidates k;
  std::vector<FeSpace> spaces;
  for (int j = 0; j <= J; ++j) spaces.push_back(FeSpace::continuous(chain.level(j), m));
  for (int j = 0; j <= J; ++j) {
    const FeSpace& V = spaces[static_cast<std::size_t>(j)];
    FeFunction uj = p == 2.0 ? l2_projection(V, u) : q_tilde(V, u, default_p0(p));
    k.error.push_back(lp_distance(u, uj, p));
    Field fj = uj.field("u_j");
    std::vector<double> c;
    for (int i = 0; i < j; ++i) {
      const FeSpace& W = spaces[static_cast<std::size_t>(i)];
      auto b = best_approx_error(fj, W, p, {}, -1, default_quad_order(std::max(m, 1)) + 2);
      double e = b.error;
      if (b.surrogate) e = std::min(e, lp_distance(fj, FeFunction(W), p));
      c.push_back(std::pow(lambda, i * alpha) * e);
    }
    k.seminorm.push_back(lq_aggregate(c, p));
  }
  return k;
}

double k_functional_upper(const KCandidates& k, double t) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k.error.size(); ++j) best = std::min(best, k.error[j] + t * k.seminorm[j]);
  return best;
}

}  // namespace apx
