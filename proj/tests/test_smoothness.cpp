#include <cmath>
#include <numbers>
#include <random>

#include "apx/quasi_interp.hpp"
#include "apx/smoothness.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace apx;

namespace {

Field sine() {
  using std::numbers::pi;
  return {[](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); }, {}, "sine"};
}

Field corner() {
  return {[](Point p) {
            double r = std::hypot(p.x, p.y), t = std::atan2(p.y, p.x);
            if (t < 0) t += 2 * std::numbers::pi;
            return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * t / 3.0);
          },
          {}, "corner"};
}

Field kink() {
  return {[](Point p) { return std::abs(p.x + 0.3 * p.y - 0.55); }, {}, "kink"};
}

Partition square() { return Partition::initial(make_domain("unit_square", Rule::nvb)); }
Partition lshape(Rule r = Rule::nvb) { return Partition::initial(make_domain("l_shape", r)); }

}  // namespace

TEST_CASE("moduli of smoothness") {
  auto P = square();
  Region G = Region::domain(P.forest());
  Field lin{[](Point p) { return 2 * p.x - p.y + 1; }, {}, "lin"};
  Field quad{[](Point p) { return p.x * p.x - 3 * p.x * p.y + p.y; }, {}, "quad"};
  CHECK(modulus(lin, 2, 0.3, 2.0, G) <= 1e-12);
  CHECK(modulus(quad, 3, 0.3, 1.0, G) <= 1e-12);
  CHECK(modulus(constant_field(2.0), 1, 0.3, 0.5, G) <= 1e-12);
  Field x{[](Point p) { return p.x; }, {}, "x"};
  for (double t : {0.05, 0.2, 0.4}) CHECK(modulus(x, 1, t, std::numeric_limits<double>::infinity(), G) == doctest::Approx(t).epsilon(0.02));
  // doubling and monotonicity on a t grid
  std::vector<double> ts;
  for (int j = 0; j < 6; ++j) ts.push_back(0.4 * std::pow(0.5, j));
  std::reverse(ts.begin(), ts.end());
  for (const Field& u : {sine(), kink()})
    for (int r : {1, 2}) {
      auto w = modulus_curve(u, r, ts, 2.0, G);
      for (std::size_t i = 1; i < w.size(); ++i) {
        CHECK(w[i] >= w[i - 1]);
        CHECK(w[i] <= std::pow(3.0, r) * w[i - 1] + 1e-12);
      }
    }
  auto L = lshape();
  Region GL = Region::domain(L.forest());
  // across the reentrant corner the segment leaves the domain
  CHECK_FALSE(GL.contains_segment({-0.5, -0.1}, {0.1, -0.5}));
  CHECK(GL.contains_segment({-0.5, 0.1}, {0.5, 0.1}));
  CHECK(GL.contains_segment({-0.9, -0.9}, {-0.9, 0.9}));
  CHECK_FALSE(GL.contains_segment({0.5, -0.5}, {0.6, -0.5}));
  // deterministic given the seed
  CHECK(modulus(corner(), 2, 0.1, 2.0, GL) == modulus(corner(), 2, 0.1, 2.0, GL));
}

TEST_CASE("Besov seminorm levels") {
  auto P = square();
  Region G = Region::domain(P.forest());
  SmoothnessParams s{.r = 2, .alpha = 0.8, .p = 2, .q = 2, .lambda = 2, .J = 5};
  Field lin{[](Point p) { return p.x + p.y; }, {}, "lin"};
  CHECK(besov_seminorm(lin, s, G).value <= 1e-12);
  auto b = besov_seminorm(kink(), s, G);
  CHECK(lq_aggregate(b.contributions, s.q) == doctest::Approx(b.value).epsilon(1e-14));
  CHECK(b.contributions.size() == 6);
  auto b2 = besov_seminorm(scaled(kink(), -3.0), s, G);
  CHECK(std::abs(b2.value - 3 * b.value) <= 1e-10 * b.value);
  s.q = std::numeric_limits<double>::infinity();
  auto bi = besov_seminorm(kink(), s, G);
  CHECK(bi.value == *std::max_element(bi.contributions.begin(), bi.contributions.end()));
  s.alpha = 2.5;
  CHECK_FALSE(besov_seminorm(kink(), s, G).warnings.empty());
}

TEST_CASE("Besov seminorm of the corner field: stable below the critical index") {
  auto L = lshape();
  Region G = Region::domain(L.forest());
  SmoothnessParams s{.r = 2, .alpha = 0.6, .p = 2, .q = 2, .lambda = 2, .J = 6};
  auto v = besov_seminorm(corner(), s, G);
  // the levels do not depend on alpha
  auto drift = [&](double alpha) {
    std::vector<double> c;
    for (std::size_t j = 0; j < v.levels.size(); ++j) c.push_back(std::pow(2.0, alpha * static_cast<double>(j)) * v.levels[j]);
    std::span<const double> cs(c);
    double a = lq_aggregate(cs.first(5), 2), b = lq_aggregate(cs, 2);
    return (b - a) / b;
  };
  double d_low = drift(0.6), d_high = drift(1.5);
  MESSAGE("relative drift J=4..6: alpha 0.6 " << d_low << ", alpha 1.5 " << d_high);
  CHECK(d_low < 0.05);
  CHECK(d_high > 4 * d_low);
}

TEST_CASE("multilevel seminorm") {
  UniformChain chain(square());
  SmoothnessParams s{.r = 2, .alpha = 1.0, .p = 2, .q = 2, .lambda = 0, .J = 4};
  auto v4 = multilevel_seminorm(sine(), s, chain, 1);
  s.J = 7;
  auto v7 = multilevel_seminorm(sine(), s, chain, 1);
  MESSAGE("sine A^1_{2,2}: J=4 " << v4.value << ", J=7 " << v7.value);
  CHECK(std::abs(v7.value - v4.value) / v7.value < 0.05);
  CHECK_FALSE(v7.surrogate);
  CHECK(lq_aggregate(v7.contributions, 2) == doctest::Approx(v7.value).epsilon(1e-14));
  // members of S_{P_0} have vanishing levels
  Field lin{[](Point p) { return 1 + p.x - 2 * p.y; }, {}, "lin"};
  CHECK(multilevel_seminorm(lin, s, chain, 1).value <= 1e-10);
  // homogeneity, also for the surrogate path
  s.J = 4;
  for (double p : {2.0, 1.0}) {
    s.p = p;
    auto a = multilevel_seminorm(kink(), s, chain, 1);
    auto b = multilevel_seminorm(scaled(kink(), -2.5), s, chain, 1);
    CHECK(std::abs(b.value - 2.5 * a.value) <= 1e-8 * a.value);
    CHECK(a.surrogate == (p != 2.0));
  }
  // local seminorm on a subset of base cells
  std::vector<int> G{0};
  s.p = 2;
  auto loc = multilevel_seminorm(kink(), s, chain, 1, G);
  auto glob = multilevel_seminorm(kink(), s, chain, 1);
  CHECK(loc.value <= glob.value + 1e-12);
  CHECK(chain.restrict_to(3, G).size() * 2 == chain.level(3).size());
  std::vector<int> bad{chain.level(2).cell(0)};
  CHECK_THROWS_AS(chain.restrict_to(1, bad), FeError);
}

TEST_CASE("inverse inequality for members of S_j") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> U(-1, 1);
  for (Rule rule : {Rule::nvb, Rule::red}) {
    UniformChain chain(Partition::initial(make_domain("unit_square", rule)));
    for (int lvl = 2; lvl <= 4; ++lvl) {
      auto V = FeSpace::continuous(chain.level(lvl), 1);
      FeFunction v(V);
      for (int i = 0; i < V.dim(); ++i) v.coef()[i] = U(rng);
      for (double p : {2.0, 1.0}) {
        SmoothnessParams s{.r = 2, .alpha = 1.0, .p = p, .q = 2, .lambda = 0, .J = lvl + 1};
        auto a = multilevel_seminorm(v.field(), s, chain, 1);
        double bound = inverse_bound(s.alpha, s.q, lvl, chain.lambda()) * lp_norm(v.field(), chain.level(lvl), p);
        CHECK(a.value <= bound + 1e-10);
        CHECK(a.levels[static_cast<std::size_t>(lvl)] <= 1e-10);
      }
    }
  }
  CHECK(inverse_bound(1.0, std::numeric_limits<double>::infinity(), 3, 2.0) == 8.0);
  CHECK(inverse_bound(1.0, 1.0, 3, 2.0) == doctest::Approx(8.0));
}

TEST_CASE("weighted norms") {
  auto P = uniform_refine(uniform_refine(square()));
  Field u = sine();
  for (double p : {0.5, 1.0, 2.0, std::numeric_limits<double>::infinity()})
    CHECK(weighted_norm(u, P, 0.0, p) == doctest::Approx(lp_norm(u, P, p)).epsilon(1e-12));
  double a = P.forest().affine(P.cell(0)).area();
  CHECK(weighted_norm(constant_field(1.0), P, 1.0, 2.0) ==
        doctest::Approx(std::sqrt(static_cast<double>(P.size()) * a * a)).epsilon(1e-12));
  // refining cells shrinks their weights
  std::vector<int> marked{P.cell(0), P.cell(3)};
  auto Q = refine(P, marked);
  CHECK(weighted_norm(u, Q, 1.0, 2.0) < weighted_norm(u, P, 1.0, 2.0));
  CHECK(weighted_norm(u, Q, 0.0, 2.0) == doctest::Approx(weighted_norm(u, P, 0.0, 2.0)).epsilon(1e-6));
}

TEST_CASE("K-functional upper bound") {
  UniformChain chain(square());
  auto k = k_functional_candidates(kink(), 1.0, 2.0, chain, 1, 5);
  CHECK(k_functional_upper(k, 0.0) == doctest::Approx(k.error.back()).epsilon(1e-12));
  double prev = 0;
  for (double t = 1e-4; t < 10; t *= 1.7) {
    double K = k_functional_upper(k, t);
    CHECK(K >= prev);
    CHECK(k_functional_upper(k, 2 * t) <= 2 * K + 1e-14);
    prev = K;
  }
  Field lin{[](Point p) { return p.x - p.y; }, {}, "lin"};
  auto kl = k_functional_candidates(lin, 1.0, 2.0, chain, 1, 3);
  CHECK(k_functional_upper(kl, 0.5) <= 0.5 * kl.seminorm.front() + 1e-10);
}

TEST_CASE("Whitney and Jackson constants") {
  // local: inf over P_m on a triangle against omega_{m+1}(u, diam, tau)
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Point a{U(rng), U(rng)}, b{U(rng), U(rng)}, c{U(rng), U(rng)};
    Affine A(a, b, c);
    if (A.area() < 0.05) continue;
    for (int m = 0; m <= 1; ++m) {
      double e = local_poly_approx(kink(), A, 2.0, std::max(m, 1)).residual;
      if (m == 0) e = std::sqrt(std::max(0.0, [&] {
        auto c0 = project_poly_element(kink(), A, 0, 8);
        return std::pow(lp_norm(sum(kink(), constant_field(-c0[0])), Partition::initial(std::make_shared<Forest>(
                                   "custom", Rule::nvb, std::vector<Point>{a, b, c}, std::vector<std::array<int, 3>>{{0, 1, 2}})),
                                2.0, {}, 8), 2);
      }()));
      double w = modulus(kink(), m + 1, diameter(a, b, c), 2.0, Region({A}), {.max_points = 4000});
      if (w > 1e-8) worst = std::max(worst, e / w);
    }
  }
  MESSAGE("Whitney constant (measured) " << worst);
  CHECK(worst < 5);
  // global: E(u, S_j) <= C omega_2(u, lambda^-j)
  UniformChain chain(square());
  Region G = Region::domain(chain.level(0).forest());
  double C = 0;
  for (const Field& u : {sine(), kink()}) {
    SmoothnessParams s{.r = 2, .alpha = 1.0, .p = 2, .q = 2, .lambda = 0, .J = 5};
    auto ml = multilevel_seminorm(u, s, chain, 1);
    std::vector<double> ts;
    for (int j = 5; j >= 0; --j) ts.push_back(std::pow(chain.lambda(), -j));
    auto w = modulus_curve(u, 2, ts, 2.0, G);
    for (int j = 0; j <= 5; ++j) C = std::max(C, ml.levels[static_cast<std::size_t>(j)] / w[static_cast<std::size_t>(5 - j)]);
  }
  MESSAGE("Jackson constant (measured) " << C);
  CHECK(C < 20);
}
