#include <cmath>
#include <random>

#include "apx/fe_space.hpp"
#include "apx/quadrature.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace apx;
using apx::testing::corpus;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("triangle rules integrate monomials exactly") {
  for (int order = 0; order <= 24; ++order) {
    const auto& R = triangle_rule(order);
    double wsum = 0;
    for (double w : R.weights) {
      CHECK(w > 0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
        double s = 0;
        for (std::size_t q = 0; q < R.points.size(); ++q)
          s += R.weights[q] * std::pow(R.points[q].x, a) * std::pow(R.points[q].y, b);
        CHECK(std::abs(s - exact) <= 1e-14);
      }
  }
  for (int order = 0; order <= 30; ++order) {
    const auto& L = line_rule(order);
    for (int k = 0; k <= order; ++k) {
      double s = 0;
      for (std::size_t q = 0; q < L.points.size(); ++q) s += L.weights[q] * std::pow(L.points[q], k);
      CHECK(std::abs(s - 1.0 / (k + 1)) <= 1e-14);
    }
  }
  CHECK_THROWS(triangle_rule(max_quadrature_order + 1));
}

TEST_CASE("reference Lagrange basis is nodal and sums to one") {
  for (int m = 0; m <= 4; ++m) {
    const auto& B = lagrange(m);
    std::vector<double> v(static_cast<std::size_t>(B.size()));
    std::vector<Point> g(static_cast<std::size_t>(B.size()));
    for (int k = 0; k < B.size(); ++k) {
      B.values(B.node(k), v);
      for (int j = 0; j < B.size(); ++j) CHECK(v[static_cast<std::size_t>(j)] == doctest::Approx(j == k ? 1.0 : 0.0));
    }
    B.values({0.21, 0.33}, v);
    B.gradients({0.21, 0.33}, g);
    double s = 0;
    Point gs{};
    for (int k = 0; k < B.size(); ++k) s += v[static_cast<std::size_t>(k)], gs = gs + g[static_cast<std::size_t>(k)];
    CHECK(s == doctest::Approx(1.0));
    CHECK(std::abs(gs.x) < 1e-12);
    CHECK(std::abs(gs.y) < 1e-12);
  }
  // finite-difference check of gradients and Hessians
  const auto& B = lagrange(3);
  Point r{0.3, 0.2};
  double h = 1e-5;
  std::vector<double> vp(10), vm(10);
  std::vector<Point> g(10), gp(10), gm(10);
  std::vector<Hess> H(10);
  B.gradients(r, g);
  B.hessians(r, H);
  B.values({r.x + h, r.y}, vp);
  B.values({r.x - h, r.y}, vm);
  B.gradients({r.x + h, r.y}, gp);
  B.gradients({r.x - h, r.y}, gm);
  for (int k = 0; k < 10; ++k) {
    auto i = static_cast<std::size_t>(k);
    CHECK(g[i].x == doctest::Approx((vp[i] - vm[i]) / (2 * h)).epsilon(1e-6));
    CHECK(H[i].xx == doctest::Approx((gp[i].x - gm[i].x) / (2 * h)).epsilon(1e-5));
    CHECK(H[i].xy == doctest::Approx((gp[i].y - gm[i].y) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("mass and stiffness matrices") {
  // single triangle mesh: one root of the unit square on its own
  auto f = std::make_shared<Forest>("custom", Rule::nvb, std::vector<Point>{{0, 0}, {2, 0}, {0, 1}},
                                    std::vector<std::array<int, 3>>{{0, 1, 2}});
  auto V = FeSpace::continuous(Partition::initial(f), 1);
  Eigen::MatrixXd M(assemble_gram(V, mass_form()));
  double area = 1.0;
  for (int i = 0; i < 3; ++i) {
    CHECK(M.row(i).sum() == doctest::Approx(area / 3).epsilon(1e-14));
    for (int j = 0; j < 3; ++j) CHECK(M(i, j) == doctest::Approx(area / 12 * (i == j ? 2 : 1)).epsilon(1e-14));
  }
  for (int m = 1; m <= 4; ++m) {
    auto W = FeSpace::continuous(corpus()[4], m);
    SparseMatrix K = assemble_gram(W, stiffness_form());
    Eigen::VectorXd one = Eigen::VectorXd::Ones(W.dim());
    CHECK((K * one).cwiseAbs().maxCoeff() < 1e-11);
    SparseMatrix Mm = assemble_gram(W, mass_form());
    CHECK((Mm - SparseMatrix(Mm.transpose())).norm() < 1e-14);
    Eigen::MatrixXd D(Mm);
    CHECK(D.llt().info() == Eigen::Success);
    CHECK(one.dot(Mm * one) == doctest::Approx(W.partition().forest().domain_area()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(assemble_gram(V, mass_form(), 1), FeError);
  SecondOrderForm bad{{}, {}, [](Point) { return std::nan(""); }};
  CHECK_THROWS_AS(assemble_gram(V, bad), FeError);
  auto text = triplets_to_string(assemble_gram(V, mass_form()));
  CHECK(text.rfind("0 0 ", 0) == 0);
}

TEST_CASE("partition of unity and continuity on admissible meshes") {
  std::mt19937_64 rng(17);
  for (const auto& P : corpus())
    for (int m = 1; m <= 3; ++m) {
      auto V = FeSpace::continuous(P, m);
      CHECK(V.dim() == V.nodes().size());
      FeFunction one(V, Eigen::VectorXd::Ones(V.dim()));
      for (int e = 0; e < V.num_elements(); ++e)
        for (int s = 0; s < 50; ++s) {
          Point x = testing::random_point_in(V.affine(e), rng);
          CHECK(std::abs(one.value(e, V.affine(e).inverse(x)) - 1.0) <= 1e-12);
        }
      std::uniform_real_distribution<double> U(-1, 1);
      FeFunction v(V);
      for (int i = 0; i < V.dim(); ++i) v.coef()[i] = U(rng);
      const Topology& t = P.topology();
      const Forest& f = P.forest();
      double worst = 0;
      for (const auto& te : t.edges) {
        int e0 = te.elem[0], e1 = te.elem[1];
        if (e1 < 0) {
          if (te.coarse < 0) continue;
          e1 = te.coarse;
        }
        Point a = f.vertex(te.a), b = f.vertex(te.b);
        for (int k = 1; k <= 5; ++k) {
          Point x = a + (k / 6.0) * (b - a);
          double v0 = v.value(e0, V.affine(e0).inverse(x));
          double v1 = v.value(e1, V.affine(e1).inverse(x));
          worst = std::max(worst, std::abs(v0 - v1));
        }
      }
      CHECK(worst <= 1e-12);
    }
}

TEST_CASE("Dirichlet mask removes exactly the boundary nodes") {
  for (const auto& P : corpus())
    for (int m = 1; m <= 2; ++m) {
      auto V = FeSpace::continuous(P, m);
      auto W = FeSpace::continuous(P, m, whole_boundary(P.forest()));
      int on_boundary = 0;
      for (int z = 0; z < V.nodes().size(); ++z) {
        auto b = V.nodes().boundary_segments(z);
        if (b[0] >= 0 || b[1] >= 0) ++on_boundary;
      }
      CHECK(W.dim() == V.dim() - on_boundary);
      auto half = std::vector<int>{0};
      auto H = FeSpace::continuous(P, m, half);
      CHECK(H.dim() < V.dim());
      CHECK(H.dim() > W.dim());
    }
}

TEST_CASE("element and edge projections") {
  Affine ref({0, 0}, {1, 0}, {0, 1});
  Field x2{[](Point p) { return p.x * p.x; }, {}, "x2"};
  auto c = project_poly_element(x2, ref, 0);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  // polynomials are fixed, projection is idempotent
  Affine A({0.1, 0.2}, {1.3, 0.4}, {0.5, 1.7});
  Field q{[](Point p) { return 1 + p.x - 2 * p.y + p.x * p.y + 0.5 * p.y * p.y; }, {}, "q"};
  for (int d = 2; d <= 4; ++d) {
    auto cq = project_poly_element(q, A, d);
    const auto& B = lagrange(d);
    for (Point r : {Point{0.2, 0.3}, Point{0.6, 0.1}}) CHECK(B.eval(cq, r) == doctest::Approx(q(A.map(r))).epsilon(1e-12));
  }
  Field s{[](Point p) { return std::sin(3 * p.x) * std::exp(p.y); }, {}, "s"};
  auto c1 = project_poly_element(s, A, 2, 10);
  Field p1{[&](Point p) { return lagrange(2).eval(c1, A.inverse(p)); }, {}, "p1"};
  auto c2 = project_poly_element(p1, A, 2);
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c2[i] == doctest::Approx(c1[i]).epsilon(1e-12));
  // orthogonality of the remainder against P_d
  const auto& rule = triangle_rule(10);
  for (int k = 0; k < lagrange(2).size(); ++k) {
    double acc = 0;
    std::vector<double> v(6);
    for (std::size_t qi = 0; qi < rule.points.size(); ++qi) {
      lagrange(2).values(rule.points[qi], v);
      acc += rule.weights[qi] * (s(A.map(rule.points[qi])) - lagrange(2).eval(c1, rule.points[qi])) * v[static_cast<std::size_t>(k)];
    }
    CHECK(std::abs(acc) < 1e-14);
  }

  auto e0 = project_poly_edge([](double t) { return t * t; }, 0);
  CHECK(e0(0.3) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  auto e2 = project_poly_edge([](double t) { return 1 - 3 * t + t * t; }, 2);
  CHECK(e2(0.7) == doctest::Approx(1 - 2.1 + 0.49).epsilon(1e-13));
  auto e3 = project_poly_edge([&](double t) { return e2(t); }, 2);
  CHECK(e3(0.4) == doctest::Approx(e2(0.4)).epsilon(1e-13));
}

TEST_CASE("interpolation and point evaluation") {
  auto P = corpus()[5];
  Field u{[](Point p) { return 2 - p.x + 3 * p.y; }, [](Point) { return Point{-1, 3}; }, "affine"};
  for (int m = 1; m <= 3; ++m) {
    auto V = FeSpace::continuous(P, m);
    auto v = interpolate(V, u);
    CHECK(lp_distance(u, v, 2.0) < 1e-12);
    CHECK(h1_distance(u, v) < 1e-11);
    CHECK(v({0.3, 0.4}) == doctest::Approx(u({0.3, 0.4})));
    CHECK(v.gradient(Point{-0.6, 0.5}).y == doctest::Approx(3.0));
  }
  auto D = FeSpace::discontinuous(P, 0);
  CHECK(D.dim() == static_cast<int>(P.size()));
  auto dv = interpolate(D, constant_field(4.0));
  CHECK(lp_distance(constant_field(4.0), dv, 1.0) < 1e-13);
  CHECK(D.locate({5, 5}) == -1);
}
