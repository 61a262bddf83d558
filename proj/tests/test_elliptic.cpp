#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "apx/elliptic.hpp"
#include "doctest.h"

using namespace apx;

namespace {

using std::numbers::pi;

Partition square(Rule r = Rule::nvb) { return Partition::initial(make_domain("unit_square", r)); }
Partition lshape() { return Partition::initial(make_domain("l_shape", Rule::nvb)); }

Partition uniform(Partition P, int k) {
  for (int i = 0; i < k; ++i) P = uniform_refine(P);
  return P;
}

Field sine() {
  return {[](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); },
          [](Point p) {
            return Point{pi * std::cos(pi * p.x) * std::sin(pi * p.y), pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
          },
          "sine"};
}

Hess sine_hess(Point p) {
  double s = std::sin(pi * p.x) * std::sin(pi * p.y), c = std::cos(pi * p.x) * std::cos(pi * p.y);
  return {-pi * pi * s, pi * pi * c, -pi * pi * s};
}

std::vector<int> all_sides() { return whole_boundary(*make_domain("unit_square", Rule::nvb)); }

// Variable symmetric coefficient with drift and reaction on the unit square.
EllipticProblem variable_problem() {
  EllipticProblem p;
  p.name = "variable";
  p.a = [](Point x) { return std::array<double, 4>{1 + x.x, 0.2 * x.y, 0.2 * x.y, 2}; };
  p.a_div = [](Point) { return Point{1.2, 0}; };
  p.b = [](Point) { return Point{1, 0.5}; };
  p.c = [](Point) { return 1.0; };
  p.gamma = all_sides();
  return manufactured(p, sine(), sine_hess);
}

EllipticProblem sine_poisson() { return manufactured(poisson({}, all_sides()), sine(), sine_hess); }

}  // namespace

TEST_CASE("assembly") {
  auto P = uniform(square(), 2);
  auto V = FeSpace::continuous(P, 2, all_sides());
  auto s = assemble_system(poisson(constant_field(1), all_sides()), V);
  SparseMatrix K = assemble_gram(V, stiffness_form(), default_quad_order(2) + 2);
  CHECK((s.A - K).norm() <= 1e-13 * K.norm());
  // constants lie in the kernel before masking
  auto W = FeSpace::continuous(P, 2);
  auto sw = assemble_system(poisson(constant_field(1), {}), W);
  CHECK((sw.A * Eigen::VectorXd::Ones(W.dim())).norm() <= 1e-12);
  EllipticProblem bad = poisson(constant_field(1), {});
  bad.a = [](Point) { return std::array<double, 4>{2, 0, 0, 2}; };
  CHECK_THROWS_AS(assemble_system(bad, W), EllipticError);
  CHECK_THROWS_AS(assemble_system(bad, FeSpace::discontinuous(P, 1)), EllipticError);
  CHECK(min_coefficient_eigenvalue(variable_problem(), P) > 0.9);
}

TEST_CASE("galerkin solve") {
  auto P = uniform(square(), 1);
  auto V = FeSpace::continuous(P, 1, all_sides());
  REQUIRE(V.dim() == 1);
  SolveInfo info;
  auto u = galerkin_solve(poisson(constant_field(1), all_sides()), V, &info);
  // one pyramid on four right triangles: stiffness 4, load 1/3
  CHECK(u.coef()[0] == doctest::Approx(1.0 / 12).epsilon(1e-13));
  CHECK(info.min_pivot == doctest::Approx(4.0));
  auto z = galerkin_solve(poisson(constant_field(0), all_sides()), FeFunction(V).space());
  CHECK(z.coef().norm() == 0.0);

  // energy error ~ h on the red uniform chain
  auto prob = sine_poisson();
  std::vector<double> e;
  Partition R = uniform(square(Rule::red), 1);
  for (int j = 0; j < 4; ++j, R = uniform_refine(R))
    e.push_back(h1_distance(sine(), galerkin_solve(prob, FeSpace::continuous(R, 1, prob.gamma))));
  for (std::size_t j = 1; j < e.size(); ++j) CHECK(e[j - 1] / e[j] == doctest::Approx(2.0).epsilon(0.08));

  // an indefinite problem is refused
  auto neg = poisson(constant_field(1), all_sides());
  neg.c = [](Point) { return -200.0; };
  CHECK_THROWS_AS(galerkin_solve(neg, FeSpace::continuous(uniform(square(), 4), 1, all_sides())), SolverError);
}

TEST_CASE("galerkin orthogonality and consistency") {
  auto prob = variable_problem();
  std::vector<double> cons;
  for (int j = 2; j <= 5; ++j) {
    auto P = uniform(square(Rule::red), j);
    auto V = FeSpace::continuous(P, 1, prob.gamma);
    auto s = assemble_system(prob, V, 12);
    auto u = galerkin_solve(s);
    Eigen::VectorXd au = form_action(prob, V, sine(), 12);
    double scale = au.cwiseAbs().maxCoeff();
    CHECK((au - s.A * u.coef()).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    // the interpolated solution satisfies the discrete equations up to O(h) in the energy dual norm
    auto I = interpolate(V, sine());
    Eigen::VectorXd r = s.A * I.coef() - s.rhs;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(assemble_gram(V, h1_form()));
    cons.push_back(std::sqrt(r.dot(ldlt.solve(r))));
  }
  for (std::size_t j = 1; j < cons.size(); ++j) CHECK(cons[j - 1] / cons[j] >= 1.8);
}

TEST_CASE("estimator") {
  // u = x(1-x) lies in S_P for m = 2, Dirichlet on x = 0, 1 and natural elsewhere
  auto F = make_domain("unit_square", Rule::nvb);
  auto gamma = boundary_segments_where(*F, [](Point x) { return x.x == 0 || x.x == 1; });
  Field u{[](Point x) { return x.x * (1 - x.x); }, [](Point x) { return Point{1 - 2 * x.x, 0}; }, "parabola"};
  auto prob = manufactured(poisson({}, gamma), u, [](Point) { return Hess{-2, 0, 0}; });
  std::mt19937_64 rng(4);
  Partition P = Partition::initial(F);
  for (int r = 0; r < 3; ++r) {
    std::vector<int> marked;
    for (int c : P.cells())
      if (rng() % 3 == 0) marked.push_back(c);
    P = refine(P, marked);
  }
  auto V = FeSpace::continuous(P, 2, gamma);
  auto v = interpolate(V, u);
  auto est = estimate(prob, v);
  CHECK(est.eta() <= 1e-10);
  CHECK(est.rho() <= 1e-10);
  CHECK(total_error(prob, v) <= 1e-10);

  // affine v with constant a: no jumps
  Field aff{[](Point x) { return 1 + x.x - 2 * x.y; }, [](Point) { return Point{1, -2}; }, "affine"};
  auto V1 = FeSpace::continuous(P, 1);
  auto e1 = estimate(poisson(constant_field(0), {}), interpolate(V1, aff));
  bool interior_zero = true;
  for (const auto& er : e1.edges)
    if (er.elem[1] >= 0) interior_zero = interior_zero && er.eta2 <= 1e-24;
  CHECK(interior_zero);

  // decomposition and termwise oscillation bound
  auto sp = sine_poisson();
  for (Rule rule : {Rule::nvb, Rule::red}) {
    Partition Q = uniform(square(rule), 1);
    for (int r = 0; r < 3; ++r) {
      std::vector<int> marked;
      for (int c : Q.cells())
        if (rng() % 3 == 0) marked.push_back(c);
      Q = refine(Q, marked);
    }
    for (int m : {1, 2}) {
      auto W = FeSpace::continuous(Q, m, sp.gamma);
      auto uh = galerkin_solve(sp, W);
      auto b = estimate(sp, uh);
      double s = 0, o = 0;
      for (std::size_t i = 0; i < b.elem_eta2.size(); ++i) {
        CHECK(b.elem_osc2[i] <= b.elem_eta2[i]);
        s += b.elem_eta2[i];
        o += b.elem_osc2[i];
      }
      for (const auto& er : b.edges) {
        CHECK(er.osc2 <= er.eta2);
        s += er.eta2;
        o += er.osc2;
      }
      CHECK(std::abs(s - b.eta2) <= 1e-14 * b.eta2);
      CHECK(std::abs(o - b.osc2) <= 1e-14 * std::max(b.osc2, 1e-300));
      double ind = 0;
      for (double x : b.element_indicators()) ind += x;
      CHECK(ind == doctest::Approx(b.eta2).epsilon(1e-13));
      CHECK(b.osc() <= b.eta());
      CHECK(b.rho() >= std::sqrt(b.energy_err2));
      // hanging-node halves replace the coarse edge on red meshes
      for (const auto& er : b.edges) CHECK(er.h > 0);
    }
  }
  CHECK_THROWS_AS(total_error(poisson(constant_field(1), {}), interpolate(V1, aff)), EllipticError);
  CHECK_THROWS_AS(estimate(sp, galerkin_solve(sp, FeSpace::continuous(P, 3, sp.gamma)), 0), EllipticError);
}

TEST_CASE("oscillation") {
  auto P = uniform(square(), 3);
  // f in P_d elementwise and constant a: the residuals are projected exactly
  for (auto [m, d] : {std::pair{1, 0}, std::pair{2, 1}, std::pair{2, 0}, std::pair{3, 1}}) {
    CAPTURE(m);
    Field f = d == 0 ? constant_field(3.0) : Field{[](Point x) { return 1 + 2 * x.x - x.y; }, {}, "lin"};
    auto prob = poisson(f, all_sides());
    auto uh = galerkin_solve(prob, FeSpace::continuous(P, m, all_sides()));
    auto b = estimate(prob, uh, d);
    CHECK(b.osc() <= 1e-12 * b.eta());
  }
  // smooth f: osc decays by a power of h faster than eta
  auto sp = sine_poisson();
  std::vector<double> eta, osc;
  Partition R = uniform(square(Rule::red), 1);
  for (int j = 0; j < 4; ++j, R = uniform_refine(R)) {
    auto b = estimate(sp, galerkin_solve(sp, FeSpace::continuous(R, 1, sp.gamma)));
    eta.push_back(b.eta());
    osc.push_back(b.osc());
  }
  for (std::size_t j = 1; j < eta.size(); ++j) {
    CHECK(eta[j - 1] / eta[j] >= 1.5);
    CHECK(osc[j - 1] / osc[j] >= 3.5);
  }
  CHECK(eta[2] / eta[3] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(load_approx_error(constant_field(2), P, 0) <= 1e-14);
  CHECK(load_approx_error(sine(), P, 0) > load_approx_error(sine(), P, 1));
}

TEST_CASE("coefficient approximation errors") {
  auto P = uniform(square(Rule::red), 2);
  Field quad{[](Point x) { return x.x * x.x - x.x * x.y; }, {}, "quad"};
  CHECK(coeff_class_error(quad, P, 2) <= 1e-12);
  CHECK(coeff_class_error(quad, P, 1) > 1e-3);
  // checkerboard on the 4x4 grid of the red mesh
  Field board{[](Point x) { return (static_cast<int>(std::floor(4 * x.x)) + static_cast<int>(std::floor(4 * x.y))) % 2 ? 3.0 : 1.0; },
              {},
              "board"};
  auto Q = uniform(square(Rule::red), 2);
  Field shifted{[](Point x) { return (static_cast<int>(std::floor(4 * x.x + 0.5)) + static_cast<int>(std::floor(4 * x.y))) % 2 ? 3.0 : 1.0; },
                {},
                "shifted"};
  CHECK(coeff_class_error(board, Q, 0) <= 1e-12);
  CHECK(coeff_class_error(shifted, Q, 0) > 0.5);
  std::vector<double> e;
  Field lip{[](Point x) { return std::abs(x.x - 0.3) + 0.5 * std::sin(3 * x.y); }, {}, "lip"};
  Partition R = uniform(square(Rule::red), 1);
  for (int j = 0; j < 5; ++j, R = uniform_refine(R)) e.push_back(coeff_class_error(lip, R, 0));
  for (std::size_t j = 1; j < e.size(); ++j) CHECK(e[j - 1] / e[j] == doctest::Approx(2.0).epsilon(0.2));
  // weighted version scales with |tau|^{theta/2}
  CHECK(coeff_class_error(lip, R, 0, 2) <= coeff_class_error(lip, R, 0));
  CHECK(projection_inflation(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(projection_inflation(2) > projection_inflation(1));
}

TEST_CASE("Doerfler marking") {
  auto P = uniform(square(), 2);
  std::vector<double> ind(P.size(), 1.0);
  ind[3] = 5;
  auto all = dorfler_mark(P, ind, 1.0);
  CHECK(all.size() == P.size());
  auto m = dorfler_mark(P, ind, 0.5);
  double total = 5 + static_cast<double>(P.size() - 1);
  CHECK(m.front() == 3);
  CHECK(static_cast<double>(m.size()) == std::ceil(0.5 * total - 5) + 1);
  // ties broken by cell id
  for (std::size_t i = 2; i < m.size(); ++i) CHECK(P.cell(static_cast<std::size_t>(m[i - 1])) < P.cell(static_cast<std::size_t>(m[i])));
  CHECK_THROWS_AS(dorfler_mark(P, ind, 0), EllipticError);
}

TEST_CASE("AFEM loop") {
  auto prob = poisson_lshape();
  auto P0 = lshape();
  auto t0 = afem_loop(prob, P0, {.max_iter = 0});
  REQUIRE(t0.steps.size() == 1);
  CHECK(t0.steps[0].N == P0.size());
  auto tu = afem_loop(prob, P0, {.theta = 1.0, .max_iter = 3});
  Partition U = P0;
  for (const auto& s : tu.steps) {
    CHECK(s.N == U.size());
    U = uniform_refine(U);
  }

  auto t = afem_loop(prob, P0, {.max_iter = 22});
  REQUIRE(t.steps.size() == 23);
  std::vector<double> N, rho, rel;
  for (const auto& s : t.steps) {
    CHECK(s.osc <= s.eta);
    CHECK(s.rho_d >= s.energy_err);
    N.push_back(static_cast<double>(s.N));
    rho.push_back(s.rho_d);
    rel.push_back(s.energy_err / s.eta);
  }
  auto r = fit_loglog(N, rho, 200);
  CHECK(r.s == doctest::Approx(0.5).epsilon(0.14));
  // reliability constant stable over the last iterations
  auto [lo, hi] = std::minmax_element(rel.end() - 6, rel.end());
  CHECK(*hi / *lo <= 1.2 * 1.2);

  // uniform refinement is markedly slower (asymptotically 1/3, still above it at this size)
  std::vector<double> NU, EU;
  Partition U2 = uniform(P0, 6);
  for (int j = 0; j < 5; ++j, U2 = uniform_refine(U2)) {
    NU.push_back(static_cast<double>(U2.size()));
    EU.push_back(h1_distance(*prob.u_exact, galerkin_solve(prob, FeSpace::continuous(U2, 1, prob.gamma))));
  }
  auto ru = fit_loglog(NU, EU);
  CHECK(ru.s < r.s - 0.08);
  CHECK(ru.s > 1.0 / 3 - 0.02);

  std::ostringstream os;
  write_afem_csv(os, t);
  CHECK(os.str().rfind("iter,N,eta,osc,energy_err,rho_d,theta_D,m,d\n", 0) == 0);
}
