#include "apx/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "apx/parallel.hpp"
#include "apx/quadrature.hpp"

namespace apx {

SecondOrderForm EllipticProblem::form() const {
  if (a && !a_div) throw EllipticError("problem '" + name + "': coefficient a has no gradient evaluator");
  SecondOrderForm s;
  s.a = a ? a : [](Point) { return std::array<double, 4>{1, 0, 0, 1}; };
  if (b || a_div) s.b = [b = b, ad = a_div](Point x) { return (b ? b(x) : Point{}) + (ad ? ad(x) : Point{}); };
  s.c = c;
  return s;
}

EllipticProblem poisson(Field f, std::vector<int> gamma, std::string name) {
  EllipticProblem p;
  p.name = std::move(name);
  p.f = std::move(f);
  p.gamma = std::move(gamma);
  return p;
}

EllipticProblem manufactured(EllipticProblem p, Field u, std::function<Hess(Point)> hess) {
  if (!u.has_gradient()) throw EllipticError("manufactured solution needs a gradient");
  if (p.a && !p.a_div) throw EllipticError("problem '" + p.name + "': coefficient a has no gradient evaluator");
  auto pp = std::make_shared<EllipticProblem>(p);
  Field uu = u;
  p.f = {[pp, uu, hess](Point x) {
           auto a = pp->a_at(x);
           Hess H = hess(x);
           double div = a[0] * H.xx + (a[1] + a[2]) * H.xy + a[3] * H.yy;
           return -div + dot(pp->b_at(x), uu.grad(x)) + pp->c_at(x) * uu(x);
         },
         {}, "T(" + u.name + ")"};
  p.u_exact = std::move(u);
  return p;
}

EllipticProblem poisson_lshape(double r0, double r1) {
  if (!(0 <= r0 && r0 < r1 && r1 <= 1)) throw EllipticError("cutoff radii must satisfy 0 <= r0 < r1 <= 1");
  using std::numbers::pi;
  // quintic smoothstep: zeta = 1 - S(t), t = (r - r0)/(r1 - r0)
  struct Cut {
    double r0, r1;
    std::array<double, 3> operator()(double r) const {
      double L = r1 - r0;
      if (r <= r0) return {1, 0, 0};
      if (r >= r1) return {0, 0, 0};
      double t = (r - r0) / L;
      double S = t * t * t * (10 - 15 * t + 6 * t * t);
      double S1 = 30 * t * t * (1 - t) * (1 - t);
      double S2 = 60 * t * (1 - t) * (1 - 2 * t);
      return {1 - S, -S1 / L, -S2 / (L * L)};
    }
  } cut{r0, r1};
  auto polar = [](Point x) {
    double r = std::hypot(x.x, x.y), t = std::atan2(x.y, x.x);
    if (t < 0) t += 2 * pi;
    return std::pair{r, t};
  };
  Field u{[=](Point x) {
            auto [r, t] = polar(x);
            if (r == 0) return 0.0;
            return cut(r)[0] * std::pow(r, 2.0 / 3.0) * std::sin(2 * t / 3);
          },
          [=](Point x) {
            auto [r, t] = polar(x);
            if (r == 0) return Point{};
            auto z = cut(r);
            double s = std::pow(r, 2.0 / 3.0) * std::sin(2 * t / 3);
            double dr = z[0] * (2.0 / 3.0) * std::pow(r, -1.0 / 3.0) * std::sin(2 * t / 3) + z[1] * s;
            double dt = z[0] * (2.0 / 3.0) * std::pow(r, -1.0 / 3.0) * std::cos(2 * t / 3);
            Point er{std::cos(t), std::sin(t)}, et{-std::sin(t), std::cos(t)};
            return dr * er + dt * et;
          },
          "lshape_cutoff"};
  Field f{[=](Point x) {
            auto [r, t] = polar(x);
            if (r <= r0 || r >= r1) return 0.0;
            auto z = cut(r);
            double s = std::pow(r, 2.0 / 3.0) * std::sin(2 * t / 3);
            double sr = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0) * std::sin(2 * t / 3);
            return -(s * (z[2] + z[1] / r) + 2 * z[1] * sr);
          },
          {}, "lshape_load"};
  auto forest = make_domain("l_shape", Rule::nvb);
  auto p = poisson(std::move(f), whole_boundary(*forest), "poisson_lshape");
  p.u_exact = std::move(u);
  return p;
}

std::vector<int> boundary_segments_where(const Forest& f, const std::function<bool(Point)>& pred) {
  std::vector<int> out;
  for (int s = 0; s < f.num_boundary_segments(); ++s) {
    auto [a, b] = f.boundary_segment(s);
    Point x = f.vertex(a), y = f.vertex(b);
    if (pred(x) && pred(y) && pred(0.5 * (x + y))) out.push_back(s);
  }
  return out;
}

double min_coefficient_eigenvalue(const EllipticProblem& p, const Partition& P) {
  double m = std::numeric_limits<double>::infinity();
  for (int c : P.cells()) {
    Point x = P.forest().affine(c).map(1.0 / 3, 1.0 / 3);
    auto a = p.a_at(x);
    double off = 0.5 * (a[1] + a[2]), tr = 0.5 * (a[0] + a[3]), dif = 0.5 * (a[0] - a[3]);
    m = std::min(m, tr - std::hypot(dif, off));
  }
  return m;
}

namespace {

int system_order(const FeSpace& V, int quad_order) {
  return quad_order < 0 ? default_quad_order(V.degree()) + 2 : quad_order;
}

void require_continuous(const FeSpace& V) {
  if (V.kind() != SpaceKind::continuous) throw EllipticError("elliptic problems need a continuous Lagrange space");
}

}  // namespace

LinearSystem assemble_system(const EllipticProblem& p, const FeSpace& V, int quad_order) {
  require_continuous(V);
  int order = system_order(V, quad_order);
  return {V, assemble_gram(V, p.form(), order), assemble_load(V, p.f, order)};
}

Eigen::VectorXd form_action(const EllipticProblem& p, const FeSpace& V, const Field& u, int quad_order) {
  require_continuous(V);
  auto form = p.form();
  int order = system_order(V, quad_order);
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  const int nb = tab.nb;
  std::vector<Eigen::VectorXd> loc(static_cast<std::size_t>(V.num_elements()));
  parallel_for(loc.size(), [&](std::size_t ei) {
    const Affine& A = V.affine(static_cast<int>(ei));
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nb);
    for (int q = 0; q < tab.nq; ++q) {
      Point x = A.map(rule.points[static_cast<std::size_t>(q)]);
      double w = rule.weights[static_cast<std::size_t>(q)] * 2 * A.area();
      Point g = u.grad(x);
      auto a = form.a(x);
      Point ag{a[0] * g.x + a[1] * g.y, a[2] * g.x + a[3] * g.y};
      double lower = (form.b ? dot(form.b(x), g) : 0.0) + (form.c ? form.c(x) * u(x) : 0.0);
      for (int k = 0; k < nb; ++k) r[k] += w * (dot(ag, A.grad(tab.grad(q, k))) + lower * tab.value(q, k));
    }
    loc[ei] = std::move(r);
  }, 16);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(V.dim());
  for (int e = 0; e < V.num_elements(); ++e) {
    auto dofs = V.element_dofs(e);
    auto C = V.element_map(e);
    for (std::size_t j = 0; j < dofs.size(); ++j)
      for (int k = 0; k < nb; ++k)
        out[dofs[j]] += C[static_cast<std::size_t>(k) * dofs.size() + j] * loc[static_cast<std::size_t>(e)][k];
  }
  return out;
}

FeFunction galerkin_solve(const LinearSystem& s, double tol, SolveInfo* info) {
  const auto n = s.A.rows();
  SolveInfo si;
  if (n == 0) {
    if (info) *info = si;
    return FeFunction(s.V);
  }
  SparseMatrix At = s.A.transpose();
  bool symmetric = (s.A - At).norm() <= 1e-12 * s.A.norm();
  Eigen::VectorXd x;
  double bn = std::max(s.rhs.norm(), 1e-300);
  if (n <= 50000) {
    if (symmetric) {
      Eigen::SimplicialLDLT<SparseMatrix> ldlt(s.A);
      if (ldlt.info() != Eigen::Success) throw SolverError("factorization failed", {});
      si.min_pivot = ldlt.vectorD().minCoeff();
      if (!(si.min_pivot > 0))
        throw SolverError("indefinite system: smallest pivot " + format_double(si.min_pivot), {});
      x = ldlt.solve(s.rhs);
    } else {
      Eigen::SparseLU<SparseMatrix> lu;
      lu.compute(s.A);
      if (lu.info() != Eigen::Success) throw SolverError("sparse LU failed: " + lu.lastErrorMessage(), {});
      x = lu.solve(s.rhs);
    }
  } else {
    si.direct = false;
    if (symmetric) {
      try {
        x = solve_spd(s.A, s.rhs, tol);
      } catch (const FeError& e) {
        throw SolverError(e.what(), {});
      }
    } else {
      Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> it;
      it.setTolerance(tol);
      it.setMaxIterations(std::max<Eigen::Index>(1000, 4 * n));
      it.compute(s.A);
      x = it.solve(s.rhs);
      if (it.info() != Eigen::Success)
        throw SolverError("BiCGSTAB did not converge in " + std::to_string(it.iterations()) + " iterations",
                          {it.error()});
    }
  }
  si.residual = (s.A * x - s.rhs).norm() / bn;
  if (!x.allFinite()) throw SolverError("solution not finite", {si.residual});
  if (info) *info = si;
  return FeFunction(s.V, std::move(x));
}

FeFunction galerkin_solve(const EllipticProblem& p, const FeSpace& V, SolveInfo* info) {
  return galerkin_solve(assemble_system(p, V), 1e-10, info);
}

std::vector<double> EstimatorBreakdown::element_indicators() const {
  std::vector<double> out = elem_eta2;
  for (const auto& e : edges) {
    if (e.elem[1] < 0) {
      out[static_cast<std::size_t>(e.elem[0])] += e.eta2;
    } else {
      out[static_cast<std::size_t>(e.elem[0])] += 0.5 * e.eta2;
      out[static_cast<std::size_t>(e.elem[1])] += 0.5 * e.eta2;
    }
  }
  return out;
}

namespace {

// Physical Hessian of v on element e at reference point index q of a tabulation.
Hess hessian(const Tabulation& tab, const Affine& A, std::span<const double> coef, int q) {
  Hess r;
  for (int k = 0; k < tab.nb; ++k) {
    double ck = coef[static_cast<std::size_t>(k)];
    Hess h = tab.hess(q, k);
    r.xx += ck * h.xx;
    r.xy += ck * h.xy;
    r.yy += ck * h.yy;
  }
  auto K = A.inv();  // K_ij = d xi_i / d x_j
  auto H = [&](int i, int j) { return i == 0 ? (j == 0 ? r.xx : r.xy) : (j == 0 ? r.xy : r.yy); };
  auto phys = [&](int a, int b) {
    double s = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += K[static_cast<std::size_t>(2 * i + a)] * K[static_cast<std::size_t>(2 * j + b)] * H(i, j);
    return s;
  };
  return {phys(0, 0), phys(0, 1), phys(1, 1)};
}

Point flux(const EllipticProblem& p, const FeFunction& v, int e, Point x) {
  Point g = v.gradient(e, v.space().affine(e).inverse(x));
  auto a = p.a_at(x);
  return {a[0] * g.x + a[1] * g.y, a[2] * g.x + a[3] * g.y};
}

}  // namespace

EstimatorBreakdown estimate(const EllipticProblem& p, const FeFunction& v, int d, int quad_order) {
  const FeSpace& V = v.space();
  require_continuous(V);
  const int m = V.degree();
  if (d < 0) d = default_osc_degree(m);
  if (d < m - 2) throw EllipticError("oscillation degree d must satisfy d >= m - 2");
  if (d > max_poly_degree) throw EllipticError("oscillation degree too large");
  if (p.a && !p.a_div) throw EllipticError("problem '" + p.name + "': coefficient a has no gradient evaluator");
  const Partition& P = V.partition();
  const int order = quad_order < 0 ? std::max(default_quad_order(m) + 2, 2 * d + 4) : quad_order;
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(m, order);
  const LagrangeBasis& Bd = lagrange(d);
  EstimatorBreakdown out;
  out.d = d;
  const auto ne = static_cast<std::size_t>(V.num_elements());
  out.elem_eta2.assign(ne, 0);
  out.elem_osc2.assign(ne, 0);
  const double inf = std::numeric_limits<double>::infinity();
  parallel_for(ne, [&](std::size_t ei) {
    int e = static_cast<int>(ei);
    const Affine& A = V.affine(e);
    auto coef = v.local(e);
    std::vector<double> r(static_cast<std::size_t>(tab.nq));
    bool finite = true;
    for (int q = 0; q < tab.nq; ++q) {
      Point ref = rule.points[static_cast<std::size_t>(q)], x = A.map(ref);
      Hess H = hessian(tab, A, coef, q);
      auto a = p.a_at(x);
      double val = 0;
      Point g{};
      for (int k = 0; k < tab.nb; ++k) {
        val += coef[static_cast<std::size_t>(k)] * tab.value(q, k);
        g = g + coef[static_cast<std::size_t>(k)] * A.grad(tab.grad(q, k));
      }
      double Tv = -(a[0] * H.xx + (a[1] + a[2]) * H.xy + a[3] * H.yy) + dot(p.b_at(x), g) + p.c_at(x) * val;
      double fx = p.f(x);
      finite = finite && std::isfinite(fx);
      r[static_cast<std::size_t>(q)] = fx - Tv;
    }
    if (!finite) {
      out.elem_eta2[ei] = out.elem_osc2[ei] = inf;
      return;
    }
    auto pc = project_poly_values(r, d, order);
    double jac = 2 * A.area(), n2 = 0, o2 = 0;
    for (int q = 0; q < tab.nq; ++q) {
      double w = rule.weights[static_cast<std::size_t>(q)] * jac, rq = r[static_cast<std::size_t>(q)];
      double res = rq - Bd.eval(pc, rule.points[static_cast<std::size_t>(q)]);
      n2 += w * rq * rq;
      o2 += w * res * res;
    }
    out.elem_eta2[ei] = A.area() * n2;
    out.elem_osc2[ei] = A.area() * std::min(o2, n2);
  }, 16);

  // E_P: interior and Neumann faces, halves of split faces on the finer side
  const Topology& T = P.topology();
  std::vector<int> gamma = p.gamma;
  std::sort(gamma.begin(), gamma.end());
  for (const auto& te : T.edges) {
    if (te.split) continue;
    EdgeResidual er;
    er.a = te.a;
    er.b = te.b;
    er.elem[0] = te.elem[0];
    if (te.elem[1] >= 0) er.elem[1] = te.elem[1];
    else if (te.boundary >= 0) {
      if (std::binary_search(gamma.begin(), gamma.end(), te.boundary)) continue;
    } else if (te.coarse >= 0) er.elem[1] = te.coarse;
    else throw EllipticError("partition is not admissible: unmatched edge");
    out.edges.push_back(er);
  }
  const int eorder = std::max(2 * m, 2 * (d + 1)) + 4;
  const auto& lr = line_rule(eorder);
  const Forest& F = P.forest();
  parallel_for(out.edges.size(), [&](std::size_t i) {
    EdgeResidual& er = out.edges[i];
    Point A = F.vertex(er.a), B = F.vertex(er.b), t = B - A;
    er.h = norm(t);
    Point n{t.y / er.h, -t.x / er.h};
    const Affine& E0 = V.affine(er.elem[0]);
    Point c0 = E0.map(1.0 / 3, 1.0 / 3);
    if (dot(n, A + 0.5 * t - c0) < 0) n = -1.0 * n;
    std::vector<double> jq(lr.points.size());
    for (std::size_t q = 0; q < jq.size(); ++q) {
      Point x = A + lr.points[q] * t;
      jq[q] = dot(flux(p, v, er.elem[0], x), n);
      if (er.elem[1] >= 0) jq[q] -= dot(flux(p, v, er.elem[1], x), n);
    }
    EdgePoly pj;
    pj.c.assign(static_cast<std::size_t>(d + 2), 0.0);
    std::array<double, 16> L{};
    for (std::size_t q = 0; q < jq.size(); ++q) {
      legendre01(d + 1, lr.points[q], std::span<double>(L.data(), pj.c.size()));
      for (std::size_t k = 0; k < pj.c.size(); ++k) pj.c[k] += lr.weights[q] * jq[q] * L[k];
    }
    double n2 = 0, o2 = 0;
    for (std::size_t q = 0; q < jq.size(); ++q) {
      double res = jq[q] - pj(lr.points[q]);
      n2 += lr.weights[q] * jq[q] * jq[q];
      o2 += lr.weights[q] * res * res;
    }
    er.eta2 = er.h * er.h * n2;
    er.osc2 = er.h * er.h * std::min(o2, n2);
  }, 64);

  for (std::size_t e = 0; e < ne; ++e) out.eta2 += out.elem_eta2[e], out.osc2 += out.elem_osc2[e];
  for (const auto& er : out.edges) out.eta2 += er.eta2, out.osc2 += er.osc2;
  if (p.u_exact) {
    double h = h1_distance(*p.u_exact, v, {}, order);
    out.energy_err2 = h * h;
    out.rho2 = out.energy_err2 + out.osc2;
  }
  return out;
}

double total_error(const EllipticProblem& p, const FeFunction& v, int d) {
  if (!p.u_exact) throw EllipticError("total error of problem '" + p.name + "' needs the exact solution");
  return estimate(p, v, d).rho();
}

double load_approx_error(const Field& f, const Partition& P, int d, int quad_order) {
  if (d < 0 || d > max_poly_degree) throw EllipticError("load degree out of range");
  const int order = quad_order < 0 ? 2 * d + 6 : quad_order;
  const auto& rule = triangle_rule(order);
  const LagrangeBasis& B = lagrange(d);
  std::vector<double> pw(P.size());
  parallel_for(P.size(), [&](std::size_t i) {
    Affine A = P.forest().affine(P.cell(i));
    std::vector<double> fq(rule.points.size());
    for (std::size_t q = 0; q < fq.size(); ++q) fq[q] = f(A.map(rule.points[q]));
    auto c = project_poly_values(fq, d, order);
    double s = 0;
    for (std::size_t q = 0; q < fq.size(); ++q) {
      double r = fq[q] - B.eval(c, rule.points[q]);
      s += rule.weights[q] * 2 * A.area() * r * r;
    }
    pw[i] = A.area() * s;
  }, 16);
  double s = 0;
  for (double x : pw) s += x;
  return std::sqrt(s);
}

namespace {

std::vector<Point> sample_lattice() {
  std::vector<Point> r;
  for (const auto& l : lattice(10)) r.push_back({l.b1 / 10.0, l.b2 / 10.0});
  return r;
}

}  // namespace

double coeff_class_error(const Field& g, const Partition& P, int k, double theta) {
  if (k < 0 || k > max_poly_degree) throw EllipticError("coefficient degree out of range");
  static const std::vector<Point> pts = sample_lattice();
  const LagrangeBasis& B = lagrange(k);
  std::vector<double> err(P.size());
  parallel_for(P.size(), [&](std::size_t i) {
    Affine A = P.forest().affine(P.cell(i));
    auto c = project_poly_element(g, A, k, 2 * k + 8);
    double m = 0;
    for (Point r : pts) {
      // nudged into the open element so piecewise data is read from its own side
      r = Point{1.0 / 3, 1.0 / 3} + (1 - 1e-9) * (r - Point{1.0 / 3, 1.0 / 3});
      m = std::max(m, std::abs(g(A.map(r)) - B.eval(c, r)));
    }
    err[i] = std::pow(A.area(), theta / 2) * m;
  }, 16);
  return err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
}

double projection_inflation(int k) {
  if (k < 0 || k > max_poly_degree) throw EllipticError("coefficient degree out of range");
  static std::array<double, max_poly_degree + 1> memo{};
  static std::once_flag once[max_poly_degree + 1];
  std::call_once(once[k], [k] {
    const LagrangeBasis& B = lagrange(k);
    const auto& rule = triangle_rule(30);
    const int nb = B.size();
    std::vector<double> px(static_cast<std::size_t>(nb)), py(static_cast<std::size_t>(nb));
    std::vector<std::vector<double>> tab(rule.points.size(), std::vector<double>(static_cast<std::size_t>(nb)));
    for (std::size_t q = 0; q < rule.points.size(); ++q) B.values(rule.points[q], tab[q]);
    double lam = 0;
    for (Point x : sample_lattice()) {
      B.values(x, px);
      Eigen::VectorXd a = B.mass_inverse() * Eigen::Map<Eigen::VectorXd>(px.data(), nb);
      double s = 0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        double K = 0;
        for (int j = 0; j < nb; ++j) K += a[j] * tab[q][static_cast<std::size_t>(j)];
        s += rule.weights[q] * std::abs(K);
      }
      lam = std::max(lam, s);
    }
    memo[static_cast<std::size_t>(k)] = 1 + lam;
  });
  return memo[static_cast<std::size_t>(k)];
}

std::vector<int> dorfler_mark(const Partition& P, std::span<const double> ind, double theta) {
  if (!(theta > 0 && theta <= 1)) throw EllipticError("Doerfler parameter must lie in (0,1]");
  std::vector<int> idx(ind.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  if (theta >= 1) return idx;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    double x = ind[static_cast<std::size_t>(a)], y = ind[static_cast<std::size_t>(b)];
    return x != y ? x > y : P.cell(static_cast<std::size_t>(a)) < P.cell(static_cast<std::size_t>(b));
  });
  double total = 0;
  for (double x : ind) total += x;
  if (!(total > 0)) return {};
  double acc = 0;
  std::size_t n = 0;
  while (n < idx.size() && acc < theta * total) acc += ind[static_cast<std::size_t>(idx[n++])];
  idx.resize(n);
  return idx;
}

AfemTrace afem_loop(const EllipticProblem& p, const Partition& P0, const AfemOptions& o) {
  if (!(o.theta > 0 && o.theta <= 1)) throw EllipticError("Doerfler parameter must lie in (0,1]");
  AfemTrace tr;
  tr.m = o.m;
  tr.d = o.d < 0 ? default_osc_degree(o.m) : o.d;
  tr.theta = o.theta;
  Partition P = P0;
  for (int it = 0;; ++it) {
    FeSpace V = FeSpace::continuous(P, o.m, p.gamma);
    std::optional<FeFunction> u;
    try {
      u = galerkin_solve(p, V);
    } catch (const SolverError& e) {
      tr.final_partition = P;
      throw AfemError(std::string("AFEM solve failed at iteration ") + std::to_string(it) + ": " + e.what(), tr);
    }
    auto est = estimate(p, *u, tr.d);
    AfemStep s;
    s.iter = it;
    s.N = P.size();
    s.eta = est.eta();
    s.osc = est.osc();
    if (p.u_exact) s.energy_err = std::sqrt(est.energy_err2), s.rho_d = est.rho();
    bool last = it >= o.max_iter || (o.max_elements > 0 && P.size() >= o.max_elements);
    std::vector<int> marked;
    if (!last) marked = dorfler_mark(P, est.element_indicators(), o.theta);
    s.marked = marked.size();
    tr.steps.push_back(s);
    if (last || marked.empty()) break;
    std::vector<int> ids;
    for (int i : marked) ids.push_back(P.cell(static_cast<std::size_t>(i)));
    P = refine(P, ids);
  }
  tr.final_partition = P;
  return tr;
}

void write_afem_csv(std::ostream& os, const AfemTrace& t) {
  os << "iter,N,eta,osc,energy_err,rho_d,theta_D,m,d\n";
  for (const auto& s : t.steps)
    os << s.iter << ',' << s.N << ',' << format_double(s.eta) << ',' << format_double(s.osc) << ','
       << format_double(s.energy_err) << ',' << format_double(s.rho_d) << ',' << format_double(t.theta) << ','
       << t.m << ',' << t.d << '\n';
}

}  // namespace apx
