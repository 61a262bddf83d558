#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "apx/experiment.hpp"
#include "apx/quadrature.hpp"

namespace apx {

namespace {

Partition random_refinement(Partition p, std::mt19937_64& rng, int rounds, unsigned one_in) {
  for (int r = 0; r < rounds; ++r) {
    std::vector<int> marked;
    for (int c : p.cells())
      if (rng() % one_in == 0) marked.push_back(c);
    p = refine(p, marked);
  }
  return p;
}

std::vector<Partition> mesh_corpus(std::mt19937_64& rng) {
  std::vector<Partition> out;
  for (const char* dom : {"unit_square", "l_shape"}) {
    auto n = Partition::initial(make_domain(dom, Rule::nvb));
    out.push_back(random_refinement(uniform_refine(n), rng, 8, 4));
    auto r = Partition::initial(make_domain(dom, Rule::red));
    out.push_back(random_refinement(r, rng, 4, 3));
  }
  return out;
}

FeFunction random_member(const FeSpace& V, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  FeFunction v(V);
  for (int i = 0; i < V.dim(); ++i) v.coef()[i] = U(rng);
  return v;
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

// <dual_z, phi_z'> over all node pairs.
double gram_defect(const FeSpace& V) {
  DualBasis D(V);
  const int n = V.dim(), nb = V.local_size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  const auto& rule = triangle_rule(2 * V.degree() + 2);
  std::vector<double> phi(static_cast<std::size_t>(nb));
  for (int e = 0; e < V.num_elements(); ++e) {
    auto dofs = V.element_dofs(e);
    auto map = V.element_map(e);
    double jac = 2 * V.affine(e).area();
    for (int k = 0; k < nb; ++k) {
      int z = D.carrier(e, k);
      if (z < 0) continue;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        V.basis().values(rule.points[q], phi);
        double eta = D.eta(e, k, rule.points[q]) / D.count(z);
        for (std::size_t j = 0; j < dofs.size(); ++j) {
          double pj = 0;
          for (int l = 0; l < nb; ++l) pj += map[static_cast<std::size_t>(l) * dofs.size() + j] * phi[static_cast<std::size_t>(l)];
          G(V.node_dof(z), dofs[j]) += rule.weights[q] * jac * eta * pj;
        }
      }
    }
  }
  return (G - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
}

Point random_point_in(const Affine& A, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double a = U(rng), b = U(rng);
  if (a + b > 1) a = 1 - a, b = 1 - b;
  return A.map(a, b);
}

// Largest termwise excess of osc^2 over eta^2, relative to the largest eta^2.
double osc_excess(const EstimatorBreakdown& est) {
  double scale = 1e-300, worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < est.elem_eta2.size(); ++i) scale = std::max(scale, est.elem_eta2[i]);
  for (const auto& e : est.edges) scale = std::max(scale, e.eta2);
  for (std::size_t i = 0; i < est.elem_eta2.size(); ++i) worst = std::max(worst, est.elem_osc2[i] - est.elem_eta2[i]);
  for (const auto& e : est.edges) worst = std::max(worst, e.osc2 - e.eta2);
  worst = std::max(worst, est.osc2 - est.eta2);
  return worst / scale;
}

}  // namespace

std::vector<CheckResult> invariant_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double value, double tol) { out.push_back({std::move(name), value <= tol, value, tol}); };

  // mesh engine
  double meas = 0, child_stored = 0, child_geo = 0, conform = 0;
  for (Rule rule : {Rule::nvb, Rule::red})
    for (const char* dom : {"unit_square", "l_shape"}) {
      auto p = Partition::initial(make_domain(dom, rule));
      double A = p.forest().domain_area();
      for (int step = 0; step < 6; ++step) {
        p = random_refinement(p, rng, rule == Rule::nvb ? 2 : 1, 3);
        double geo = 0;
        for (int c : p.cells()) geo += p.forest().affine(c).area();
        meas = std::max({meas, std::abs(p.area() - A) / A, std::abs(geo - A) / A});
        bool ok = rule == Rule::nvb ? is_conforming(p) && is_admissible(p) : is_admissible(p);
        conform += ok ? 0 : 1;
      }
      const Forest& f = p.forest();
      double share = rule == Rule::nvb ? 0.5 : 0.25;
      for (int c = 0; c < f.num_cells(); ++c)
        for (int k : f.children(c)) {
          child_stored = std::max(child_stored, std::abs(f.cell(k).area - share * f.cell(c).area));
          child_geo = std::max(child_geo, std::abs(f.affine(k).area() - share * f.cell(c).area) / f.cell(c).area);
        }
    }
  add("measure_conservation", meas, 1e-12);
  add("child_area_exact", child_stored, 0.0);
  add("child_area_geometric", child_geo, 1e-12);
  add("completion_conformity", conform, 0.0);

  double card = -std::numeric_limits<double>::infinity();
  auto p0 = Partition::initial(make_domain("l_shape", Rule::nvb));
  for (int t = 0; t < 100; ++t) {
    auto a = random_refinement(p0, rng, 1 + t % 5, 4);
    auto b = random_refinement(p0, rng, 1 + (t / 5) % 5, 4);
    auto ab = overlay(a, b);
    card = std::max(card, static_cast<double>(ab.size()) - static_cast<double>(a.size() + b.size()));
    if (!is_conforming(ab)) card = std::max(card, 1.0);
  }
  add("overlay_cardinality", std::max(card, 0.0), 0.0);

  // spaces and quasi-interpolants
  auto corpus = mesh_corpus(rng);
  double gram = 0, pou = 0, rq = 0, rqt = 0;
  for (const auto& P : corpus)
    for (int m = 1; m <= 3; ++m) {
      auto V = FeSpace::continuous(P, m);
      gram = std::max(gram, gram_defect(V));
      FeFunction one(V);
      one.coef().setOnes();
      for (int t = 0; t < 50; ++t) {
        int e = static_cast<int>(rng() % static_cast<std::uint64_t>(V.num_elements()));
        Point x = random_point_in(V.affine(e), rng);
        pou = std::max(pou, std::abs(one.value(e, V.affine(e).inverse(x)) - 1));
      }
      if (m > 2) continue;
      DualBasis D(V);
      auto v = random_member(V, rng);
      auto f = v.field();
      rq = std::max(rq, max_abs_diff(q_interp(D, f).coef(), v.coef()));
      for (double p0e : {2.0, 1.0, 0.5}) rqt = std::max(rqt, max_abs_diff(q_tilde(D, f, p0e).coef(), v.coef()));
    }
  add("biorthogonality", gram, 1e-10);
  add("partition_of_unity", pou, 1e-12);
  add("Q_reproduces_space", rq, 1e-10);
  add("Qtilde_reproduces_space", rqt, 1e-10);

  double pi2 = 0;
  Field s{[](Point p) { return std::sin(3 * p.x) * std::exp(p.y) + std::abs(p.x - 0.4); }, {}, "s"};
  std::uniform_real_distribution<double> U(-1, 1);
  for (int t = 0; t < 20; ++t) {
    Affine A({U(rng), U(rng)}, {U(rng), U(rng)}, {U(rng), U(rng)});
    if (A.area() < 1e-2) continue;
    for (int m = 0; m <= 4; ++m) {
      int order = default_local_order(m);
      auto a = local_poly_approx(s, A, 2.0, m, order).coef;
      auto b = project_poly_element(s, A, m, order);
      for (std::size_t i = 0; i < a.size(); ++i) pi2 = std::max(pi2, std::abs(a[i] - b[i]));
    }
  }
  add("Pi2_is_L2_projection", pi2, 1e-10);

  // estimator
  double osc = -std::numeric_limits<double>::infinity();
  for (const auto& entry : problem_list()) {
    auto P = Partition::initial(make_domain(entry.domain, Rule::nvb));
    auto prob = entry.make(P.forest());
    P = random_refinement(uniform_refine(P), rng, 3, 3);
    for (int m = 1; m <= 3; ++m) {
      auto V = FeSpace::continuous(P, m, prob.gamma);
      auto u = galerkin_solve(prob, V);
      for (int d = default_osc_degree(m); d <= default_osc_degree(m) + 1; ++d) osc = std::max(osc, osc_excess(estimate(prob, u, d)));
    }
    auto tr = afem_loop(prob, Partition::initial(make_domain(entry.domain, Rule::nvb)), {.m = 1, .max_iter = 8});
    for (const auto& st : tr.steps) osc = std::max(osc, (st.osc - st.eta) / std::max(st.eta, 1e-300));
  }
  add("osc_le_eta", std::max(osc, 0.0), 1e-12);
  return out;
}

void write_check_csv(std::ostream& os, std::span<const CheckResult> r) {
  os << "check,passed,value,tolerance\n";
  for (const auto& c : r) os << c.name << ',' << (c.passed ? 1 : 0) << ',' << format_double(c.value) << ',' << format_double(c.tolerance) << '\n';
}

}  // namespace apx
