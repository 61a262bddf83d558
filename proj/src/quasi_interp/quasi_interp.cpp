#include "apx/quasi_interp.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <map>

#include "apx/parallel.hpp"
#include "apx/quadrature.hpp"

namespace apx {

Eigen::VectorXd solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b, double tol) {
  if (A.rows() == 0) return Eigen::VectorXd();
  if (A.rows() <= 50000) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd x = ldlt.solve(b);
      if (ldlt.info() == Eigen::Success && x.allFinite()) return x;
    }
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * A.rows()));
  cg.compute(A);
  if (cg.info() != Eigen::Success) throw FeError("preconditioner setup failed");
  Eigen::VectorXd x = cg.solve(b);
  if (cg.info() != Eigen::Success)
    throw FeError("conjugate gradients did not converge (relative residual " + std::to_string(cg.error()) + ")");
  return x;
}

// ---------------------------------------------------------------- dual basis

DualBasis::DualBasis(const FeSpace& V) : V_(V) {
  if (V.kind() != SpaceKind::continuous) throw FeError("dual basis needs a continuous space");
  const NodalSet& ns = V.nodes();
  const int nb = V.local_size();
  carrier_.assign(static_cast<std::size_t>(V.num_elements() * nb), -1);
  n_.assign(static_cast<std::size_t>(ns.size()), 0);
  for (int e = 0; e < V.num_elements(); ++e)
    for (int k = 0; k < nb; ++k) {
      auto refs = ns.local(e, k);
      if (refs.size() == 1 && refs[0].w == 1.0) {
        carrier_[static_cast<std::size_t>(e * nb + k)] = refs[0].dof;
        ++n_[static_cast<std::size_t>(refs[0].dof)];
      }
    }
}

double DualBasis::eta(int e, int k, Point r) const {
  const auto& B = V_.basis();
  std::vector<double> v(static_cast<std::size_t>(B.size()));
  B.values(r, v);
  double s = 0;
  for (int l = 0; l < B.size(); ++l) s += B.mass_inverse()(k, l) * v[static_cast<std::size_t>(l)];
  return s / (2.0 * V_.affine(e).area());
}

namespace {

// Assemble coefficients c_node = (1/n_z) sum over carrying elements of local[e][k].
FeFunction average_into(const DualBasis& D, const std::vector<std::vector<double>>& local) {
  const FeSpace& V = D.space();
  FeFunction out(V);
  const int nb = V.local_size();
  for (int e = 0; e < V.num_elements(); ++e)
    for (int k = 0; k < nb; ++k) {
      int z = D.carrier(e, k);
      if (z < 0) continue;
      int g = V.node_dof(z);
      if (g < 0) continue;
      out.coef()[g] += local[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)] / D.count(z);
    }
  return out;
}

}  // namespace

FeFunction q_interp(const DualBasis& D, const Field& u, int quad_order) {
  const FeSpace& V = D.space();
  int order = quad_order < 0 ? default_quad_order(V.degree()) : quad_order;
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  const auto& Minv = V.basis().mass_inverse();
  std::vector<std::vector<double>> local(static_cast<std::size_t>(V.num_elements()));
  parallel_for(local.size(), [&](std::size_t e) {
    const Affine& A = V.affine(static_cast<int>(e));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(tab.nb);
    for (int q = 0; q < tab.nq; ++q) {
      double uq = u(A.map(rule.points[static_cast<std::size_t>(q)]));
      for (int l = 0; l < tab.nb; ++l) b[l] += rule.weights[static_cast<std::size_t>(q)] * uq * tab.value(q, l);
    }
    Eigen::VectorXd c = Minv * b;
    local[e].assign(c.data(), c.data() + c.size());
  });
  return average_into(D, local);
}

FeFunction q_interp(const FeSpace& V, const Field& u, int quad_order) { return q_interp(DualBasis(V), u, quad_order); }

// ---------------------------------------------------------------- Pi_{p0,tau}

LocalApprox local_poly_approx_values(std::span<const double> uq, double area, double p0, int m, int quad_order) {
  if (!(p0 > 0) || std::isinf(p0)) throw FeError("local exponent p0 must be positive and finite");
  const auto& rule = triangle_rule(quad_order);
  const auto& tab = tabulate(m, quad_order);
  const int nq = tab.nq, nb = tab.nb;
  Eigen::Map<const Eigen::VectorXd> u(uq.data(), nq);
  Eigen::MatrixXd Phi(nq, nb);
  Eigen::VectorXd w(nq);
  for (int q = 0; q < nq; ++q) {
    w[q] = rule.weights[static_cast<std::size_t>(q)] * 2.0 * area;
    for (int k = 0; k < nb; ++k) Phi(q, k) = tab.value(q, k);
  }
  LocalApprox out;
  Eigen::VectorXd c = lagrange(m).mass_inverse() * (Phi.transpose() * (w.cwiseProduct(u) / (2.0 * area)));
  auto objective = [&](const Eigen::VectorXd& cc) {
    Eigen::VectorXd r = (u - Phi * cc).cwiseAbs();
    double s = 0;
    for (int q = 0; q < nq; ++q) s += w[q] * std::pow(r[q], p0);
    return s;
  };
  if (p0 == 2.0) {
    out.coef.assign(c.data(), c.data() + nb);
    out.residual = std::sqrt(objective(c));
    return out;
  }
  double scale = u.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    out.coef.assign(static_cast<std::size_t>(nb), 0.0);
    return out;
  }
  const double eps = 1e-8 * scale;
  double J = objective(c);
  out.converged = false;
  for (int it = 1; it <= 50; ++it) {
    out.iterations = it;
    Eigen::VectorXd r = (u - Phi * c).cwiseAbs();
    Eigen::VectorXd sw(nq);
    for (int q = 0; q < nq; ++q) sw[q] = std::sqrt(w[q] * std::pow(r[q] + eps, p0 - 2.0));
    Eigen::VectorXd cn = (sw.asDiagonal() * Phi).colPivHouseholderQr().solve(sw.cwiseProduct(u));
    // damped step: halve until the L^p0 objective decreases
    double t = 1.0, Jn = J;
    Eigen::VectorXd trial = c;
    for (int h = 0; h < 12; ++h, t *= 0.5) {
      trial = c + t * (cn - c);
      Jn = objective(trial);
      if (Jn < J) break;
    }
    if (!(Jn < J)) {
      out.converged = true;
      break;
    }
    double drop = J - Jn;
    c = trial;
    J = Jn;
    if (drop <= 1e-10 * J) {
      out.converged = true;
      break;
    }
  }
  out.coef.assign(c.data(), c.data() + nb);
  out.residual = std::pow(J, 1.0 / p0);
  return out;
}

LocalApprox local_poly_approx(const Field& u, const Affine& A, double p0, int m, int quad_order) {
  int order = quad_order < 0 ? default_local_order(m) : quad_order;
  const auto& rule = triangle_rule(order);
  std::vector<double> uq(rule.points.size());
  for (std::size_t q = 0; q < uq.size(); ++q) uq[q] = u(A.map(rule.points[q]));
  return local_poly_approx_values(uq, A.area(), p0, m, order);
}

FeFunction q_tilde(const DualBasis& D, const Field& u, double p0, int quad_order) {
  const FeSpace& V = D.space();
  int order = quad_order < 0 ? default_local_order(V.degree()) : quad_order;
  std::vector<std::vector<double>> local(static_cast<std::size_t>(V.num_elements()));
  parallel_for(local.size(), [&](std::size_t e) {
    local[e] = local_poly_approx(u, V.affine(static_cast<int>(e)), p0, V.degree(), order).coef;
  }, 16);
  return average_into(D, local);
}

FeFunction q_tilde(const FeSpace& V, const Field& u, double p0, int quad_order) {
  return q_tilde(DualBasis(V), u, p0, quad_order);
}

// ---------------------------------------------------------------- Scott-Zhang

namespace {

double lagrange1d(int m, int i, double t) {
  double r = 1.0;
  for (int l = 0; l <= m; ++l)
    if (l != i) r *= (t * m - l) / static_cast<double>(i - l);
  return r;
}

}  // namespace

FeFunction scott_zhang(const FeSpace& V, const Field& u, int quad_order) {
  if (V.kind() != SpaceKind::continuous) throw FeError("Scott-Zhang needs a continuous space");
  if (!u.has_gradient()) throw FieldError("field '" + u.name + "' lacks a gradient evaluator");
  const NodalSet& ns = V.nodes();
  const Topology& topo = V.partition().topology();
  const Forest& f = V.partition().forest();
  const int m = V.degree(), nb = V.local_size();
  const auto& lat = V.basis().lattice_points();
  DualBasis D(V);

  // candidate functional per node: (priority, edge-or-element index, element, local point)
  struct Choice {
    int rank = 3, index = 0, e = -1, k = -1, slot = -1;
  };
  std::vector<Choice> pick(static_cast<std::size_t>(ns.size()));
  for (int e = 0; e < V.num_elements(); ++e)
    for (int k = 0; k < nb; ++k) {
      int z = D.carrier(e, k);
      if (z < 0 || V.node_dof(z) < 0) continue;
      std::array<int, 3> b{lat[static_cast<std::size_t>(k)].b0, lat[static_cast<std::size_t>(k)].b1, lat[static_cast<std::size_t>(k)].b2};
      auto& ch = pick[static_cast<std::size_t>(z)];
      for (int s = 0; s < 3; ++s) {
        if (b[static_cast<std::size_t>(s)] != 0) continue;
        int te = topo.elem_edge[static_cast<std::size_t>(e)][static_cast<std::size_t>(s)];
        const auto& E = topo.edges[static_cast<std::size_t>(te)];
        int rank = E.boundary >= 0 ? 1 : 0;
        if (std::pair{rank, te} < std::pair{ch.rank, ch.index}) ch = {rank, te, e, k, s};
      }
      bool interior = b[0] > 0 && b[1] > 0 && b[2] > 0;
      if (interior && std::pair{2, e} < std::pair{ch.rank, ch.index}) ch = {2, e, e, k, -1};
    }

  int order = quad_order < 0 ? default_quad_order(m) : quad_order;
  const auto& line = line_rule(order);
  Eigen::MatrixXd M1 = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (std::size_t q = 0; q < line.points.size(); ++q)
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) M1(i, j) += line.weights[q] * lagrange1d(m, i, line.points[q]) * lagrange1d(m, j, line.points[q]);
  Eigen::MatrixXd M1inv = M1.inverse();
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(m, order);

  FeFunction out(V);
  for (int z = 0; z < ns.size(); ++z) {
    int g = V.node_dof(z);
    if (g < 0) continue;
    const Choice& ch = pick[static_cast<std::size_t>(z)];
    if (ch.e < 0) throw FeError("no Scott-Zhang functional for a node");
    double val = 0;
    if (ch.slot >= 0) {
      const Cell& c = f.cell(V.partition().cell(static_cast<std::size_t>(ch.e)));
      Point a = f.vertex(c.v[static_cast<std::size_t>((ch.slot + 1) % 3)]);
      Point b = f.vertex(c.v[static_cast<std::size_t>((ch.slot + 2) % 3)]);
      const auto& lp = lat[static_cast<std::size_t>(ch.k)];
      std::array<int, 3> bb{lp.b0, lp.b1, lp.b2};
      int i = bb[static_cast<std::size_t>((ch.slot + 2) % 3)];
      for (std::size_t q = 0; q < line.points.size(); ++q) {
        double s = line.points[q];
        double uq = u(a + s * (b - a));
        for (int j = 0; j <= m; ++j) val += M1inv(i, j) * line.weights[q] * uq * lagrange1d(m, j, s);
      }
    } else {
      const Affine& A = V.affine(ch.e);
      const auto& Minv = V.basis().mass_inverse();
      for (int q = 0; q < tab.nq; ++q) {
        double uq = u(A.map(rule.points[static_cast<std::size_t>(q)]));
        for (int l = 0; l < tab.nb; ++l) val += Minv(ch.k, l) * rule.weights[static_cast<std::size_t>(q)] * uq * tab.value(q, l);
      }
    }
    out.coef()[g] = val;
  }
  return out;
}

// ---------------------------------------------------------------- best approximation

FeFunction l2_projection(const FeSpace& V, const Field& u, std::span<const int> G, int quad_order) {
  int order = quad_order < 0 ? default_quad_order(V.degree()) : quad_order;
  if (G.empty()) {
    SparseMatrix M = assemble_gram(V, mass_form());
    return FeFunction(V, solve_spd(M, assemble_load(V, u, order)));
  }
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  const auto& Mref = V.basis().mass();
  std::map<int, int> idx;
  for (int e : G)
    for (int g : V.element_dofs(e)) idx.emplace(g, 0);
  int n = 0;
  for (auto& [g, i] : idx) i = n++;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int e : G) {
    const Affine& A = V.affine(e);
    auto dofs = V.element_dofs(e);
    auto map = V.element_map(e);
    auto nd = static_cast<Eigen::Index>(dofs.size());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> C(map.data(), tab.nb, nd);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(tab.nb);
    for (int q = 0; q < tab.nq; ++q) {
      double uq = u(A.map(rule.points[static_cast<std::size_t>(q)]));
      for (int k = 0; k < tab.nb; ++k) b[k] += rule.weights[static_cast<std::size_t>(q)] * uq * tab.value(q, k);
    }
    double jac = 2.0 * A.area();
    Eigen::MatrixXd Me = jac * (C.transpose() * Mref * C);
    Eigen::VectorXd be = jac * (C.transpose() * b);
    for (Eigen::Index i = 0; i < nd; ++i) {
      int gi = idx[dofs[static_cast<std::size_t>(i)]];
      rhs[gi] += be[i];
      for (Eigen::Index j = 0; j < nd; ++j) trip.emplace_back(gi, idx[dofs[static_cast<std::size_t>(j)]], Me(i, j));
    }
  }
  SparseMatrix M(n, n);
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd x = solve_spd(M, rhs);
  FeFunction out(V);
  for (auto [g, i] : idx) out.coef()[g] = x[i];
  return out;
}

FeFunction h1_projection(const FeSpace& V, const Field& u, int quad_order) {
  SparseMatrix A = assemble_gram(V, h1_form(), quad_order);
  return FeFunction(V, solve_spd(A, assemble_h1_load(V, u, quad_order)));
}

BestApprox best_approx_error(const Field& u, const FeSpace& V, double p, std::span<const int> G, double p0,
                             int quad_order) {
  if (V.num_elements() == 0) throw FeError("empty element set");
  std::vector<int> all;
  if (G.empty()) {
    all.resize(static_cast<std::size_t>(V.num_elements()));
    for (int e = 0; e < V.num_elements(); ++e) all[static_cast<std::size_t>(e)] = e;
  }
  std::span<const int> elems = G.empty() ? std::span<const int>(all) : G;
  int order = quad_order < 0 ? default_quad_order(V.degree()) : quad_order;
  BestApprox r;
  if (p == 2.0) {
    auto v = l2_projection(V, u, G, order);
    r.error = lp_distance(u, v, 2.0, elems, order);
    return r;
  }
  r.surrogate = true;
  if (V.kind() == SpaceKind::continuous) {
    r.p0 = p0 > 0 ? p0 : default_p0(p);
    auto v = q_tilde(V, u, r.p0);
    r.error = lp_distance(u, v, p, elems, order);
    return r;
  }
  r.p0 = std::isinf(p) ? 2.0 : p;
  std::vector<double> pw(elems.size());
  int lorder = default_local_order(V.degree());
  parallel_for(elems.size(), [&](std::size_t i) {
    const Affine& A = V.affine(elems[i]);
    auto loc = local_poly_approx(u, A, r.p0, V.degree(), lorder);
    const auto& rule = triangle_rule(order);
    double acc = 0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double d = std::abs(u(A.map(rule.points[q])) - lagrange(V.degree()).eval(loc.coef, rule.points[q]));
      if (std::isinf(p)) acc = std::max(acc, d);
      else acc += rule.weights[q] * 2.0 * A.area() * std::pow(d, p);
    }
    pw[i] = acc;
  }, 16);
  r.error = aggregate(pw, p);
  return r;
}

}  // namespace apx
