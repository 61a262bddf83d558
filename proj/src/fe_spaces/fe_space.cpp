#include "apx/fe_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "apx/quadrature.hpp"

namespace apx {

std::vector<int> whole_boundary(const Forest& f) {
  std::vector<int> g(static_cast<std::size_t>(f.num_boundary_segments()));
  for (int i = 0; i < f.num_boundary_segments(); ++i) g[static_cast<std::size_t>(i)] = i;
  return g;
}

FeSpace FeSpace::continuous(Partition p, int m, std::vector<int> gamma) {
  if (m < 1 || m > 4) throw FeError("Lagrange degree must be in 1..4");
  auto d = std::make_shared<Data>(std::move(p));
  d->kind = SpaceKind::continuous;
  d->m = m;
  d->nb = lattice_size(m);
  auto ns = std::make_shared<NodalSet>(build_nodal_set(d->part, m));
  std::sort(gamma.begin(), gamma.end());
  gamma.erase(std::unique(gamma.begin(), gamma.end()), gamma.end());
  d->gamma = gamma;
  d->node_dof.assign(static_cast<std::size_t>(ns->size()), -1);
  for (int z = 0; z < ns->size(); ++z) {
    bool masked = false;
    for (int s : ns->boundary_segments(z))
      if (s >= 0 && std::binary_search(gamma.begin(), gamma.end(), s)) masked = true;
    if (!masked) {
      d->node_dof[static_cast<std::size_t>(z)] = d->ndof++;
      d->dof_node.push_back(z);
    }
  }
  const auto ne = d->part.size();
  d->estart.assign(ne + 1, 0);
  d->mstart.assign(ne + 1, 0);
  d->aff.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    d->aff[e] = d->part.forest().affine(d->part.cell(e));
    std::vector<int> dofs;
    for (int z : ns->element_nodes(static_cast<int>(e)))
      if (int g = d->node_dof[static_cast<std::size_t>(z)]; g >= 0) dofs.push_back(g);
    std::sort(dofs.begin(), dofs.end());
    std::vector<double> map(static_cast<std::size_t>(d->nb) * dofs.size(), 0.0);
    for (int k = 0; k < d->nb; ++k)
      for (const auto& r : ns->local(static_cast<int>(e), k)) {
        int g = d->node_dof[static_cast<std::size_t>(r.dof)];
        if (g < 0) continue;
        auto col = static_cast<std::size_t>(std::lower_bound(dofs.begin(), dofs.end(), g) - dofs.begin());
        map[static_cast<std::size_t>(k) * dofs.size() + col] += r.w;
      }
    d->edofs.insert(d->edofs.end(), dofs.begin(), dofs.end());
    d->emap.insert(d->emap.end(), map.begin(), map.end());
    d->estart[e + 1] = static_cast<int>(d->edofs.size());
    d->mstart[e + 1] = static_cast<int>(d->emap.size());
  }
  d->ns = std::move(ns);
  return FeSpace(std::move(d));
}

FeSpace FeSpace::discontinuous(Partition p, int deg) {
  if (deg < 0 || deg > 4) throw FeError("broken polynomial degree must be in 0..4");
  auto d = std::make_shared<Data>(std::move(p));
  d->kind = SpaceKind::discontinuous;
  d->m = deg;
  d->nb = lattice_size(deg);
  const auto ne = d->part.size();
  d->ndof = static_cast<int>(ne) * d->nb;
  d->estart.assign(ne + 1, 0);
  d->mstart.assign(ne + 1, 0);
  d->aff.resize(ne);
  auto nb = static_cast<std::size_t>(d->nb);
  for (std::size_t e = 0; e < ne; ++e) {
    d->aff[e] = d->part.forest().affine(d->part.cell(e));
    for (std::size_t k = 0; k < nb; ++k) {
      d->edofs.push_back(static_cast<int>(e * nb + k));
      for (std::size_t j = 0; j < nb; ++j) d->emap.push_back(j == k ? 1.0 : 0.0);
    }
    d->estart[e + 1] = static_cast<int>(d->edofs.size());
    d->mstart[e + 1] = static_cast<int>(d->emap.size());
  }
  return FeSpace(std::move(d));
}

const NodalSet& FeSpace::nodes() const {
  if (!d_->ns) throw FeError("broken space has no nodal set");
  return *d_->ns;
}

namespace {

double min_bary(const Affine& A, Point x) {
  Point r = A.inverse(x);
  return std::min({r.x, r.y, 1.0 - r.x - r.y});
}

}  // namespace

int FeSpace::locate(Point x) const {
  const Forest& f = d_->part.forest();
  int c = f.locate_root(x);
  if (c < 0) return -1;
  for (;;) {
    int e = d_->part.index_of(c);
    if (e >= 0) return e;
    if (f.cell(c).nchild == 0) return -1;
    int best = -1;
    double bv = -std::numeric_limits<double>::infinity();
    for (int k : f.children(c)) {
      double b = min_bary(f.affine(k), x);
      if (b > bv) bv = b, best = k;
    }
    c = best;
  }
}

FeFunction::FeFunction(FeSpace V, Eigen::VectorXd coef) : V_(std::move(V)), c_(std::move(coef)) {
  if (c_.size() != V_.dim()) throw FeError("coefficient vector does not match the space dimension");
}

FeFunction::FeFunction(FeSpace V) : V_(std::move(V)), c_(Eigen::VectorXd::Zero(V_.dim())) {}

void FeFunction::local(int e, std::span<double> out) const {
  auto dofs = V_.element_dofs(e);
  auto map = V_.element_map(e);
  const std::size_t nd = dofs.size();
  for (std::size_t k = 0; k < static_cast<std::size_t>(V_.local_size()); ++k) {
    double s = 0;
    for (std::size_t j = 0; j < nd; ++j) s += map[k * nd + j] * c_[dofs[j]];
    out[k] = s;
  }
}

std::vector<double> FeFunction::local(int e) const {
  std::vector<double> v(static_cast<std::size_t>(V_.local_size()));
  local(e, v);
  return v;
}

double FeFunction::value(int e, Point ref) const {
  std::array<double, 64> buf{};
  std::span<double> c(buf.data(), static_cast<std::size_t>(V_.local_size()));
  local(e, c);
  return V_.basis().eval(c, ref);
}

Point FeFunction::gradient(int e, Point ref) const {
  std::array<double, 64> buf{};
  std::span<double> c(buf.data(), static_cast<std::size_t>(V_.local_size()));
  local(e, c);
  return V_.affine(e).grad(V_.basis().eval_gradient(c, ref));
}

double FeFunction::operator()(Point x) const {
  int e = V_.locate(x);
  if (e < 0) throw FieldError("point outside the domain");
  return value(e, V_.affine(e).inverse(x));
}

Point FeFunction::gradient(Point x) const {
  int e = V_.locate(x);
  if (e < 0) throw FieldError("point outside the domain");
  return gradient(e, V_.affine(e).inverse(x));
}

Field FeFunction::field(std::string name) const {
  auto self = std::make_shared<FeFunction>(*this);
  Field f;
  f.name = std::move(name);
  f.value = [self](Point x) { return (*self)(x); };
  f.gradient = [self](Point x) { return self->gradient(x); };
  return f;
}

FeFunction interpolate(const FeSpace& V, const Field& u) {
  FeFunction v(V);
  if (V.kind() == SpaceKind::continuous) {
    const NodalSet& ns = V.nodes();
    for (int g = 0; g < V.dim(); ++g) v.coef()[g] = u(ns.point(V.dof_node(g)));
  } else {
    const auto& B = V.basis();
    for (int e = 0; e < V.num_elements(); ++e)
      for (int k = 0; k < B.size(); ++k) v.coef()[e * B.size() + k] = u(V.affine(e).map(B.node(k)));
  }
  return v;
}

// ---------------------------------------------------------------- norms

double aggregate(std::span<const double> powers, double p) {
  if (std::isinf(p)) {
    double m = 0;
    for (double x : powers) m = std::max(m, x);
    return m;
  }
  double s = 0;
  for (double x : powers) s += x;
  return std::pow(s, 1.0 / p);
}

namespace {

std::vector<int> all_or(std::span<const int> elems, int n) {
  if (!elems.empty()) return {elems.begin(), elems.end()};
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  return all;
}

}  // namespace

std::vector<double> element_lp_pow(const Field& u, const FeFunction& v, double p, std::span<const int> elems,
                                   int quad_order) {
  const FeSpace& V = v.space();
  int order = quad_order < 0 ? default_quad_order(V.degree()) : quad_order;
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  auto list = all_or(elems, V.num_elements());
  std::vector<double> out(list.size());
  std::vector<double> c(static_cast<std::size_t>(V.local_size()));
  for (std::size_t i = 0; i < list.size(); ++i) {
    int e = list[i];
    v.local(e, c);
    const Affine& A = V.affine(e);
    double acc = 0, jac = 2.0 * A.area();
    for (int q = 0; q < tab.nq; ++q) {
      double vh = 0;
      for (int k = 0; k < tab.nb; ++k) vh += c[static_cast<std::size_t>(k)] * tab.value(q, k);
      double r = std::abs(u(A.map(rule.points[static_cast<std::size_t>(q)])) - vh);
      if (std::isinf(p)) acc = std::max(acc, r);
      else acc += rule.weights[static_cast<std::size_t>(q)] * jac * std::pow(r, p);
    }
    out[i] = acc;
  }
  return out;
}

std::vector<double> element_h1_sq(const Field& u, const FeFunction& v, std::span<const int> elems, int quad_order) {
  const FeSpace& V = v.space();
  int order = quad_order < 0 ? default_quad_order(V.degree()) : quad_order;
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  auto list = all_or(elems, V.num_elements());
  std::vector<double> out(list.size());
  std::vector<double> c(static_cast<std::size_t>(V.local_size()));
  for (std::size_t i = 0; i < list.size(); ++i) {
    int e = list[i];
    v.local(e, c);
    const Affine& A = V.affine(e);
    double acc = 0, jac = 2.0 * A.area();
    for (int q = 0; q < tab.nq; ++q) {
      double vh = 0;
      Point gr{};
      for (int k = 0; k < tab.nb; ++k) {
        vh += c[static_cast<std::size_t>(k)] * tab.value(q, k);
        gr = gr + c[static_cast<std::size_t>(k)] * tab.grad(q, k);
      }
      Point x = A.map(rule.points[static_cast<std::size_t>(q)]);
      double r = u(x) - vh;
      Point g = u.grad(x) - A.grad(gr);
      acc += rule.weights[static_cast<std::size_t>(q)] * jac * (r * r + dot(g, g));
    }
    out[i] = acc;
  }
  return out;
}

double lp_distance(const Field& u, const FeFunction& v, double p, std::span<const int> elems, int quad_order) {
  return aggregate(element_lp_pow(u, v, p, elems, quad_order), p);
}

double h1_distance(const Field& u, const FeFunction& v, std::span<const int> elems, int quad_order) {
  return aggregate(element_h1_sq(u, v, elems, quad_order), 2.0);
}

double lp_norm(const Field& u, const Partition& P, double p, std::span<const int> elems, int quad_order) {
  const auto& rule = triangle_rule(quad_order);
  auto list = all_or(elems, static_cast<int>(P.size()));
  std::vector<double> pw(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    Affine A = P.forest().affine(P.cell(static_cast<std::size_t>(list[i])));
    double acc = 0, jac = 2.0 * A.area();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double r = std::abs(u(A.map(rule.points[q])));
      if (std::isinf(p)) acc = std::max(acc, r);
      else acc += rule.weights[q] * jac * std::pow(r, p);
    }
    pw[i] = acc;
  }
  return aggregate(pw, p);
}

}  // namespace apx
