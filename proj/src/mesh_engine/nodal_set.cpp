#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "apx/nodal_set.hpp"

namespace apx {

std::vector<LatticePoint> lattice(int m) {
  std::vector<LatticePoint> out;
  out.reserve(static_cast<std::size_t>(lattice_size(m)));
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i + j <= m; ++i) out.push_back({m - i - j, i, j});
  return out;
}

namespace {

struct Frac {
  std::int64_t num, den;
  static Frac make(std::int64_t n, std::int64_t d) {
    auto g = std::gcd(n < 0 ? -n : n, d);
    if (g == 0) g = 1;
    return {n / g, d / g};
  }
  bool zero() const { return num == 0; }
  bool one() const { return num == den; }
  bool half() const { return 2 * num == den; }
  bool below_half() const { return 2 * num < den; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct Key {
  int kind;  // 0 vertex, 1 edge interior, 2 element interior
  std::int64_t a, b, c;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.kind) * 0x9e3779b97f4a7c15ull;
    for (auto x : {k.a, k.b, k.c}) {
      h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

Key vertex_key(int v) { return {0, v, 0, 0}; }

bool edge_has(std::uint64_t e, int v) { return edge_lo(e) == v || edge_hi(e) == v; }
int edge_other(std::uint64_t e, int v) { return edge_lo(e) == v ? edge_hi(e) : edge_lo(e); }

// Canonical identity of the point a + t (b - a): a vertex if one sits there,
// otherwise the finest existing forest edge containing it in its interior.
Key point_on_edge(const Forest& f, int a, int b, Frac t) {
  for (;;) {
    if (t.zero()) return vertex_key(a);
    if (t.one()) return vertex_key(b);
    auto pb = f.parent_edge(b);
    if (pb && edge_has(*pb, a)) {
      b = edge_other(*pb, a);
      t = Frac::make(t.num, 2 * t.den);
      continue;
    }
    auto pa = f.parent_edge(a);
    if (pa && edge_has(*pa, b)) {
      a = edge_other(*pa, b);
      t = Frac::make(t.den + t.num, 2 * t.den);
      continue;
    }
    break;
  }
  for (;;) {
    if (a > b) {
      std::swap(a, b);
      t = Frac::make(t.den - t.num, t.den);
    }
    if (t.zero()) return vertex_key(a);
    if (t.one()) return vertex_key(b);
    int m = f.midpoint(a, b);
    if (m < 0) return {1, static_cast<std::int64_t>(edge_key(a, b)), t.num, t.den};
    if (t.half()) return vertex_key(m);
    if (t.below_half()) {
      b = m;
      t = Frac::make(2 * t.num, t.den);
    } else {
      a = m;
      t = Frac::make(2 * t.num - t.den, t.den);
    }
  }
}

Key local_key(const Forest& f, int cell, const Cell& c, int k, LatticePoint lp, int m) {
  std::array<int, 3> b{lp.b0, lp.b1, lp.b2};
  for (int s = 0; s < 3; ++s)
    if (b[static_cast<std::size_t>(s)] == m) return vertex_key(c.v[static_cast<std::size_t>(s)]);
  for (int s = 0; s < 3; ++s) {
    if (b[static_cast<std::size_t>(s)] != 0) continue;
    auto s1 = static_cast<std::size_t>((s + 1) % 3), s2 = static_cast<std::size_t>((s + 2) % 3);
    return point_on_edge(f, c.v[s1], c.v[s2], Frac::make(b[s2], m));
  }
  return {2, cell, k, 0};
}

double lagrange1d(int m, int i, double t) {
  double r = 1.0;
  for (int l = 0; l <= m; ++l)
    if (l != i) r *= (t * m - l) / static_cast<double>(i - l);
  return r;
}

}  // namespace

NodalSet build_nodal_set(const Partition& p, int m) {
  if (m < 1) throw MeshError("Lagrange degree must be at least 1");
  const Forest& f = p.forest();
  const Topology& topo = p.topology();
  NodalSet ns;
  ns.m_ = m;
  ns.npts_ = lattice_size(m);
  ns.nelem_ = static_cast<int>(p.size());
  const auto lat = lattice(m);
  const std::size_t npts = lat.size();

  std::unordered_map<Key, int, KeyHash> cand;
  std::vector<Key> keys;
  std::vector<Point> cpts;
  std::vector<int> cand_of(p.size() * npts);
  cand.reserve(p.size() * npts);
  for (std::size_t e = 0; e < p.size(); ++e) {
    int id = p.cell(e);
    const Cell& c = f.cell(id);
    Affine A = f.affine(id);
    for (std::size_t k = 0; k < npts; ++k) {
      Key key = local_key(f, id, c, static_cast<int>(k), lat[k], m);
      auto [it, fresh] = cand.try_emplace(key, static_cast<int>(keys.size()));
      if (fresh) {
        keys.push_back(key);
        cpts.push_back(A.map(static_cast<double>(lat[k].b1) / m, static_cast<double>(lat[k].b2) / m));
      }
      cand_of[e * npts + k] = it->second;
    }
  }

  // Hanging points: Lagrange points of fine elements on a split coarse edge
  // that are not Lagrange points of the coarse element.
  std::vector<std::vector<std::pair<int, double>>> constraint(keys.size());
  std::vector<char> constrained(keys.size(), 0);
  for (const auto& te : topo.edges) {
    if (!te.split) continue;
    auto e = static_cast<std::size_t>(te.elem[0]);
    int s = te.slot[0];
    const Cell& c = f.cell(p.cell(e));
    int pa = c.v[static_cast<std::size_t>((s + 1) % 3)], pb = c.v[static_cast<std::size_t>((s + 2) % 3)];
    // local indices of the coarse edge points, ordered from pa to pb
    std::vector<int> masters(static_cast<std::size_t>(m + 1), -1);
    for (std::size_t k = 0; k < npts; ++k) {
      std::array<int, 3> b{lat[k].b0, lat[k].b1, lat[k].b2};
      if (b[static_cast<std::size_t>(s)] != 0) continue;
      masters[static_cast<std::size_t>(b[static_cast<std::size_t>((s + 2) % 3)])] = cand_of[e * npts + k];
    }
    for (int j = 1; j < 2 * m; j += 2) {
      Key key = point_on_edge(f, pa, pb, Frac::make(j, 2 * m));
      auto it = cand.find(key);
      if (it == cand.end()) continue;
      double t = static_cast<double>(j) / (2.0 * m);
      auto& row = constraint[static_cast<std::size_t>(it->second)];
      row.clear();
      for (int i = 0; i <= m; ++i) row.emplace_back(masters[static_cast<std::size_t>(i)], lagrange1d(m, i, t));
      constrained[static_cast<std::size_t>(it->second)] = 1;
    }
  }

  // Resolve chains (masters that are themselves constrained).
  std::vector<std::vector<std::pair<int, double>>> resolved(keys.size());
  std::vector<char> state(keys.size(), 0);
  auto resolve = [&](auto&& self, int cidx) -> const std::vector<std::pair<int, double>>& {
    auto ci = static_cast<std::size_t>(cidx);
    if (state[ci] == 2) return resolved[ci];
    if (state[ci] == 1) throw MeshError("cyclic hanging-node constraints");
    state[ci] = 1;
    std::map<int, double> acc;
    for (auto [mi, w] : constraint[ci]) {
      if (!constrained[static_cast<std::size_t>(mi)]) {
        acc[mi] += w;
      } else {
        for (auto [mj, wj] : self(self, mi)) acc[mj] += w * wj;
      }
    }
    for (auto [k, w] : acc)
      if (w != 0.0) resolved[ci].emplace_back(k, w);
    state[ci] = 2;
    return resolved[ci];
  };

  std::vector<int> dof(keys.size(), -1);
  int ndof = 0;
  for (std::size_t i = 0; i < cand_of.size(); ++i) {
    int ci = cand_of[i];
    if (constrained[static_cast<std::size_t>(ci)] || dof[static_cast<std::size_t>(ci)] >= 0) continue;
    dof[static_cast<std::size_t>(ci)] = ndof++;
    ns.points_.push_back(cpts[static_cast<std::size_t>(ci)]);
    const Key& k = keys[static_cast<std::size_t>(ci)];
    std::array<int, 2> bs{-1, -1};
    if (k.kind == 0) bs = f.boundary_segments_of_vertex(static_cast<int>(k.a));
    else if (k.kind == 1)
      bs[0] = f.boundary_segment_of_edge(edge_lo(static_cast<std::uint64_t>(k.a)), edge_hi(static_cast<std::uint64_t>(k.a)));
    ns.bsegs_.push_back(bs);
  }
  for (std::size_t ci = 0; ci < keys.size(); ++ci) ns.nconstrained_ += constrained[ci];

  ns.start_.assign(cand_of.size() + 1, 0);
  for (std::size_t i = 0; i < cand_of.size(); ++i) {
    int ci = cand_of[i];
    if (!constrained[static_cast<std::size_t>(ci)]) {
      ns.refs_.push_back({dof[static_cast<std::size_t>(ci)], 1.0});
    } else {
      for (auto [mi, w] : resolve(resolve, ci)) ns.refs_.push_back({dof[static_cast<std::size_t>(mi)], w});
    }
    ns.start_[i + 1] = static_cast<int>(ns.refs_.size());
  }

  // element nodes and supports
  ns.estart_.assign(p.size() + 1, 0);
  std::vector<std::vector<int>> sup(static_cast<std::size_t>(ndof));
  for (std::size_t e = 0; e < p.size(); ++e) {
    std::vector<int> nodes;
    for (std::size_t k = 0; k < npts; ++k)
      for (const auto& r : ns.local(static_cast<int>(e), static_cast<int>(k))) nodes.push_back(r.dof);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (int z : nodes) sup[static_cast<std::size_t>(z)].push_back(static_cast<int>(e));
    ns.enodes_.insert(ns.enodes_.end(), nodes.begin(), nodes.end());
    ns.estart_[e + 1] = static_cast<int>(ns.enodes_.size());
  }
  ns.sstart_.assign(static_cast<std::size_t>(ndof) + 1, 0);
  for (int z = 0; z < ndof; ++z) {
    ns.sup_.insert(ns.sup_.end(), sup[static_cast<std::size_t>(z)].begin(), sup[static_cast<std::size_t>(z)].end());
    ns.sstart_[static_cast<std::size_t>(z) + 1] = static_cast<int>(ns.sup_.size());
  }
  return ns;
}

std::vector<int> support_extension(const NodalSet& ns, int elem) {
  std::vector<int> out;
  for (int z : ns.element_nodes(elem))
    for (int s : ns.support(z)) out.push_back(s);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> support_extension(const Partition& p, int cell_id, int m) {
  int e = p.index_of(cell_id);
  if (e < 0) throw MeshError("unknown element id " + std::to_string(cell_id));
  NodalSet ns = build_nodal_set(p, m);
  std::vector<int> out;
  for (int s : support_extension(ns, e)) out.push_back(p.cell(static_cast<std::size_t>(s)));
  return out;
}

AdmissibilityReport admissibility_report(const Partition& p, int m) {
  NodalSet ns = build_nodal_set(p, m);
  AdmissibilityReport r;
  for (int z = 0; z < ns.size(); ++z) r.finite_support_C = std::max(r.finite_support_C, static_cast<int>(ns.support(z).size()));
  const Forest& f = p.forest();
  std::vector<double> diam(p.size());
  for (std::size_t e = 0; e < p.size(); ++e) diam[e] = f.diam(p.cell(e));
  for (int e = 0; e < static_cast<int>(p.size()); ++e) {
    auto ext = support_extension(ns, e);
    r.local_finiteness = std::max(r.local_finiteness, static_cast<int>(ext.size()));
    for (int s : ext) r.gradedness_ratio = std::max(r.gradedness_ratio, diam[static_cast<std::size_t>(s)] / diam[static_cast<std::size_t>(e)]);
  }
  return r;
}

}  // namespace apx
