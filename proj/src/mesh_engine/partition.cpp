#include <algorithm>
#include <mutex>
#include <numeric>
#include <unordered_set>

#include "apx/mesh.hpp"

namespace apx {

struct Partition::Cache {
  std::once_flag index_once, topo_once;
  std::unordered_map<int, int> index;
  Topology topo;
};

Partition::Partition(std::shared_ptr<Forest> forest, std::vector<int> cells, bool conforming)
    : forest_(std::move(forest)), conforming_(conforming), cache_(std::make_shared<Cache>()) {
  if (!forest_) throw MeshError("partition without forest");
  std::sort(cells.begin(), cells.end());
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end()) throw MeshError("duplicate active cell");
  for (int c : cells)
    if (c < 0 || c >= forest_->num_cells()) throw MeshError("unknown element id " + std::to_string(c));
  cells_ = std::make_shared<const std::vector<int>>(std::move(cells));
}

Partition Partition::initial(std::shared_ptr<Forest> forest) {
  std::vector<int> roots(static_cast<std::size_t>(forest->num_roots()));
  std::iota(roots.begin(), roots.end(), 0);
  return Partition(std::move(forest), std::move(roots), true);
}

int Partition::index_of(int cell_id) const {
  std::call_once(cache_->index_once, [this] {
    cache_->index.reserve(cells_->size() * 2);
    for (std::size_t i = 0; i < cells_->size(); ++i) cache_->index.emplace((*cells_)[i], static_cast<int>(i));
  });
  auto it = cache_->index.find(cell_id);
  return it == cache_->index.end() ? -1 : it->second;
}

double Partition::area() const {
  double s = 0.0;
  for (int c : *cells_) s += forest_->cell(c).area;
  return s;
}

namespace {

Topology build_topology(const Partition& p) {
  const Forest& f = p.forest();
  Topology t;
  auto cells = p.cells();
  t.elem_edge.resize(cells.size());
  std::unordered_set<int> verts;
  for (std::size_t e = 0; e < cells.size(); ++e) {
    const Cell& c = f.cell(cells[e]);
    for (int k = 0; k < 3; ++k) {
      verts.insert(c.v[static_cast<std::size_t>(k)]);
      int a = c.v[static_cast<std::size_t>((k + 1) % 3)], b = c.v[static_cast<std::size_t>((k + 2) % 3)];
      auto key = edge_key(a, b);
      auto [it, fresh] = t.edge_index.try_emplace(key, static_cast<int>(t.edges.size()));
      if (fresh) {
        TopoEdge te;
        te.a = std::min(a, b);
        te.b = std::max(a, b);
        t.edges.push_back(te);
      }
      TopoEdge& te = t.edges[static_cast<std::size_t>(it->second)];
      int side = te.elem[0] < 0 ? 0 : 1;
      if (te.elem[side] >= 0) throw MeshError("edge shared by more than two active elements");
      te.elem[static_cast<std::size_t>(side)] = static_cast<int>(e);
      te.slot[static_cast<std::size_t>(side)] = k;
      t.elem_edge[e][static_cast<std::size_t>(k)] = it->second;
    }
  }
  t.active_vertices.assign(verts.begin(), verts.end());
  std::sort(t.active_vertices.begin(), t.active_vertices.end());
  for (auto& te : t.edges) {
    if (te.elem[1] >= 0) continue;
    te.boundary = f.boundary_segment_of_edge(te.a, te.b);
  }
  for (auto& te : t.edges) {
    if (te.elem[1] >= 0 || te.boundary >= 0) continue;
    int m = f.midpoint(te.a, te.b);
    if (m < 0 || !verts.count(m)) continue;
    te.split = true;
    for (auto [x, y] : {std::pair{te.a, m}, std::pair{m, te.b}}) {
      int h = t.find_edge(x, y);
      if (h < 0) continue;  // deeper nonconformity; flagged by the admissibility audit
      t.edges[static_cast<std::size_t>(h)].coarse = te.elem[0];
      t.edges[static_cast<std::size_t>(h)].coarse_slot = te.slot[0];
    }
  }
  return t;
}

}  // namespace

const Topology& Partition::topology() const {
  std::call_once(cache_->topo_once, [this] { cache_->topo = build_topology(*this); });
  return cache_->topo;
}

bool is_conforming(const Partition& p) {
  const Topology& t = p.topology();
  for (const auto& e : t.edges)
    if (e.elem[1] < 0 && e.boundary < 0) return false;
  return true;
}

bool is_admissible(const Partition& p) {
  const Topology& t = p.topology();
  const Forest& f = p.forest();
  for (const auto& e : t.edges) {
    if (e.elem[1] >= 0 || e.boundary >= 0) continue;
    if (e.split) {
      // both halves must be exact edges of finer elements one generation down
      int m = f.midpoint(e.a, e.b);
      int g = f.cell(p.cell(static_cast<std::size_t>(e.elem[0]))).gen;
      for (auto [x, y] : {std::pair{e.a, m}, std::pair{m, e.b}}) {
        int h = t.find_edge(x, y);
        if (h < 0) return false;
        int fine = t.edges[static_cast<std::size_t>(h)].elem[0];
        if (f.cell(p.cell(static_cast<std::size_t>(fine))).gen > g + 1 + (p.rule() == Rule::nvb ? 1 : 0))
          return false;
      }
    } else if (e.coarse < 0) {
      return false;
    }
  }
  return true;
}

}  // namespace apx
