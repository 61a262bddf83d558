#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "apx/geometry.hpp"

namespace apx {

enum class Rule { nvb, red };

std::string_view to_string(Rule r);
Rule parse_rule(std::string_view s);

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One node of the refinement forest. Slot 0 holds the newest vertex; the
// refinement edge is the edge opposite slot 0.
struct Cell {
  std::array<int, 3> v{};
  int gen = 0;
  int parent = -1;
  int root = -1;
  std::array<int, 4> child{-1, -1, -1, -1};
  int nchild = 0;
  double area = 0.0;
};

// Append-only store of vertices and cells shared by every partition derived
// from the same initial triangulation. Refining never mutates existing cells
// except to attach children, so older partitions stay valid.
class Forest {
 public:
  Forest(std::string domain, Rule rule, std::vector<Point> vertices,
         std::vector<std::array<int, 3>> triangles);

  const std::string& domain() const { return domain_; }
  Rule rule() const { return rule_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_roots() const { return nroots_; }

  const Cell& cell(int id) const { return cells_.at(static_cast<std::size_t>(id)); }
  Point vertex(int id) const { return vertices_[static_cast<std::size_t>(id)]; }
  std::span<const int> children(int id) const {
    const Cell& c = cell(id);
    return {c.child.data(), static_cast<std::size_t>(c.nchild)};
  }
  Affine affine(int id) const {
    const Cell& c = cell(id);
    return Affine(vertex(c.v[0]), vertex(c.v[1]), vertex(c.v[2]));
  }
  double diam(int id) const {
    const Cell& c = cell(id);
    return diameter(vertex(c.v[0]), vertex(c.v[1]), vertex(c.v[2]));
  }

  // Midpoint vertex of edge (a,b) if it was ever created, else -1.
  int midpoint(int a, int b) const;
  // For a vertex created as an edge midpoint, the edge key of that edge.
  std::optional<std::uint64_t> parent_edge(int v) const;

  // Splits a cell by the forest rule, reusing existing children.
  std::span<const int> split(int id);

  bool is_ancestor(int anc, int id) const;

  // Boundary bookkeeping (P0 boundary segments).
  int num_boundary_segments() const { return static_cast<int>(bsegs_.size()); }
  std::array<int, 2> boundary_segment(int s) const { return bsegs_[static_cast<std::size_t>(s)]; }
  // Boundary segment containing the edge (a,b), or -1 if it is interior.
  int boundary_segment_of_edge(int a, int b) const;
  // Boundary segments containing vertex v (up to two, -1 padded).
  std::array<int, 2> boundary_segments_of_vertex(int v) const;

  double domain_area() const { return domain_area_; }
  bool contains(Point p, double tol = 1e-12) const;
  // True when the closed segment [a,b] lies in the closed domain.
  bool segment_inside(Point a, Point b) const;
  // Root cell containing p (or -1), then the leaf of the current forest below
  // `start` containing p.
  int locate_root(Point p) const;
  int descend(int start, Point p) const;

 private:
  int add_vertex(Point p, int a, int b);
  int add_cell(std::array<int, 3> v, int parent);
  void setup_boundary();
  std::span<const int> bisect(int id);
  std::span<const int> red(int id);
  int ensure_midpoint(int a, int b);

  friend class ForestBuilder;

  std::string domain_;
  Rule rule_;
  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<std::uint64_t> vparent_;  // parent edge key, or ~0 for original vertices
  std::unordered_map<std::uint64_t, int> mid_;
  int nroots_ = 0;
  std::vector<std::array<int, 2>> bsegs_;
  std::unordered_map<std::uint64_t, int> bseg_index_;
  double domain_area_ = 0.0;
  Point lo_{}, hi_{};
};

// Restores a forest verbatim (used by mesh_load); no relabeling takes place.
class ForestBuilder {
 public:
  ForestBuilder(std::string domain, Rule rule);
  void vertex(int id, Point p);
  void cell(int id, std::array<int, 3> v, int gen, int parent);
  std::shared_ptr<Forest> finish();

 private:
  std::string domain_;
  Rule rule_;
  std::vector<std::optional<Point>> verts_;
  struct Raw {
    std::array<int, 3> v;
    int gen, parent;
    bool set = false;
  };
  std::vector<Raw> cells_;
};

struct Topology;

// Immutable leaf set over a shared forest.
class Partition {
 public:
  Partition(std::shared_ptr<Forest> forest, std::vector<int> cells, bool conforming);
  static Partition initial(std::shared_ptr<Forest> forest);

  Rule rule() const { return forest_->rule(); }
  const Forest& forest() const { return *forest_; }
  const std::shared_ptr<Forest>& forest_ptr() const { return forest_; }
  std::span<const int> cells() const { return *cells_; }
  std::size_t size() const { return cells_->size(); }
  int cell(std::size_t i) const { return (*cells_)[i]; }
  bool conforming() const { return conforming_; }

  // Local index of an active cell id, or -1.
  int index_of(int cell_id) const;
  bool contains(int cell_id) const { return index_of(cell_id) >= 0; }
  double area() const;
  const Topology& topology() const;

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.forest_ == b.forest_ && *a.cells_ == *b.cells_;
  }

 private:
  struct Cache;
  std::shared_ptr<Forest> forest_;
  std::shared_ptr<const std::vector<int>> cells_;
  bool conforming_;
  std::shared_ptr<Cache> cache_;
};

// Edge of the active mesh. Elements are local indices into Partition::cells().
struct TopoEdge {
  int a = -1, b = -1;  // vertex ids, a < b
  std::array<int, 2> elem{-1, -1};
  std::array<int, 2> slot{-1, -1};
  int coarse = -1;       // for half edges: coarse element whose edge contains this one
  int coarse_slot = -1;
  int boundary = -1;     // boundary segment, -1 if interior
  bool split = false;    // owned by a coarse element and split by an active midpoint
};

struct Topology {
  std::vector<TopoEdge> edges;
  std::vector<std::array<int, 3>> elem_edge;  // edge opposite slot k
  std::unordered_map<std::uint64_t, int> edge_index;
  std::vector<int> active_vertices;  // sorted
  int find_edge(int a, int b) const {
    auto it = edge_index.find(edge_key(a, b));
    return it == edge_index.end() ? -1 : it->second;
  }
};

struct CompletionLedger {
  std::size_t initial = 0;
  std::vector<std::size_t> marked;  // #R_m per call
  std::vector<std::size_t> sizes;   // #P_k after each call
  std::size_t total_marked() const;
  // (#P_k - #P_0) / max(1, sum #R_m)
  double ratio() const;
};

// Refines every marked element at least once. NVB partitions are completed to
// conformity; RED partitions are closed so that no vertex hangs on the edge of
// an element that is about to be refined (one hanging node per edge,
// generation gap at most one).
Partition refine(const Partition& p, std::span<const int> marked, CompletionLedger* ledger = nullptr);
Partition complete(const Partition& p, std::span<const int> marked, CompletionLedger* ledger = nullptr);
Partition uniform_refine(const Partition& p);
Partition overlay(const Partition& p, const Partition& q);

// Audits.
bool is_conforming(const Partition& p);
bool is_admissible(const Partition& p);

std::shared_ptr<Forest> make_domain(std::string_view name, Rule rule);

void mesh_save(const Partition& p, const std::string& path);
Partition mesh_load(const std::string& path);
std::string mesh_to_string(const Partition& p);
Partition mesh_from_string(const std::string& text);

}  // namespace apx
