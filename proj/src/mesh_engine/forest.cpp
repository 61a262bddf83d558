#include <algorithm>
#include <cmath>
#include <limits>

#include "apx/mesh.hpp"

namespace apx {

namespace {
constexpr std::uint64_t kNoParent = std::numeric_limits<std::uint64_t>::max();

double len2(Point a, Point b) {
  Point d = b - a;
  return dot(d, d);
}
}  // namespace

std::string_view to_string(Rule r) { return r == Rule::nvb ? "nvb" : "red"; }

Rule parse_rule(std::string_view s) {
  if (s == "nvb" || s == "NVB") return Rule::nvb;
  if (s == "red" || s == "RED") return Rule::red;
  throw MeshError("unknown refinement rule '" + std::string(s) + "'");
}

Forest::Forest(std::string domain, Rule rule, std::vector<Point> vertices,
               std::vector<std::array<int, 3>> triangles)
    : domain_(std::move(domain)), rule_(rule), vertices_(std::move(vertices)) {
  if (triangles.empty()) throw MeshError("initial triangulation is empty");
  for (Point p : vertices_)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("non-finite vertex coordinate");
  vparent_.assign(vertices_.size(), kNoParent);
  for (auto t : triangles) {
    for (int k : t)
      if (k < 0 || k >= num_vertices()) throw MeshError("triangle references unknown vertex");
    Point a = vertex(t[0]), b = vertex(t[1]), c = vertex(t[2]);
    if (signed_area(a, b, c) < 0) std::swap(t[1], t[2]);
    a = vertex(t[0]), b = vertex(t[1]), c = vertex(t[2]);
    if (!(signed_area(a, b, c) > 0)) throw MeshError("degenerate initial triangle");
    // Longest edge becomes the refinement edge; ties go to the lowest vertex-id pair.
    int best = 0;
    double best_len = -1.0;
    std::uint64_t best_key = 0;
    for (int k = 0; k < 3; ++k) {
      int p = t[(k + 1) % 3], q = t[(k + 2) % 3];
      double l = len2(vertex(p), vertex(q));
      std::uint64_t key = edge_key(p, q);
      double tol = 1e-12 * std::max(l, best_len);
      if (l > best_len + tol || (std::abs(l - best_len) <= tol && key < best_key)) {
        best = k;
        best_len = l;
        best_key = key;
      }
    }
    std::array<int, 3> r{t[best], t[(best + 1) % 3], t[(best + 2) % 3]};
    add_cell(r, -1);
  }
  nroots_ = num_cells();
  setup_boundary();
}

int Forest::add_vertex(Point p, int a, int b) {
  vertices_.push_back(p);
  vparent_.push_back(a < 0 ? kNoParent : edge_key(a, b));
  return num_vertices() - 1;
}

int Forest::add_cell(std::array<int, 3> v, int parent) {
  Cell c;
  c.v = v;
  c.parent = parent;
  if (parent < 0) {
    c.gen = 0;
    c.root = num_cells();
    c.area = signed_area(vertex(v[0]), vertex(v[1]), vertex(v[2]));
  } else {
    const Cell& p = cells_[static_cast<std::size_t>(parent)];
    c.gen = p.gen + 1;
    c.root = p.root;
    c.area = rule_ == Rule::nvb ? 0.5 * p.area : 0.25 * p.area;
  }
  cells_.push_back(c);
  return num_cells() - 1;
}

void Forest::setup_boundary() {
  std::unordered_map<std::uint64_t, int> count;
  std::vector<std::uint64_t> order;
  for (int i = 0; i < nroots_; ++i) {
    const Cell& c = cells_[static_cast<std::size_t>(i)];
    for (int k = 0; k < 3; ++k) {
      auto key = edge_key(c.v[(k + 1) % 3], c.v[(k + 2) % 3]);
      if (count[key]++ == 0) order.push_back(key);
    }
  }
  for (auto key : order) {
    int n = count[key];
    if (n > 2) throw MeshError("initial triangulation has an edge shared by more than two triangles");
    if (n == 1) {
      bseg_index_[key] = static_cast<int>(bsegs_.size());
      bsegs_.push_back({edge_lo(key), edge_hi(key)});
    }
  }
  domain_area_ = 0.0;
  lo_ = hi_ = vertex(cells_[0].v[0]);
  for (int i = 0; i < nroots_; ++i) {
    const Cell& c = cells_[static_cast<std::size_t>(i)];
    domain_area_ += c.area;
    for (int k : c.v) {
      Point p = vertex(k);
      lo_.x = std::min(lo_.x, p.x), lo_.y = std::min(lo_.y, p.y);
      hi_.x = std::max(hi_.x, p.x), hi_.y = std::max(hi_.y, p.y);
    }
  }
}

int Forest::midpoint(int a, int b) const {
  auto it = mid_.find(edge_key(a, b));
  return it == mid_.end() ? -1 : it->second;
}

std::optional<std::uint64_t> Forest::parent_edge(int v) const {
  auto k = vparent_[static_cast<std::size_t>(v)];
  if (k == kNoParent) return std::nullopt;
  return k;
}

int Forest::ensure_midpoint(int a, int b) {
  auto key = edge_key(a, b);
  auto it = mid_.find(key);
  if (it != mid_.end()) return it->second;
  Point pa = vertex(a), pb = vertex(b);
  int m = add_vertex({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)}, a, b);
  mid_.emplace(key, m);
  return m;
}

std::span<const int> Forest::split(int id) { return rule_ == Rule::nvb ? bisect(id) : red(id); }

std::span<const int> Forest::bisect(int id) {
  if (cell(id).nchild == 0) {
    auto v = cells_[static_cast<std::size_t>(id)].v;
    int m = ensure_midpoint(v[1], v[2]);
    int c0 = add_cell({m, v[0], v[1]}, id);
    int c1 = add_cell({m, v[2], v[0]}, id);
    Cell& c = cells_[static_cast<std::size_t>(id)];
    c.child = {c0, c1, -1, -1};
    c.nchild = 2;
  }
  return children(id);
}

std::span<const int> Forest::red(int id) {
  if (cell(id).nchild == 0) {
    auto v = cells_[static_cast<std::size_t>(id)].v;
    int m01 = ensure_midpoint(v[0], v[1]);
    int m12 = ensure_midpoint(v[1], v[2]);
    int m20 = ensure_midpoint(v[2], v[0]);
    int c0 = add_cell({v[0], m01, m20}, id);
    int c1 = add_cell({m01, v[1], m12}, id);
    int c2 = add_cell({m20, m12, v[2]}, id);
    int c3 = add_cell({m12, m20, m01}, id);
    Cell& c = cells_[static_cast<std::size_t>(id)];
    c.child = {c0, c1, c2, c3};
    c.nchild = 4;
  }
  return children(id);
}

bool Forest::is_ancestor(int anc, int id) const {
  int g = cell(anc).gen;
  while (id >= 0 && cell(id).gen > g) id = cell(id).parent;
  return id == anc;
}

int Forest::boundary_segment_of_edge(int a, int b) const {
  for (;;) {
    auto it = bseg_index_.find(edge_key(a, b));
    if (it != bseg_index_.end()) return it->second;
    auto pb = vparent_[static_cast<std::size_t>(b)];
    auto pa = vparent_[static_cast<std::size_t>(a)];
    if (pb != kNoParent && (edge_lo(pb) == a || edge_hi(pb) == a)) {
      b = edge_lo(pb) == a ? edge_hi(pb) : edge_lo(pb);
    } else if (pa != kNoParent && (edge_lo(pa) == b || edge_hi(pa) == b)) {
      a = edge_lo(pa) == b ? edge_hi(pa) : edge_lo(pa);
    } else {
      return -1;
    }
  }
}

std::array<int, 2> Forest::boundary_segments_of_vertex(int v) const {
  std::array<int, 2> out{-1, -1};
  auto pe = vparent_[static_cast<std::size_t>(v)];
  if (pe != kNoParent) {
    out[0] = boundary_segment_of_edge(edge_lo(pe), edge_hi(pe));
    return out;
  }
  int n = 0;
  for (int s = 0; s < num_boundary_segments() && n < 2; ++s)
    if (bsegs_[static_cast<std::size_t>(s)][0] == v || bsegs_[static_cast<std::size_t>(s)][1] == v) out[n++] = s;
  return out;
}

namespace {
double min_bary(const Affine& A, Point p) {
  Point r = A.inverse(p);
  return std::min({1.0 - r.x - r.y, r.x, r.y});
}
}  // namespace

bool Forest::contains(Point p, double tol) const {
  double scale = std::max(hi_.x - lo_.x, hi_.y - lo_.y);
  if (p.x < lo_.x - tol * scale || p.x > hi_.x + tol * scale || p.y < lo_.y - tol * scale ||
      p.y > hi_.y + tol * scale)
    return false;
  for (int i = 0; i < nroots_; ++i)
    if (min_bary(affine(i), p) >= -tol) return true;
  return false;
}

int Forest::locate_root(Point p) const {
  int best = -1;
  double bv = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nroots_; ++i) {
    double b = min_bary(affine(i), p);
    if (b >= 0) return i;
    if (b > bv) bv = b, best = i;
  }
  return bv > -1e-9 ? best : -1;
}

int Forest::descend(int start, Point p) const {
  int id = start;
  while (cell(id).nchild > 0) {
    int best = -1;
    double bv = -std::numeric_limits<double>::infinity();
    for (int c : children(id)) {
      double b = min_bary(affine(c), p);
      if (b > bv) bv = b, best = c;
    }
    id = best;
  }
  return id;
}

bool Forest::segment_inside(Point a, Point b) const {
  if (!contains(a) || !contains(b)) return false;
  auto orient = [](Point p, Point q, Point r) { return cross(q - p, r - p); };
  for (auto s : bsegs_) {
    Point c = vertex(s[0]), d = vertex(s[1]);
    double o1 = orient(a, b, c), o2 = orient(a, b, d);
    double o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
      return false;
  }
  for (double t : {0.25, 0.5, 0.75})
    if (!contains(a + t * (b - a))) return false;
  return true;
}

ForestBuilder::ForestBuilder(std::string domain, Rule rule) : domain_(std::move(domain)), rule_(rule) {}

void ForestBuilder::vertex(int id, Point p) {
  if (id < 0) throw MeshError("negative vertex id");
  if (static_cast<std::size_t>(id) >= verts_.size()) verts_.resize(static_cast<std::size_t>(id) + 1);
  if (verts_[static_cast<std::size_t>(id)]) throw MeshError("duplicate vertex id " + std::to_string(id));
  verts_[static_cast<std::size_t>(id)] = p;
}

void ForestBuilder::cell(int id, std::array<int, 3> v, int gen, int parent) {
  if (id < 0) throw MeshError("negative triangle id");
  if (static_cast<std::size_t>(id) >= cells_.size()) cells_.resize(static_cast<std::size_t>(id) + 1);
  auto& r = cells_[static_cast<std::size_t>(id)];
  if (r.set) throw MeshError("duplicate triangle id " + std::to_string(id));
  r = {v, gen, parent, true};
}

std::shared_ptr<Forest> ForestBuilder::finish() {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < verts_.size(); ++i) {
    if (!verts_[i]) throw MeshError("missing vertex id " + std::to_string(i));
    pts.push_back(*verts_[i]);
  }
  std::vector<std::array<int, 3>> roots;
  std::size_t nroots = 0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (!cells_[i].set) throw MeshError("missing triangle id " + std::to_string(i));
    if (cells_[i].parent < 0) {
      if (i != nroots) throw MeshError("root triangles must precede refined ones");
      roots.push_back(cells_[i].v);
      ++nroots;
    }
  }
  // The constructor relabels roots only when the stored labels differ from
  // the canonical ones; stored labels win, so restore them afterwards.
  auto f = std::make_shared<Forest>(domain_, rule_, pts, roots);
  for (std::size_t i = 0; i < nroots; ++i) {
    auto& c = f->cells_[i];
    c.v = cells_[i].v;
    Point a = f->vertex(c.v[0]), b = f->vertex(c.v[1]), cc = f->vertex(c.v[2]);
    c.area = signed_area(a, b, cc);
    if (!(c.area > 0)) throw MeshError("root triangle is not counter-clockwise");
  }
  f->vertices_ = pts;
  f->vparent_.assign(pts.size(), kNoParent);
  for (std::size_t i = nroots; i < cells_.size(); ++i) {
    const Raw& r = cells_[i];
    if (r.parent < 0 || static_cast<std::size_t>(r.parent) >= i)
      throw MeshError("triangle " + std::to_string(i) + " has invalid parent");
    int id = f->add_cell(r.v, r.parent);
    Cell& p = f->cells_[static_cast<std::size_t>(r.parent)];
    int maxc = rule_ == Rule::nvb ? 2 : 4;
    if (p.nchild >= maxc) throw MeshError("too many children for triangle " + std::to_string(r.parent));
    p.child[static_cast<std::size_t>(p.nchild++)] = id;
    if (f->cells_[static_cast<std::size_t>(id)].gen != r.gen)
      throw MeshError("generation mismatch for triangle " + std::to_string(i));
  }
  // Rebuild the midpoint map from the children layout.
  auto note = [&](int a, int b, int m) {
    f->mid_[edge_key(a, b)] = m;
    f->vparent_[static_cast<std::size_t>(m)] = edge_key(a, b);
  };
  for (int i = 0; i < f->num_cells(); ++i) {
    const Cell& c = f->cell(i);
    if (c.nchild == 0) continue;
    int expect = rule_ == Rule::nvb ? 2 : 4;
    if (c.nchild != expect) throw MeshError("incomplete children for triangle " + std::to_string(i));
    if (rule_ == Rule::nvb) {
      note(c.v[1], c.v[2], f->cell(c.child[0]).v[0]);
    } else {
      const Cell& c0 = f->cell(c.child[0]);
      const Cell& c1 = f->cell(c.child[1]);
      note(c.v[0], c.v[1], c0.v[1]);
      note(c.v[2], c.v[0], c0.v[2]);
      note(c.v[1], c.v[2], c1.v[2]);
    }
  }
  return f;
}

}  // namespace apx
