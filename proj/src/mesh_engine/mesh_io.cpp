#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "apx/mesh.hpp"

namespace apx {

std::string mesh_to_string(const Partition& p) {
  const Forest& f = p.forest();
  std::ostringstream os;
  os << "apxmesh 1\n";
  os << "domain " << f.domain() << "\n";
  os << "rule " << to_string(f.rule()) << "\n";
  char buf[128];
  for (int i = 0; i < f.num_vertices(); ++i) {
    Point x = f.vertex(i);
    std::snprintf(buf, sizeof buf, "vertex %d %.17g %.17g\n", i, x.x, x.y);
    os << buf;
  }
  std::unordered_set<int> active(p.cells().begin(), p.cells().end());
  for (int i = 0; i < f.num_cells(); ++i) {
    const Cell& c = f.cell(i);
    os << "tri " << i << ' ' << c.v[0] << ' ' << c.v[1] << ' ' << c.v[2] << ' ' << c.gen << ' ';
    if (c.parent < 0) os << '-';
    else os << c.parent;
    os << " 0 " << (active.count(i) ? 1 : 0) << "\n";
  }
  return os.str();
}

void mesh_save(const Partition& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MeshError("cannot write mesh file '" + path + "'");
  out << mesh_to_string(p);
}

Partition mesh_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) {
    throw MeshError("malformed mesh file at line " + std::to_string(lineno) + ": " + what);
  };
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos && line[line.find_first_not_of(" \t")] != '#')
        return true;
    }
    return false;
  };
  if (!next()) fail("empty file");
  {
    std::istringstream ls(line);
    std::string tag;
    int version = 0;
    if (!(ls >> tag >> version) || tag != "apxmesh") fail("missing 'apxmesh' header");
    if (version != 1) throw MeshError("unsupported mesh version " + std::to_string(version));
  }
  std::string domain = "custom";
  Rule rule = Rule::nvb;
  std::unique_ptr<ForestBuilder> b;
  std::vector<int> active;
  while (next()) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "domain") {
      if (b) fail("'domain' after geometry");
      if (!(ls >> domain)) fail("missing domain name");
    } else if (tag == "rule") {
      if (b) fail("'rule' after geometry");
      std::string r;
      if (!(ls >> r)) fail("missing rule");
      rule = parse_rule(r);
    } else if (tag == "vertex") {
      if (!b) b = std::make_unique<ForestBuilder>(domain, rule);
      int id;
      double x, y;
      if (!(ls >> id >> x >> y)) fail("bad vertex line");
      b->vertex(id, {x, y});
    } else if (tag == "tri") {
      if (!b) fail("triangle before vertices");
      int id, v0, v1, v2, gen, refedge, act;
      std::string parent;
      if (!(ls >> id >> v0 >> v1 >> v2 >> gen >> parent >> refedge >> act)) fail("bad tri line");
      if (refedge < 0 || refedge > 2) fail("refinement edge must be 0, 1 or 2");
      std::array<int, 3> v{v0, v1, v2};
      // Rotate so that the refinement edge sits opposite slot 0.
      std::array<int, 3> r{v[static_cast<std::size_t>(refedge)], v[static_cast<std::size_t>((refedge + 1) % 3)],
                           v[static_cast<std::size_t>((refedge + 2) % 3)]};
      int par = -1;
      if (parent != "-") {
        try {
          par = std::stoi(parent);
        } catch (...) {
          fail("bad parent field");
        }
      }
      b->cell(id, r, gen, par);
      if (act == 1) active.push_back(id);
      else if (act != 0) fail("active flag must be 0 or 1");
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!b) fail("no geometry");
  auto forest = b->finish();
  Partition tmp(forest, active, false);
  double a = tmp.area(), A = forest->domain_area();
  if (std::abs(a - A) > 1e-12 * A) throw MeshError("active triangles do not cover the domain");
  for (int c : tmp.cells())
    if (forest->cell(c).nchild != 0) throw MeshError("active triangle " + std::to_string(c) + " has children");
  bool conf = is_conforming(tmp);
  return Partition(forest, std::move(active), conf);
}

Partition mesh_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeshError("cannot read mesh file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_string(ss.str());
}

}  // namespace apx
