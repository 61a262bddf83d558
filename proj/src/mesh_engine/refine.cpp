#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_set>

#include "apx/mesh.hpp"

namespace apx {

std::size_t CompletionLedger::total_marked() const {
  return std::accumulate(marked.begin(), marked.end(), std::size_t{0});
}

double CompletionLedger::ratio() const {
  std::size_t last = sizes.empty() ? initial : sizes.back();
  double added = static_cast<double>(last) - static_cast<double>(initial);
  return added / static_cast<double>(std::max<std::size_t>(1, total_marked()));
}

namespace {

// Mutable view of an active set used while a refinement is in progress.
class Working {
 public:
  Working(Forest& f, std::span<const int> cells) : f_(f) {
    active_.reserve(cells.size() * 3);
    edges_.reserve(cells.size() * 4);
    for (int c : cells) add(c);
  }

  bool active(int c) const { return active_.count(c) > 0; }
  bool vertex_used(int v) const {
    auto it = vuse_.find(v);
    return it != vuse_.end() && it->second > 0;
  }

  // Active element owning the exact edge (a,b), other than `self`.
  int owner(int a, int b, int self = -1) const {
    auto it = edges_.find(edge_key(a, b));
    if (it == edges_.end()) return -1;
    for (int c : it->second)
      if (c >= 0 && c != self) return c;
    return -1;
  }

  bool hanging(int c) const {
    const Cell& cc = f_.cell(c);
    for (int k = 0; k < 3; ++k) {
      int m = f_.midpoint(cc.v[static_cast<std::size_t>((k + 1) % 3)], cc.v[static_cast<std::size_t>((k + 2) % 3)]);
      if (m >= 0 && vertex_used(m)) return true;
    }
    return false;
  }

  std::span<const int> split(int c) {
    remove(c);
    auto kids = f_.split(c);
    for (int k : kids) add(k);
    return f_.children(c);
  }

  std::vector<int> cells() const {
    std::vector<int> out(active_.begin(), active_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  Forest& forest() { return f_; }

 private:
  void add(int c) {
    active_.insert(c);
    const Cell& cc = f_.cell(c);
    for (int k = 0; k < 3; ++k) {
      ++vuse_[cc.v[static_cast<std::size_t>(k)]];
      auto key = edge_key(cc.v[static_cast<std::size_t>((k + 1) % 3)], cc.v[static_cast<std::size_t>((k + 2) % 3)]);
      auto& slot = edges_.try_emplace(key, std::array<int, 2>{-1, -1}).first->second;
      if (slot[0] < 0) slot[0] = c;
      else slot[1] = c;
    }
  }
  void remove(int c) {
    active_.erase(c);
    const Cell& cc = f_.cell(c);
    for (int k = 0; k < 3; ++k) {
      --vuse_[cc.v[static_cast<std::size_t>(k)]];
      auto key = edge_key(cc.v[static_cast<std::size_t>((k + 1) % 3)], cc.v[static_cast<std::size_t>((k + 2) % 3)]);
      auto& slot = edges_[key];
      if (slot[0] == c) slot[0] = slot[1];
      slot[1] = -1;
      if (slot[0] < 0) edges_.erase(key);
    }
  }

  Forest& f_;
  std::unordered_set<int> active_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges_;
  std::unordered_map<int, int> vuse_;
};

void check_marked(const Partition& p, std::span<const int> marked) {
  for (int c : marked)
    if (!p.contains(c)) throw MeshError("unknown element id " + std::to_string(c));
}

void record(CompletionLedger* ledger, const Partition& before, std::size_t marked, std::size_t after) {
  if (!ledger) return;
  if (ledger->marked.empty() && ledger->initial == 0) ledger->initial = before.size();
  ledger->marked.push_back(marked);
  ledger->sizes.push_back(after);
}

Partition refine_red(const Partition& p, std::span<const int> marked, CompletionLedger* ledger) {
  Working w(*p.forest_ptr(), p.cells());
  // Refining c first requires the owner of every edge on which a vertex of c
  // hangs to be refined, so constraints never chain.
  std::vector<int> stack;
  auto refine_one = [&](int target) {
    stack.push_back(target);
    while (!stack.empty()) {
      int c = stack.back();
      if (!w.active(c)) {
        stack.pop_back();
        continue;
      }
      const Cell& cc = w.forest().cell(c);
      int blocker = -1;
      for (int v : cc.v) {
        auto pe = w.forest().parent_edge(v);
        if (!pe) continue;
        int o = w.owner(edge_lo(*pe), edge_hi(*pe));
        if (o >= 0) {
          blocker = o;
          break;
        }
      }
      if (blocker >= 0) {
        stack.push_back(blocker);
        continue;
      }
      w.split(c);
      stack.pop_back();
    }
  };
  for (int c : marked) refine_one(c);
  std::vector<int> cells = w.cells();
  bool conf = true;
  Partition out(p.forest_ptr(), std::move(cells), false);
  conf = is_conforming(out);
  Partition result(p.forest_ptr(), std::vector<int>(out.cells().begin(), out.cells().end()), conf);
  record(ledger, p, marked.size(), result.size());
  return result;
}

}  // namespace

Partition complete(const Partition& p, std::span<const int> marked, CompletionLedger* ledger) {
  if (p.rule() != Rule::nvb) throw MeshError("completion requires newest vertex bisection");
  if (!p.conforming()) throw MeshError("completion requires a conforming partition");
  check_marked(p, marked);
  Working w(*p.forest_ptr(), p.cells());
  std::unordered_set<int> todo(marked.begin(), marked.end());
  std::deque<int> queue(marked.begin(), marked.end());
  std::sort(queue.begin(), queue.end());
  while (!queue.empty()) {
    int c = queue.front();
    queue.pop_front();
    if (!w.active(c)) continue;
    if (!todo.count(c) && !w.hanging(c)) continue;
    todo.erase(c);
    const Cell cc = w.forest().cell(c);
    auto kids = w.split(c);
    int nb = w.owner(cc.v[1], cc.v[2], c);
    if (nb >= 0) queue.push_back(nb);
    for (int k : kids)
      if (w.hanging(k)) queue.push_back(k);
  }
  Partition out(p.forest_ptr(), w.cells(), true);
  record(ledger, p, marked.size(), out.size());
  return out;
}

Partition refine(const Partition& p, std::span<const int> marked, CompletionLedger* ledger) {
  check_marked(p, marked);
  if (marked.empty()) {
    record(ledger, p, 0, p.size());
    return p;
  }
  if (p.rule() == Rule::nvb) return complete(p, marked, ledger);
  return refine_red(p, marked, ledger);
}

Partition uniform_refine(const Partition& p) {
  std::vector<int> all(p.cells().begin(), p.cells().end());
  return refine(p, all);
}

Partition overlay(const Partition& p, const Partition& q) {
  if (p.forest_ptr() != q.forest_ptr()) throw MeshError("overlay of partitions with different forests");
  const Forest& f = p.forest();
  std::unordered_set<int> all(p.cells().begin(), p.cells().end());
  all.insert(q.cells().begin(), q.cells().end());
  std::unordered_set<int> covered;
  for (int c : all) {
    int a = f.cell(c).parent;
    while (a >= 0 && covered.insert(a).second) a = f.cell(a).parent;
  }
  std::vector<int> out;
  for (int c : all)
    if (!covered.count(c)) out.push_back(c);
  Partition r(p.forest_ptr(), std::move(out), false);
  bool conf = (p.conforming() && q.conforming() && p.rule() == Rule::nvb) || is_conforming(r);
  return Partition(p.forest_ptr(), std::vector<int>(r.cells().begin(), r.cells().end()), conf);
}

}  // namespace apx
