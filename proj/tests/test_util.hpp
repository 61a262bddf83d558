#pragma once

#include <random>
#include <vector>

#include "apx/mesh.hpp"

namespace apx::testing {

inline Partition random_refinement(Partition p, std::mt19937_64& rng, int rounds, int one_in = 4) {
  for (int r = 0; r < rounds; ++r) {
    std::vector<int> marked;
    for (int c : p.cells())
      if (rng() % static_cast<unsigned>(one_in) == 0) marked.push_back(c);
    p = refine(p, marked);
  }
  return p;
}

// A small corpus: conforming NVB meshes and nonconforming red meshes on both domains.
inline std::vector<Partition> corpus(unsigned seed = 5) {
  std::mt19937_64 rng(seed);
  std::vector<Partition> out;
  for (const char* dom : {"unit_square", "l_shape"}) {
    auto n = Partition::initial(make_domain(dom, Rule::nvb));
    out.push_back(n);
    out.push_back(random_refinement(n, rng, 4));
    auto r = Partition::initial(make_domain(dom, Rule::red));
    out.push_back(random_refinement(r, rng, 3, 3));
  }
  return out;
}

inline Point random_point_in(const Affine& A, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double a = U(rng), b = U(rng);
  if (a + b > 1) a = 1 - a, b = 1 - b;
  return A.map(a, b);
}

}  // namespace apx::testing
