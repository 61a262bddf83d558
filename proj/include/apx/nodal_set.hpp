#pragma once

#include <array>
#include <span>
#include <vector>

#include "apx/mesh.hpp"

namespace apx {

// Barycentric lattice indices (b0,b1,b2), b0+b1+b2 = m, of the degree-m
// Lagrange points on a triangle. Ordering: b2 outer, b1 inner.
struct LatticePoint {
  int b0, b1, b2;
};
std::vector<LatticePoint> lattice(int m);
inline int lattice_size(int m) { return (m + 1) * (m + 2) / 2; }

struct NodeRef {
  int dof;
  double w;
};

// Nodal set N_P of the degree-m Lagrange space on a possibly nonconforming
// partition. Lagrange points of an element that are not in N_P (hanging
// points) are eliminated through the trace of the coarse neighbour.
class NodalSet {
 public:
  int degree() const { return m_; }
  int size() const { return static_cast<int>(points_.size()); }
  int points_per_element() const { return npts_; }
  int num_elements() const { return nelem_; }
  int num_constrained() const { return nconstrained_; }

  Point point(int z) const { return points_[static_cast<std::size_t>(z)]; }
  std::array<int, 2> boundary_segments(int z) const { return bsegs_[static_cast<std::size_t>(z)]; }

  // Expansion of the k-th local Lagrange point of element e in terms of nodes.
  std::span<const NodeRef> local(int e, int k) const {
    auto i = static_cast<std::size_t>(e * npts_ + k);
    return {refs_.data() + start_[i], static_cast<std::size_t>(start_[i + 1] - start_[i])};
  }
  // N_{P,tau}: nodes whose basis function does not vanish on element e (sorted).
  std::span<const int> element_nodes(int e) const {
    auto i = static_cast<std::size_t>(e);
    return {enodes_.data() + estart_[i], static_cast<std::size_t>(estart_[i + 1] - estart_[i])};
  }
  // Elements in supp(phi_z) (sorted local indices).
  std::span<const int> support(int z) const {
    auto i = static_cast<std::size_t>(z);
    return {sup_.data() + sstart_[i], static_cast<std::size_t>(sstart_[i + 1] - sstart_[i])};
  }

  friend NodalSet build_nodal_set(const Partition& p, int m);

 private:
  int m_ = 1, npts_ = 3, nelem_ = 0, nconstrained_ = 0;
  std::vector<Point> points_;
  std::vector<std::array<int, 2>> bsegs_;
  std::vector<NodeRef> refs_;
  std::vector<int> start_;
  std::vector<int> enodes_, estart_;
  std::vector<int> sup_, sstart_;
};

NodalSet build_nodal_set(const Partition& p, int m);

// Support extension: elements sigma with sigma ~ tau (local indices, sorted).
std::vector<int> support_extension(const NodalSet& ns, int elem);
// Same, in terms of forest cell ids.
std::vector<int> support_extension(const Partition& p, int cell_id, int m);

struct AdmissibilityReport {
  int finite_support_C = 1;
  int local_finiteness = 1;
  double gradedness_ratio = 1.0;
};

AdmissibilityReport admissibility_report(const Partition& p, int m);

}  // namespace apx
