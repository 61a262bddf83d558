#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apx/field.hpp"
#include "apx/mesh.hpp"
#include "apx/nodal_set.hpp"
#include "apx/poly.hpp"

namespace apx {

class FeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class SpaceKind { continuous, discontinuous };

inline int default_quad_order(int m) { return 2 * m + 2; }

// Every boundary segment of the initial triangulation.
std::vector<int> whole_boundary(const Forest& f);

// Continuous Lagrange space S^m_P (optionally vanishing on the boundary
// segments listed in gamma) or the broken space of piecewise degree-d
// polynomials. Copies share the immutable space data.
class FeSpace {
 public:
  static FeSpace continuous(Partition p, int m, std::vector<int> gamma = {});
  static FeSpace discontinuous(Partition p, int d);

  SpaceKind kind() const { return d_->kind; }
  int degree() const { return d_->m; }
  int dim() const { return d_->ndof; }
  int local_size() const { return d_->nb; }
  int num_elements() const { return static_cast<int>(d_->part.size()); }
  const Partition& partition() const { return d_->part; }
  const NodalSet& nodes() const;
  const std::vector<int>& gamma() const { return d_->gamma; }
  const LagrangeBasis& basis() const { return lagrange(d_->m); }

  // Global dof of nodal-set node z, or -1 when masked (continuous only).
  int node_dof(int z) const { return d_->node_dof[static_cast<std::size_t>(z)]; }
  // Node behind a dof (continuous only).
  int dof_node(int dof) const { return d_->dof_node[static_cast<std::size_t>(dof)]; }

  // Element e restricted to the space: local Lagrange coefficients are
  // element_map(e) (local_size x #dofs, row-major) times the dof values.
  std::span<const int> element_dofs(int e) const {
    auto i = static_cast<std::size_t>(e);
    return {d_->edofs.data() + d_->estart[i], static_cast<std::size_t>(d_->estart[i + 1] - d_->estart[i])};
  }
  std::span<const double> element_map(int e) const {
    auto i = static_cast<std::size_t>(e);
    return {d_->emap.data() + d_->mstart[i], static_cast<std::size_t>(d_->mstart[i + 1] - d_->mstart[i])};
  }
  const Affine& affine(int e) const { return d_->aff[static_cast<std::size_t>(e)]; }
  double element_area(int e) const { return d_->aff[static_cast<std::size_t>(e)].area(); }

  // Active element containing x (local index), or -1 outside the domain.
  int locate(Point x) const;

  friend bool same_space(const FeSpace& a, const FeSpace& b) { return a.d_ == b.d_; }

 private:
  struct Data {
    explicit Data(Partition p) : part(std::move(p)) {}
    SpaceKind kind = SpaceKind::continuous;
    int m = 1, nb = 3, ndof = 0;
    Partition part;
    std::shared_ptr<const NodalSet> ns;
    std::vector<int> gamma;
    std::vector<int> node_dof, dof_node;
    std::vector<int> edofs, estart;
    std::vector<double> emap;
    std::vector<int> mstart;
    std::vector<Affine> aff;
  };
  explicit FeSpace(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  std::shared_ptr<const Data> d_;
};

// Coefficient vector in an FeSpace.
class FeFunction {
 public:
  FeFunction(FeSpace V, Eigen::VectorXd coef);
  explicit FeFunction(FeSpace V);

  const FeSpace& space() const { return V_; }
  const Eigen::VectorXd& coef() const { return c_; }
  Eigen::VectorXd& coef() { return c_; }

  // Local Lagrange coefficients on element e.
  void local(int e, std::span<double> out) const;
  std::vector<double> local(int e) const;
  double value(int e, Point ref) const;
  // Physical gradient at reference point ref of element e.
  Point gradient(int e, Point ref) const;

  double operator()(Point x) const;
  Point gradient(Point x) const;
  Field field(std::string name = "fe") const;

 private:
  FeSpace V_;
  Eigen::VectorXd c_;
};

// Nodal interpolant (continuous: values at unmasked nodes; broken: at the
// local lattice points).
FeFunction interpolate(const FeSpace& V, const Field& u);

// Bilinear form  a_ij d_j u d_i v + b_k d_k u v + c u v  with empty members
// treated as zero.
struct SecondOrderForm {
  std::function<std::array<double, 4>(Point)> a;  // row-major a_ij
  std::function<Point(Point)> b;
  std::function<double(Point)> c;
};
SecondOrderForm mass_form();
SecondOrderForm stiffness_form();
SecondOrderForm h1_form();

// quad_order < 0 selects default_quad_order(m).
SparseMatrix assemble_gram(const FeSpace& V, const SecondOrderForm& form, int quad_order = -1);
Eigen::VectorXd assemble_load(const FeSpace& V, const Field& f, int quad_order = -1);
// Right-hand side of the H1 projection: (grad u, grad v) + (u, v).
Eigen::VectorXd assemble_h1_load(const FeSpace& V, const Field& u, int quad_order = -1);
// Coordinate-triplet text "row col value" per nonzero, row-major order.
std::string triplets_to_string(const SparseMatrix& A);

// Lagrange coefficients (reference lattice of degree d) of the L2(tau)
// projection of u onto P_d, tau the image of the reference triangle under A.
std::vector<double> project_poly_element(const Field& u, const Affine& A, int d, int quad_order = -1);
// Same from precomputed values of u at the points of triangle_rule(quad_order).
std::vector<double> project_poly_values(std::span<const double> uq, int d, int quad_order);

// Polynomial of degree k on an edge, parametrized by s in [0,1], in the
// orthonormal Legendre basis.
struct EdgePoly {
  std::vector<double> c;
  double operator()(double s) const;
};
EdgePoly project_poly_edge(const std::function<double(double)>& g, int k, int quad_order = -1);

// Integral of |u - v|^p over each listed element (p = inf: max over
// quadrature points). An empty element list means all elements.
std::vector<double> element_lp_pow(const Field& u, const FeFunction& v, double p, std::span<const int> elems = {},
                                   int quad_order = -1);
std::vector<double> element_h1_sq(const Field& u, const FeFunction& v, std::span<const int> elems = {},
                                  int quad_order = -1);
double lp_distance(const Field& u, const FeFunction& v, double p, std::span<const int> elems = {}, int quad_order = -1);
double h1_distance(const Field& u, const FeFunction& v, std::span<const int> elems = {}, int quad_order = -1);
// Norm of a field over elements of a partition.
double lp_norm(const Field& u, const Partition& P, double p, std::span<const int> elems = {}, int quad_order = 6);

// Aggregates per-element p-th powers into a (quasi-)norm.
double aggregate(std::span<const double> powers, double p);

}  // namespace apx
