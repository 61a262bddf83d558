#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "apx/geometry.hpp"
#include "apx/nodal_set.hpp"

namespace apx {

inline constexpr int max_poly_degree = 6;

struct Hess {
  double xx = 0, xy = 0, yy = 0;
};

// Lagrange basis of degree m on the reference triangle, one function per
// lattice point in lattice(m) order. Degree 0 is the constant 1.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int m);

  int degree() const { return m_; }
  int size() const { return static_cast<int>(lat_.size()); }
  const std::vector<LatticePoint>& lattice_points() const { return lat_; }
  Point node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }

  void values(Point r, std::span<double> out) const;
  void gradients(Point r, std::span<Point> out) const;
  void hessians(Point r, std::span<Hess> out) const;
  double eval(std::span<const double> coef, Point r) const;
  Point eval_gradient(std::span<const double> coef, Point r) const;

  // Gram matrix of the basis on the reference triangle and its inverse.
  const Eigen::MatrixXd& mass() const { return mass_; }
  const Eigen::MatrixXd& mass_inverse() const { return mass_inv_; }

 private:
  int m_;
  std::vector<LatticePoint> lat_;
  std::vector<Point> nodes_;
  Eigen::MatrixXd mass_, mass_inv_;
};

const LagrangeBasis& lagrange(int m);

// Basis values at every point of triangle_rule(order), row q, column k.
struct Tabulation {
  int nq = 0, nb = 0;
  std::vector<double> phi;
  std::vector<Point> dphi;
  std::vector<Hess> d2phi;
  double value(int q, int k) const { return phi[static_cast<std::size_t>(q * nb + k)]; }
  Point grad(int q, int k) const { return dphi[static_cast<std::size_t>(q * nb + k)]; }
  Hess hess(int q, int k) const { return d2phi[static_cast<std::size_t>(q * nb + k)]; }
};

const Tabulation& tabulate(int m, int order);

// Orthonormal Legendre polynomials on [0,1].
void legendre01(int k, double s, std::span<double> out);

}  // namespace apx
