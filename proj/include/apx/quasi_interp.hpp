#pragma once

#include <span>
#include <vector>

#include "apx/fe_space.hpp"

namespace apx {

// Solves A x = b for symmetric positive definite A: sparse Cholesky up to
// 5e4 unknowns, preconditioned CG to the relative tolerance beyond.
Eigen::VectorXd solve_spd(const SparseMatrix& A, const Eigen::VectorXd& b, double tol = 1e-10);

// Dual functionals of the nodal basis. On element tau the local Lagrange
// points that are nodes of N_P carry eta_{tau,z}, the reference dual function
// scaled by 1/|det|; n_z counts those elements. Constrained (hanging) local
// points carry no functional, which keeps <dual_z, phi_z'> = delta exactly.
class DualBasis {
 public:
  explicit DualBasis(const FeSpace& V);

  const FeSpace& space() const { return V_; }
  int count(int z) const { return n_[static_cast<std::size_t>(z)]; }
  // Node carried by local point k of element e, or -1.
  int carrier(int e, int k) const { return carrier_[static_cast<std::size_t>(e * V_.local_size() + k)]; }
  // Value of dual_z restricted to element e (local point k) at reference point r.
  double eta(int e, int k, Point r) const;

 private:
  FeSpace V_;
  std::vector<int> n_;
  std::vector<int> carrier_;
};

// Q_P u = sum_z <u, dual_z> phi_z.
FeFunction q_interp(const DualBasis& D, const Field& u, int quad_order = -1);
FeFunction q_interp(const FeSpace& V, const Field& u, int quad_order = -1);

struct LocalApprox {
  std::vector<double> coef;  // Lagrange coefficients of degree m on the reference triangle
  double residual = 0;       // ||u - Pi u||_{L^p0(tau)}
  int iterations = 0;
  bool converged = true;
};

inline double default_p0(double p) { return std::min(1.0, p) / 2.0; }
inline int default_local_order(int m) { return 2 * m + 4; }

// Near-best L^p0(tau) polynomial approximation by damped iteratively
// reweighted least squares on a fixed quadrature grid (p0 = 2: projection).
LocalApprox local_poly_approx(const Field& u, const Affine& A, double p0, int m, int quad_order = -1);
// Same from u sampled at triangle_rule(quad_order) points; area = |tau|.
LocalApprox local_poly_approx_values(std::span<const double> uq, double area, double p0, int m, int quad_order);

// Q~_P u = Q_P Pi_P u, Pi_P applied elementwise.
FeFunction q_tilde(const DualBasis& D, const Field& u, double p0, int quad_order = -1);
FeFunction q_tilde(const FeSpace& V, const Field& u, double p0, int quad_order = -1);

// Scott-Zhang interpolant: edge averages for nodes on edges (lowest edge index,
// interior edges first), element averages for interior nodes. Masked nodes are zero.
FeFunction scott_zhang(const FeSpace& V, const Field& u, int quad_order = -1);

// Best approximation in L2 (elementwise sum over G) and in the full H1 norm.
FeFunction l2_projection(const FeSpace& V, const Field& u, std::span<const int> G = {}, int quad_order = -1);
FeFunction h1_projection(const FeSpace& V, const Field& u, int quad_order = -1);

struct BestApprox {
  double error = 0;
  bool surrogate = false;
  double p0 = 2;  // local exponent used by the surrogate
};

// E(u, V)_{L^p(G)}: exact for p = 2, otherwise ||u - Q~u||_{L^p(G)}
// (continuous) or the elementwise Pi_{p0} error with p0 = p (broken).
BestApprox best_approx_error(const Field& u, const FeSpace& V, double p, std::span<const int> G = {},
                             double p0 = -1, int quad_order = -1);

}  // namespace apx
