#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apx/adaptive.hpp"
#include "apx/poly.hpp"

namespace apx {

class EllipticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear solver failure; carries the residual norms seen so far.
class SolverError : public EllipticError {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : EllipticError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

// T u = -a_ij d_i d_j u + b_k d_k u + c u with homogeneous Dirichlet data on the
// boundary segments gamma and the natural condition a grad u . n = 0 elsewhere.
struct EllipticProblem {
  std::string name;
  std::function<std::array<double, 4>(Point)> a;  // symmetric, row-major; empty: identity
  std::function<Point(Point)> a_div;              // (d_i a_i1, d_i a_i2); required when a is set
  std::function<Point(Point)> b;
  std::function<double(Point)> c;
  Field f;
  std::vector<int> gamma;
  std::optional<Field> u_exact;  // with gradient

  std::array<double, 4> a_at(Point x) const { return a ? a(x) : std::array<double, 4>{1, 0, 0, 1}; }
  Point b_at(Point x) const { return b ? b(x) : Point{}; }
  double c_at(Point x) const { return c ? c(x) : 0.0; }
  // Bilinear form after integrating the principal part by parts:
  // a_ij d_j u d_i v + (b_k + d_i a_ik) d_k u v + c u v.
  SecondOrderForm form() const;
};

// -Laplace u = f on a domain with the given Dirichlet segments.
EllipticProblem poisson(Field f, std::vector<int> gamma, std::string name = "poisson");
// Sets f := T u for u with a known Hessian and records u as the exact solution.
EllipticProblem manufactured(EllipticProblem p, Field u, std::function<Hess(Point)> hess);
// Homogeneous Dirichlet problem on the L-shape whose solution is the corner
// singularity r^{2/3} sin(2 theta/3) times a smooth radial cutoff (1 below r0, 0 above r1).
EllipticProblem poisson_lshape(double r0 = 0.0, double r1 = 1.0);

// Boundary segments of the initial triangulation whose ends and midpoint satisfy pred.
std::vector<int> boundary_segments_where(const Forest& f, const std::function<bool(Point)>& pred);

// Smallest eigenvalue of a over the element centroids of P.
double min_coefficient_eigenvalue(const EllipticProblem& p, const Partition& P);

struct LinearSystem {
  FeSpace V;
  SparseMatrix A;  // row: test function, column: trial function
  Eigen::VectorXd rhs;
};

// quad_order < 0: default_quad_order(m) + 2.
LinearSystem assemble_system(const EllipticProblem& p, const FeSpace& V, int quad_order = -1);
// Galerkin functional of a field: a(u, phi_z) for every dof.
Eigen::VectorXd form_action(const EllipticProblem& p, const FeSpace& V, const Field& u, int quad_order = -1);

struct SolveInfo {
  double min_pivot = std::numeric_limits<double>::quiet_NaN();  // symmetric direct solves only
  double residual = 0;                                           // relative
  bool direct = true;
};

// Direct factorization up to 5e4 unknowns, Krylov iteration beyond. Symmetric
// systems with a nonpositive pivot are rejected as indefinite.
FeFunction galerkin_solve(const LinearSystem& s, double tol = 1e-10, SolveInfo* info = nullptr);
FeFunction galerkin_solve(const EllipticProblem& p, const FeSpace& V, SolveInfo* info = nullptr);

struct EdgeResidual {
  int a = -1, b = -1;        // vertex ids
  std::array<int, 2> elem{-1, -1};  // elements on each side, elem[1] = -1 on Neumann edges
  double h = 0;              // edge length
  double eta2 = 0;           // h_e ||r_e||^2
  double osc2 = 0;           // h_e ||(1 - Pi_e) r_e||^2
};

struct EstimatorBreakdown {
  int d = 0;
  std::vector<double> elem_eta2;  // h_tau^2 ||r_tau||^2
  std::vector<double> elem_osc2;  // h_tau^2 ||(1 - Pi_tau) r_tau||^2
  std::vector<EdgeResidual> edges;
  double eta2 = 0, osc2 = 0;
  double energy_err2 = std::numeric_limits<double>::quiet_NaN();  // ||u - v||_{H^1}^2 when u is known
  double rho2 = std::numeric_limits<double>::quiet_NaN();

  double eta() const { return std::sqrt(eta2); }
  double osc() const { return std::sqrt(osc2); }
  double rho() const { return std::sqrt(rho2); }
  // Element share of eta^2: element term plus half of each interior edge term
  // (all of a Neumann edge term). Sums to eta^2.
  std::vector<double> element_indicators() const;
};

inline int default_osc_degree(int m) { return std::max(m - 2, 0); }

// eta, osc_d and (with a known solution) rho_d of v in one pass. h_tau = |tau|^{1/2},
// h_e the edge length. Residuals are +inf where f is not finite.
EstimatorBreakdown estimate(const EllipticProblem& p, const FeFunction& v, int d = -1, int quad_order = -1);
// rho_d(u, v, P); throws without an exact solution.
double total_error(const EllipticProblem& p, const FeFunction& v, int d = -1);

// (sum_tau |tau| ||f - Pi_d f||^2_tau)^{1/2}: the weighted L^2_1 error of f from broken P_d.
double load_approx_error(const Field& f, const Partition& P, int d, int quad_order = -1);

// sup_tau |tau|^{theta/2} ||g - P_k g||_{L^inf(tau)} with P_k the L^2(tau) projection,
// the sup sampled on the 66 lattice points of degree 10. Bounds E(g, broken P_k) from
// above; the best error is at least this over projection_inflation(k).
double coeff_class_error(const Field& g, const Partition& P, int k, double theta = 0);
// 1 + Lebesgue constant of the L^2 projection onto P_k on a triangle (sampled).
double projection_inflation(int k);

struct AfemOptions {
  int m = 1;
  int d = -1;  // < 0: default_osc_degree(m)
  double theta = 0.5;
  int max_iter = 10;
  std::size_t max_elements = 0;  // 0: unlimited
};

struct AfemStep {
  int iter = 0;
  std::size_t N = 0;
  double eta = 0, osc = 0;
  double energy_err = std::numeric_limits<double>::quiet_NaN();
  double rho_d = std::numeric_limits<double>::quiet_NaN();
  std::size_t marked = 0;
};

struct AfemTrace {
  std::vector<AfemStep> steps;
  int m = 1, d = 0;
  double theta = 0.5;
  std::optional<Partition> final_partition;
};

class AfemError : public EllipticError {
 public:
  AfemError(const std::string& what, AfemTrace partial) : EllipticError(what), partial_(std::move(partial)) {}
  const AfemTrace& partial() const { return partial_; }

 private:
  AfemTrace partial_;
};

// Smallest set of element indices carrying theta of the total, largest first,
// ties by cell id; theta >= 1 marks everything.
std::vector<int> dorfler_mark(const Partition& P, std::span<const double> ind, double theta);

// SOLVE, ESTIMATE, MARK (Doerfler), REFINE for max_iter rounds, then a final solve.
AfemTrace afem_loop(const EllipticProblem& p, const Partition& P0, const AfemOptions& o = {});

void write_afem_csv(std::ostream& os, const AfemTrace& t);

}  // namespace apx
