#include <cmath>
#include <cstdio>
#include <sstream>

#include "apx/fe_space.hpp"
#include "apx/parallel.hpp"
#include "apx/quadrature.hpp"

namespace apx {

SecondOrderForm mass_form() { return {{}, {}, [](Point) { return 1.0; }}; }

SecondOrderForm stiffness_form() {
  return {[](Point) { return std::array<double, 4>{1, 0, 0, 1}; }, {}, {}};
}

SecondOrderForm h1_form() {
  return {[](Point) { return std::array<double, 4>{1, 0, 0, 1}; }, {}, [](Point) { return 1.0; }};
}

namespace {

int resolve_order(const FeSpace& V, int quad_order) {
  int order = quad_order < 0 ? default_quad_order(V.degree()) : quad_order;
  if (order < 2 * V.degree())
    throw FeError("quadrature order " + std::to_string(order) + " below the exactness requirement " +
                  std::to_string(2 * V.degree()));
  return order;
}

// C^T K C for the element map C (nb x nd) and local matrix K (nb x nb).
void condense(const FeSpace& V, int e, const Eigen::MatrixXd& K, Eigen::MatrixXd& out) {
  auto map = V.element_map(e);
  auto nd = static_cast<Eigen::Index>(V.element_dofs(e).size());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> C(map.data(), V.local_size(), nd);
  out = C.transpose() * K * C;
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw FeError(std::string("coefficient field '") + what + "' not evaluable");
}

}  // namespace

SparseMatrix assemble_gram(const FeSpace& V, const SecondOrderForm& form, int quad_order) {
  int order = resolve_order(V, quad_order);
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  const int ne = V.num_elements(), nb = tab.nb;
  std::vector<Eigen::MatrixXd> local(static_cast<std::size_t>(ne));
  parallel_for(static_cast<std::size_t>(ne), [&](std::size_t ei) {
    int e = static_cast<int>(ei);
    const Affine& A = V.affine(e);
    double jac = 2.0 * A.area();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nb, nb);
    std::vector<Point> G(static_cast<std::size_t>(nb));
    for (int q = 0; q < tab.nq; ++q) {
      Point x = A.map(rule.points[static_cast<std::size_t>(q)]);
      double w = rule.weights[static_cast<std::size_t>(q)] * jac;
      for (int k = 0; k < nb; ++k) G[static_cast<std::size_t>(k)] = A.grad(tab.grad(q, k));
      if (form.a) {
        auto a = form.a(x);
        for (double v : a) check_finite(v, "a");
        for (int i = 0; i < nb; ++i) {
          Point gi = G[static_cast<std::size_t>(i)];
          for (int j = 0; j < nb; ++j) {
            Point gj = G[static_cast<std::size_t>(j)];
            K(i, j) += w * (gi.x * (a[0] * gj.x + a[1] * gj.y) + gi.y * (a[2] * gj.x + a[3] * gj.y));
          }
        }
      }
      if (form.b) {
        Point b = form.b(x);
        check_finite(b.x + b.y, "b");
        for (int i = 0; i < nb; ++i)
          for (int j = 0; j < nb; ++j) K(i, j) += w * dot(b, G[static_cast<std::size_t>(j)]) * tab.value(q, i);
      }
      if (form.c) {
        double c = form.c(x);
        check_finite(c, "c");
        for (int i = 0; i < nb; ++i)
          for (int j = 0; j < nb; ++j) K(i, j) += w * c * tab.value(q, i) * tab.value(q, j);
      }
    }
    condense(V, e, K, local[ei]);
  });
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < ne; ++e) {
    auto dofs = V.element_dofs(e);
    const auto& Ae = local[static_cast<std::size_t>(e)];
    for (std::size_t i = 0; i < dofs.size(); ++i)
      for (std::size_t j = 0; j < dofs.size(); ++j)
        trip.emplace_back(dofs[i], dofs[j], Ae(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  SparseMatrix M(V.dim(), V.dim());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

namespace {

template <class Kernel>
Eigen::VectorXd assemble_vector(const FeSpace& V, int quad_order, Kernel&& kernel) {
  int order = resolve_order(V, quad_order);
  const auto& rule = triangle_rule(order);
  const auto& tab = tabulate(V.degree(), order);
  const int ne = V.num_elements(), nb = tab.nb;
  std::vector<Eigen::VectorXd> local(static_cast<std::size_t>(ne));
  parallel_for(static_cast<std::size_t>(ne), [&](std::size_t ei) {
    int e = static_cast<int>(ei);
    const Affine& A = V.affine(e);
    double jac = 2.0 * A.area();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nb);
    for (int q = 0; q < tab.nq; ++q) {
      Point x = A.map(rule.points[static_cast<std::size_t>(q)]);
      double w = rule.weights[static_cast<std::size_t>(q)] * jac;
      kernel(A, x, w, q, tab, b);
    }
    auto map = V.element_map(e);
    auto nd = static_cast<Eigen::Index>(V.element_dofs(e).size());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> C(map.data(), nb, nd);
    local[ei] = C.transpose() * b;
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(V.dim());
  for (int e = 0; e < ne; ++e) {
    auto dofs = V.element_dofs(e);
    for (std::size_t i = 0; i < dofs.size(); ++i) out[dofs[i]] += local[static_cast<std::size_t>(e)][static_cast<Eigen::Index>(i)];
  }
  return out;
}

}  // namespace

Eigen::VectorXd assemble_load(const FeSpace& V, const Field& f, int quad_order) {
  return assemble_vector(V, quad_order, [&](const Affine&, Point x, double w, int q, const Tabulation& tab, Eigen::VectorXd& b) {
    double fx = f(x);
    for (int k = 0; k < tab.nb; ++k) b[k] += w * fx * tab.value(q, k);
  });
}

Eigen::VectorXd assemble_h1_load(const FeSpace& V, const Field& u, int quad_order) {
  if (!u.has_gradient()) throw FieldError("field '" + u.name + "' has no gradient evaluator");
  return assemble_vector(V, quad_order, [&](const Affine& A, Point x, double w, int q, const Tabulation& tab, Eigen::VectorXd& b) {
    double ux = u(x);
    Point gx = u.grad(x);
    for (int k = 0; k < tab.nb; ++k) b[k] += w * (ux * tab.value(q, k) + dot(gx, A.grad(tab.grad(q, k))));
  });
}

std::string triplets_to_string(const SparseMatrix& A) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> R(A);
  std::ostringstream os;
  char buf[96];
  for (int r = 0; r < R.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      os << buf;
    }
  return os.str();
}

// ---------------------------------------------------------------- projections

std::vector<double> project_poly_values(std::span<const double> uq, int d, int quad_order) {
  const auto& rule = triangle_rule(quad_order);
  const auto& tab = tabulate(d, quad_order);
  const auto& B = lagrange(d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(tab.nb);
  for (int q = 0; q < tab.nq; ++q)
    for (int k = 0; k < tab.nb; ++k) b[k] += rule.weights[static_cast<std::size_t>(q)] * uq[static_cast<std::size_t>(q)] * tab.value(q, k);
  Eigen::VectorXd c = B.mass_inverse() * b;
  return {c.data(), c.data() + c.size()};
}

std::vector<double> project_poly_element(const Field& u, const Affine& A, int d, int quad_order) {
  int order = quad_order < 0 ? default_quad_order(d) + 2 : quad_order;
  const auto& rule = triangle_rule(order);
  std::vector<double> uq(rule.points.size());
  for (std::size_t q = 0; q < uq.size(); ++q) uq[q] = u(A.map(rule.points[q]));
  return project_poly_values(uq, d, order);
}

double EdgePoly::operator()(double s) const {
  std::array<double, 16> buf{};
  int k = static_cast<int>(c.size()) - 1;
  legendre01(k, s, std::span<double>(buf.data(), c.size()));
  double r = 0;
  for (std::size_t i = 0; i < c.size(); ++i) r += c[i] * buf[i];
  return r;
}

EdgePoly project_poly_edge(const std::function<double(double)>& g, int k, int quad_order) {
  if (k < 0 || k > 12) throw FeError("edge polynomial degree out of range");
  int order = quad_order < 0 ? 2 * k + 4 : quad_order;
  const auto& rule = line_rule(order);
  EdgePoly p;
  p.c.assign(static_cast<std::size_t>(k + 1), 0.0);
  std::array<double, 16> buf{};
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    legendre01(k, rule.points[q], std::span<double>(buf.data(), p.c.size()));
    double gv = g(rule.points[q]);
    for (std::size_t i = 0; i < p.c.size(); ++i) p.c[i] += rule.weights[q] * gv * buf[i];
  }
  return p;
}

}  // namespace apx
