#include "apx/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace apx {

namespace {

// Golub-Welsch for Gauss-Legendre on [-1,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(static_cast<std::size_t>(n));
  w.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    x[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    double v0 = es.eigenvectors()(0, k);
    w[static_cast<std::size_t>(k)] = 2.0 * v0 * v0;
  }
}

struct Tables {
  std::array<TriangleRule, max_quadrature_order + 1> tri;
  std::array<LineRule, max_quadrature_order + 1> line;

  Tables() {
    for (int order = 0; order <= max_quadrature_order; ++order) {
      std::vector<double> x, w;
      int n = std::max(1, (order + 2) / 2);
      gauss_legendre(n, x, w);
      auto& L = line[static_cast<std::size_t>(order)];
      L.order = order;
      for (int i = 0; i < n; ++i) {
        L.points.push_back(0.5 * (x[static_cast<std::size_t>(i)] + 1.0));
        L.weights.push_back(0.5 * w[static_cast<std::size_t>(i)]);
      }
      // x = u, y = (1-u) v; the Jacobian adds one degree in u
      int nt = std::max(1, (order + 3) / 2);
      gauss_legendre(nt, x, w);
      auto& T = tri[static_cast<std::size_t>(order)];
      T.order = order;
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nt; ++j) {
          double u = 0.5 * (x[static_cast<std::size_t>(i)] + 1.0);
          double v = 0.5 * (x[static_cast<std::size_t>(j)] + 1.0);
          T.points.push_back({u, (1.0 - u) * v});
          T.weights.push_back(0.25 * w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * (1.0 - u));
        }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

void check(int order) {
  if (order < 0 || order > max_quadrature_order)
    throw std::out_of_range("quadrature order " + std::to_string(order) + " not available");
}

}  // namespace

const TriangleRule& triangle_rule(int order) {
  check(order);
  return tables().tri[static_cast<std::size_t>(order)];
}

const LineRule& line_rule(int order) {
  check(order);
  return tables().line[static_cast<std::size_t>(order)];
}

}  // namespace apx
