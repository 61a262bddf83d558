#pragma once

#include <vector>

#include "apx/geometry.hpp"

namespace apx {

// Rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct TriangleRule {
  int order = 0;
  std::vector<Point> points;
  std::vector<double> weights;
};

// Rule on [0,1]; weights sum to 1.
struct LineRule {
  int order = 0;
  std::vector<double> points;
  std::vector<double> weights;
};

inline constexpr int max_quadrature_order = 40;

// Collapsed Gauss product rule exact for total degree <= order.
const TriangleRule& triangle_rule(int order);
// Gauss-Legendre rule exact for degree <= order.
const LineRule& line_rule(int order);

}  // namespace apx
