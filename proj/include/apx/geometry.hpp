#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace apx {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

inline double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

inline double diameter(Point a, Point b, Point c) {
  return std::max({norm(b - a), norm(c - b), norm(a - c)});
}

// Undirected edge key: smaller id in the high word.
inline std::uint64_t edge_key(int a, int b) {
  auto lo = static_cast<std::uint32_t>(a < b ? a : b);
  auto hi = static_cast<std::uint32_t>(a < b ? b : a);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}
inline int edge_lo(std::uint64_t k) { return static_cast<int>(k >> 32); }
inline int edge_hi(std::uint64_t k) { return static_cast<int>(k & 0xffffffffu); }

// Affine map from the reference triangle (0,0),(1,0),(0,1).
struct Affine {
  Point o;
  double j00, j01, j10, j11;  // columns are v1-v0 and v2-v0
  double det;

  Affine() = default;
  Affine(Point a, Point b, Point c)
      : o(a), j00(b.x - a.x), j01(c.x - a.x), j10(b.y - a.y), j11(c.y - a.y) {
    det = j00 * j11 - j01 * j10;
  }
  Point map(double xi, double eta) const { return {o.x + j00 * xi + j01 * eta, o.y + j10 * xi + j11 * eta}; }
  Point map(Point r) const { return map(r.x, r.y); }
  Point inverse(Point p) const {
    double dx = p.x - o.x, dy = p.y - o.y;
    return {(j11 * dx - j01 * dy) / det, (-j10 * dx + j00 * dy) / det};
  }
  // physical gradient from reference gradient: J^{-T} g
  Point grad(Point g) const {
    return {(j11 * g.x - j10 * g.y) / det, (-j01 * g.x + j00 * g.y) / det};
  }
  // inverse Jacobian entries, K = J^{-1}
  std::array<double, 4> inv() const { return {j11 / det, -j01 / det, -j10 / det, j00 / det}; }
  double area() const { return 0.5 * std::abs(det); }
};

}  // namespace apx
