#include "apx/poly.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "apx/quadrature.hpp"

namespace apx {

namespace {

struct Factor {
  double f = 1, d1 = 0, d2 = 0;
};

// prod_{l<b} (m t - l)/(l+1) and its first two derivatives
Factor factor(int m, int b, double t) {
  Factor r;
  for (int l = 0; l < b; ++l) {
    double g = (m * t - l) / (l + 1.0), gp = m / (l + 1.0);
    r.d2 = r.d2 * g + 2.0 * r.d1 * gp;
    r.d1 = r.d1 * g + r.f * gp;
    r.f *= g;
  }
  return r;
}

void check_degree(int m) {
  if (m < 0 || m > max_poly_degree) throw std::out_of_range("polynomial degree " + std::to_string(m) + " not supported");
}

}  // namespace

LagrangeBasis::LagrangeBasis(int m) : m_(m), lat_(lattice(m)) {
  check_degree(m);
  for (auto lp : lat_) {
    if (m == 0) nodes_.push_back({1.0 / 3.0, 1.0 / 3.0});
    else nodes_.push_back({static_cast<double>(lp.b1) / m, static_cast<double>(lp.b2) / m});
  }
  const auto& rule = triangle_rule(2 * m);
  int n = size();
  mass_ = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    values(rule.points[q], v);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) mass_(i, j) += rule.weights[q] * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  }
  mass_inv_ = mass_.llt().solve(Eigen::MatrixXd::Identity(n, n));
}

void LagrangeBasis::values(Point r, std::span<double> out) const {
  double l0 = 1.0 - r.x - r.y;
  for (std::size_t k = 0; k < lat_.size(); ++k) {
    const auto& b = lat_[k];
    out[k] = factor(m_, b.b0, l0).f * factor(m_, b.b1, r.x).f * factor(m_, b.b2, r.y).f;
  }
}

void LagrangeBasis::gradients(Point r, std::span<Point> out) const {
  double l0 = 1.0 - r.x - r.y;
  for (std::size_t k = 0; k < lat_.size(); ++k) {
    const auto& b = lat_[k];
    Factor f0 = factor(m_, b.b0, l0), f1 = factor(m_, b.b1, r.x), f2 = factor(m_, b.b2, r.y);
    out[k] = {-f0.d1 * f1.f * f2.f + f0.f * f1.d1 * f2.f, -f0.d1 * f1.f * f2.f + f0.f * f1.f * f2.d1};
  }
}

void LagrangeBasis::hessians(Point r, std::span<Hess> out) const {
  double l0 = 1.0 - r.x - r.y;
  for (std::size_t k = 0; k < lat_.size(); ++k) {
    const auto& b = lat_[k];
    Factor a = factor(m_, b.b0, l0), c = factor(m_, b.b1, r.x), e = factor(m_, b.b2, r.y);
    out[k].xx = a.d2 * c.f * e.f - 2.0 * a.d1 * c.d1 * e.f + a.f * c.d2 * e.f;
    out[k].xy = a.d2 * c.f * e.f - a.d1 * c.f * e.d1 - a.d1 * c.d1 * e.f + a.f * c.d1 * e.d1;
    out[k].yy = a.d2 * c.f * e.f - 2.0 * a.d1 * c.f * e.d1 + a.f * c.f * e.d2;
  }
}

double LagrangeBasis::eval(std::span<const double> coef, Point r) const {
  std::array<double, 64> buf{};
  std::span<double> v(buf.data(), lat_.size());
  values(r, v);
  double s = 0;
  for (std::size_t k = 0; k < lat_.size(); ++k) s += coef[k] * v[k];
  return s;
}

Point LagrangeBasis::eval_gradient(std::span<const double> coef, Point r) const {
  std::array<Point, 64> buf{};
  std::span<Point> g(buf.data(), lat_.size());
  gradients(r, g);
  Point s{};
  for (std::size_t k = 0; k < lat_.size(); ++k) s = s + coef[k] * g[k];
  return s;
}

const LagrangeBasis& lagrange(int m) {
  check_degree(m);
  static const auto table = [] {
    std::vector<std::unique_ptr<LagrangeBasis>> t;
    for (int k = 0; k <= max_poly_degree; ++k) t.push_back(std::make_unique<LagrangeBasis>(k));
    return t;
  }();
  return *table[static_cast<std::size_t>(m)];
}

const Tabulation& tabulate(int m, int order) {
  check_degree(m);
  if (order < 0 || order > max_quadrature_order) throw std::out_of_range("quadrature order " + std::to_string(order) + " not available");
  struct Slot {
    std::once_flag once;
    Tabulation t;
  };
  static std::array<std::array<Slot, max_quadrature_order + 1>, max_poly_degree + 1> slots;
  auto& s = slots[static_cast<std::size_t>(m)][static_cast<std::size_t>(order)];
  std::call_once(s.once, [&] {
    const auto& B = lagrange(m);
    const auto& rule = triangle_rule(order);
    Tabulation& t = s.t;
    t.nq = static_cast<int>(rule.points.size());
    t.nb = B.size();
    auto total = static_cast<std::size_t>(t.nq * t.nb);
    t.phi.resize(total);
    t.dphi.resize(total);
    t.d2phi.resize(total);
    for (int q = 0; q < t.nq; ++q) {
      auto off = static_cast<std::size_t>(q * t.nb);
      auto nb = static_cast<std::size_t>(t.nb);
      Point r = rule.points[static_cast<std::size_t>(q)];
      B.values(r, std::span(t.phi).subspan(off, nb));
      B.gradients(r, std::span(t.dphi).subspan(off, nb));
      B.hessians(r, std::span(t.d2phi).subspan(off, nb));
    }
  });
  return s.t;
}

void legendre01(int k, double s, std::span<double> out) {
  double x = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = x;
  for (int j = 0; j <= k; ++j) {
    double pj;
    if (j == 0) pj = p0;
    else if (j == 1) pj = p1;
    else {
      pj = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = pj;
    }
    out[static_cast<std::size_t>(j)] = std::sqrt(2.0 * j + 1.0) * pj;
  }
}

}  // namespace apx
