#include <cmath>
#include <numbers>
#include <random>

#include "apx/experiment.hpp"

namespace apx {

namespace {

using std::numbers::pi;

Field smooth_sine() {
  return {[](Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); },
          [](Point p) {
            return Point{pi * std::cos(pi * p.x) * std::sin(pi * p.y), pi * std::sin(pi * p.x) * std::cos(pi * p.y)};
          },
          "smooth_sine"};
}

// r^a sin(a t) with the angle measured in [0, 2 pi).
Field corner(double a) {
  auto polar = [](Point x) {
    double t = std::atan2(x.y, x.x);
    return std::pair{std::hypot(x.x, x.y), t < 0 ? t + 2 * pi : t};
  };
  return {[=](Point x) {
            auto [r, t] = polar(x);
            return r == 0 ? 0.0 : std::pow(r, a) * std::sin(a * t);
          },
          [=](Point x) {
            auto [r, t] = polar(x);
            if (r == 0) return Point{};
            double c = a * std::pow(r, a - 1);
            return Point{c * std::sin((a - 1) * t), c * std::cos((a - 1) * t)};
          },
          "lshape_corner"};
}

Field line_kink(double beta) {
  return {[=](Point p) { return std::pow(std::abs(p.x - p.y), beta); },
          [=](Point p) {
            double s = p.x - p.y;
            if (s == 0) return Point{};
            double g = beta * std::pow(std::abs(s), beta - 1) * (s > 0 ? 1 : -1);
            return Point{g, -g};
          },
          "line_kink"};
}

// Piecewise constant 1 / 10 on the 4x4 grid of [0,1]^2, continued periodically.
Field checkerboard() {
  return {[](Point p) {
            auto k = static_cast<long>(std::floor(4 * p.x)) + static_cast<long>(std::floor(4 * p.y));
            return (k % 2 + 2) % 2 == 0 ? 1.0 : 10.0;
          },
          {}, "checkerboard"};
}

constexpr int native_level = 2;

Field fe_native() {
  UniformChain chain(Partition::initial(make_domain("unit_square", Rule::nvb)));
  auto V = FeSpace::continuous(chain.level(native_level), 1);
  FeFunction v(V);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < V.dim(); ++i) v.coef()[i] = U(rng);
  auto f = v.field("fe_native");
  return f;
}

EllipticProblem sine_square(const Forest& f) {
  Field u = smooth_sine();
  auto h = [](Point p) {
    double s = std::sin(pi * p.x) * std::sin(pi * p.y), c = std::cos(pi * p.x) * std::cos(pi * p.y);
    return Hess{-pi * pi * s, pi * pi * c, -pi * pi * s};
  };
  auto p = manufactured(poisson({}, whole_boundary(f), "sine_square"), u, h);
  return p;
}

// Variable diffusion (1 + x^2/2) I with drift and reaction, sine solution.
EllipticProblem convection_square(const Forest& f) {
  EllipticProblem p = poisson({}, whole_boundary(f), "convection_square");
  p.a = [](Point x) {
    double g = 1 + 0.5 * x.x * x.x;
    return std::array<double, 4>{g, 0, 0, g};
  };
  p.a_div = [](Point x) { return Point{x.x, 0}; };
  p.b = [](Point) { return Point{1, 0.5}; };
  p.c = [](Point) { return 1.0; };
  auto h = [](Point x) {
    double s = std::sin(pi * x.x) * std::sin(pi * x.y), c = std::cos(pi * x.x) * std::cos(pi * x.y);
    return Hess{-pi * pi * s, pi * pi * c, -pi * pi * s};
  };
  return manufactured(std::move(p), smooth_sine(), h);
}

}  // namespace

const std::vector<FieldCatalogEntry>& catalog_list() {
  static const std::vector<FieldCatalogEntry> c = {
      {"smooth_sine", smooth_sine(), "unit_square",
       "analytic: A^alpha_{p,q} for every alpha below the saturation m + 1 (energy: m); uniform rate m/2", -1},
      {"lshape_corner", corner(2.0 / 3.0), "l_shape",
       "H^{1+s} only for s < 2/3, so uniform energy rate 1/3 for m = 1; B^alpha_{tau,tau}, 1/tau = alpha/2 + 1/2, "
       "for every alpha, so adaptive energy rate m/2",
       -1},
      {"line_kink", line_kink(0.75), "unit_square",
       "|x - y|^0.75: H^{1+s} for s < 1/4 along a line singularity; uniform energy rate 1/8 for m = 1", -1},
      {"fe_native", fe_native(), "unit_square",
       "random member of S^1 on uniform NVB level 2: E(u, S_j) = 0 for j >= 2, so the multilevel tail vanishes",
       native_level},
      {"checkerboard", checkerboard(), "unit_square",
       "coefficient 1/10 on the 4x4 grid: broken P_0 error 0 on partitions resolving the grid; otherwise O(1)", -1},
  };
  return c;
}

const FieldCatalogEntry& catalog_field(std::string_view name) {
  for (const auto& e : catalog_list())
    if (e.name == name) return e;
  std::string known;
  for (const auto& e : catalog_list()) known += (known.empty() ? "" : ", ") + e.name;
  throw CatalogError("unknown field '" + std::string(name) + "' (catalog: " + known + ")");
}

const std::vector<ProblemCatalogEntry>& problem_list() {
  static const std::vector<ProblemCatalogEntry> c = {
      {"poisson_lshape", "l_shape",
       "-Laplace u = f, u = r^{2/3} sin(2 theta/3) times a smooth cutoff, homogeneous Dirichlet data",
       [](const Forest&) { return poisson_lshape(); }},
      {"sine_square", "unit_square", "-Laplace u = f, u = sin(pi x) sin(pi y)", sine_square},
      {"convection_square", "unit_square",
       "-(1 + x^2/2) Laplace u + (1, 1/2) . grad u + u = f, u = sin(pi x) sin(pi y)", convection_square},
  };
  return c;
}

const ProblemCatalogEntry& catalog_problem(std::string_view name) {
  for (const auto& e : problem_list())
    if (e.name == name) return e;
  std::string known;
  for (const auto& e : problem_list()) known += (known.empty() ? "" : ", ") + e.name;
  throw CatalogError("unknown problem '" + std::string(name) + "' (catalog: " + known + ")");
}

}  // namespace apx
