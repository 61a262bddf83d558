#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "apx/geometry.hpp"

namespace apx {

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Real-valued function on the domain, optionally with a gradient.
struct Field {
  std::function<double(Point)> value;
  std::function<Point(Point)> gradient;
  std::string name;

  double operator()(Point x) const { return value(x); }
  bool has_gradient() const { return static_cast<bool>(gradient); }
  Point grad(Point x) const {
    if (!gradient) throw FieldError("field '" + name + "' has no gradient evaluator");
    return gradient(x);
  }
};

inline Field constant_field(double c) {
  return {[c](Point) { return c; }, [](Point) { return Point{}; }, "constant"};
}

inline Field scaled(Field f, double c) {
  Field r;
  r.name = f.name;
  if (f.gradient) r.gradient = [g = f.gradient, c](Point x) { return c * g(x); };
  r.value = [v = std::move(f.value), c](Point x) { return c * v(x); };
  return r;
}

inline Field sum(Field a, Field b) {
  Field r;
  r.name = a.name + "+" + b.name;
  if (a.gradient && b.gradient)
    r.gradient = [ga = a.gradient, gb = b.gradient](Point x) { return ga(x) + gb(x); };
  r.value = [va = std::move(a.value), vb = std::move(b.value)](Point x) { return va(x) + vb(x); };
  return r;
}

}  // namespace apx
