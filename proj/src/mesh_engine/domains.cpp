#include "apx/mesh.hpp"

namespace apx {

std::shared_ptr<Forest> make_domain(std::string_view name, Rule rule) {
  if (name == "unit_square") {
    return std::make_shared<Forest>("unit_square", rule,
                                    std::vector<Point>{{0, 0}, {1, 0}, {1, 1}, {0, 1}},
                                    std::vector<std::array<int, 3>>{{0, 1, 2}, {0, 2, 3}});
  }
  if (name == "l_shape") {
    // (-1,1)^2 minus [0,1]x[-1,0]; three unit squares cut along diagonals
    // through the re-entrant corner where possible.
    std::vector<Point> v{{-1, -1}, {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
    std::vector<std::array<int, 3>> t{{0, 1, 3}, {0, 3, 2}, {3, 6, 5}, {3, 5, 2}, {3, 4, 7}, {3, 7, 6}};
    return std::make_shared<Forest>("l_shape", rule, std::move(v), std::move(t));
  }
  throw MeshError("unknown domain '" + std::string(name) + "'");
}

}  // namespace apx
