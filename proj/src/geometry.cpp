#include "vqla/geometry.hpp"

#include <algorithm>

#include "vqla/errors.hpp"

namespace vqla {

std::optional<Quadrant> quadrant_from_name(const std::string& name) {
  if (name == "LT") return Quadrant::LT;
  if (name == "RT") return Quadrant::RT;
  if (name == "LB") return Quadrant::LB;
  if (name == "RB") return Quadrant::RB;
  return std::nullopt;
}

static void require_valid(const BoundingBox& b, const char* which) {
  if (!b.valid()) {
    throw DegenerateBox(std::string(which) + " box [" + std::to_string(b.x1) + "," +
                        std::to_string(b.y1) + "," + std::to_string(b.x2) + "," +
                        std::to_string(b.y2) + "] violates x1 < x2, y1 < y2, coords >= 0");
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  require_valid(a, "first");
  require_valid(b, "second");

  const int ix1 = std::max(a.x1, b.x1);
  const int iy1 = std::max(a.y1, b.y1);
  const int ix2 = std::min(a.x2, b.x2);
  const int iy2 = std::min(a.y2, b.y2);

  if (ix1 >= ix2 || iy1 >= iy2) return 0.0;

  const std::int64_t inter =
      static_cast<std::int64_t>(ix2 - ix1) * static_cast<std::int64_t>(iy2 - iy1);
  const std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Quadrant quadrant_of(double x, double y, const ImageDims& dims) {
  if (!dims.valid()) {
    throw OutOfFrame("image dims must be positive");
  }
  if (x < 0 || y < 0 || x > dims.width || y > dims.height) {
    throw OutOfFrame("center (" + std::to_string(x) + "," + std::to_string(y) +
                     ") outside frame " + std::to_string(dims.width) + "x" +
                     std::to_string(dims.height));
  }
  const double mx = dims.width / 2.0;
  const double my = dims.height / 2.0;
  if (x < mx && y < my) return Quadrant::LT;
  if (x >= mx && y < my) return Quadrant::RT;
  if (x < mx && y >= my) return Quadrant::LB;
  return Quadrant::RB;
}

}  // namespace vqla
