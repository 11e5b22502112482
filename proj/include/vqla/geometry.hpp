#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace vqla {

// Axis-aligned pixel box, origin top-left. Coordinates address half-open
// intervals [x1,x2) x [y1,y2), so width is exactly x2-x1 and two boxes that
// share an edge have zero overlap.
struct BoundingBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  bool valid() const { return x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(x2 - x1) * static_cast<std::int64_t>(y2 - y1);
  }
  double center_x() const { return (x1 + x2) / 2.0; }
  double center_y() const { return (y1 + y2) / 2.0; }

  BoundingBox translated(int dx, int dy) const { return {x1 + dx, y1 + dy, x2 + dx, y2 + dy}; }

  bool operator==(const BoundingBox&) const = default;
};

struct ImageDims {
  int width = 1280;
  int height = 1024;

  bool valid() const { return width > 0 && height > 0; }
};

enum class Quadrant { LT, RT, LB, RB };

inline const char* quadrant_name(Quadrant q) {
  switch (q) {
    case Quadrant::LT: return "LT";
    case Quadrant::RT: return "RT";
    case Quadrant::LB: return "LB";
    case Quadrant::RB: return "RB";
  }
  return "?";
}

// Locative phrase used in answers and reasoning text ("left-top", ...).
inline const char* quadrant_term(Quadrant q) {
  switch (q) {
    case Quadrant::LT: return "left-top";
    case Quadrant::RT: return "right-top";
    case Quadrant::LB: return "left-bottom";
    case Quadrant::RB: return "right-bottom";
  }
  return "?";
}

std::optional<Quadrant> quadrant_from_name(const std::string& name);

// Exact intersection-over-union on half-open integer boxes. Throws
// DegenerateBox if either box violates x1 < x2, y1 < y2.
double iou(const BoundingBox& a, const BoundingBox& b);

// Quadrant of a point under the half-plane convention: left/top strictly
// below the midlines, right/bottom at-or-above. Pre: 0 <= x <= W, 0 <= y <= H
// (throws OutOfFrame otherwise).
Quadrant quadrant_of(double x, double y, const ImageDims& dims);

inline Quadrant quadrant_of_center(const BoundingBox& b, const ImageDims& dims) {
  return quadrant_of(b.center_x(), b.center_y(), dims);
}

}  // namespace vqla
