#pragma once

#include <cmath>
#include <string_view>

namespace icm::pairwise {

enum class Direction { x_causes_y, y_causes_x, undecided };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::x_causes_y: return "x_causes_y";
    case Direction::y_causes_x: return "y_causes_x";
    case Direction::undecided: break;
  }
  return "undecided";
}

struct DirectionVerdict {
  Direction direction = Direction::undecided;
  double forward_ratio = 1.0;
  double backward_ratio = 1.0;
  double margin = 0.0;  // |log forward| - |log backward|
  double threshold = 0.0;
};

/// The direction whose generic ratio is closer to one (in log scale) wins;
/// within `threshold` of a tie the verdict is undecided.
inline DirectionVerdict decide(double forward_ratio, double backward_ratio, double threshold) {
  DirectionVerdict v;
  v.forward_ratio = forward_ratio;
  v.backward_ratio = backward_ratio;
  v.threshold = threshold;
  v.margin = std::abs(std::log(forward_ratio)) - std::abs(std::log(backward_ratio));
  if (std::abs(v.margin) < threshold)
    v.direction = Direction::undecided;
  else
    v.direction = v.margin < 0.0 ? Direction::x_causes_y : Direction::y_causes_x;
  return v;
}

}  // namespace icm::pairwise
