#ifndef PHASECHANGE_GEOMETRY_HPP_
#define PHASECHANGE_GEOMETRY_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phasechange::env {

// Discrete control actions. The integer encoding is stable and matches
// a0..a3: remove heat, add heat, negative work, positive work.
enum class Action : int {
  kQMinus = 0,
  kQPlus = 1,
  kWMinus = 2,
  kWPlus = 3,
};

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::kQMinus, Action::kQPlus, Action::kWMinus, Action::kWPlus};

std::string_view ActionName(Action action);

// Throws std::out_of_range for values outside 0..3.
Action ActionFromIndex(int index);

inline constexpr int ToIndex(Action action) { return static_cast<int>(action); }

// A grid cell: t indexes temperature (x axis), p indexes pressure (y axis).
struct Cell {
  int t = 0;
  int p = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

std::string ToString(const Cell& cell);

enum class Orientation : std::uint8_t {
  kVertical,    // fixed t column; crossed along the T axis
  kHorizontal,  // fixed p row; crossed along the P axis
};

std::string_view OrientationName(Orientation orientation);

// A straight run of boundary cells. `span_begin..span_end` is inclusive and
// runs along the axis that the segment does not fix.
struct BoundarySegment {
  Orientation orientation = Orientation::kVertical;
  int fixed_index = 0;
  int span_begin = 0;
  int span_end = 0;

  bool Contains(const Cell& cell) const;
  friend bool operator==(const BoundarySegment&,
                         const BoundarySegment&) = default;
};

// Static map of the environment: grid extent plus phase boundaries.
// Construction validates geometry and throws std::invalid_argument when
// the grid is smaller than 2x2, a segment leaves the grid or has an empty
// span, or two segments share a cell.
class PhaseDiagram {
 public:
  PhaseDiagram(int width, int height, std::vector<BoundarySegment> boundaries);

  // 32x32 grid, full-height boundary columns at t=12 and t=22.
  static PhaseDiagram Default();
  // 16x16 grid, full-height boundary columns at t=6 and t=11.
  static PhaseDiagram Scaled16();

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<BoundarySegment>& boundaries() const { return boundaries_; }

  bool Contains(const Cell& cell) const {
    return cell.t >= 0 && cell.t < width_ && cell.p >= 0 && cell.p < height_;
  }

  // Orientation of the boundary segment covering `cell`, if any.
  std::optional<Orientation> BoundaryAt(const Cell& cell) const;
  bool IsBoundary(const Cell& cell) const {
    return BoundaryAt(cell).has_value();
  }

  int NumCells() const { return width_ * height_; }
  int CellIndex(const Cell& cell) const { return cell.p * width_ + cell.t; }

  friend bool operator==(const PhaseDiagram& a, const PhaseDiagram& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.boundaries_ == b.boundaries_;
  }

 private:
  int width_;
  int height_;
  std::vector<BoundarySegment> boundaries_;
  // Per-cell: 0 = interior, 1 = vertical boundary, 2 = horizontal boundary.
  std::vector<std::uint8_t> kind_;
};

}  // namespace phasechange::env

#endif  // PHASECHANGE_GEOMETRY_HPP_
