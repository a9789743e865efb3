#include "phasechange/geometry.hpp"

#include <stdexcept>
#include <utility>

namespace phasechange::env {

std::string_view ActionName(Action action) {
  switch (action) {
    case Action::kQMinus:
      return "Q-";
    case Action::kQPlus:
      return "Q+";
    case Action::kWMinus:
      return "W-";
    case Action::kWPlus:
      return "W+";
  }
  return "?";
}

Action ActionFromIndex(int index) {
  if (index < 0 || index >= kNumActions) {
    throw std::out_of_range("action index out of range: " +
                            std::to_string(index));
  }
  return static_cast<Action>(index);
}

std::string ToString(const Cell& cell) {
  return "(" + std::to_string(cell.t) + "," + std::to_string(cell.p) + ")";
}

std::string_view OrientationName(Orientation orientation) {
  return orientation == Orientation::kVertical ? "vertical" : "horizontal";
}

bool BoundarySegment::Contains(const Cell& cell) const {
  if (orientation == Orientation::kVertical) {
    return cell.t == fixed_index && cell.p >= span_begin && cell.p <= span_end;
  }
  return cell.p == fixed_index && cell.t >= span_begin && cell.t <= span_end;
}

PhaseDiagram::PhaseDiagram(int width, int height,
                           std::vector<BoundarySegment> boundaries)
    : width_(width), height_(height), boundaries_(std::move(boundaries)) {
  if (width_ < 2 || height_ < 2) {
    throw std::invalid_argument("phase diagram must be at least 2x2, got " +
                                std::to_string(width_) + "x" +
                                std::to_string(height_));
  }
  kind_.assign(static_cast<std::size_t>(width_) * height_, 0);
  for (std::size_t i = 0; i < boundaries_.size(); ++i) {
    const BoundarySegment& seg = boundaries_[i];
    const bool vertical = seg.orientation == Orientation::kVertical;
    const int fixed_limit = vertical ? width_ : height_;
    const int span_limit = vertical ? height_ : width_;
    const std::string where = "boundary segment " + std::to_string(i);
    if (seg.fixed_index < 0 || seg.fixed_index >= fixed_limit) {
      throw std::invalid_argument(where + ": fixed index outside the grid");
    }
    if (seg.span_begin > seg.span_end) {
      throw std::invalid_argument(where + ": empty span");
    }
    if (seg.span_begin < 0 || seg.span_end >= span_limit) {
      throw std::invalid_argument(where + ": span outside the grid");
    }
    for (int s = seg.span_begin; s <= seg.span_end; ++s) {
      const Cell cell = vertical ? Cell{seg.fixed_index, s}
                                 : Cell{s, seg.fixed_index};
      auto& kind = kind_[CellIndex(cell)];
      if (kind != 0) {
        throw std::invalid_argument(where + ": overlaps another segment at " +
                                    ToString(cell));
      }
      kind = vertical ? 1 : 2;
    }
  }
}

PhaseDiagram PhaseDiagram::Default() {
  return PhaseDiagram(32, 32,
                      {{Orientation::kVertical, 12, 0, 31},
                       {Orientation::kVertical, 22, 0, 31}});
}

PhaseDiagram PhaseDiagram::Scaled16() {
  return PhaseDiagram(16, 16,
                      {{Orientation::kVertical, 6, 0, 15},
                       {Orientation::kVertical, 11, 0, 15}});
}

std::optional<Orientation> PhaseDiagram::BoundaryAt(const Cell& cell) const {
  if (!Contains(cell)) return std::nullopt;
  switch (kind_[CellIndex(cell)]) {
    case 1:
      return Orientation::kVertical;
    case 2:
      return Orientation::kHorizontal;
    default:
      return std::nullopt;
  }
}

}  // namespace phasechange::env
