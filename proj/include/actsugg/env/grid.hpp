#pragma once

#include <array>
#include <cstdlib>

#include "actsugg/pomdp.hpp"

namespace actsugg {

/// Integer grid coordinate; north is +y, east is +x.
struct Cell {
    int x = 0;
    int y = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

/// Shared by both grid worlds: action indices 0..3 move the agent.
enum Direction : ActionIndex { north = 0, south = 1, east = 2, west = 3 };

inline constexpr std::array<Cell, 4> kDirectionOffsets{{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};

inline Cell step(Cell c, Direction d) {
    return {c.x + kDirectionOffsets[d].x, c.y + kDirectionOffsets[d].y};
}

} // namespace actsugg
