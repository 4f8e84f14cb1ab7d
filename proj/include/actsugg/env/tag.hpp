#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "actsugg/env/grid.hpp"
#include "actsugg/errors.hpp"
#include "actsugg/pomdp.hpp"

namespace actsugg {

/// The 29-cell layout: a 10x2 floor (rows 0-1) with a 3x3 tower on columns
/// 5-7, rows 2-4.
inline std::vector<Cell> classic_tag_cells() {
    std::vector<Cell> cells;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 10; ++x) cells.push_back({x, y});
    for (int y = 2; y < 5; ++y)
        for (int x = 5; x < 8; ++x) cells.push_back({x, y});
    return cells;
}

struct TagSpec {
    std::vector<Cell> cells = classic_tag_cells();
    double move_away_prob = 0.8;
    std::size_t max_steps = 100;
    double discount = 0.95;
};

inline constexpr ActionIndex kTagAction = 4;
inline constexpr double kTagMoveReward = -1.0;
inline constexpr double kTagSuccessReward = 10.0;
inline constexpr double kTagFailureReward = -10.0;

/// Cell indexing and 4-neighborhood over an arbitrary cell list.
class TagLayout {
public:
    explicit TagLayout(std::vector<Cell> cells) : cells_(std::move(cells)) {
        if (cells_.empty()) throw ArgumentError("Tag layout: no cells");
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (!index_.emplace(key(cells_[i]), i).second) throw ArgumentError("Tag layout: duplicate cell");
        }
        // Connectivity under the 4-neighborhood.
        std::vector<bool> seen(cells_.size(), false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            for (int d = 0; d < 4; ++d) {
                if (auto nb = neighbor(c, static_cast<Direction>(d)); nb && !seen[*nb]) {
                    seen[*nb] = true;
                    ++reached;
                    stack.push_back(*nb);
                }
            }
        }
        if (reached != cells_.size()) throw ArgumentError("Tag layout: cells are not connected");
    }

    std::size_t size() const { return cells_.size(); }
    const std::vector<Cell>& cells() const { return cells_; }
    Cell cell(std::size_t i) const { return cells_[i]; }

    std::optional<std::size_t> find(Cell c) const {
        auto it = index_.find(key(c));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<std::size_t> neighbor(std::size_t i, Direction d) const { return find(step(cells_[i], d)); }

private:
    static std::pair<int, int> key(Cell c) { return {c.x, c.y}; }

    std::vector<Cell> cells_;
    std::map<std::pair<int, int>, std::size_t> index_;
};

/// Opponent move distribution. Moves that stay on the layout and strictly
/// increase Manhattan distance to the agent share `move_away_prob` equally;
/// the rest is "stay". With no such move the opponent stays.
inline std::vector<Outcome> opponent_transition(const TagLayout& layout, double move_away_prob,
                                                std::size_t agent_cell, std::size_t opp_cell) {
    if (agent_cell >= layout.size() || opp_cell >= layout.size())
        throw ArgumentError("opponent_transition: cell out of range");
    const Cell agent = layout.cell(agent_cell);
    const int current = manhattan(agent, layout.cell(opp_cell));
    std::vector<std::size_t> away;
    for (int d = 0; d < 4; ++d) {
        auto nb = layout.neighbor(opp_cell, static_cast<Direction>(d));
        if (nb && manhattan(agent, layout.cell(*nb)) > current) away.push_back(*nb);
    }
    if (away.empty()) return {{opp_cell, 1.0}};
    std::vector<Outcome> out;
    const double each = move_away_prob / static_cast<double>(away.size());
    for (std::size_t c : away) out.push_back({c, each});
    if (move_away_prob < 1.0) out.push_back({opp_cell, 1.0 - move_away_prob});
    return out;
}

inline void validate(const TagSpec& spec) {
    if (!(spec.move_away_prob >= 0.0 && spec.move_away_prob <= 1.0))
        throw ArgumentError("TagSpec: move_away_prob must lie in [0, 1]");
    if (spec.max_steps == 0) throw ArgumentError("TagSpec: max_steps must be positive");
    if (!(spec.discount >= 0.0 && spec.discount < 1.0)) throw ArgumentError("TagSpec: discount must lie in [0, 1)");
    TagLayout{spec.cells};
}

inline std::vector<Outcome> opponent_transition(const TagSpec& spec, std::size_t agent_cell, std::size_t opp_cell) {
    return opponent_transition(TagLayout(spec.cells), spec.move_away_prob, agent_cell, opp_cell);
}

/// Tag model plus its state/observation encoding.
///
/// States: agent_cell * C + opponent_cell, then one terminal state (C*C).
/// Observations: agent_cell * 2 + co-located flag, then one terminal symbol.
/// Actions: north, south, east, west, tag.
class TagEnvironment {
public:
    explicit TagEnvironment(TagSpec spec) : spec_(std::move(spec)), layout_(spec_.cells), model_(build()) {}

    const TagSpec& spec() const { return spec_; }
    const TagLayout& layout() const { return layout_; }
    const DiscretePomdp& model() const { return model_; }

    std::size_t num_cells() const { return layout_.size(); }
    StateIndex state(std::size_t agent_cell, std::size_t opp_cell) const { return agent_cell * num_cells() + opp_cell; }
    StateIndex terminal_state() const { return num_cells() * num_cells(); }
    std::size_t agent_cell(StateIndex s) const { return s / num_cells(); }
    std::size_t opponent_cell(StateIndex s) const { return s % num_cells(); }
    ObservationIndex observation(std::size_t agent_cell, bool co_located) const {
        return agent_cell * 2 + (co_located ? 1 : 0);
    }
    ObservationIndex terminal_observation() const { return 2 * num_cells(); }

    static std::vector<std::string> action_labels() { return {"north", "south", "east", "west", "tag"}; }

private:
    DiscretePomdp build() const {
        validate(spec_);
        const std::size_t c = num_cells();
        PomdpBuilder b(c * c + 1, 5, 2 * c + 1, spec_.discount);
        for (std::size_t ag = 0; ag < c; ++ag) {
            for (std::size_t op = 0; op < c; ++op) {
                const StateIndex s = state(ag, op);
                const auto opp_moves = opponent_transition(layout_, spec_.move_away_prob, ag, op);
                for (ActionIndex a = 0; a < 5; ++a) {
                    std::vector<Outcome> row;
                    if (a == kTagAction && ag == op) {
                        b.set_reward(s, a, kTagSuccessReward);
                        row.push_back({terminal_state(), 1.0});
                    } else {
                        std::size_t next_agent = ag;
                        if (a == kTagAction) {
                            b.set_reward(s, a, kTagFailureReward);
                        } else {
                            b.set_reward(s, a, kTagMoveReward);
                            next_agent = layout_.neighbor(ag, static_cast<Direction>(a)).value_or(ag);
                        }
                        for (const Outcome& m : opp_moves) row.push_back({state(next_agent, m.index), m.prob});
                    }
                    b.set_transition(s, a, std::move(row));
                    b.set_observation(s, a, {{observation(ag, ag == op), 1.0}});
                }
            }
        }
        b.make_terminal(terminal_state(), terminal_observation());
        return b.build();
    }

    TagSpec spec_;
    TagLayout layout_;
    DiscretePomdp model_;
};

inline DiscretePomdp make_tag(const TagSpec& spec) { return TagEnvironment(spec).model(); }

} // namespace actsugg
