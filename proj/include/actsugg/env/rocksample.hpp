#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "actsugg/env/grid.hpp"
#include "actsugg/errors.hpp"
#include "actsugg/pomdp.hpp"

namespace actsugg {

/// RockSample(n, k, sr, sp). The rock count k is rock_positions.size().
struct RockSampleSpec {
    int n = 8;
    double sr = 10.0;
    double sp = -1.0;
    std::vector<Cell> rock_positions{{0, 0}, {7, 0}, {0, 7}, {7, 7}};
    Cell init_pos{0, 3};
    double discount = 0.95;
    std::size_t max_steps = 200;

    std::size_t k() const { return rock_positions.size(); }

    /// RockSample(8,4,10,-1) with a rock in each corner, starting mid-left.
    static RockSampleSpec corners_8_4() { return {}; }

    /// The standard RockSample(7,8) benchmark layout, no sensor penalty.
    static RockSampleSpec classic_7_8() {
        RockSampleSpec s;
        s.n = 7;
        s.sr = 20.0;
        s.sp = 0.0;
        s.rock_positions = {{2, 0}, {0, 1}, {3, 1}, {6, 3}, {2, 4}, {3, 4}, {5, 5}, {1, 6}};
        s.init_pos = {0, 3};
        return s;
    }
};

inline constexpr ActionIndex kSampleAction = 4;
inline constexpr ActionIndex kFirstCheckAction = 5;
inline constexpr ObservationIndex kObsGood = 0;
inline constexpr ObservationIndex kObsBad = 1;
inline constexpr ObservationIndex kObsNone = 2;
inline constexpr double kRockReward = 10.0;
inline constexpr double kExitReward = 10.0;

/// Probability that a check at Euclidean distance d reports the true quality.
/// Equals 0.75 at d = sr (the half-efficiency distance).
inline double sensor_accuracy(double distance, double sr) { return 0.5 * (1.0 + std::exp2(-distance / sr)); }

inline void validate(const RockSampleSpec& spec) {
    if (spec.n < 1) throw ArgumentError("RockSampleSpec: n must be positive");
    if (spec.k() < 1) throw ArgumentError("RockSampleSpec: at least one rock required");
    if (spec.k() > 20) throw ArgumentError("RockSampleSpec: too many rocks for a flat state space");
    if (!(spec.sr > 0.0)) throw ArgumentError("RockSampleSpec: sr must be > 0");
    if (!(spec.sp <= 0.0)) throw ArgumentError("RockSampleSpec: sp must be <= 0");
    if (spec.max_steps == 0) throw ArgumentError("RockSampleSpec: max_steps must be positive");
    if (!(spec.discount >= 0.0 && spec.discount < 1.0))
        throw ArgumentError("RockSampleSpec: discount must lie in [0, 1)");
    auto inside = [&](Cell c) { return c.x >= 0 && c.y >= 0 && c.x < spec.n && c.y < spec.n; };
    if (!inside(spec.init_pos)) throw ArgumentError("RockSampleSpec: init_pos outside the grid");
    for (std::size_t i = 0; i < spec.k(); ++i) {
        if (!inside(spec.rock_positions[i])) throw ArgumentError("RockSampleSpec: rock outside the grid");
        for (std::size_t j = 0; j < i; ++j)
            if (spec.rock_positions[i] == spec.rock_positions[j])
                throw ArgumentError("RockSampleSpec: rocks must occupy distinct cells");
    }
}

/// RockSample model plus its encoding.
///
/// States: (y * n + x) * 2^k + rock bits (bit i set = rock i good), then one
/// terminal state. Actions: north, south, east, west, sample, check_1..check_k.
/// Observations: good, bad, none.
class RockSampleEnvironment {
public:
    explicit RockSampleEnvironment(RockSampleSpec spec) : spec_(std::move(spec)), model_(build()) {}

    const RockSampleSpec& spec() const { return spec_; }
    const DiscretePomdp& model() const { return model_; }

    std::size_t num_rock_states() const { return std::size_t{1} << spec_.k(); }
    std::size_t num_positions() const { return static_cast<std::size_t>(spec_.n * spec_.n); }
    StateIndex state(Cell pos, std::size_t rocks) const {
        return static_cast<std::size_t>(pos.y * spec_.n + pos.x) * num_rock_states() + rocks;
    }
    StateIndex terminal_state() const { return num_positions() * num_rock_states(); }
    Cell position(StateIndex s) const {
        const auto p = static_cast<int>(s / num_rock_states());
        return {p % spec_.n, p / spec_.n};
    }
    std::size_t rocks(StateIndex s) const { return s % num_rock_states(); }

    /// Joint state distribution at a known position from a distribution over
    /// rock-quality vectors (indexed by rock bits).
    Belief belief_at(Cell pos, std::span<const double> rock_distribution) const {
        if (rock_distribution.size() != num_rock_states())
            throw ArgumentError("belief_at: rock distribution has wrong length");
        std::vector<double> w(model_.num_states(), 0.0);
        for (std::size_t r = 0; r < num_rock_states(); ++r) w[state(pos, r)] = rock_distribution[r];
        return Belief::from_weights(std::move(w));
    }

    std::vector<std::string> action_labels() const {
        std::vector<std::string> labels{"north", "south", "east", "west", "sample"};
        for (std::size_t i = 0; i < spec_.k(); ++i) labels.push_back("check_" + std::to_string(i + 1));
        return labels;
    }

private:
    DiscretePomdp build() const {
        validate(spec_);
        const std::size_t k = spec_.k();
        const std::size_t num_actions = kFirstCheckAction + k;
        PomdpBuilder b(terminal_state() + 1, num_actions, 3, spec_.discount);
        for (int y = 0; y < spec_.n; ++y) {
            for (int x = 0; x < spec_.n; ++x) {
                const Cell pos{x, y};
                int rock_here = -1;
                for (std::size_t i = 0; i < k; ++i)
                    if (spec_.rock_positions[i] == pos) rock_here = static_cast<int>(i);
                for (std::size_t r = 0; r < num_rock_states(); ++r) {
                    const StateIndex s = state(pos, r);
                    for (ActionIndex a = 0; a < num_actions; ++a) {
                        StateIndex next = s;
                        double reward = 0.0;
                        if (a < kSampleAction) {
                            const Cell moved = step(pos, static_cast<Direction>(a));
                            if (a == east && moved.x >= spec_.n) {
                                next = terminal_state();
                                reward = kExitReward;
                            } else if (moved.x >= 0 && moved.y >= 0 && moved.x < spec_.n && moved.y < spec_.n) {
                                next = state(moved, r);
                            }
                        } else if (a == kSampleAction) {
                            if (rock_here >= 0 && (r >> rock_here & 1U)) {
                                reward = kRockReward;
                                next = state(pos, r & ~(std::size_t{1} << rock_here));
                            } else {
                                reward = -kRockReward;
                            }
                        } else {
                            reward = spec_.sp;
                        }
                        b.set_transition(s, a, {{next, 1.0}});
                        b.set_reward(s, a, reward);
                        b.set_observation(s, a, observation_row(pos, r, a));
                    }
                }
            }
        }
        b.make_terminal(terminal_state(), kObsNone);
        return b.build();
    }

    std::vector<Outcome> observation_row(Cell pos, std::size_t rocks, ActionIndex a) const {
        if (a < kFirstCheckAction) return {{kObsNone, 1.0}};
        const std::size_t i = a - kFirstCheckAction;
        const Cell rock = spec_.rock_positions[i];
        const double d = std::hypot(static_cast<double>(pos.x - rock.x), static_cast<double>(pos.y - rock.y));
        const double acc = sensor_accuracy(d, spec_.sr);
        const bool good = rocks >> i & 1U;
        return {{good ? kObsGood : kObsBad, acc}, {good ? kObsBad : kObsGood, 1.0 - acc}};
    }

    RockSampleSpec spec_;
    DiscretePomdp model_;
};

inline DiscretePomdp make_rocksample(const RockSampleSpec& spec) { return RockSampleEnvironment(spec).model(); }

} // namespace actsugg
