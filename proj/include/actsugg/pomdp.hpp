#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "actsugg/errors.hpp"

namespace actsugg {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;
using ObservationIndex = std::size_t;

inline constexpr double kProbabilityTolerance = 1e-9;

/// One nonzero entry of a sparse distribution.
struct Outcome {
    std::size_t index;
    double prob;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Sorted sparse vector; used for belief supports and projected beliefs.
struct SparseVector {
    std::vector<std::size_t> index;
    std::vector<double> value;

    std::size_t size() const { return index.size(); }
    bool empty() const { return index.empty(); }
    double sum() const {
        double s = 0.0;
        for (double v : value) s += v;
        return s;
    }
};

/// L1 distance between two sorted sparse vectors.
inline double l1_distance(const SparseVector& a, const SparseVector& b) {
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.index[i] == b.index[j]) {
            d += std::abs(a.value[i++] - b.value[j++]);
        } else if (a.index[i] < b.index[j]) {
            d += std::abs(a.value[i++]);
        } else {
            d += std::abs(b.value[j++]);
        }
    }
    for (; i < a.size(); ++i) d += std::abs(a.value[i]);
    for (; j < b.size(); ++j) d += std::abs(b.value[j]);
    return d;
}

/// Probability vector over states. Always nonnegative and normalized.
class Belief {
public:
    /// Validates that `probs` is a distribution (entries >= 0, sum 1 +- 1e-9).
    explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw ArgumentError("Belief: empty probability vector");
        double total = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw ArgumentError("Belief: negative or non-finite entry");
            total += p;
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance)
            throw ArgumentError("Belief: entries sum to " + std::to_string(total));
    }

    /// Normalizes nonnegative weights. Throws ArgumentError on a zero total;
    /// callers that need a typed impossibility error check the total first.
    static Belief from_weights(std::vector<double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw ArgumentError("Belief: negative weight");
            total += w;
        }
        if (!(total > 0.0)) throw ArgumentError("Belief: zero total weight");
        for (double& w : weights) w /= total;
        return Belief(Normalized{}, std::move(weights));
    }

    static Belief uniform(std::size_t n) {
        if (n == 0) throw ArgumentError("Belief: zero states");
        return Belief(Normalized{}, std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    static Belief point(std::size_t n, StateIndex s) {
        if (s >= n) throw ArgumentError("Belief: point state out of range");
        std::vector<double> p(n, 0.0);
        p[s] = 1.0;
        return Belief(Normalized{}, std::move(p));
    }

    /// Uniform over the listed states (duplicates are ignored).
    static Belief uniform_over(std::size_t n, std::span<const StateIndex> support) {
        std::vector<double> w(n, 0.0);
        for (StateIndex s : support) {
            if (s >= n) throw ArgumentError("Belief: support state out of range");
            w[s] = 1.0;
        }
        return from_weights(std::move(w));
    }

    std::size_t size() const { return probs_.size(); }
    double operator[](StateIndex s) const { return probs_[s]; }
    std::span<const double> probs() const { return probs_; }

    SparseVector support() const {
        SparseVector sv;
        for (std::size_t s = 0; s < probs_.size(); ++s) {
            if (probs_[s] > 0.0) {
                sv.index.push_back(s);
                sv.value.push_back(probs_[s]);
            }
        }
        return sv;
    }

    friend bool operator==(const Belief&, const Belief&) = default;

private:
    struct Normalized {};
    Belief(Normalized, std::vector<double> probs) : probs_(std::move(probs)) {}

    std::vector<double> probs_;
};

class PomdpBuilder;

/// Tabular POMDP with sparse transition and observation rows. Immutable once
/// built; terminal states are absorbing with zero reward.
class DiscretePomdp {
public:
    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_observations() const { return num_observations_; }
    double discount() const { return discount_; }

    /// Unchecked row access for hot loops.
    std::span<const Outcome> transition(StateIndex s, ActionIndex a) const {
        const std::size_t row = s * num_actions_ + a;
        return {trans_entries_.data() + trans_offsets_[row],
                trans_offsets_[row + 1] - trans_offsets_[row]};
    }

    std::span<const Outcome> observation(StateIndex next, ActionIndex a) const {
        const std::size_t row = next * num_actions_ + a;
        return {obs_entries_.data() + obs_offsets_[row], obs_offsets_[row + 1] - obs_offsets_[row]};
    }

    double observation_probability(StateIndex next, ActionIndex a, ObservationIndex o) const {
        for (const Outcome& e : observation(next, a))
            if (e.index == o) return e.prob;
        return 0.0;
    }

    double reward(StateIndex s, ActionIndex a) const { return rewards_[s * num_actions_ + a]; }

    bool is_terminal(StateIndex s) const { return terminal_[s]; }

    void check_state(StateIndex s) const {
        if (s >= num_states_) throw ArgumentError("state index " + std::to_string(s) + " out of range");
    }
    void check_action(ActionIndex a) const {
        if (a >= num_actions_) throw ArgumentError("action index " + std::to_string(a) + " out of range");
    }
    void check_observation(ObservationIndex o) const {
        if (o >= num_observations_)
            throw ArgumentError("observation index " + std::to_string(o) + " out of range");
    }

private:
    friend class PomdpBuilder;
    DiscretePomdp() = default;

    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::size_t num_observations_ = 0;
    double discount_ = 0.0;
    std::vector<std::size_t> trans_offsets_;
    std::vector<Outcome> trans_entries_;
    std::vector<std::size_t> obs_offsets_;
    std::vector<Outcome> obs_entries_;
    std::vector<double> rewards_;
    std::vector<bool> terminal_;
};

/// Collects rows, then validates everything in build(). Duplicate indices in a
/// row are merged and zero entries dropped.
class PomdpBuilder {
public:
    PomdpBuilder(std::size_t num_states, std::size_t num_actions, std::size_t num_observations,
                 double discount)
        : num_states_(num_states), num_actions_(num_actions), num_observations_(num_observations),
          discount_(discount), trans_(num_states * num_actions), obs_(num_states * num_actions),
          rewards_(num_states * num_actions, 0.0), terminal_(num_states, false) {
        if (num_states == 0 || num_actions == 0 || num_observations == 0)
            throw ArgumentError("PomdpBuilder: dimensions must be positive");
        if (!(discount >= 0.0 && discount < 1.0))
            throw ArgumentError("PomdpBuilder: discount must lie in [0, 1)");
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    PomdpBuilder& set_transition(StateIndex s, ActionIndex a, std::vector<Outcome> row) {
        check(s, a);
        trans_[s * num_actions_ + a] = std::move(row);
        return *this;
    }

    PomdpBuilder& set_observation(StateIndex next, ActionIndex a, std::vector<Outcome> row) {
        check(next, a);
        obs_[next * num_actions_ + a] = std::move(row);
        return *this;
    }

    PomdpBuilder& set_reward(StateIndex s, ActionIndex a, double r) {
        check(s, a);
        rewards_[s * num_actions_ + a] = r;
        return *this;
    }

    /// Marks `s` terminal and fills its rows: self-loop, zero reward, and
    /// observation `terminal_obs` emitted deterministically.
    PomdpBuilder& make_terminal(StateIndex s, ObservationIndex terminal_obs) {
        check(s, 0);
        terminal_[s] = true;
        for (ActionIndex a = 0; a < num_actions_; ++a) {
            trans_[s * num_actions_ + a] = {{s, 1.0}};
            obs_[s * num_actions_ + a] = {{terminal_obs, 1.0}};
            rewards_[s * num_actions_ + a] = 0.0;
        }
        return *this;
    }

    DiscretePomdp build() const {
        DiscretePomdp m;
        m.num_states_ = num_states_;
        m.num_actions_ = num_actions_;
        m.num_observations_ = num_observations_;
        m.discount_ = discount_;
        m.rewards_ = rewards_;
        m.terminal_ = terminal_;
        compress(trans_, num_states_, "transition", m.trans_offsets_, m.trans_entries_);
        compress(obs_, num_observations_, "observation", m.obs_offsets_, m.obs_entries_);
        for (double r : rewards_)
            if (!std::isfinite(r)) throw ArgumentError("PomdpBuilder: non-finite reward");
        for (StateIndex s = 0; s < num_states_; ++s) {
            if (!terminal_[s]) continue;
            for (ActionIndex a = 0; a < num_actions_; ++a) {
                auto row = m.transition(s, a);
                if (row.size() != 1 || row[0].index != s || m.reward(s, a) != 0.0)
                    throw ArgumentError("PomdpBuilder: terminal state " + std::to_string(s) +
                                        " is not absorbing with zero reward");
            }
        }
        return m;
    }

private:
    void check(StateIndex s, ActionIndex a) const {
        if (s >= num_states_ || a >= num_actions_)
            throw ArgumentError("PomdpBuilder: (state, action) out of range");
    }

    static void compress(const std::vector<std::vector<Outcome>>& rows, std::size_t width,
                         const char* what, std::vector<std::size_t>& offsets,
                         std::vector<Outcome>& entries) {
        offsets.assign(1, 0);
        offsets.reserve(rows.size() + 1);
        std::vector<Outcome> row;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            row = rows[r];
            std::sort(row.begin(), row.end(),
                      [](const Outcome& x, const Outcome& y) { return x.index < y.index; });
            double total = 0.0;
            std::size_t begin = entries.size();
            for (const Outcome& e : row) {
                if (e.index >= width)
                    throw ArgumentError(std::string("PomdpBuilder: ") + what + " index out of range");
                if (!(e.prob >= 0.0 && e.prob <= 1.0))
                    throw ArgumentError(std::string("PomdpBuilder: ") + what + " probability outside [0,1]");
                total += e.prob;
                if (e.prob == 0.0) continue;
                if (entries.size() > begin && entries.back().index == e.index)
                    entries.back().prob += e.prob;
                else
                    entries.push_back(e);
            }
            if (std::abs(total - 1.0) > kProbabilityTolerance)
                throw ArgumentError(std::string("PomdpBuilder: ") + what + " row " + std::to_string(r) +
                                    " sums to " + std::to_string(total));
            offsets.push_back(entries.size());
        }
    }

    std::size_t num_states_;
    std::size_t num_actions_;
    std::size_t num_observations_;
    double discount_;
    std::vector<std::vector<Outcome>> trans_;
    std::vector<std::vector<Outcome>> obs_;
    std::vector<double> rewards_;
    std::vector<bool> terminal_;
};

/// Checked transition row lookup.
inline std::span<const Outcome> transition_distribution(const DiscretePomdp& model, StateIndex s,
                                                        ActionIndex a) {
    model.check_state(s);
    model.check_action(a);
    return model.transition(s, a);
}

/// Unnormalized b'(s') = O(o|s',a) * sum_s T(s'|s,a) b(s).
inline std::vector<double> joint_update_weights(const DiscretePomdp& model, const Belief& b,
                                                ActionIndex a, ObservationIndex o) {
    std::vector<double> next(model.num_states(), 0.0);
    const auto probs = b.probs();
    for (StateIndex s = 0; s < probs.size(); ++s) {
        if (probs[s] == 0.0) continue;
        for (const Outcome& t : model.transition(s, a)) next[t.index] += probs[s] * t.prob;
    }
    for (StateIndex sp = 0; sp < next.size(); ++sp)
        if (next[sp] != 0.0) next[sp] *= model.observation_probability(sp, a, o);
    return next;
}

/// Bayes filter step. Throws ImpossibleObservation when `o` has zero
/// likelihood under `b` and `a`.
inline Belief belief_update(const DiscretePomdp& model, const Belief& b, ActionIndex a,
                            ObservationIndex o) {
    if (b.size() != model.num_states()) throw ArgumentError("belief_update: belief dimension mismatch");
    model.check_action(a);
    model.check_observation(o);
    auto weights = joint_update_weights(model, b, a, o);
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
        throw ImpossibleObservation("observation " + std::to_string(o) + " impossible after action " +
                                    std::to_string(a));
    return Belief::from_weights(std::move(weights));
}

/// Conditions `b` on a state likelihood: b'(s) proportional to likelihood(s) b(s).
inline Belief suggestion_update(const Belief& b, std::span<const double> likelihood) {
    if (likelihood.size() != b.size()) throw ArgumentError("suggestion_update: dimension mismatch");
    std::vector<double> weights(b.size());
    double total = 0.0;
    for (std::size_t s = 0; s < b.size(); ++s) {
        if (!(likelihood[s] >= 0.0) || !std::isfinite(likelihood[s]))
            throw ArgumentError("suggestion_update: likelihood entries must be finite and >= 0");
        weights[s] = likelihood[s] * b[s];
        total += weights[s];
    }
    if (!(total > 0.0)) throw ImpossibleSuggestion("suggestion has zero likelihood on the belief support");
    return Belief::from_weights(std::move(weights));
}

/// Plain-text listing of every nonzero T, O and R entry, one per line.
inline void dump_model(const DiscretePomdp& model, std::ostream& out) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << "pomdp " << model.num_states() << ' ' << model.num_actions() << ' '
        << model.num_observations() << ' ' << model.discount() << '\n';
    for (StateIndex s = 0; s < model.num_states(); ++s) {
        if (model.is_terminal(s)) out << "terminal " << s << '\n';
        for (ActionIndex a = 0; a < model.num_actions(); ++a) {
            for (const Outcome& t : model.transition(s, a))
                out << "T " << s << ' ' << a << ' ' << t.index << ' ' << t.prob << '\n';
            for (const Outcome& e : model.observation(s, a))
                out << "O " << s << ' ' << a << ' ' << e.index << ' ' << e.prob << '\n';
            if (model.reward(s, a) != 0.0) out << "R " << s << ' ' << a << ' ' << model.reward(s, a) << '\n';
        }
    }
    out.precision(old_precision);
}

} // namespace actsugg
