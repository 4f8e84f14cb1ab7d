#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "actsugg/errors.hpp"
#include "actsugg/parallel.hpp"
#include "actsugg/policy.hpp"
#include "actsugg/pomdp.hpp"
#include "actsugg/rng.hpp"

namespace actsugg {

struct SolverParams {
    /// Cap on points grown by belief expansion (corner beliefs not counted).
    std::size_t max_belief_points = 2000;
    /// Total backup sweeps over the belief set, across all rounds.
    std::size_t max_iterations = 1000;
    /// Stop once no retained point improves by this much in one sweep.
    double bellman_epsilon = 1e-3;
    std::size_t expansion_rounds = 12;
    std::uint64_t rng_seed = 0;
    /// Backup sweeps between consecutive expansions.
    std::size_t sweeps_per_round = 10;
    /// Also back up the corner belief of every non-terminal state, so the
    /// policy is meaningful on fully known states.
    bool corner_beliefs = true;
    std::size_t threads = 0;
    /// Extra starting points for the belief set, alongside the initial
    /// belief. They count toward max_belief_points and are expanded like it.
    std::vector<Belief> seed_beliefs;

    void validate() const {
        if (max_belief_points == 0 || max_iterations == 0 || expansion_rounds == 0 || sweeps_per_round == 0)
            throw ArgumentError("SolverParams: counts must be positive");
        if (!(bellman_epsilon > 0.0)) throw ArgumentError("SolverParams: bellman_epsilon must be > 0");
    }
};

struct SolveProgress {
    std::size_t round;
    std::size_t iteration;
    std::size_t belief_points;
    std::size_t vectors;
    double residual;
};

struct SolveReport {
    std::size_t iterations = 0;
    std::size_t belief_points = 0;
    std::size_t vectors = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
};

/// Value of repeating each action forever: alpha_a = R(.,a) + gamma T_a alpha_a,
/// iterated to a fixed point. One vector per action; a lower bound on V*.
inline std::vector<AlphaVector> blind_policy_vectors(const DiscretePomdp& model, double tolerance = 1e-10) {
    const std::size_t n = model.num_states();
    const double gamma = model.discount();
    std::vector<AlphaVector> out;
    out.reserve(model.num_actions());
    for (ActionIndex a = 0; a < model.num_actions(); ++a) {
        // Start from the worst constant so iterates increase monotonically.
        double min_r = std::numeric_limits<double>::infinity();
        for (StateIndex s = 0; s < n; ++s) min_r = std::min(min_r, model.reward(s, a));
        std::vector<double> v(n, gamma > 0.0 ? min_r / (1.0 - gamma) : min_r);
        std::vector<double> next(n);
        for (std::size_t sweep = 0; sweep < 100000; ++sweep) {
            double delta = 0.0;
            for (StateIndex s = 0; s < n; ++s) {
                double acc = 0.0;
                for (const Outcome& t : model.transition(s, a)) acc += t.prob * v[t.index];
                next[s] = model.reward(s, a) + gamma * acc;
                delta = std::max(delta, std::abs(next[s] - v[s]));
            }
            v.swap(next);
            if (delta <= tolerance) break;
        }
        out.push_back({a, std::move(v)});
    }
    return out;
}

/// Point-based Bellman backup at belief `b` against the current vector set.
/// For each action, the best current vector is chosen per observation branch
/// and combined into a new alpha vector; the action whose vector scores best
/// at `b` wins. If the current set already does better at `b`, its argmax
/// vector is returned instead, so a backup never lowers the value at `b`.
inline AlphaVector backup(const DiscretePomdp& model, const SparseVector& b, const AlphaVectorPolicy& current) {
    const double gamma = model.discount();
    const std::size_t num_obs = model.num_observations();

    // Branches that b cannot reach score 0 against every vector; resolve them
    // with the policy's own tie rule.
    const std::size_t unreachable_choice = current.best(SparseVector{}).vector;

    ActionIndex best_action = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_choice;
    std::vector<std::size_t> choice(num_obs);
    for (ActionIndex a = 0; a < model.num_actions(); ++a) {
        std::fill(choice.begin(), choice.end(), unreachable_choice);
        double v = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) v += b.value[j] * model.reward(b.index[j], a);
        double future = 0.0;
        for (const Projection& p : project_belief(model, b, a)) {
            const auto pick = current.best(p.weights);
            choice[p.observation] = pick.vector;
            future += pick.value;
        }
        v += gamma * future;
        if (v > best_value) {
            best_value = v;
            best_action = a;
            best_choice = choice;
        }
    }

    const std::size_t n = model.num_states();
    AlphaVector alpha{best_action, std::vector<double>(n)};
    for (StateIndex s = 0; s < n; ++s) {
        double acc = 0.0;
        for (const Outcome& t : model.transition(s, best_action))
            for (const Outcome& e : model.observation(t.index, best_action))
                acc += t.prob * e.prob * current[best_choice[e.index]].coeffs[t.index];
        alpha.coeffs[s] = model.reward(s, best_action) + gamma * acc;
    }

    double new_value = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) new_value += b.value[j] * alpha.coeffs[b.index[j]];
    const auto incumbent = current.best(b);
    if (new_value < incumbent.value) return current[incumbent.vector];
    return alpha;
}

inline AlphaVector backup(const DiscretePomdp& model, const Belief& b, const AlphaVectorPolicy& current) {
    if (b.size() != model.num_states() || current.num_states() != model.num_states())
        throw ArgumentError("backup: dimension mismatch");
    return backup(model, b.support(), current);
}

namespace detail {
inline double min_distance(const SparseVector& x, const std::vector<SparseVector>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const SparseVector& y : set) {
        best = std::min(best, l1_distance(x, y));
        if (best == 0.0) break;
    }
    return best;
}

inline std::size_t sample_outcome(std::span<const Outcome> row, Rng& rng) {
    thread_local std::vector<double> w;
    w.clear();
    for (const Outcome& e : row) w.push_back(e.prob);
    return row[rng.categorical(w)].index;
}
} // namespace detail

inline constexpr double kBeliefDedupDistance = 1e-6;

/// One round of stochastic simulation with explorative actions: from each
/// point, every action is simulated with a sampled state, successor and
/// observation; the successor belief farthest (L1) from the set is added if it
/// is farther than 1e-6. Stops growing at `max_points`.
inline std::vector<SparseVector> expand_beliefs(const DiscretePomdp& model, const std::vector<SparseVector>& points,
                                                Rng& rng, std::size_t max_points) {
    std::vector<SparseVector> out = points;
    const std::size_t original = points.size();
    for (std::size_t i = 0; i < original && out.size() < max_points; ++i) {
        const SparseVector& b = points[i];
        SparseVector best;
        double best_distance = kBeliefDedupDistance;
        for (ActionIndex a = 0; a < model.num_actions(); ++a) {
            const StateIndex s = b.index[rng.categorical(b.value)];
            const StateIndex next = detail::sample_outcome(model.transition(s, a), rng);
            const ObservationIndex o = detail::sample_outcome(model.observation(next, a), rng);
            for (const Projection& p : project_belief(model, b, a)) {
                if (p.observation != o) continue;
                SparseVector candidate = p.weights;
                const double total = candidate.sum();
                for (double& v : candidate.value) v /= total;
                const double d = detail::min_distance(candidate, out);
                if (d > best_distance) {
                    best_distance = d;
                    best = std::move(candidate);
                }
            }
        }
        if (!best.empty()) out.push_back(std::move(best));
    }
    return out;
}

inline std::vector<Belief> expand_beliefs(const DiscretePomdp& model, const std::vector<Belief>& points, Rng& rng,
                                          std::size_t max_points) {
    std::vector<SparseVector> sparse;
    sparse.reserve(points.size());
    for (const Belief& b : points) sparse.push_back(b.support());
    std::vector<Belief> out;
    for (const SparseVector& sv : expand_beliefs(model, sparse, rng, max_points)) {
        std::vector<double> dense(model.num_states(), 0.0);
        for (std::size_t j = 0; j < sv.size(); ++j) dense[sv.index[j]] = sv.value[j];
        out.push_back(Belief::from_weights(std::move(dense)));
    }
    return out;
}

namespace detail {
struct AlphaHash {
    std::size_t operator()(const AlphaVector* v) const {
        std::uint64_t h = splitmix64(v->action);
        for (double c : v->coeffs) {
            std::uint64_t bits;
            std::memcpy(&bits, &c, sizeof bits);
            h = splitmix64(h ^ bits);
        }
        return static_cast<std::size_t>(h);
    }
};
struct AlphaEq {
    bool operator()(const AlphaVector* a, const AlphaVector* b) const { return *a == *b; }
};

/// Drops exact duplicates, keeping first occurrences in order.
inline std::vector<AlphaVector> unique_vectors(std::vector<AlphaVector> in) {
    std::unordered_set<const AlphaVector*, AlphaHash, AlphaEq> seen;
    std::vector<AlphaVector> out;
    out.reserve(in.size());
    for (AlphaVector& v : in) {
        if (seen.contains(&v)) continue;
        out.push_back(std::move(v));
        seen.insert(&out.back());
    }
    return out;
}
} // namespace detail

/// Point-based value iteration. Starts from the blind-policy lower bound and
/// alternates backup sweeps with belief expansion from `initial_belief`.
/// Deterministic for a fixed model, params and seed (thread count included).
inline AlphaVectorPolicy solve(const DiscretePomdp& model, const Belief& initial_belief, const SolverParams& params,
                               SolveReport* report = nullptr,
                               const std::function<void(const SolveProgress&)>& on_progress = {}) {
    params.validate();
    if (initial_belief.size() != model.num_states()) throw ArgumentError("solve: initial belief dimension mismatch");

    const std::vector<AlphaVector> blind = blind_policy_vectors(model);
    AlphaVectorPolicy policy(model.num_states(), model.num_actions(), model.discount(), blind);
    Rng rng = Rng::stream(params.rng_seed, 0, StreamRole::solver);

    std::vector<SparseVector> corners;
    if (params.corner_beliefs) {
        for (StateIndex s = 0; s < model.num_states(); ++s)
            if (!model.is_terminal(s)) corners.push_back(SparseVector{{s}, {1.0}});
    }
    std::vector<SparseVector> expanded{initial_belief.support()};
    for (const Belief& b : params.seed_beliefs) {
        if (b.size() != model.num_states()) throw ArgumentError("solve: seed belief dimension mismatch");
        SparseVector sv = b.support();
        if (detail::min_distance(sv, expanded) > kBeliefDedupDistance) expanded.push_back(std::move(sv));
    }

    SolveReport rep;
    std::size_t iteration = 0;
    std::vector<AlphaVector> slots;

    // One synchronous sweep over every retained point; returns the largest
    // improvement of any point's value.
    auto sweep = [&] {
        const std::size_t total = corners.size() + expanded.size();
        slots.assign(total, AlphaVector{});
        std::vector<double> gain(total, 0.0);
        parallel_for(total, params.threads, [&](std::size_t i) {
            const SparseVector& b = i < corners.size() ? corners[i] : expanded[i - corners.size()];
            const double before = policy.best(b).value;
            slots[i] = backup(model, b, policy);
            double after = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) after += b.value[j] * slots[i].coeffs[b.index[j]];
            gain[i] = after - before;
        });
        std::vector<AlphaVector> next = blind;
        next.insert(next.end(), std::make_move_iterator(slots.begin()), std::make_move_iterator(slots.end()));
        policy = AlphaVectorPolicy(model.num_states(), model.num_actions(), model.discount(),
                                   detail::unique_vectors(std::move(next)));
        ++iteration;
        double residual = 0.0;
        for (double g : gain) residual = std::max(residual, g);
        return residual;
    };

    auto notify = [&](std::size_t round, double residual) {
        if (on_progress)
            on_progress({round, iteration, corners.size() + expanded.size(), policy.size(), residual});
    };

    for (std::size_t round = 0; round < params.expansion_rounds && iteration < params.max_iterations; ++round) {
        double residual = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < params.sweeps_per_round && iteration < params.max_iterations; ++k) {
            residual = sweep();
            if (residual < params.bellman_epsilon) break;
        }
        rep.residual = residual;
        notify(round, residual);
        if (expanded.size() >= params.max_belief_points) break;
        const std::size_t before = expanded.size();
        expanded = expand_beliefs(model, expanded, rng, params.max_belief_points);
        if (expanded.size() == before && residual < params.bellman_epsilon) break;
    }
    while (iteration < params.max_iterations) {
        rep.residual = sweep();
        if (rep.residual < params.bellman_epsilon) break;
        if (iteration % 10 == 0) notify(params.expansion_rounds, rep.residual);
    }
    notify(params.expansion_rounds, rep.residual);

    rep.iterations = iteration;
    rep.belief_points = corners.size() + expanded.size();
    rep.vectors = policy.size();
    rep.converged = rep.residual < params.bellman_epsilon;
    if (report) *report = rep;
    return policy;
}

} // namespace actsugg
