#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "actsugg/errors.hpp"
#include "actsugg/pomdp.hpp"

namespace actsugg {

struct AlphaVector {
    ActionIndex action;
    std::vector<double> coeffs;

    friend bool operator==(const AlphaVector&, const AlphaVector&) = default;
};

/// Piecewise-linear convex value function given as a set of action-tagged
/// alpha vectors. Keeps a state-major copy of the coefficients so that a sparse
/// belief is scored against every vector with contiguous memory access.
class AlphaVectorPolicy {
public:
    AlphaVectorPolicy(std::size_t num_states, std::size_t num_actions, double discount,
                      std::vector<AlphaVector> vectors)
        : num_states_(num_states), num_actions_(num_actions), discount_(discount),
          vectors_(std::move(vectors)) {
        if (vectors_.empty()) throw ArgumentError("AlphaVectorPolicy: at least one vector required");
        if (num_states_ == 0 || num_actions_ == 0)
            throw ArgumentError("AlphaVectorPolicy: dimensions must be positive");
        for (const AlphaVector& v : vectors_) {
            if (v.coeffs.size() != num_states_)
                throw ArgumentError("AlphaVectorPolicy: coefficient length differs from num_states");
            if (v.action >= num_actions_) throw ArgumentError("AlphaVectorPolicy: action out of range");
            for (double c : v.coeffs)
                if (!std::isfinite(c)) throw ArgumentError("AlphaVectorPolicy: non-finite coefficient");
        }
        const std::size_t n = vectors_.size();
        by_state_.resize(num_states_ * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t s = 0; s < num_states_; ++s) by_state_[s * n + i] = vectors_[i].coeffs[s];
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    double discount() const { return discount_; }
    std::size_t size() const { return vectors_.size(); }
    const std::vector<AlphaVector>& vectors() const { return vectors_; }
    const AlphaVector& operator[](std::size_t i) const { return vectors_[i]; }

    /// out[i] = dot(vector i, w).
    void scores(const SparseVector& w, std::vector<double>& out) const {
        const std::size_t n = vectors_.size();
        out.assign(n, 0.0);
        double* acc = out.data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double x = w.value[j];
            const double* row = by_state_.data() + w.index[j] * n;
            for (std::size_t i = 0; i < n; ++i) acc[i] += x * row[i];
        }
    }

    struct Best {
        std::size_t vector;
        double value;
    };

    /// Argmax of dot(vector, w); exact ties go to the lowest action index,
    /// then the lowest vector position.
    Best best(const SparseVector& w) const {
        thread_local std::vector<double> buf;
        scores(w, buf);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < buf.size(); ++i) {
            if (buf[i] > buf[arg] ||
                (buf[i] == buf[arg] && vectors_[i].action < vectors_[arg].action))
                arg = i;
        }
        return {arg, buf[arg]};
    }

    friend bool operator==(const AlphaVectorPolicy& a, const AlphaVectorPolicy& b) {
        return a.num_states_ == b.num_states_ && a.num_actions_ == b.num_actions_ &&
               a.discount_ == b.discount_ && a.vectors_ == b.vectors_;
    }

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    double discount_;
    std::vector<AlphaVector> vectors_;
    std::vector<double> by_state_;
};

namespace detail {
inline void check_belief(const AlphaVectorPolicy& policy, const Belief& b) {
    if (b.size() != policy.num_states())
        throw ArgumentError("belief has " + std::to_string(b.size()) + " states, policy expects " +
                            std::to_string(policy.num_states()));
}
} // namespace detail

inline double value(const AlphaVectorPolicy& policy, const Belief& b) {
    detail::check_belief(policy, b);
    return policy.best(b.support()).value;
}

inline ActionIndex action(const AlphaVectorPolicy& policy, const Belief& b) {
    detail::check_belief(policy, b);
    return policy[policy.best(b.support()).vector].action;
}

/// Greedy action at the corner belief on `s`.
inline ActionIndex state_action(const AlphaVectorPolicy& policy, StateIndex s) {
    if (s >= policy.num_states()) throw ArgumentError("state_action: state out of range");
    SparseVector corner{{s}, {1.0}};
    return policy[policy.best(corner).vector].action;
}

/// Unnormalized successor belief for one observation branch.
struct Projection {
    ObservationIndex observation;
    SparseVector weights; ///< O(o|s',a) sum_s T(s'|s,a) b(s); sums to P(o|b,a)
};

/// Splits the one-step prediction of `b` under `a` by observation. Only
/// branches with positive probability are returned, sorted by observation.
inline std::vector<Projection> project_belief(const DiscretePomdp& model, const SparseVector& b,
                                              ActionIndex a) {
    struct Triple {
        ObservationIndex o;
        StateIndex next;
        double w;
    };
    thread_local std::vector<Triple> triples;
    triples.clear();
    for (std::size_t j = 0; j < b.size(); ++j) {
        const double bs = b.value[j];
        for (const Outcome& t : model.transition(b.index[j], a)) {
            const double bt = bs * t.prob;
            for (const Outcome& e : model.observation(t.index, a)) triples.push_back({e.index, t.index, bt * e.prob});
        }
    }
    std::sort(triples.begin(), triples.end(), [](const Triple& x, const Triple& y) {
        return x.o != y.o ? x.o < y.o : x.next < y.next;
    });
    std::vector<Projection> out;
    for (const Triple& t : triples) {
        if (out.empty() || out.back().observation != t.o) out.push_back({t.o, {}});
        SparseVector& w = out.back().weights;
        if (!w.empty() && w.index.back() == t.next)
            w.value.back() += t.w;
        else {
            w.index.push_back(t.next);
            w.value.push_back(t.w);
        }
    }
    std::erase_if(out, [](const Projection& p) { return !(p.weights.sum() > 0.0); });
    return out;
}

/// One-step lookahead Q(b, a) using the policy as the continuation value.
/// Zero-probability observation branches contribute nothing.
inline double q_value(const DiscretePomdp& model, const AlphaVectorPolicy& policy, const Belief& b,
                      ActionIndex a) {
    detail::check_belief(policy, b);
    if (b.size() != model.num_states()) throw ArgumentError("q_value: belief dimension mismatch");
    model.check_action(a);
    const SparseVector support = b.support();
    double expected_reward = 0.0;
    for (std::size_t j = 0; j < support.size(); ++j)
        expected_reward += support.value[j] * model.reward(support.index[j], a);
    double future = 0.0;
    for (const Projection& p : project_belief(model, support, a)) future += policy.best(p.weights).value;
    return expected_reward + model.discount() * future;
}

// ---------------------------------------------------------------------------
// Persistence. The file is JSON:
//   {"num_states": int, "num_actions": int, "discount": float,
//    "vectors": [{"action": int, "coeffs": [float, ...]}, ...]}
// Doubles are written in shortest round-trip form, so load(save(p)) == p.
// ---------------------------------------------------------------------------

inline std::string policy_to_json(const AlphaVectorPolicy& policy) {
    nlohmann::json j;
    j["num_states"] = policy.num_states();
    j["num_actions"] = policy.num_actions();
    j["discount"] = policy.discount();
    nlohmann::json vectors = nlohmann::json::array();
    for (const AlphaVector& v : policy.vectors())
        vectors.push_back({{"action", v.action}, {"coeffs", v.coeffs}});
    j["vectors"] = std::move(vectors);
    return j.dump() + "\n";
}

namespace detail {
inline std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t offset) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("field \"") + key + "\": " + e.what());
    }
}
} // namespace detail

inline AlphaVectorPolicy policy_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        auto [line, column] = detail::line_and_column(text, offset);
        throw ParseError(std::string("policy file is not valid JSON: ") + e.what(), line, column);
    }
    const auto num_states = detail::required<std::size_t>(j, "num_states");
    const auto num_actions = detail::required<std::size_t>(j, "num_actions");
    const auto discount = detail::required<double>(j, "discount");
    if (!j.contains("vectors") || !j["vectors"].is_array()) throw FormatError("missing \"vectors\" array");
    const auto& arr = j["vectors"];
    if (arr.empty()) throw FormatError("policy has no alpha vectors");
    std::vector<AlphaVector> vectors;
    vectors.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        AlphaVector v{detail::required<std::size_t>(arr[i], "action"),
                      detail::required<std::vector<double>>(arr[i], "coeffs")};
        if (v.coeffs.size() != num_states)
            throw FormatError("vector " + std::to_string(i) + " has " + std::to_string(v.coeffs.size()) +
                              " coefficients, header says " + std::to_string(num_states));
        if (v.action >= num_actions)
            throw FormatError("vector " + std::to_string(i) + " action exceeds num_actions");
        vectors.push_back(std::move(v));
    }
    try {
        return AlphaVectorPolicy(num_states, num_actions, discount, std::move(vectors));
    } catch (const ArgumentError& e) {
        throw FormatError(e.what());
    }
}

inline void save_policy(const AlphaVectorPolicy& policy, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << policy_to_json(policy);
    if (!out) throw IoError("failed writing " + path);
}

inline AlphaVectorPolicy load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return policy_from_json(ss.str());
}

} // namespace actsugg
