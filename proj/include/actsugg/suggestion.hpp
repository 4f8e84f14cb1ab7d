#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "actsugg/errors.hpp"
#include "actsugg/parallel.hpp"
#include "actsugg/policy.hpp"
#include "actsugg/pomdp.hpp"

namespace actsugg {

enum class SuggestionKind { scaled, noisy };

/// How the agent models p(suggestion | state).
///
/// scaled: the suggester plays the agent's own state policy with probability
///         tau and a uniformly random other action otherwise.
/// noisy:  Boltzmann choice over one-step-lookahead Q values with rationality
///         coefficient lambda.
struct SuggestionModel {
    SuggestionKind kind = SuggestionKind::scaled;
    double tau = 1.0;
    double lambda = 0.0;

    static SuggestionModel scaled(double tau) {
        SuggestionModel m{SuggestionKind::scaled, tau, 0.0};
        m.validate();
        return m;
    }
    static SuggestionModel noisy(double lambda) {
        SuggestionModel m{SuggestionKind::noisy, 1.0, lambda};
        m.validate();
        return m;
    }

    void validate() const {
        if (kind == SuggestionKind::scaled && !(tau > 0.0 && tau <= 1.0))
            throw ArgumentError("scaled suggestion model needs tau in (0, 1]");
        if (kind == SuggestionKind::noisy && !(lambda >= 0.0 && std::isfinite(lambda)))
            throw ArgumentError("noisy suggestion model needs finite lambda >= 0");
    }
};

/// Per-(model, policy) tables every likelihood is built from: the greedy
/// action at each corner belief and Q(delta_s, a) for all s, a. Immutable once
/// constructed; holds references, so model and policy must outlive it.
class SuggestionContext {
public:
    SuggestionContext(const DiscretePomdp& model, const AlphaVectorPolicy& policy, std::size_t threads = 0)
        : model_(model), policy_(policy) {
        if (model.num_states() != policy.num_states() || model.num_actions() != policy.num_actions())
            throw ArgumentError("SuggestionContext: policy does not match model dimensions");
        const std::size_t n = model.num_states();
        const std::size_t na = model.num_actions();
        state_actions_.resize(n);
        q_.resize(n * na);
        parallel_for(n, threads, [&](std::size_t s) {
            state_actions_[s] = actsugg::state_action(policy, s);
            const Belief corner = Belief::point(n, s);
            for (ActionIndex a = 0; a < na; ++a) q_[s * na + a] = q_value(model, policy, corner, a);
        });
    }

    const DiscretePomdp& model() const { return model_; }
    const AlphaVectorPolicy& policy() const { return policy_; }
    std::size_t num_states() const { return model_.num_states(); }
    std::size_t num_actions() const { return model_.num_actions(); }

    ActionIndex state_action(StateIndex s) const { return state_actions_[s]; }
    double q(StateIndex s, ActionIndex a) const { return q_[s * model_.num_actions() + a]; }

private:
    const DiscretePomdp& model_;
    const AlphaVectorPolicy& policy_;
    std::vector<ActionIndex> state_actions_;
    std::vector<double> q_;
};

/// Entry s: tau if `suggested` is the policy action at s, else (1-tau)/(|A|-1).
inline std::vector<double> scaled_likelihood(const SuggestionContext& ctx, ActionIndex suggested, double tau) {
    ctx.model().check_action(suggested);
    if (!(tau > 0.0 && tau <= 1.0)) throw ArgumentError("scaled_likelihood: tau must lie in (0, 1]");
    const std::size_t na = ctx.num_actions();
    if (tau < 1.0 && na < 2) throw ArgumentError("scaled_likelihood: tau < 1 needs at least two actions");
    const double other = tau < 1.0 ? (1.0 - tau) / static_cast<double>(na - 1) : 0.0;
    std::vector<double> out(ctx.num_states());
    for (StateIndex s = 0; s < out.size(); ++s) out[s] = ctx.state_action(s) == suggested ? tau : other;
    return out;
}

/// Entry s: softmax over actions of lambda * Q(delta_s, .), evaluated at
/// `suggested`. Max-subtracted, so large lambda never overflows.
inline std::vector<double> noisy_likelihood(const SuggestionContext& ctx, ActionIndex suggested, double lambda) {
    ctx.model().check_action(suggested);
    if (!(lambda >= 0.0 && std::isfinite(lambda))) throw ArgumentError("noisy_likelihood: lambda must be >= 0");
    const std::size_t na = ctx.num_actions();
    std::vector<double> out(ctx.num_states());
    for (StateIndex s = 0; s < out.size(); ++s) {
        double top = -std::numeric_limits<double>::infinity();
        for (ActionIndex a = 0; a < na; ++a) top = std::max(top, lambda * ctx.q(s, a));
        double z = 0.0;
        for (ActionIndex a = 0; a < na; ++a) z += std::exp(lambda * ctx.q(s, a) - top);
        out[s] = std::exp(lambda * ctx.q(s, suggested) - top) / z;
    }
    return out;
}

inline std::vector<double> likelihood(const SuggestionContext& ctx, ActionIndex suggested, const SuggestionModel& sm) {
    sm.validate();
    return sm.kind == SuggestionKind::scaled ? scaled_likelihood(ctx, suggested, sm.tau)
                                             : noisy_likelihood(ctx, suggested, sm.lambda);
}

/// Uncached variants for one-off use; they build the context tables first.
inline std::vector<double> scaled_likelihood(const DiscretePomdp& model, const AlphaVectorPolicy& policy,
                                             ActionIndex suggested, double tau) {
    return scaled_likelihood(SuggestionContext(model, policy), suggested, tau);
}

inline std::vector<double> noisy_likelihood(const DiscretePomdp& model, const AlphaVectorPolicy& policy,
                                            ActionIndex suggested, double lambda) {
    return noisy_likelihood(SuggestionContext(model, policy), suggested, lambda);
}

struct Incorporation {
    Belief belief;
    ActionIndex action;
    bool applied;
    std::optional<std::string> diagnostic;
};

/// Folds one suggested action into the belief. When the suggestion equals the
/// planned action (and `skip_if_equal` is set) nothing changes. A suggestion
/// with zero likelihood on the whole support is ignored with a diagnostic.
inline Incorporation incorporate(const SuggestionContext& ctx, const Belief& b, ActionIndex suggested,
                                 const SuggestionModel& sm, bool skip_if_equal = true) {
    const ActionIndex planned = action(ctx.policy(), b);
    if (skip_if_equal && suggested == planned) return {b, planned, false, std::nullopt};
    try {
        Belief updated = suggestion_update(b, likelihood(ctx, suggested, sm));
        const ActionIndex next = action(ctx.policy(), updated);
        return {std::move(updated), next, true, std::nullopt};
    } catch (const ImpossibleSuggestion& e) {
        return {b, planned, false, std::string("suggestion ignored: ") + e.what()};
    }
}

} // namespace actsugg
