#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "actsugg/env/environment.hpp"
#include "actsugg/errors.hpp"
#include "actsugg/policy.hpp"
#include "actsugg/pomdp.hpp"
#include "actsugg/rng.hpp"
#include "actsugg/suggestion.hpp"

namespace actsugg {

enum class AgentKind { normal, perfect, random, naive, scaled, noisy };

inline std::string to_string(AgentKind k) {
    switch (k) {
    case AgentKind::normal: return "normal";
    case AgentKind::perfect: return "perfect";
    case AgentKind::random: return "random";
    case AgentKind::naive: return "naive";
    case AgentKind::scaled: return "scaled";
    case AgentKind::noisy: return "noisy";
    }
    return "unknown";
}

inline AgentKind agent_kind_from_string(const std::string& s) {
    for (AgentKind k : {AgentKind::normal, AgentKind::perfect, AgentKind::random, AgentKind::naive,
                        AgentKind::scaled, AgentKind::noisy})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown agent kind \"" + s + "\"");
}

struct AgentConfig {
    AgentKind kind = AgentKind::normal;
    double nu = 1.0; ///< naive: probability of following a differing suggestion
    SuggestionModel suggestion_model{};
    bool skip_if_equal = true;

    static AgentConfig normal() { return {}; }
    static AgentConfig perfect() { return {AgentKind::perfect}; }
    static AgentConfig random() { return {AgentKind::random}; }
    static AgentConfig naive(double nu) { return {AgentKind::naive, nu}; }
    static AgentConfig scaled(double tau) { return {AgentKind::scaled, 1.0, SuggestionModel::scaled(tau)}; }
    static AgentConfig noisy(double lambda) { return {AgentKind::noisy, 1.0, SuggestionModel::noisy(lambda)}; }

    void validate() const {
        if (kind == AgentKind::naive && !(nu >= 0.0 && nu <= 1.0)) throw ConfigError("naive agent needs nu in [0, 1]");
        if (kind == AgentKind::scaled && suggestion_model.kind != SuggestionKind::scaled)
            throw ConfigError("scaled agent needs a scaled suggestion model");
        if (kind == AgentKind::noisy && suggestion_model.kind != SuggestionKind::noisy)
            throw ConfigError("noisy agent needs a noisy suggestion model");
        if (kind == AgentKind::scaled || kind == AgentKind::noisy) {
            try {
                suggestion_model.validate();
            } catch (const ArgumentError& e) {
                throw ConfigError(e.what());
            }
        }
    }

    bool uses_belief() const { return kind != AgentKind::perfect && kind != AgentKind::random; }

    /// "nu=1", "tau=0.99", "lambda=5" or "" for parameterless kinds.
    std::string param_label() const {
        std::ostringstream os;
        switch (kind) {
        case AgentKind::naive: os << "nu=" << nu; break;
        case AgentKind::scaled: os << "tau=" << suggestion_model.tau; break;
        case AgentKind::noisy: os << "lambda=" << suggestion_model.lambda; break;
        default: break;
        }
        return os.str();
    }
};

enum class SuggesterKnowledge { true_state, partial };

struct SuggesterConfig {
    double randomness = 0.0;     ///< probability of a uniformly random suggestion
    double reception_rate = 1.0; ///< probability a suggestion reaches the agent
    SuggesterKnowledge knowledge = SuggesterKnowledge::true_state;
    double good_belief = 1.0; ///< partial: initial P(good rock believed good)
    double bad_belief = 0.0;  ///< partial: initial P(bad rock believed good)

    static SuggesterConfig all_knowing() { return {}; }
    static SuggesterConfig partial(double g, double b) { return {0.0, 1.0, SuggesterKnowledge::partial, g, b}; }

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(randomness) || !prob(reception_rate) || !prob(good_belief) || !prob(bad_belief))
            throw ConfigError("suggester probabilities must lie in [0, 1]");
    }
};

struct StepTrace {
    std::size_t step = 0;
    ActionIndex planned_action = 0;
    std::optional<ActionIndex> delivered_suggestion;
    bool suggestion_differed = false;
    bool applied = false;
    ActionIndex executed_action = 0;
    double reward = 0.0;
    ObservationIndex observation = 0;
    StateIndex state = 0;
    StateIndex next_state = 0;
    std::optional<Belief> post_belief;
    std::optional<std::string> diagnostic;
};

/// Suggester's initial belief over rock-quality vectors (indexed by rock bits,
/// bit i = rock i good): independent per rock, P(believed good) = G for truly
/// good rocks and B for truly bad ones.
inline std::vector<double> partial_rock_belief(const std::vector<bool>& true_rocks, double good, double bad) {
    if (!(good >= 0.0 && good <= 1.0 && bad >= 0.0 && bad <= 1.0))
        throw ArgumentError("partial_rock_belief: G and B must lie in [0, 1]");
    const std::size_t k = true_rocks.size();
    std::vector<double> out(std::size_t{1} << k);
    for (std::size_t v = 0; v < out.size(); ++v) {
        double p = 1.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double p_good = true_rocks[i] ? good : bad;
            p *= (v >> i & 1U) ? p_good : 1.0 - p_good;
        }
        out[v] = p;
    }
    return out;
}

inline std::vector<double> partial_rock_belief(std::size_t true_bits, std::size_t k, double good, double bad) {
    std::vector<bool> rocks(k);
    for (std::size_t i = 0; i < k; ++i) rocks[i] = (true_bits >> i & 1U) != 0;
    return partial_rock_belief(rocks, good, bad);
}

/// Everything an episode reads but never writes.
struct Simulation {
    const Environment& env;
    const AlphaVectorPolicy& policy;
    const SuggestionContext& context;

    const DiscretePomdp& model() const { return env.model(); }
};

struct EpisodeStreams {
    Rng environment;
    Rng agent;
    Rng suggester;
    Rng delivery;

    static EpisodeStreams derive(std::uint64_t seed, std::uint64_t episode) {
        return {Rng::stream(seed, episode, StreamRole::environment), Rng::stream(seed, episode, StreamRole::agent),
                Rng::stream(seed, episode, StreamRole::suggester), Rng::stream(seed, episode, StreamRole::delivery)};
    }
};

struct EpisodeState {
    StateIndex state = 0;
    Belief belief = Belief::uniform(1);
    std::optional<Belief> suggester_belief;
    std::size_t step = 0;
    std::size_t max_steps = 0;
    double discounted_return = 0.0;
    double undiscounted_return = 0.0;
    double discount_weight = 1.0;
    std::size_t delivered = 0;
    std::size_t differing = 0;
    bool done = false;
    bool aborted = false;
    std::string abort_reason;
};

/// Draws the true start state and sets up both beliefs.
inline EpisodeState start_episode(const Simulation& sim, const SuggesterConfig& suggester, BeliefInit init,
                                  std::size_t max_steps, EpisodeStreams& streams) {
    EpisodeState st;
    st.state = sim.env.sample_initial_state(streams.environment);
    st.belief = sim.env.initial_belief(init);
    st.max_steps = max_steps;
    if (suggester.knowledge == SuggesterKnowledge::partial) {
        if (!sim.env.is_rocksample()) throw ConfigError("partial-knowledge suggesters need a RockSample environment");
        const auto& rs = sim.env.rocksample();
        auto dist = partial_rock_belief(rs.rocks(st.state), rs.spec().k(), suggester.good_belief, suggester.bad_belief);
        st.suggester_belief = rs.belief_at(rs.position(st.state), dist);
    }
    return st;
}

/// The suggester's action for this step, from its own knowledge only.
inline ActionIndex suggest(const SuggesterConfig& cfg, const Simulation& sim, StateIndex true_state,
                           const Belief* suggester_belief, Rng& rng) {
    const std::size_t na = sim.model().num_actions();
    if (cfg.randomness > 0.0 && rng.bernoulli(cfg.randomness)) return rng.below(na);
    if (cfg.knowledge == SuggesterKnowledge::true_state) return sim.context.state_action(true_state);
    if (!suggester_belief) throw ConfigError("partial suggester has no belief");
    return action(sim.policy, *suggester_belief);
}

/// Outcome of the agent's decision for one step, before the environment moves.
struct AgentDecision {
    ActionIndex planned;
    ActionIndex executed;
    Belief belief; ///< belief carried into the transition update
    bool differed;
    bool applied;
    std::optional<std::string> diagnostic;
};

inline AgentDecision agent_step(const AgentConfig& agent, const Simulation& sim, const Belief& b,
                                StateIndex true_state, std::optional<ActionIndex> delivered, Rng& rng) {
    switch (agent.kind) {
    case AgentKind::perfect: {
        const ActionIndex a = sim.context.state_action(true_state);
        return {a, a, b, delivered && *delivered != a, false, std::nullopt};
    }
    case AgentKind::random: {
        const ActionIndex a = rng.below(sim.model().num_actions());
        return {a, a, b, delivered && *delivered != a, false, std::nullopt};
    }
    default: break;
    }
    const ActionIndex planned = action(sim.policy, b);
    const bool differed = delivered && *delivered != planned;
    switch (agent.kind) {
    case AgentKind::naive: {
        ActionIndex executed = planned;
        if (differed && rng.bernoulli(agent.nu)) executed = *delivered;
        return {planned, executed, b, differed, false, std::nullopt};
    }
    case AgentKind::scaled:
    case AgentKind::noisy: {
        if (!delivered) return {planned, planned, b, false, false, std::nullopt};
        Incorporation inc = incorporate(sim.context, b, *delivered, agent.suggestion_model, agent.skip_if_equal);
        return {planned, inc.action, std::move(inc.belief), differed, inc.applied, std::move(inc.diagnostic)};
    }
    default: return {planned, planned, b, differed, false, std::nullopt};
    }
}

namespace detail {
inline std::size_t sample_row(std::span<const Outcome> row, Rng& rng) {
    double u = rng.uniform();
    for (const Outcome& e : row) {
        if (u < e.prob) return e.index;
        u -= e.prob;
    }
    return row.back().index;
}
} // namespace detail

/// Steps 1-2: the suggester draws from its own knowledge, then the delivery
/// coin decides whether the agent receives it.
inline std::optional<ActionIndex> draw_suggestion(const SuggesterConfig& cfg, const Simulation& sim,
                                                  const EpisodeState& st, EpisodeStreams& streams) {
    const Belief* sb = st.suggester_belief ? &*st.suggester_belief : nullptr;
    const ActionIndex s = suggest(cfg, sim, st.state, sb, streams.suggester);
    if (!streams.delivery.bernoulli(cfg.reception_rate)) return std::nullopt;
    return s;
}

/// Steps 3-6 with a given (possibly absent) delivered suggestion: agent
/// decision, environment transition, agent filter update, and the partial
/// suggester's own filter update.
inline StepTrace advance(const Simulation& sim, const AgentConfig& agent, EpisodeState& st,
                         std::optional<ActionIndex> delivered, EpisodeStreams& streams) {
    if (st.done) throw ArgumentError("advance: episode already finished");
    const DiscretePomdp& model = sim.model();
    if (delivered) model.check_action(*delivered);

    StepTrace trace;
    trace.step = st.step;
    trace.state = st.state;
    trace.delivered_suggestion = delivered;

    AgentDecision d = agent_step(agent, sim, st.belief, st.state, delivered, streams.agent);
    trace.planned_action = d.planned;
    trace.executed_action = d.executed;
    trace.suggestion_differed = d.differed;
    trace.applied = d.applied;
    trace.diagnostic = std::move(d.diagnostic);
    if (delivered) ++st.delivered;
    if (d.differed) ++st.differing;

    const ActionIndex a = d.executed;
    const StateIndex next = detail::sample_row(model.transition(st.state, a), streams.environment);
    const ObservationIndex o = detail::sample_row(model.observation(next, a), streams.environment);
    const double r = model.reward(st.state, a);
    trace.reward = r;
    trace.observation = o;
    trace.next_state = next;

    st.discounted_return += st.discount_weight * r;
    st.undiscounted_return += r;
    st.discount_weight *= model.discount();
    st.state = next;
    ++st.step;

    if (agent.uses_belief()) {
        try {
            st.belief = belief_update(model, d.belief, a, o);
        } catch (const ImpossibleObservation& e) {
            st.aborted = true;
            st.done = true;
            st.abort_reason = e.what();
        }
    }
    if (st.suggester_belief) {
        try {
            *st.suggester_belief = belief_update(model, *st.suggester_belief, a, o);
        } catch (const ImpossibleObservation&) {
            // The suggester's prior excluded the truth; keep its prediction only.
            std::vector<double> w(model.num_states(), 0.0);
            for (StateIndex s = 0; s < w.size(); ++s)
                for (const Outcome& t : model.transition(s, a)) w[t.index] += (*st.suggester_belief)[s] * t.prob;
            *st.suggester_belief = Belief::from_weights(std::move(w));
        }
    }
    trace.post_belief = st.belief;
    if (model.is_terminal(next) || st.step >= st.max_steps) st.done = true;
    return trace;
}

/// One full step with a configured suggester.
inline StepTrace run_step(const Simulation& sim, const AgentConfig& agent, const SuggesterConfig& suggester,
                          EpisodeState& st, EpisodeStreams& streams) {
    const auto delivered = draw_suggestion(suggester, sim, st, streams);
    return advance(sim, agent, st, delivered, streams);
}

} // namespace actsugg
