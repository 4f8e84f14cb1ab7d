#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "actsugg/agents.hpp"
#include "actsugg/env/environment.hpp"
#include "actsugg/errors.hpp"
#include "actsugg/parallel.hpp"
#include "actsugg/policy.hpp"
#include "actsugg/suggestion.hpp"

namespace actsugg {

struct ScenarioConfig {
    std::string scenario_id;
    EnvSpec env = TagSpec{};
    std::string policy_path;
    AgentConfig agent;
    SuggesterConfig suggester;
    std::size_t episodes = 2000;
    std::uint64_t seed = 1;
    std::optional<std::size_t> max_steps;  ///< defaults to the environment's
    std::optional<BeliefInit> belief_init; ///< defaults to the environment's
    /// Score episodes by discounted return (the model's discount); false
    /// reports the plain sum of rewards.
    bool discounted = true;
    std::size_t threads = 0;
};

struct EpisodeRecord {
    std::size_t episode = 0;
    double discounted_reward = 0.0;
    double undiscounted_reward = 0.0;
    std::size_t steps = 0;
    std::size_t delivered = 0;
    std::size_t differing = 0;
    bool aborted = false;
};

struct ScenarioSummary {
    std::string scenario_id;
    std::string agent_kind;
    std::string param;
    std::string env;
    std::size_t episodes = 0;
    double mean_reward = 0.0;
    double reward_ci95 = 0.0;
    double mean_differing_suggestions = 0.0;
    double suggestions_ci95 = 0.0;
    double mean_steps = 0.0;
    double mean_suggestions_per_step = 0.0;
    std::uint64_t seed = 0;
    bool ci_defined = false; ///< false when episodes == 1 (CI reported as 0)
    std::size_t aborted = 0;
};

struct ScenarioResult {
    ScenarioSummary summary;
    std::vector<EpisodeRecord> records;
};

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;
    bool defined = false;
};

/// Mean and 1.96 * sample standard deviation / sqrt(n).
inline MeanCi mean_ci95(std::span<const double> xs) {
    MeanCi out;
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    out.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(xs.size()));
    out.defined = true;
    return out;
}

/// Environment, policy and suggestion tables, built once and shared
/// read-only by every episode of every scenario that uses them.
class ScenarioContext {
public:
    ScenarioContext(const EnvSpec& spec, AlphaVectorPolicy policy, std::size_t threads = 0)
        : env_(std::make_unique<Environment>(spec)),
          policy_(std::make_unique<AlphaVectorPolicy>(std::move(policy))) {
        const DiscretePomdp& m = env_->model();
        if (policy_->num_states() != m.num_states() || policy_->num_actions() != m.num_actions())
            throw ConfigError("policy dimensions (" + std::to_string(policy_->num_states()) + " states, " +
                              std::to_string(policy_->num_actions()) + " actions) do not match " + env_->name() +
                              " (" + std::to_string(m.num_states()) + ", " + std::to_string(m.num_actions()) + ")");
        context_ = std::make_unique<SuggestionContext>(m, *policy_, threads);
    }

    static ScenarioContext from_files(const EnvSpec& spec, const std::string& policy_path, std::size_t threads = 0) {
        return ScenarioContext(spec, load_policy(policy_path), threads);
    }

    const Environment& env() const { return *env_; }
    const AlphaVectorPolicy& policy() const { return *policy_; }
    const SuggestionContext& suggestion_context() const { return *context_; }
    Simulation simulation() const { return {*env_, *policy_, *context_}; }

private:
    std::unique_ptr<Environment> env_;
    std::unique_ptr<AlphaVectorPolicy> policy_;
    std::unique_ptr<SuggestionContext> context_;
};

/// One independent episode; its random streams depend only on (seed, episode).
inline EpisodeRecord run_episode(const Simulation& sim, const AgentConfig& agent, const SuggesterConfig& suggester,
                                 BeliefInit init, std::size_t max_steps, std::uint64_t seed, std::size_t episode) {
    EpisodeStreams streams = EpisodeStreams::derive(seed, episode);
    EpisodeState st = start_episode(sim, suggester, init, max_steps, streams);
    while (!st.done) run_step(sim, agent, suggester, st, streams);
    return {episode, st.discounted_return, st.undiscounted_return, st.step, st.delivered, st.differing, st.aborted};
}

/// Same episode protocol, with the suggestion for each step taken from a
/// script instead of a modeled suggester (steps past the end get none).
inline std::vector<StepTrace> run_scripted_episode(const Simulation& sim, const AgentConfig& agent,
                                                   const std::vector<std::optional<ActionIndex>>& script,
                                                   BeliefInit init, std::size_t max_steps, std::uint64_t seed,
                                                   std::size_t episode) {
    EpisodeStreams streams = EpisodeStreams::derive(seed, episode);
    EpisodeState st = start_episode(sim, SuggesterConfig{}, init, max_steps, streams);
    std::vector<StepTrace> traces;
    while (!st.done) {
        const auto delivered = st.step < script.size() ? script[st.step] : std::nullopt;
        traces.push_back(advance(sim, agent, st, delivered, streams));
    }
    return traces;
}

inline ScenarioResult run_scenario(const ScenarioContext& ctx, const ScenarioConfig& cfg) {
    if (cfg.episodes == 0) throw ConfigError("episodes must be at least 1");
    cfg.agent.validate();
    cfg.suggester.validate();
    if (cfg.suggester.knowledge == SuggesterKnowledge::partial && !ctx.env().is_rocksample())
        throw ConfigError("partial-knowledge suggesters need a RockSample environment");
    const BeliefInit init = cfg.belief_init.value_or(ctx.env().default_belief_init());
    if (init == BeliefInit::uniform_rocks && !ctx.env().is_rocksample())
        throw ConfigError("uniform-rocks initialization needs a RockSample environment");
    const std::size_t max_steps = cfg.max_steps.value_or(ctx.env().max_steps());
    if (max_steps == 0) throw ConfigError("max_steps must be positive");

    const Simulation sim = ctx.simulation();
    ScenarioResult result;
    result.records.resize(cfg.episodes);
    parallel_for(cfg.episodes, cfg.threads, [&](std::size_t e) {
        result.records[e] = run_episode(sim, cfg.agent, cfg.suggester, init, max_steps, cfg.seed, e);
    });

    std::vector<double> rewards, suggestions, steps, per_step;
    for (const EpisodeRecord& r : result.records) {
        rewards.push_back(cfg.discounted ? r.discounted_reward : r.undiscounted_reward);
        suggestions.push_back(static_cast<double>(r.differing));
        steps.push_back(static_cast<double>(r.steps));
        per_step.push_back(r.steps ? static_cast<double>(r.differing) / static_cast<double>(r.steps) : 0.0);
        if (r.aborted) ++result.summary.aborted;
    }
    const MeanCi reward = mean_ci95(rewards);
    const MeanCi sugg = mean_ci95(suggestions);

    ScenarioSummary& s = result.summary;
    s.scenario_id = cfg.scenario_id;
    s.agent_kind = to_string(cfg.agent.kind);
    s.param = cfg.agent.param_label();
    s.env = ctx.env().name();
    s.episodes = cfg.episodes;
    s.mean_reward = reward.mean;
    s.reward_ci95 = reward.ci95;
    s.mean_differing_suggestions = sugg.mean;
    s.suggestions_ci95 = sugg.ci95;
    s.mean_steps = mean_ci95(steps).mean;
    s.mean_suggestions_per_step = mean_ci95(per_step).mean;
    s.seed = cfg.seed;
    s.ci_defined = reward.defined;
    return result;
}

/// Loads the environment and policy named in `cfg`, then runs it.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    if (cfg.policy_path.empty()) throw ConfigError("scenario has no policy path");
    const ScenarioContext ctx = ScenarioContext::from_files(cfg.env, cfg.policy_path, cfg.threads);
    return run_scenario(ctx, cfg);
}

enum class SweepAxis { reception, randomness };

inline std::string to_string(SweepAxis axis) { return axis == SweepAxis::reception ? "reception" : "randomness"; }

inline SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "reception") return SweepAxis::reception;
    if (s == "randomness") return SweepAxis::randomness;
    throw ConfigError("unknown sweep axis \"" + s + "\"");
}

namespace detail {
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
} // namespace detail

/// One scenario per axis value, all with the base seed (common random numbers).
inline std::vector<ScenarioSummary> run_sweep(const ScenarioContext& ctx, const ScenarioConfig& base, SweepAxis axis,
                                              const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<ScenarioSummary> out;
    for (double v : values) {
        ScenarioConfig cfg = base;
        (axis == SweepAxis::reception ? cfg.suggester.reception_rate : cfg.suggester.randomness) = v;
        const std::string prefix = base.scenario_id.empty() ? std::string() : base.scenario_id + ":";
        cfg.scenario_id = prefix + to_string(axis) + "=" + detail::format_number(v);
        out.push_back(run_scenario(ctx, cfg).summary);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Result emission
// ---------------------------------------------------------------------------

enum class ResultFormat { csv, markdown };

inline ResultFormat result_format_from_string(const std::string& s) {
    if (s == "csv") return ResultFormat::csv;
    if (s == "markdown" || s == "md") return ResultFormat::markdown;
    throw ConfigError("unknown output format \"" + s + "\"");
}

inline constexpr const char* kCsvHeader =
    "scenario_id,agent_kind,param,env,episodes,mean_reward,reward_ci95,mean_suggestions,suggestions_ci95,mean_steps,"
    "seed,suggestions_per_step";

namespace detail {
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}
} // namespace detail

inline std::string to_csv(const std::vector<ScenarioSummary>& summaries) {
    using detail::csv_field;
    using detail::format_number;
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const ScenarioSummary& s : summaries) {
        os << csv_field(s.scenario_id) << ',' << csv_field(s.agent_kind) << ',' << csv_field(s.param) << ','
           << csv_field(s.env) << ',' << s.episodes << ',' << format_number(s.mean_reward) << ','
           << format_number(s.reward_ci95) << ',' << format_number(s.mean_differing_suggestions) << ','
           << format_number(s.suggestions_ci95) << ',' << format_number(s.mean_steps) << ',' << s.seed << ','
           << format_number(s.mean_suggestions_per_step) << '\n';
    }
    return os.str();
}

/// Agent rows in the usual benchmark table layout: Normal and
/// Perfect have no suggestion count; parameterized agents sit under a group row.
inline std::string to_markdown(const std::vector<ScenarioSummary>& summaries) {
    auto title = [](std::string k) {
        if (!k.empty()) k[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(k[0])));
        return k;
    };
    auto pm = [](double mean, double ci) {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(1);
        os << mean << " ± " << ci;
        return os.str();
    };
    std::ostringstream os;
    std::string env = summaries.empty() ? std::string() : summaries.front().env;
    os << "| Agent | Param | Reward" << (env.empty() ? "" : " (" + env + ")") << " | # Sugg |\n";
    os << "|---|---|---:|---:|\n";
    std::string group;
    for (const ScenarioSummary& s : summaries) {
        const bool plain = s.agent_kind == "normal" || s.agent_kind == "perfect" || s.agent_kind == "random";
        if (plain) {
            os << "| " << title(s.agent_kind) << " |  | " << pm(s.mean_reward, s.reward_ci95) << " | -- |\n";
            group.clear();
            continue;
        }
        if (s.agent_kind != group) {
            os << "| " << title(s.agent_kind) << " |  |  |  |\n";
            group = s.agent_kind;
        }
        os << "|  | " << s.param << " | " << pm(s.mean_reward, s.reward_ci95) << " | "
           << pm(s.mean_differing_suggestions, s.suggestions_ci95) << " |\n";
    }
    return os.str();
}

inline void emit_results(const std::vector<ScenarioSummary>& summaries, ResultFormat format,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << (format == ResultFormat::csv ? to_csv(summaries) : to_markdown(summaries));
    if (!out) throw IoError("failed writing " + path);
}

} // namespace actsugg
