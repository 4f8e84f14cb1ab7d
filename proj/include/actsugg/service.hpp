#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "actsugg/agents.hpp"
#include "actsugg/errors.hpp"
#include "actsugg/harness.hpp"

namespace actsugg {

/// Rejection carried back to the client as {"type":"error", ...}.
class ServiceError : public std::runtime_error {
public:
    ServiceError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

enum class SessionMode { paused, auto_step };

/// What a client may configure when creating a session. The environment and
/// policy are fixed by the server.
struct SessionScenario {
    AgentConfig agent = AgentConfig::scaled(0.99);
    std::uint64_t seed = 1;
    std::size_t max_steps = 0; ///< 0: the environment's default
    std::optional<BeliefInit> belief_init;
    SessionMode mode = SessionMode::paused;
    std::uint64_t dwell_ms = 1000;
    bool debug = false; ///< include the true state in frames
};

inline nlohmann::json step_trace_to_json(const StepTrace& t) {
    nlohmann::json j{{"step", t.step},
                     {"planned_action", t.planned_action},
                     {"suggestion",
                      t.delivered_suggestion ? nlohmann::json(*t.delivered_suggestion) : nlohmann::json()},
                     {"differed", t.suggestion_differed},
                     {"applied", t.applied},
                     {"executed_action", t.executed_action},
                     {"reward", t.reward},
                     {"observation", t.observation}};
    if (t.diagnostic) j["diagnostic"] = *t.diagnostic;
    return j;
}

namespace detail {
inline double json_number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ServiceError("invalid_scenario", std::string("\"") + key + "\" must be a number");
    return j[key].get<double>();
}

inline bool is_count(const nlohmann::json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline std::uint64_t json_count(const nlohmann::json& j, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!is_count(j[key]))
        throw ServiceError("invalid_scenario", std::string("\"") + key + "\" must be a non-negative integer");
    return j[key].get<std::uint64_t>();
}
} // namespace detail

/// Parses the "scenario" object of a create message. Only agents that react
/// to suggestions are allowed.
inline SessionScenario session_scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ServiceError("invalid_scenario", "scenario must be an object");
    SessionScenario sc;
    const nlohmann::json agent = j.value("agent", nlohmann::json::object());
    if (!agent.is_object()) throw ServiceError("invalid_scenario", "\"agent\" must be an object");
    const std::string kind = agent.value("kind", std::string("scaled"));
    try {
        switch (agent_kind_from_string(kind)) {
        case AgentKind::naive: sc.agent = AgentConfig::naive(detail::json_number(agent, "nu", 1.0)); break;
        case AgentKind::scaled: sc.agent = AgentConfig::scaled(detail::json_number(agent, "tau", 0.99)); break;
        case AgentKind::noisy: sc.agent = AgentConfig::noisy(detail::json_number(agent, "lambda", 1.0)); break;
        default: throw ServiceError("invalid_scenario", "agent kind \"" + kind + "\" does not take suggestions");
        }
        if (agent.contains("skip_if_equal")) sc.agent.skip_if_equal = agent.at("skip_if_equal").get<bool>();
        sc.agent.validate();
    } catch (const ServiceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ServiceError("invalid_scenario", e.what());
    }
    sc.seed = detail::json_count(j, "seed", sc.seed);
    sc.max_steps = detail::json_count(j, "max_steps", 0);
    if (j.contains("belief_init")) {
        const auto init = j["belief_init"];
        if (init == "uniform-full") sc.belief_init = BeliefInit::uniform_full;
        else if (init == "uniform-rocks") sc.belief_init = BeliefInit::uniform_rocks;
        else throw ServiceError("invalid_scenario", "belief_init must be \"uniform-full\" or \"uniform-rocks\"");
    }
    const std::string mode = j.value("mode", std::string("paused"));
    if (mode == "paused") sc.mode = SessionMode::paused;
    else if (mode == "auto") sc.mode = SessionMode::auto_step;
    else throw ServiceError("invalid_scenario", "mode must be \"paused\" or \"auto\"");
    sc.dwell_ms = detail::json_count(j, "dwell_ms", sc.dwell_ms);
    if (sc.mode == SessionMode::auto_step && sc.dwell_ms == 0)
        throw ServiceError("invalid_scenario", "auto mode needs dwell_ms > 0");
    if (j.contains("debug")) sc.debug = j["debug"].get<bool>();
    return sc;
}

/// Server-side sessions, each running one episode a step at a time with a
/// human supplying the suggestions. Steps go through the same `advance` the
/// harness uses, with the same per-episode random streams, so a scripted
/// session reproduces a scripted harness episode exactly.
class SessionManager {
public:
    using Clock = std::chrono::steady_clock;

    explicit SessionManager(const ScenarioContext& ctx, std::function<Clock::time_point()> now = &Clock::now)
        : ctx_(ctx), now_(std::move(now)), ids_(std::random_device{}()) {}

    /// Handles one client message and returns the reply (a frame or an error).
    nlohmann::json handle(const nlohmann::json& msg) {
        try {
            if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
                throw ServiceError("bad_request", "message needs a string \"type\"");
            const std::string type = msg["type"];
            if (type == "create") {
                if (!msg.contains("scenario")) throw ServiceError("bad_request", "create needs a \"scenario\"");
                return create(session_scenario_from_json(msg["scenario"]));
            }
            const std::string id = session_id(msg);
            if (type == "suggest") {
                if (!msg.contains("action")) throw ServiceError("bad_request", "suggest needs an \"action\" (or null)");
                std::optional<ActionIndex> action;
                const auto& a = msg["action"];
                if (!a.is_null()) {
                    if (!a.is_number_integer())
                        throw ServiceError("invalid_action", "action must be an integer or null");
                    const auto v = a.get<std::int64_t>();
                    if (v < 0 || static_cast<std::size_t>(v) >= ctx_.env().model().num_actions())
                        throw ServiceError("invalid_action", "action " + std::to_string(v) + " is out of range");
                    action = static_cast<ActionIndex>(v);
                }
                std::optional<std::size_t> step;
                if (msg.contains("step") && !msg["step"].is_null()) {
                    if (!detail::is_count(msg["step"]))
                        throw ServiceError("bad_request", "step must be a non-negative integer");
                    step = msg["step"].get<std::size_t>();
                }
                return suggest(id, action, step);
            }
            if (type == "reset") return reset(id);
            if (type == "get") return get_state(id);
            if (type == "close") return close(id);
            throw ServiceError("bad_request", "unknown message type \"" + type + "\"");
        } catch (const ServiceError& e) {
            return error_message(e.code(), e.what());
        } catch (const nlohmann::json::exception& e) {
            return error_message("bad_request", e.what());
        }
    }

    /// Parses and handles raw text; malformed JSON yields an error message.
    std::string handle_text(const std::string& text) {
        nlohmann::json msg;
        try {
            msg = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            return error_message("bad_request", std::string("malformed JSON: ") + e.what()).dump();
        }
        return handle(msg).dump();
    }

    nlohmann::json create(const SessionScenario& sc) {
        if (sc.belief_init == BeliefInit::uniform_rocks && !ctx_.env().is_rocksample())
            throw ServiceError("invalid_scenario", "uniform-rocks initialization needs a RockSample environment");
        auto session = std::make_shared<Session>();
        session->scenario = sc;
        start(*session);
        std::string id;
        {
            std::lock_guard lock(mutex_);
            do id = make_id();
            while (sessions_.count(id));
            session->id = id;
            sessions_[id] = session;
        }
        std::lock_guard lock(session->mutex);
        nlohmann::json f = frame(*session);
        f["descriptor"] = {{"env", ctx_.env().name()},
                           {"geometry", ctx_.env().geometry()},
                           {"action_labels", ctx_.env().action_labels()},
                           {"agent_kind", to_string(sc.agent.kind)},
                           {"agent_param", sc.agent.param_label()},
                           {"mode", sc.mode == SessionMode::paused ? "paused" : "auto"},
                           {"dwell_ms", sc.dwell_ms},
                           {"max_steps", session->state.max_steps}};
        return f;
    }

    nlohmann::json get_state(const std::string& id) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        catch_up(*s);
        return frame(*s);
    }

    /// Runs one step with `action` delivered (or none). When `expected_step`
    /// is given it must equal the current step, which rejects a second
    /// suggestion for a step that has already been played.
    nlohmann::json suggest(const std::string& id, std::optional<ActionIndex> action,
                           std::optional<std::size_t> expected_step = std::nullopt) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        catch_up(*s);
        if (s->state.done) throw ServiceError("episode_done", "the episode has finished; send reset to start another");
        if (expected_step && *expected_step != s->state.step)
            throw ServiceError("stale_step", "a suggestion for step " + std::to_string(*expected_step) +
                                                 " was already played; current step is " +
                                                 std::to_string(s->state.step));
        step(*s, action);
        return frame(*s);
    }

    /// Starts the next episode (the following episode index of the same seed).
    nlohmann::json reset(const std::string& id) {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        ++s->episode;
        start(*s);
        return frame(*s);
    }

    nlohmann::json close(const std::string& id) {
        std::lock_guard lock(mutex_);
        if (!sessions_.erase(id)) throw ServiceError("not_found", "unknown session \"" + id + "\"");
        return {{"type", "closed"}, {"session", id}};
    }

    /// The current frame if the session has advanced past `seen_step` (auto
    /// mode pushes), otherwise nullopt.
    std::optional<nlohmann::json> poll(const std::string& id, std::size_t seen_step) {
        std::shared_ptr<Session> s;
        {
            std::lock_guard lock(mutex_);
            auto it = sessions_.find(id);
            if (it == sessions_.end()) return std::nullopt;
            s = it->second;
        }
        std::lock_guard lock(s->mutex);
        catch_up(*s);
        if (s->state.step == seen_step) return std::nullopt;
        return frame(*s);
    }

    std::size_t session_count() const {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

    static nlohmann::json error_message(const std::string& code, const std::string& message) {
        return {{"type", "error"}, {"code", code}, {"message", message}};
    }

private:
    struct Session {
        std::mutex mutex;
        std::string id;
        SessionScenario scenario;
        std::uint64_t episode = 0;
        EpisodeStreams streams = EpisodeStreams::derive(0, 0);
        EpisodeState state;
        std::optional<StepTrace> last;
        Clock::time_point last_advance;
    };

    void start(Session& s) {
        s.streams = EpisodeStreams::derive(s.scenario.seed, s.episode);
        const BeliefInit init = s.scenario.belief_init.value_or(ctx_.env().default_belief_init());
        const std::size_t max_steps = s.scenario.max_steps ? s.scenario.max_steps : ctx_.env().max_steps();
        s.state = start_episode(ctx_.simulation(), SuggesterConfig{}, init, max_steps, s.streams);
        s.last.reset();
        s.last_advance = now_();
    }

    void step(Session& s, std::optional<ActionIndex> action) {
        s.last = advance(ctx_.simulation(), s.scenario.agent, s.state, action, s.streams);
        s.last_advance = now_();
    }

    // Auto mode: play the steps whose dwell time elapsed without a suggestion.
    void catch_up(Session& s) {
        if (s.scenario.mode != SessionMode::auto_step) return;
        const auto dwell = std::chrono::milliseconds(s.scenario.dwell_ms);
        const auto now = now_();
        while (!s.state.done && now - s.last_advance >= dwell) {
            const auto due = s.last_advance + dwell;
            s.last = advance(ctx_.simulation(), s.scenario.agent, s.state, std::nullopt, s.streams);
            s.last_advance = due;
        }
    }

    nlohmann::json frame(const Session& s) const {
        const Environment& env = ctx_.env();
        const EpisodeState& st = s.state;
        nlohmann::json f{{"type", "frame"},
                         {"session", s.id},
                         {"episode", s.episode},
                         {"step", st.step},
                         {"reward_total", st.discounted_return},
                         {"reward_undiscounted", st.undiscounted_return},
                         {"differing_suggestions", st.differing},
                         {"done", st.done},
                         {"applied", s.last ? s.last->applied : false},
                         {"differed", s.last ? s.last->suggestion_differed : false}};
        const auto pos = env.agent_position(st.state);
        f["agent_pos"] = pos ? nlohmann::json{pos->x, pos->y} : nlohmann::json();
        f["belief_marginal"] = env.belief_marginal(st.belief);
        f["planned_action"] = st.done ? nlohmann::json() : nlohmann::json(action(ctx_.policy(), st.belief));
        f["last"] = s.last ? step_trace_to_json(*s.last) : nlohmann::json();
        if (st.aborted) f["abort_reason"] = st.abort_reason;
        if (s.scenario.debug) f["true_state"] = st.state;
        return f;
    }

    std::string session_id(const nlohmann::json& msg) const {
        if (!msg.contains("session") || !msg["session"].is_string())
            throw ServiceError("bad_request", "message needs a string \"session\"");
        return msg["session"];
    }

    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw ServiceError("not_found", "unknown session \"" + id + "\"");
        return it->second;
    }

    std::string make_id() {
        static constexpr char hex[] = "0123456789abcdef";
        std::uint64_t v = ids_();
        std::string id(16, '0');
        for (char& c : id) {
            c = hex[v & 0xF];
            v >>= 4;
        }
        return id;
    }

    const ScenarioContext& ctx_;
    std::function<Clock::time_point()> now_;
    mutable std::mutex mutex_;
    std::mt19937_64 ids_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

} // namespace actsugg
