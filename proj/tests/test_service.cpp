#include <gtest/gtest.h>

#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "actsugg/server.hpp"
#include "actsugg/service.hpp"
#include "actsugg/solver.hpp"
#include "support/small_worlds.hpp"

using namespace actsugg;
using nlohmann::json;

namespace {

/// Classic-size worlds with a blind policy: enough for descriptor checks.
const ScenarioContext& blind(const EnvSpec& spec) {
    static std::map<std::size_t, std::unique_ptr<ScenarioContext>> cache;
    const std::size_t key = spec.index();
    auto& slot = cache[key];
    if (!slot) {
        const Environment env(spec);
        const DiscretePomdp& m = env.model();
        AlphaVectorPolicy p(m.num_states(), m.num_actions(), m.discount(), blind_policy_vectors(m));
        slot = std::make_unique<ScenarioContext>(spec, std::move(p));
    }
    return *slot;
}

json create_msg(json scenario = json::object()) { return {{"type", "create"}, {"scenario", std::move(scenario)}}; }

json suggest_msg(const std::string& id, json action) {
    return {{"type", "suggest"}, {"session", id}, {"action", std::move(action)}};
}

std::string make_session(SessionManager& m, json scenario = json::object()) {
    const json f = m.handle(create_msg(std::move(scenario)));
    EXPECT_EQ(f["type"], "frame") << f.dump();
    return f["session"];
}

/// A manual clock for auto-mode tests.
struct FakeClock {
    SessionManager::Clock::time_point t{};
    std::function<SessionManager::Clock::time_point()> fn() {
        return [this] { return t; };
    }
};

} // namespace

TEST(Descriptor, TagListsCellsAndLabels) {
    SessionManager m(blind(TagSpec{}));
    const json f = m.handle(create_msg());
    const json& d = f["descriptor"];
    EXPECT_EQ(d["env"], "tag");
    EXPECT_EQ(d["geometry"]["cells"].size(), 29u);
    EXPECT_EQ(d["action_labels"], json({"north", "south", "east", "west", "tag"}));
    EXPECT_EQ(d["agent_kind"], "scaled");
    EXPECT_EQ(d["agent_param"], "tau=0.99");
    EXPECT_EQ(d["max_steps"], 100);
}

TEST(Descriptor, RockSampleListsNineLabels) {
    SessionManager m(blind(RockSampleSpec{}));
    const json f = m.handle(create_msg({{"agent", {{"kind", "noisy"}, {"lambda", 5}}}}));
    const json& d = f["descriptor"];
    EXPECT_EQ(d["action_labels"].size(), 9u);
    EXPECT_EQ(d["geometry"]["n"], 8);
    EXPECT_EQ(d["geometry"]["rocks"].size(), 4u);
    EXPECT_EQ(d["agent_param"], "lambda=5");
    EXPECT_EQ(f["agent_pos"], json({0, 3}));
    for (double p : f["belief_marginal"]) EXPECT_NEAR(p, 0.5, 1e-12);
}

TEST(Create, RejectsInvalidScenarios) {
    SessionManager m(small_worlds::tag());
    auto code = [&](json scenario) { return m.handle(create_msg(std::move(scenario)))["code"]; };
    EXPECT_EQ(code({{"agent", {{"kind", "perfect"}}}}), "invalid_scenario");
    EXPECT_EQ(code({{"agent", {{"kind", "normal"}}}}), "invalid_scenario");
    EXPECT_EQ(code({{"agent", {{"kind", "scaled"}, {"tau", 0}}}}), "invalid_scenario");
    EXPECT_EQ(code({{"agent", {{"kind", "naive"}, {"nu", "high"}}}}), "invalid_scenario");
    EXPECT_EQ(code({{"mode", "fast"}}), "invalid_scenario");
    EXPECT_EQ(code({{"belief_init", "uniform-rocks"}}), "invalid_scenario");
    EXPECT_EQ(code({{"seed", -1}}), "invalid_scenario");
    EXPECT_EQ(m.handle(json{{"type", "create"}})["code"], "bad_request");
    EXPECT_EQ(m.session_count(), 0u);
}

TEST(Frame, FreshTagMarginalIsUniform) {
    SessionManager m(blind(TagSpec{}));
    const json f = m.handle(create_msg());
    EXPECT_EQ(f["step"], 0);
    EXPECT_EQ(f["done"], false);
    EXPECT_TRUE(f["last"].is_null());
    ASSERT_EQ(f["belief_marginal"].size(), 29u);
    for (double p : f["belief_marginal"]) EXPECT_NEAR(p, 1.0 / 29.0, 1e-12);
    EXPECT_NEAR(f["belief_marginal"][0].get<double>(), 0.0345, 5e-5);
    EXPECT_FALSE(f.contains("true_state"));
}

TEST(Suggest, NoneAdvancesLikeNormalStep) {
    SessionManager m(small_worlds::tag());
    const std::string id = make_session(m);
    const json f = m.handle(suggest_msg(id, nullptr));
    EXPECT_EQ(f["step"], 1);
    EXPECT_EQ(f["applied"], false);
    EXPECT_EQ(f["differed"], false);
    EXPECT_TRUE(f["last"]["suggestion"].is_null());
    EXPECT_EQ(f["differing_suggestions"], 0);
}

TEST(Suggest, PlannedActionIsNotApplied) {
    SessionManager m(small_worlds::tag());
    const std::string id = make_session(m);
    const json before = m.handle(json{{"type", "get"}, {"session", id}});
    const json f = m.handle(suggest_msg(id, before["planned_action"]));
    EXPECT_EQ(f["applied"], false);
    EXPECT_EQ(f["differed"], false);
    EXPECT_EQ(f["differing_suggestions"], 0);
}

TEST(Suggest, DifferingActionCounts) {
    SessionManager m(small_worlds::tag());
    const std::string id = make_session(m);
    const json before = m.handle(json{{"type", "get"}, {"session", id}});
    const int other = (before["planned_action"].get<int>() + 1) % 5;
    const json f = m.handle(suggest_msg(id, other));
    EXPECT_EQ(f["differed"], true);
    EXPECT_EQ(f["differing_suggestions"], 1);
    EXPECT_EQ(f["last"]["suggestion"], other);
}

TEST(Suggest, Rejections) {
    SessionManager m(small_worlds::tag());
    const std::string id = make_session(m);
    EXPECT_EQ(m.handle(suggest_msg(id, 5))["code"], "invalid_action");
    EXPECT_EQ(m.handle(suggest_msg(id, -1))["code"], "invalid_action");
    EXPECT_EQ(m.handle(suggest_msg(id, "west"))["code"], "invalid_action");
    EXPECT_EQ(m.handle(suggest_msg("nope", 0))["code"], "not_found");
    EXPECT_EQ(m.handle(json{{"type", "suggest"}, {"session", id}})["code"], "bad_request");
    // One suggestion per step: a second one tagged with the same step is stale.
    json first = suggest_msg(id, 0);
    first["step"] = 0;
    EXPECT_EQ(m.handle(first)["type"], "frame");
    EXPECT_EQ(m.handle(first)["code"], "stale_step");
    EXPECT_EQ(m.handle(json{{"type", "dance"}, {"session", id}})["code"], "bad_request");
    EXPECT_EQ(m.handle(json::array())["code"], "bad_request");
    EXPECT_EQ(json::parse(m.handle_text("{not json"))["code"], "bad_request");
}

TEST(Session, FinishedEpisodeIsFlaggedAndResettable) {
    SessionManager m(small_worlds::tag());
    const std::string id = make_session(m, {{"max_steps", 3}});
    json f;
    for (int i = 0; i < 3 && !(f.is_object() && f["done"] == true); ++i) f = m.handle(suggest_msg(id, nullptr));
    EXPECT_EQ(f["done"], true);
    EXPECT_TRUE(f["planned_action"].is_null());
    EXPECT_EQ(m.handle(suggest_msg(id, nullptr))["code"], "episode_done");
    const json r = m.handle(json{{"type", "reset"}, {"session", id}});
    EXPECT_EQ(r["episode"], 1);
    EXPECT_EQ(r["step"], 0);
    EXPECT_EQ(r["done"], false);
    EXPECT_EQ(m.handle(json{{"type", "close"}, {"session", id}})["type"], "closed");
    EXPECT_EQ(m.handle(json{{"type", "get"}, {"session", id}})["code"], "not_found");
}

TEST(Session, ScriptedSessionReproducesHarnessEpisode) {
    const auto& ctx = small_worlds::tag();
    const std::vector<std::optional<ActionIndex>> script{std::nullopt, 3, 3, 0, std::nullopt, 4, 1, 2, 2, 0};
    for (const AgentConfig& agent : {AgentConfig::scaled(0.9), AgentConfig::noisy(1.0), AgentConfig::naive(0.5)}) {
        const auto traces = run_scripted_episode(ctx.simulation(), agent, script, BeliefInit::uniform_full,
                                                 ctx.env().max_steps(), 17, 0);
        SessionManager m(ctx);
        SessionScenario sc;
        sc.agent = agent;
        sc.seed = 17;
        const std::string id = m.create(sc)["session"];
        for (const StepTrace& t : traces) {
            const auto delivered = t.step < script.size() ? script[t.step] : std::nullopt;
            const json f = m.suggest(id, delivered);
            EXPECT_EQ(f["last"], step_trace_to_json(t));
            EXPECT_EQ(f["step"], t.step + 1);
            double total = 0.0;
            for (double p : f["belief_marginal"]) total += p;
            if (!f["belief_marginal"].empty()) {
                EXPECT_NEAR(total, 1.0, 1e-6);
            }
        }
    }
}

TEST(Session, DebugFlagRevealsTrueState) {
    SessionManager m(small_worlds::tag());
    const json f = m.handle(create_msg({{"debug", true}}));
    EXPECT_TRUE(f.contains("true_state"));
}

TEST(Session, AutoModeStepsAfterDwell) {
    FakeClock clock;
    SessionManager m(small_worlds::tag(), clock.fn());
    const std::string id = make_session(m, {{"mode", "auto"}, {"dwell_ms", 500}});
    EXPECT_FALSE(m.poll(id, 0));
    clock.t += std::chrono::milliseconds(499);
    EXPECT_FALSE(m.poll(id, 0));
    clock.t += std::chrono::milliseconds(1);
    const auto f = m.poll(id, 0);
    ASSERT_TRUE(f);
    EXPECT_EQ((*f)["step"], 1);
    clock.t += std::chrono::milliseconds(1250);
    EXPECT_EQ(m.handle(json{{"type", "get"}, {"session", id}})["step"], 3);
    // A suggestion inside the dwell window plays the step immediately.
    EXPECT_EQ(m.handle(suggest_msg(id, 0))["step"], 4);
    EXPECT_EQ(m.handle(create_msg({{"mode", "auto"}, {"dwell_ms", 0}}))["code"], "invalid_scenario");
}

// ---------------------------------------------------------------------------
// Over the wire
// ---------------------------------------------------------------------------

namespace {

struct RunningServer {
    SessionManager manager{small_worlds::tag()};
    Server server{manager, "127.0.0.1", 0};
    RunningServer() { server.start_background(); }
};

http::response<http::string_body> http_request(unsigned short port, http::verb verb, const std::string& target,
                                               const std::string& body = {}) {
    net::io_context ioc;
    beast::tcp_stream stream(ioc);
    stream.connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), port));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    req.set(http::field::content_type, "application/json");
    req.body() = body;
    req.prepare_payload();
    http::write(stream, req);
    beast::flat_buffer buffer;
    http::response<http::string_body> res;
    http::read(stream, buffer, res);
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_both, ec);
    return res;
}

} // namespace

TEST(Wire, HttpPollingFallback) {
    RunningServer s;
    const unsigned short port = s.server.port();
    EXPECT_EQ(http_request(port, http::verb::get, "/health").result(), http::status::ok);
    EXPECT_EQ(http_request(port, http::verb::get, "/nope").result(), http::status::not_found);
    EXPECT_EQ(http_request(port, http::verb::get, "/api").result(), http::status::method_not_allowed);

    const auto created = http_request(port, http::verb::post, "/api", create_msg().dump());
    EXPECT_EQ(created.result(), http::status::ok);
    EXPECT_EQ(created[http::field::access_control_allow_origin], "*");
    const json f = json::parse(created.body());
    ASSERT_EQ(f["type"], "frame");
    const std::string id = f["session"];
    const json g = json::parse(http_request(port, http::verb::post, "/api", suggest_msg(id, nullptr).dump()).body());
    EXPECT_EQ(g["step"], 1);
    const json bad = json::parse(http_request(port, http::verb::post, "/api", "{{").body());
    EXPECT_EQ(bad["code"], "bad_request");
}

TEST(Wire, WebSocketSession) {
    RunningServer s;
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws(ioc);
    beast::get_lowest_layer(ws).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), s.server.port()));
    ws.handshake("127.0.0.1", "/ws");
    auto roundtrip = [&](const json& msg) {
        ws.write(net::buffer(msg.dump()));
        beast::flat_buffer buf;
        ws.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    };
    const json f = roundtrip(create_msg());
    ASSERT_EQ(f["type"], "frame");
    const std::string id = f["session"];
    const int other = (f["planned_action"].get<int>() + 1) % 5;
    const json g = roundtrip(suggest_msg(id, other));
    EXPECT_EQ(g["step"], 1);
    EXPECT_EQ(g["differed"], true);
    EXPECT_EQ(roundtrip(suggest_msg(id, 99))["code"], "invalid_action");
    EXPECT_EQ(roundtrip(json{{"type", "close"}, {"session", id}})["type"], "closed");
    ws.close(websocket::close_code::normal);
}

TEST(Wire, WebSocketPushesAutoModeFrames) {
    RunningServer s;
    net::io_context ioc;
    websocket::stream<beast::tcp_stream> ws(ioc);
    beast::get_lowest_layer(ws).connect(tcp::endpoint(net::ip::make_address("127.0.0.1"), s.server.port()));
    ws.handshake("127.0.0.1", "/ws");
    ws.write(net::buffer(create_msg({{"mode", "auto"}, {"dwell_ms", 20}}).dump()));
    beast::flat_buffer buf;
    ws.read(buf);
    EXPECT_EQ(json::parse(beast::buffers_to_string(buf.data()))["step"], 0);
    buf.consume(buf.size());
    beast::get_lowest_layer(ws).expires_after(std::chrono::seconds(5));
    ws.read(buf);
    const json pushed = json::parse(beast::buffers_to_string(buf.data()));
    EXPECT_EQ(pushed["type"], "frame");
    EXPECT_GE(pushed["step"].get<int>(), 1);
    ws.close(websocket::close_code::normal);
}
