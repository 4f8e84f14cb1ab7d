// Command-line front end: solve, simulate, sweep, serve.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actsugg/harness.hpp"
#include "actsugg/seeded_solve.hpp"
#include "actsugg/server.hpp"
#include "actsugg/solver.hpp"

namespace {

using namespace actsugg;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct SolveOptions {
    std::string env_path;
    std::string out_path;
    SolverParams params;
    bool suggestion_seeds = true;
    bool quiet = false;
};

struct SimulateOptions {
    std::string env_path;
    std::string policy_path;
    std::string agent = "normal";
    std::optional<double> nu, tau, lambda;
    bool no_skip_equal = false;
    double suggester_random = 0.0;
    double reception = 1.0;
    std::string suggester = "all-knowing";
    double good = 1.0;
    double bad = 0.0;
    std::size_t episodes = 2000;
    std::uint64_t seed = 1;
    std::optional<std::size_t> max_steps;
    std::string belief_init;
    bool undiscounted = false;
    std::size_t threads = 0;
    std::string scenario_id;
    std::string out_path = "-";
    std::string format = "csv";
};

struct SweepOptions {
    std::string axis;
    std::vector<double> values;
};

struct ServeOptions {
    std::string env_path;
    std::string policy_path;
    std::string address = "127.0.0.1";
    unsigned short port = 8080;
    std::size_t threads = 0;
};

void add_simulate_flags(CLI::App& cmd, SimulateOptions& o) {
    cmd.add_option("--env", o.env_path, "Environment spec (JSON)")->required();
    cmd.add_option("--policy", o.policy_path, "Policy file from `solve`")->required();
    cmd.add_option("--agent", o.agent, "normal|perfect|random|naive|scaled|noisy")
        ->check(CLI::IsMember({"normal", "perfect", "random", "naive", "scaled", "noisy"}));
    cmd.add_option("--nu", o.nu, "Naive: probability of following a differing suggestion");
    cmd.add_option("--tau", o.tau, "Scaled: suggester agreement probability");
    cmd.add_option("--lambda", o.lambda, "Noisy: rationality coefficient");
    cmd.add_flag("--no-skip-equal", o.no_skip_equal, "Update the belief even when the suggestion matches the plan");
    cmd.add_option("--suggester-random", o.suggester_random, "Probability of a uniformly random suggestion");
    cmd.add_option("--reception", o.reception, "Probability a suggestion reaches the agent");
    cmd.add_option("--suggester", o.suggester, "all-knowing|partial")
        ->check(CLI::IsMember({"all-knowing", "partial"}));
    cmd.add_option("--good", o.good, "Partial suggester: initial P(good) for good rocks");
    cmd.add_option("--bad", o.bad, "Partial suggester: initial P(good) for bad rocks");
    cmd.add_option("--episodes", o.episodes, "Episodes per scenario");
    cmd.add_option("--seed", o.seed, "Base random seed");
    cmd.add_option("--max-steps", o.max_steps, "Episode step cap (default from the environment)");
    cmd.add_option("--belief-init", o.belief_init, "uniform-full|uniform-rocks")
        ->check(CLI::IsMember({"uniform-full", "uniform-rocks"}));
    cmd.add_flag("--undiscounted", o.undiscounted, "Report the plain sum of rewards instead of discounted return");
    cmd.add_option("--threads", o.threads, "Worker threads (0: all cores)");
    cmd.add_option("--id", o.scenario_id, "Scenario id written to the results");
    cmd.add_option("--out", o.out_path, "Results file, or - for stdout");
    cmd.add_option("--format", o.format, "csv|markdown")->check(CLI::IsMember({"csv", "markdown"}));
}

AgentConfig agent_from(const SimulateOptions& o) {
    const AgentKind kind = agent_kind_from_string(o.agent);
    AgentConfig a;
    try {
        switch (kind) {
        case AgentKind::naive: a = AgentConfig::naive(o.nu.value_or(1.0)); break;
        case AgentKind::scaled: a = AgentConfig::scaled(o.tau.value_or(0.99)); break;
        case AgentKind::noisy: a = AgentConfig::noisy(o.lambda.value_or(1.0)); break;
        default: a.kind = kind; break;
        }
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    a.skip_if_equal = !o.no_skip_equal;
    a.validate();
    return a;
}

ScenarioConfig scenario_from(const SimulateOptions& o, const EnvSpec& spec) {
    ScenarioConfig c;
    c.scenario_id = o.scenario_id;
    c.env = spec;
    c.policy_path = o.policy_path;
    c.agent = agent_from(o);
    c.suggester.randomness = o.suggester_random;
    c.suggester.reception_rate = o.reception;
    if (o.suggester == "partial") {
        c.suggester.knowledge = SuggesterKnowledge::partial;
        c.suggester.good_belief = o.good;
        c.suggester.bad_belief = o.bad;
    }
    c.suggester.validate();
    c.episodes = o.episodes;
    c.seed = o.seed;
    c.max_steps = o.max_steps;
    if (o.belief_init == "uniform-full") c.belief_init = BeliefInit::uniform_full;
    if (o.belief_init == "uniform-rocks") c.belief_init = BeliefInit::uniform_rocks;
    c.discounted = !o.undiscounted;
    c.threads = o.threads;
    return c;
}

void write_results(const std::vector<ScenarioSummary>& rows, const SimulateOptions& o) {
    const ResultFormat format = result_format_from_string(o.format);
    if (o.out_path == "-") {
        std::cout << (format == ResultFormat::csv ? to_csv(rows) : to_markdown(rows));
        return;
    }
    emit_results(rows, format, o.out_path);
}

AlphaVectorPolicy load_policy_checked(const std::string& path) {
    try {
        return load_policy(path);
    } catch (const ParseError& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const FormatError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

int run_solve(const SolveOptions& o) {
    const Environment env(load_env_spec(o.env_path));
    const Belief b0 = env.initial_belief(env.default_belief_init());
    SolverParams params = o.params;
    try {
        params.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    auto progress = [&](const SolveProgress& p) {
        if (!o.quiet)
            std::cerr << "round " << p.round << "  sweep " << p.iteration << "  points " << p.belief_points
                      << "  vectors " << p.vectors << "  residual " << p.residual << '\n';
    };
    SolveReport report;
    const auto models = o.suggestion_seeds ? default_seed_models() : std::vector<SuggestionModel>{};
    const AlphaVectorPolicy policy = solve_with_suggestion_seeds(env.model(), b0, params, models, &report, progress);
    save_policy(policy, o.out_path);
    if (!o.quiet)
        std::cerr << env.name() << ": " << report.vectors << " vectors, V(b0) = " << value(policy, b0)
                  << (report.converged ? "" : " (not converged)") << '\n';
    return 0;
}

int run_simulate(const SimulateOptions& o) {
    const EnvSpec spec = load_env_spec(o.env_path);
    const ScenarioContext ctx(spec, load_policy_checked(o.policy_path), o.threads);
    const ScenarioConfig cfg = scenario_from(o, spec);
    write_results({run_scenario(ctx, cfg).summary}, o);
    return 0;
}

int run_sweep_cmd(const SimulateOptions& o, const SweepOptions& s) {
    const EnvSpec spec = load_env_spec(o.env_path);
    const SweepAxis axis = sweep_axis_from_string(s.axis);
    const ScenarioContext ctx(spec, load_policy_checked(o.policy_path), o.threads);
    const ScenarioConfig base = scenario_from(o, spec);
    write_results(run_sweep(ctx, base, axis, s.values), o);
    return 0;
}

int run_serve(const ServeOptions& o) {
    const EnvSpec spec = load_env_spec(o.env_path);
    const ScenarioContext ctx(spec, load_policy_checked(o.policy_path), o.threads);
    SessionManager manager(ctx);
    std::optional<Server> server;
    try {
        server.emplace(manager, o.address, o.port);
    } catch (const boost::system::system_error& e) {
        throw IoError("cannot listen on " + o.address + ":" + std::to_string(o.port) + ": " + e.what());
    }
    server->stop_on_signals();
    std::cerr << "serving " << ctx.env().name() << " on http://" << o.address << ":" << server->port()
              << " (WebSocket /ws, HTTP POST /api)\n";
    server->run();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete POMDP agents that treat action suggestions as observations"};
    app.require_subcommand(1);

    SolveOptions solve_opts;
    auto* solve = app.add_subcommand("solve", "Compute an alpha-vector policy for an environment");
    solve->add_option("--env", solve_opts.env_path, "Environment spec (JSON)")->required();
    solve->add_option("--out", solve_opts.out_path, "Policy output file")->required();
    solve->add_option("--points", solve_opts.params.max_belief_points, "Belief point budget");
    solve->add_option("--iters", solve_opts.params.max_iterations, "Maximum backup sweeps");
    solve->add_option("--epsilon", solve_opts.params.bellman_epsilon, "Convergence threshold");
    solve->add_option("--seed", solve_opts.params.rng_seed, "Expansion random seed");
    solve->add_option("--rounds", solve_opts.params.expansion_rounds, "Belief expansion rounds");
    solve->add_option("--threads", solve_opts.params.threads, "Worker threads (0: all cores)");
    solve->add_flag("!--no-suggestion-seeds", solve_opts.suggestion_seeds,
                    "Skip the second pass seeded with post-suggestion beliefs");
    solve->add_flag("--quiet", solve_opts.quiet, "No progress output");

    SimulateOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "Run one scenario and report summary statistics");
    add_simulate_flags(*simulate, sim_opts);

    SimulateOptions sweep_sim;
    SweepOptions sweep_opts;
    auto* sweep = app.add_subcommand("sweep", "Run a scenario across reception rates or suggester randomness");
    add_simulate_flags(*sweep, sweep_sim);
    sweep->add_option("--axis", sweep_opts.axis, "reception|randomness")
        ->required()
        ->check(CLI::IsMember({"reception", "randomness"}));
    sweep->add_option("--values", sweep_opts.values, "Comma-separated axis values")->required()->delimiter(',');

    ServeOptions serve_opts;
    auto* serve = app.add_subcommand("serve", "Run the live suggestion service");
    serve->add_option("--env", serve_opts.env_path, "Environment spec (JSON)")->required();
    serve->add_option("--policy", serve_opts.policy_path, "Policy file from `solve`")->required();
    serve->add_option("--port", serve_opts.port, "TCP port");
    serve->add_option("--address", serve_opts.address, "Listen address");
    serve->add_option("--threads", serve_opts.threads, "Threads for precomputing suggestion tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*solve) return run_solve(solve_opts);
        if (*simulate) return run_simulate(sim_opts);
        if (*sweep) return run_sweep_cmd(sweep_sim, sweep_opts);
        if (*serve) return run_serve(serve_opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ArgumentError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
