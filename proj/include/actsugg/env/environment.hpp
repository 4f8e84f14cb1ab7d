#pragma once

#include <array>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "actsugg/env/rocksample.hpp"
#include "actsugg/env/tag.hpp"
#include "actsugg/errors.hpp"
#include "actsugg/rng.hpp"

namespace actsugg {

using EnvSpec = std::variant<TagSpec, RockSampleSpec>;

enum class BeliefInit {
    uniform_full,  ///< uniform over every non-terminal state
    uniform_rocks, ///< known robot position, uniform over rock qualities
};

// ---------------------------------------------------------------------------
// Environment spec file:
//   {"env": "tag", "cells": [[x, y], ...], "move_away_prob": 0.8, "max_steps": 100}
//   {"env": "rocksample", "n": 8, "sr": 10, "sp": -1,
//    "rock_positions": [[0, 0], ...], "init_pos": [0, 3], "max_steps": 200}
// Every field except "env" is optional; "discount" is accepted by both.
// ---------------------------------------------------------------------------

namespace detail {
inline Cell cell_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw ConfigError("cell must be an [x, y] integer pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

template <typename T>
void optional_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("env spec field \"") + key + "\": " + e.what());
    }
}
} // namespace detail

namespace detail {
inline EnvSpec parse_env_spec(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("env") || !j["env"].is_string())
        throw ConfigError("env spec needs a string \"env\" field");
    const std::string kind = j["env"];
    if (kind == "tag") {
        TagSpec spec;
        if (j.contains("cells")) {
            spec.cells.clear();
            for (const auto& c : j.at("cells").get<std::vector<nlohmann::json>>())
                spec.cells.push_back(cell_from_json(c));
        }
        optional_field(j, "move_away_prob", spec.move_away_prob);
        optional_field(j, "max_steps", spec.max_steps);
        optional_field(j, "discount", spec.discount);
        return spec;
    }
    if (kind == "rocksample") {
        RockSampleSpec spec;
        optional_field(j, "n", spec.n);
        optional_field(j, "sr", spec.sr);
        optional_field(j, "sp", spec.sp);
        optional_field(j, "max_steps", spec.max_steps);
        optional_field(j, "discount", spec.discount);
        if (j.contains("rock_positions")) {
            spec.rock_positions.clear();
            for (const auto& c : j.at("rock_positions").get<std::vector<nlohmann::json>>())
                spec.rock_positions.push_back(cell_from_json(c));
        }
        if (j.contains("init_pos")) spec.init_pos = cell_from_json(j["init_pos"]);
        if (j.contains("k") && j["k"].get<std::size_t>() != spec.k())
            throw ConfigError("env spec \"k\" disagrees with rock_positions");
        return spec;
    }
    throw ConfigError("unknown env \"" + kind + "\"");
}
} // namespace detail

inline EnvSpec env_spec_from_json(const nlohmann::json& j) {
    try {
        return detail::parse_env_spec(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed env spec: ") + e.what());
    }
}

inline nlohmann::json env_spec_to_json(const EnvSpec& spec) {
    auto cells = [](const std::vector<Cell>& cs) {
        nlohmann::json arr = nlohmann::json::array();
        for (Cell c : cs) arr.push_back({c.x, c.y});
        return arr;
    };
    if (const auto* t = std::get_if<TagSpec>(&spec)) {
        return {{"env", "tag"},
                {"cells", cells(t->cells)},
                {"move_away_prob", t->move_away_prob},
                {"max_steps", t->max_steps},
                {"discount", t->discount}};
    }
    const auto& r = std::get<RockSampleSpec>(spec);
    return {{"env", "rocksample"}, {"n", r.n},
            {"k", r.k()},          {"sr", r.sr},
            {"sp", r.sp},          {"rock_positions", cells(r.rock_positions)},
            {"init_pos", {r.init_pos.x, r.init_pos.y}},
            {"max_steps", r.max_steps},
            {"discount", r.discount}};
}

inline EnvSpec load_env_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open env spec " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return env_spec_from_json(nlohmann::json::parse(ss.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("env spec " + path + " is not valid JSON: " + e.what());
    }
}

/// A built environment: model plus the domain knowledge the simulator, the
/// harness and the live service need (initial states, labels, geometry).
class Environment {
public:
    explicit Environment(const EnvSpec& spec) : env_(build(spec)) {}

    bool is_tag() const { return std::holds_alternative<TagEnvironment>(env_); }
    bool is_rocksample() const { return std::holds_alternative<RockSampleEnvironment>(env_); }
    const TagEnvironment& tag() const { return std::get<TagEnvironment>(env_); }
    const RockSampleEnvironment& rocksample() const { return std::get<RockSampleEnvironment>(env_); }

    std::string name() const {
        if (is_tag()) return "tag";
        const auto& s = rocksample().spec();
        auto num = [](double v) {
            std::ostringstream os;
            os << v;
            return os.str();
        };
        return "rocksample(" + std::to_string(s.n) + "," + std::to_string(s.k()) + "," + num(s.sr) + "," +
               num(s.sp) + ")";
    }

    const DiscretePomdp& model() const {
        return std::visit([](const auto& e) -> const DiscretePomdp& { return e.model(); }, env_);
    }

    std::vector<std::string> action_labels() const {
        return std::visit([](const auto& e) { return e.action_labels(); }, env_);
    }

    std::size_t max_steps() const {
        return std::visit([](const auto& e) { return e.spec().max_steps; }, env_);
    }

    BeliefInit default_belief_init() const { return is_tag() ? BeliefInit::uniform_full : BeliefInit::uniform_rocks; }

    Belief initial_belief(BeliefInit init) const {
        const DiscretePomdp& m = model();
        if (init == BeliefInit::uniform_full) {
            std::vector<double> w(m.num_states(), 0.0);
            for (StateIndex s = 0; s < m.num_states(); ++s)
                if (!m.is_terminal(s)) w[s] = 1.0;
            return Belief::from_weights(std::move(w));
        }
        if (!is_rocksample()) throw ConfigError("uniform-rocks initialization needs a RockSample environment");
        const auto& rs = rocksample();
        std::vector<double> uniform(rs.num_rock_states(), 1.0);
        return rs.belief_at(rs.spec().init_pos, uniform);
    }

    /// Draws the episode's true start state consistently with the default
    /// initial belief.
    StateIndex sample_initial_state(Rng& rng) const {
        if (is_tag()) {
            const auto& t = tag();
            return rng.below(t.num_cells() * t.num_cells());
        }
        const auto& rs = rocksample();
        return rs.state(rs.spec().init_pos, rng.below(rs.num_rock_states()));
    }

    /// Observable agent coordinates in state `s` (nullopt when terminal).
    std::optional<Cell> agent_position(StateIndex s) const {
        if (model().is_terminal(s)) return std::nullopt;
        if (is_tag()) return tag().layout().cell(tag().agent_cell(s));
        return rocksample().position(s);
    }

    /// Tag: opponent-location marginal per cell. RockSample: probability each
    /// rock is good. Mass on the terminal state is excluded; empty when the
    /// belief is entirely terminal.
    std::vector<double> belief_marginal(const Belief& b) const {
        const DiscretePomdp& m = model();
        double live = 0.0;
        for (StateIndex s = 0; s < b.size(); ++s)
            if (!m.is_terminal(s)) live += b[s];
        if (!(live > 0.0)) return {};
        if (is_tag()) {
            const auto& t = tag();
            std::vector<double> out(t.num_cells(), 0.0);
            for (StateIndex s = 0; s < t.terminal_state(); ++s) out[t.opponent_cell(s)] += b[s] / live;
            return out;
        }
        const auto& rs = rocksample();
        std::vector<double> out(rs.spec().k(), 0.0);
        for (StateIndex s = 0; s < rs.terminal_state(); ++s) {
            if (b[s] == 0.0) continue;
            for (std::size_t i = 0; i < out.size(); ++i)
                if (rs.rocks(s) >> i & 1U) out[i] += b[s] / live;
        }
        return out;
    }

    /// Geometry for clients that draw the world.
    nlohmann::json geometry() const {
        nlohmann::json g;
        if (is_tag()) {
            g["kind"] = "tag";
            nlohmann::json cells = nlohmann::json::array();
            for (Cell c : tag().layout().cells()) cells.push_back({c.x, c.y});
            g["cells"] = std::move(cells);
        } else {
            const auto& s = rocksample().spec();
            g["kind"] = "rocksample";
            g["n"] = s.n;
            nlohmann::json rocks = nlohmann::json::array();
            for (Cell c : s.rock_positions) rocks.push_back({c.x, c.y});
            g["rocks"] = std::move(rocks);
        }
        return g;
    }

private:
    using Variant = std::variant<TagEnvironment, RockSampleEnvironment>;

    static Variant build(const EnvSpec& spec) {
        try {
            if (const auto* t = std::get_if<TagSpec>(&spec)) return TagEnvironment(*t);
            return RockSampleEnvironment(std::get<RockSampleSpec>(spec));
        } catch (const ArgumentError& e) {
            throw ConfigError(std::string("invalid environment spec: ") + e.what());
        }
    }

    Variant env_;
};

} // namespace actsugg
