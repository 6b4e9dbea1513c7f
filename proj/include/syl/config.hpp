#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "syl/learner.hpp"
#include "syl/simulator.hpp"

namespace syl {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Accepts a flat array or nested rows; returns the row-major flattening.
inline std::vector<double> parse_real_matrix(const nlohmann::json& j, const char* what) {
    std::vector<double> flat;
    if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
    for (const auto& el : j) {
        if (el.is_array()) {
            for (const auto& x : el) flat.push_back(x.get<double>());
        } else {
            flat.push_back(el.get<double>());
        }
    }
    return flat;
}

inline std::vector<int> parse_int_vector(const nlohmann::json& j, const char* what) {
    std::vector<int> flat;
    if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
    for (const auto& el : j) {
        if (el.is_array()) {
            for (const auto& x : el) flat.push_back(x.get<int>());
        } else {
            flat.push_back(el.get<int>());
        }
    }
    return flat;
}

}  // namespace detail

inline SimConfig parse_config(const nlohmann::json& j) {
    SimConfig config;
    if (j.value("version", kConfigVersion) != kConfigVersion)
        throw ConfigError("config: unsupported version");

    if (!j.contains("topology")) throw ConfigError("config: missing topology");
    const auto& topo = j.at("topology");
    const std::string topo_kind = topo.value("kind", "crossbar");
    if (topo_kind == "crossbar") {
        config.topology = ScheduleSet::crossbar(topo.at("ports").get<int>());
    } else if (topo_kind == "explicit") {
        std::vector<Schedule> schedules;
        for (const auto& s : topo.at("schedules"))
            schedules.push_back(detail::parse_int_vector(s, "topology.schedules"));
        config.topology = ScheduleSet::explicit_set(std::move(schedules));
    } else {
        throw ConfigError("config: unknown topology kind '" + topo_kind + "'");
    }
    const std::size_t dim = config.topology.dim();

    if (!j.contains("traffic")) throw ConfigError("config: missing traffic");
    config.traffic.rates = detail::parse_real_matrix(j.at("traffic").at("rates"), "traffic.rates");
    if (config.traffic.rates.size() != dim) throw ConfigError("config: traffic dimension mismatch");

    if (!j.contains("policy")) throw ConfigError("config: missing policy");
    const auto& pol = j.at("policy");
    PolicySpec& spec = config.policy;
    spec.kind = pol.at("kind").get<std::string>();

    if (pol.contains("objective")) {
        const auto& obj = pol.at("objective");
        if (obj.is_string()) {
            if (obj.get<std::string>() != "slack") throw ConfigError("config: unknown objective");
            spec.learner.objective = LearnerConfig::Objective::slack;
        } else {
            if (obj.value("kind", "quadratic") != std::string("quadratic"))
                throw ConfigError("config: unknown objective kind");
            spec.learner.objective = LearnerConfig::Objective::quadratic;
            spec.learner.quadratic.center = detail::parse_real_matrix(obj.at("center"), "objective.center");
            spec.learner.quadratic.modulus = obj.value("modulus", 1.0);
            if (spec.learner.quadratic.center.size() != dim)
                throw ConfigError("config: objective center dimension mismatch");
        }
    }
    spec.learner.frank_wolfe.max_iters = pol.value("max_iters", spec.learner.frank_wolfe.max_iters);
    spec.learner.frank_wolfe.gap_tol = pol.value("gap_tol", spec.learner.frank_wolfe.gap_tol);
    spec.learner.sigma = pol.value("sigma", 1.0);

    spec.token_budget = pol.value("token_budget", std::int64_t{100});
    if (pol.contains("sensitive_flow")) {
        const auto& sf = pol.at("sensitive_flow");
        if (sf.is_array()) {
            if (!config.topology.is_crossbar())
                throw ConfigError("config: [row, col] sensitive flow needs a crossbar topology");
            const int row = sf.at(0).get<int>(), col = sf.at(1).get<int>();
            spec.sensitive_queue = row * config.topology.ports() + col;
        } else {
            spec.sensitive_queue = sf.get<int>();
        }
    }
    if (pol.contains("order")) spec.priority_order = detail::parse_int_vector(pol.at("order"), "policy.order");
    if (pol.contains("target")) {
        spec.randomization_target = detail::parse_real_matrix(pol.at("target"), "policy.target");
        if (spec.randomization_target.size() != dim)
            throw ConfigError("config: randomization target dimension mismatch");
    }
    if (pol.contains("combination")) {
        const auto& comb = pol.at("combination");
        const auto weights = detail::parse_real_matrix(comb.at("weights"), "combination.weights");
        const auto& scheds = comb.at("schedules");
        if (scheds.size() != weights.size()) throw ConfigError("config: combination weights/schedules mismatch");
        for (std::size_t i = 0; i < weights.size(); ++i)
            spec.combination.terms.push_back(
                {detail::parse_int_vector(scheds.at(i), "combination.schedules"), weights[i]});
    }

    config.horizon = j.value("horizon", std::int64_t{1});
    if (config.horizon < 1) throw ConfigError("config: horizon must be >= 1");
    config.seed = j.value("seed", std::uint64_t{0});
    config.warmup = j.value("warmup", std::int64_t{0});
    if (config.warmup < 0) throw ConfigError("config: warmup must be >= 0");
    if (j.contains("compare_policies"))
        for (const auto& p : j.at("compare_policies")) config.compare_policies.push_back(p.get<std::string>());
    return config;
}

// Canonical echo: flat arrays, defaults made explicit. Parsing the echo
// reproduces an equivalent config.
inline nlohmann::json config_to_json(const SimConfig& config) {
    nlohmann::json j;
    j["version"] = kConfigVersion;
    if (config.topology.is_crossbar()) {
        j["topology"] = {{"kind", "crossbar"}, {"ports", config.topology.ports()}};
    } else {
        nlohmann::json scheds = nlohmann::json::array();
        for (const auto& s : config.topology.schedules()) scheds.push_back(s);
        j["topology"] = {{"kind", "explicit"}, {"schedules", scheds}};
    }
    j["traffic"] = {{"rates", config.traffic.rates}};

    nlohmann::json pol;
    pol["kind"] = config.policy.kind;
    if (config.policy.learner.objective == LearnerConfig::Objective::slack) {
        pol["objective"] = "slack";
    } else {
        pol["objective"] = {{"kind", "quadratic"},
                            {"center", config.policy.learner.quadratic.center},
                            {"modulus", config.policy.learner.quadratic.modulus}};
    }
    pol["max_iters"] = config.policy.learner.frank_wolfe.max_iters;
    pol["gap_tol"] = config.policy.learner.frank_wolfe.gap_tol;
    pol["sigma"] = config.policy.learner.sigma;
    pol["token_budget"] = config.policy.token_budget;
    if (config.policy.sensitive_queue >= 0) pol["sensitive_flow"] = config.policy.sensitive_queue;
    if (!config.policy.priority_order.empty()) pol["order"] = config.policy.priority_order;
    if (!config.policy.randomization_target.empty()) pol["target"] = config.policy.randomization_target;
    if (!config.policy.combination.terms.empty()) {
        nlohmann::json weights = nlohmann::json::array(), scheds = nlohmann::json::array();
        for (const auto& term : config.policy.combination.terms) {
            weights.push_back(term.weight);
            scheds.push_back(term.schedule);
        }
        pol["combination"] = {{"weights", weights}, {"schedules", scheds}};
    }
    j["policy"] = pol;
    j["horizon"] = config.horizon;
    j["seed"] = config.seed;
    j["warmup"] = config.warmup;
    if (!config.compare_policies.empty()) j["compare_policies"] = config.compare_policies;
    return j;
}

inline SimConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

// Whitespace-separated rows, one row per line; must come out square.
inline WeightMatrix parse_matrix_text(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (!ls.eof() && ls.fail()) throw ConfigError("matrix: non-numeric entry");
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("matrix: empty input");
    const std::size_t n = rows.size();
    std::vector<double> flat;
    for (const auto& row : rows) {
        if (row.size() != n) throw ConfigError("matrix: not square");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return WeightMatrix(static_cast<int>(n), std::move(flat));
}

inline WeightMatrix load_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file: " + path);
    return parse_matrix_text(in);
}

}  // namespace syl
