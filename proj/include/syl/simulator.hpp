#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "syl/policies.hpp"
#include "syl/queueing.hpp"
#include "syl/rng.hpp"
#include "syl/schedule_set.hpp"
#include "syl/types.hpp"

namespace syl {

// Per-queue Bernoulli success probabilities (crossbar: per cell, row
// major); at most one packet per queue per slot.
struct TrafficSpec {
    std::vector<double> rates;

    void validate(std::size_t dim) const {
        if (rates.size() != dim) throw std::invalid_argument("TrafficSpec: dimension mismatch");
        for (double r : rates)
            if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("TrafficSpec: rate outside [0,1]");
    }
};

inline std::vector<int> generate_arrivals(const TrafficSpec& traffic, RngStream& rng) {
    std::vector<int> arrivals(traffic.rates.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) arrivals[i] = rng.bernoulli(traffic.rates[i]) ? 1 : 0;
    return arrivals;
}

struct PolicySpec {
    std::string kind;  // syl | syl_tokens | randomized_known | max_weight | delay_max_weight | priority
    LearnerConfig learner;               // syl kinds
    std::int64_t token_budget = 100;     // syl_tokens
    int sensitive_queue = -1;            // syl_tokens
    std::vector<int> priority_order;     // priority
    ConvexCombination combination;       // randomized_known, explicit weights
    RateVector randomization_target;     // randomized_known, decomposed at startup when set
};

inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const ScheduleSet& set,
                                           std::uint64_t seed) {
    if (spec.kind == "syl") return std::make_unique<SylPolicy>(set, spec.learner, seed);
    if (spec.kind == "syl_tokens")
        return std::make_unique<SylTokenPolicy>(set, spec.learner, spec.sensitive_queue, spec.token_budget,
                                                seed);
    if (spec.kind == "randomized_known") {
        ConvexCombination combo = spec.combination;
        if (combo.terms.empty() && !spec.randomization_target.empty())
            combo = decompose(spec.randomization_target, set);
        return std::make_unique<RandomizedKnownPolicy>(set, std::move(combo), seed);
    }
    if (spec.kind == "max_weight") return std::make_unique<MaxWeightPolicy>(set);
    if (spec.kind == "delay_max_weight") return std::make_unique<DelayMaxWeightPolicy>(set);
    if (spec.kind == "priority") return std::make_unique<PriorityPolicy>(set, spec.priority_order);
    throw std::invalid_argument("make_policy: unknown policy kind '" + spec.kind + "'");
}

struct SimConfig {
    ScheduleSet topology = ScheduleSet::crossbar(1);
    TrafficSpec traffic;
    PolicySpec policy;
    std::int64_t horizon = 1;
    std::uint64_t seed = 0;
    std::int64_t warmup = 0;
    // When non-empty, the run command executes each named policy on the
    // same seed (hence the same arrival sample path) into subdirectories.
    std::vector<std::string> compare_policies;
    // Test hook invoked after every slot; not part of the config files.
    std::function<void(const Policy&, std::int64_t)> slot_observer;
};

struct FlowStats {
    std::uint64_t arrived = 0;
    std::uint64_t completed = 0;
    std::uint64_t pending = 0;
    std::uint64_t delay_counted = 0;  // completed packets inside the delay statistics window
    std::uint64_t delay_sum = 0;
    std::map<std::int64_t, std::uint64_t> histogram;

    double mean_delay() const {
        return delay_counted == 0 ? 0.0 : static_cast<double>(delay_sum) / static_cast<double>(delay_counted);
    }
};

struct SimResult {
    StabilityTrace trace;
    std::vector<FlowStats> flows;
    double mean_backlog = 0.0;
    std::uint64_t final_backlog = 0;
    bool plateau_stable = false;
    bool has_learner = false;
    LearnerState learner;
    double wall_seconds = 0.0;
};

// Plateau criterion standing in for strong stability at finite horizon:
// the mean backlog over the last tenth of the run must be within a
// factor two of the mean over the tenth before it.
inline bool plateau_criterion(const StabilityTrace& trace) {
    const std::size_t k = trace.size();
    if (k < 10) return false;
    const std::size_t a0 = 8 * k / 10, b0 = 9 * k / 10;
    const double prev = trace.window_mean(a0 + 1, b0);
    const double last = trace.window_mean(b0 + 1, k);
    if (prev < 1e-12 && last < 1e-12) return true;
    const double lo = std::min(prev, last), hi = std::max(prev, last);
    return hi <= 2.0 * lo;
}

// One slot loop: arrivals -> policy -> queue update -> metrics. The
// whole run is a pure function of the config, so a replayed seed gives
// a bit-identical result.
inline SimResult run(const SimConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.horizon < 1) throw std::invalid_argument("run: horizon must be >= 1");
    const std::size_t dim = config.topology.dim();
    config.traffic.validate(dim);

    std::unique_ptr<Policy> policy = make_policy(config.policy, config.topology, config.seed);
    QueueSystem queues(static_cast<int>(dim), config.warmup);
    RngStream arrivals_rng(config.seed, "arrivals");

    SimResult result;
    std::vector<std::int64_t> backlog_post(dim);
    std::vector<std::int64_t> hol(dim);
    for (std::int64_t slot = 1; slot <= config.horizon; ++slot) {
        const std::vector<int> arrivals = generate_arrivals(config.traffic, arrivals_rng);
        for (std::size_t q = 0; q < dim; ++q) {
            backlog_post[q] = queues.backlog()[q] + arrivals[q];
            hol[q] = queues.hol_delay(static_cast<int>(q), slot);  // fresh arrivals wait 0 slots
        }
        Schedule service;
        try {
            service = policy->select(SlotContext{arrivals, backlog_post, hol, slot});
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "run: aborted at slot " << slot << ": " << e.what() << " (total backlog "
               << queues.total_backlog() << ")";
            throw std::runtime_error(os.str());
        }
        queues.update(arrivals, service, slot);
        result.trace.record(queues.total_backlog());
        if (config.slot_observer) config.slot_observer(*policy, slot);
    }

    result.flows.resize(dim);
    for (std::size_t q = 0; q < dim; ++q) {
        FlowStats& f = result.flows[q];
        const int qi = static_cast<int>(q);
        f.arrived = queues.arrived(qi);
        f.completed = queues.departed(qi);
        f.pending = queues.pending(qi);
        f.delay_counted = queues.delay_counted(qi);
        f.delay_sum = queues.delay_sum(qi);
        f.histogram = queues.delay_histogram(qi);
    }
    result.mean_backlog = stability_metric(result.trace, result.trace.size());
    result.final_backlog = result.trace.total_at(result.trace.size());
    result.plateau_stable = plateau_criterion(result.trace);
    if (const LearnerState* st = policy->learner_state()) {
        result.has_learner = true;
        result.learner = *st;
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

struct SweepCell {
    double tau = 0.0;
    std::string policy;
    std::uint64_t seed = 0;
    bool ok = false;
    double mean_backlog = 0.0;
    std::uint64_t final_backlog = 0;
    bool stable = false;
    std::string error;
};

// Grid of (tau, policy, seed) runs with arrival rates tau * base / base_norm.
// Cell failures are recorded and the sweep continues. Cells are
// independent, so they parallelize across jobs without shared state.
inline std::vector<SweepCell> sweep_tau(const RateVector& base_lambda, double base_norm,
                                        const std::vector<double>& taus,
                                        const std::vector<std::string>& policies,
                                        const std::vector<std::uint64_t>& seeds, const SimConfig& tmpl,
                                        int jobs = 1) {
    if (base_norm <= 0.0) throw std::invalid_argument("sweep_tau: base_norm must be positive");
    for (double tau : taus)
        if (tau < 0.0) throw std::invalid_argument("sweep_tau: tau must be non-negative");

    std::vector<SweepCell> cells;
    for (double tau : taus)
        for (const auto& policy : policies)
            for (std::uint64_t seed : seeds) {
                SweepCell cell;
                cell.tau = tau;
                cell.policy = policy;
                cell.seed = seed;
                cells.push_back(std::move(cell));
            }

    auto run_cell = [&](SweepCell& cell) {
        SimConfig config = tmpl;
        config.traffic.rates = base_lambda;
        for (double& r : config.traffic.rates) r = std::min(1.0, std::max(0.0, r * cell.tau / base_norm));
        config.policy.kind = cell.policy;
        config.seed = cell.seed;
        try {
            const SimResult r = run(config);
            cell.mean_backlog = r.mean_backlog;
            cell.final_backlog = r.final_backlog;
            cell.stable = r.plateau_stable;
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
    };

    if (jobs <= 1) {
        for (auto& cell : cells) run_cell(cell);
        return cells;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            run_cell(cells[i]);
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<int>(jobs, static_cast<int>(cells.size()));
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return cells;
}

struct DelayReportRow {
    std::string label;  // policy or run label
    int flow = 0;
    std::int64_t delay = 0;
    double fraction = 0.0;  // count / delay_counted for that flow
};

// Normalized per-flow delay histograms, one row per (label, flow, delay).
inline std::vector<DelayReportRow> delay_report(const std::vector<SimResult>& results,
                                                const std::vector<std::string>& labels) {
    if (results.size() != labels.size()) throw std::invalid_argument("delay_report: labels mismatch");
    std::size_t dim = 0;
    for (const auto& r : results) {
        if (dim == 0) dim = r.flows.size();
        if (r.flows.size() != dim) throw std::invalid_argument("delay_report: results share no topology");
    }
    std::vector<DelayReportRow> rows;
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (std::size_t q = 0; q < dim; ++q) {
            const FlowStats& f = results[i].flows[q];
            if (f.delay_counted == 0) continue;
            for (const auto& [delay, count] : f.histogram)
                rows.push_back({labels[i], static_cast<int>(q), delay,
                                static_cast<double>(count) / static_cast<double>(f.delay_counted)});
        }
    }
    return rows;
}

}  // namespace syl
