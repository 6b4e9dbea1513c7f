#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "syl/learner.hpp"
#include "syl/polytope.hpp"
#include "syl/queueing.hpp"
#include "syl/rng.hpp"
#include "syl/schedule_set.hpp"
#include "syl/types.hpp"

namespace syl {

// What a policy sees each slot. Arrivals are observed before selection,
// and backlog / head-of-line delays already include them, so a schedule
// picked now can serve packets that arrived this slot.
struct SlotContext {
    const std::vector<int>& arrivals;
    const std::vector<std::int64_t>& backlog;
    const std::vector<std::int64_t>& hol_delay;
    std::int64_t slot = 0;
};

// Inverse-CDF sampling of a schedule index from combination weights.
inline const Schedule& sample_combination(const ConvexCombination& combo, double u) {
    if (combo.terms.empty()) throw std::invalid_argument("sample_combination: empty combination");
    double cum = 0.0;
    for (const auto& term : combo.terms) {
        cum += term.weight;
        if (u < cum) return term.schedule;
    }
    return combo.terms.back().schedule;
}

inline const Schedule& randomized_known_select(const ConvexCombination& combo, RngStream& rng) {
    return sample_combination(combo, rng.uniform());
}

template <typename Weight>
inline Schedule weighted_argmax_select(const std::vector<Weight>& weights, const ScheduleSet& set) {
    if (weights.size() != set.dim()) throw std::invalid_argument("weighted select: dimension mismatch");
    if (set.is_crossbar()) {
        std::vector<double> w(weights.begin(), weights.end());
        return max_weight_perfect_matching(WeightMatrix(set.ports(), std::move(w))).perm.to_schedule();
    }
    const auto& schedules = set.schedules();
    std::size_t best = 0;
    double best_val = 0.0;
    for (std::size_t i = 0; i < schedules.size(); ++i) {
        double val = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) val += static_cast<double>(weights[j]) * schedules[i][j];
        if (i == 0 || val > best_val) {
            best_val = val;
            best = i;
        }
    }
    return schedules[best];
}

// Max-weight: the schedule maximizing <Q, s>. Crossbars go through the
// matching kernel with backlogs as weights; a matched empty queue just
// wastes its unit of service downstream.
inline Schedule max_weight_select(const std::vector<std::int64_t>& backlog, const ScheduleSet& set) {
    return weighted_argmax_select(backlog, set);
}

// Same argmax with head-of-line waiting times as weights.
inline Schedule delay_max_weight_select(const std::vector<std::int64_t>& hol_delays, const ScheduleSet& set) {
    return weighted_argmax_select(hol_delays, set);
}

// Serves the highest-priority nonempty queue; idles when all are empty.
// Requires an explicit set of single-queue service schedules.
inline Schedule priority_select(const std::vector<std::int64_t>& backlog, const std::vector<int>& order,
                                const ScheduleSet& set) {
    if (set.is_crossbar()) throw std::invalid_argument("priority_select: requires an explicit set");
    if (backlog.size() != set.dim()) throw std::invalid_argument("priority_select: dimension mismatch");
    for (int q : order) {
        if (q < 0 || static_cast<std::size_t>(q) >= backlog.size())
            throw std::invalid_argument("priority_select: queue index out of range");
        if (backlog[q] <= 0) continue;
        for (const auto& s : set.schedules()) {
            if (s[q] <= 0) continue;
            bool single = true;
            for (std::size_t j = 0; j < s.size(); ++j)
                if (j != static_cast<std::size_t>(q) && s[j] != 0) single = false;
            if (single) return s;
        }
        throw std::invalid_argument("priority_select: no single-queue schedule serves the queue");
    }
    return set.zero_schedule();
}

class Policy {
public:
    virtual ~Policy() = default;
    virtual Schedule select(const SlotContext& ctx) = 0;
    virtual const LearnerState* learner_state() const { return nullptr; }
};

class MaxWeightPolicy : public Policy {
public:
    explicit MaxWeightPolicy(ScheduleSet set) : set_(std::move(set)) {}
    Schedule select(const SlotContext& ctx) override { return max_weight_select(ctx.backlog, set_); }

private:
    ScheduleSet set_;
};

class DelayMaxWeightPolicy : public Policy {
public:
    explicit DelayMaxWeightPolicy(ScheduleSet set) : set_(std::move(set)) {}
    Schedule select(const SlotContext& ctx) override { return delay_max_weight_select(ctx.hol_delay, set_); }

private:
    ScheduleSet set_;
};

class PriorityPolicy : public Policy {
public:
    PriorityPolicy(ScheduleSet set, std::vector<int> order) : set_(std::move(set)), order_(std::move(order)) {}
    Schedule select(const SlotContext& ctx) override { return priority_select(ctx.backlog, order_, set_); }

private:
    ScheduleSet set_;
    std::vector<int> order_;
};

class RandomizedKnownPolicy : public Policy {
public:
    RandomizedKnownPolicy(ScheduleSet set, ConvexCombination combo, std::uint64_t seed)
        : set_(std::move(set)), combo_(std::move(combo)), rng_(seed, "randomized_known") {
        if (combo_.terms.empty()) throw std::invalid_argument("RandomizedKnownPolicy: empty combination");
        double sum = 0.0;
        for (const auto& term : combo_.terms) {
            if (term.weight < 0.0) throw std::invalid_argument("RandomizedKnownPolicy: negative weight");
            if (term.schedule.size() != set_.dim())
                throw std::invalid_argument("RandomizedKnownPolicy: schedule dimension mismatch");
            sum += term.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("RandomizedKnownPolicy: weights must sum to 1");
    }

    Schedule select(const SlotContext&) override { return randomized_known_select(combo_, rng_); }

private:
    ScheduleSet set_;
    ConvexCombination combo_;
    RngStream rng_;
};

// Dual-averaging randomized policy: advance the learner with this
// slot's arrivals, decompose the running average (cached while it moves
// less than the cache tolerance), then sample a schedule.
class SylPolicy : public Policy {
public:
    SylPolicy(ScheduleSet set, LearnerConfig cfg, std::uint64_t seed, std::string_view rng_name = "syl")
        : set_(std::move(set)), cfg_(cfg), state_(LearnerState::init(set_.dim())), rng_(seed, rng_name) {}

    Schedule select(const SlotContext& ctx) override {
        learner_step(state_, ctx.arrivals, cfg_, set_);
        const ConvexCombination& combo = cache_.get(state_.mu_bar, set_);
        return sample_combination(combo, rng_.uniform());
    }

    const LearnerState* learner_state() const override { return &state_; }

protected:
    ScheduleSet set_;
    LearnerConfig cfg_;
    LearnerState state_;
    DecompositionCache cache_;
    RngStream rng_;
};

struct TokenState {
    std::int64_t reserve = 0;
    std::map<Schedule, std::int64_t> per_schedule;

    std::int64_t total() const {
        std::int64_t t = reserve;
        for (const auto& [s, c] : per_schedule) t += c;
        return t;
    }
};

// SYL variant that buys low latency for one sensitive flow with a fixed
// token budget. Overriding the sampled schedule moves one token from
// the reserve onto the bypassed schedule; later, when the sampler picks
// a sensitive-serving schedule that is not needed, the most-tokened
// schedule runs instead and pays its token back to the reserve.
class SylTokenPolicy : public SylPolicy {
public:
    SylTokenPolicy(ScheduleSet set, LearnerConfig cfg, int sensitive_queue, std::int64_t budget,
                   std::uint64_t seed)
        : SylPolicy(std::move(set), cfg, seed, "syl_tokens"), sensitive_(sensitive_queue) {
        if (budget < 0) throw std::invalid_argument("SylTokenPolicy: negative budget");
        if (sensitive_ < 0 || static_cast<std::size_t>(sensitive_) >= set_.dim())
            throw std::invalid_argument("SylTokenPolicy: sensitive queue out of range");
        tokens_.reserve = budget;
    }

    Schedule select(const SlotContext& ctx) override {
        learner_step(state_, ctx.arrivals, cfg_, set_);
        const ConvexCombination& combo = cache_.get(state_.mu_bar, set_);
        Schedule s_rand = sample_combination(combo, rng_.uniform());

        const bool sensitive_waiting = ctx.backlog[sensitive_] > 0;
        const bool rand_serves_sensitive = s_rand[sensitive_] > 0;

        if (sensitive_waiting && tokens_.reserve > 0 && !rand_serves_sensitive) {
            Schedule forced = sensitive_serving_schedule(combo);
            if (!forced.empty()) {
                --tokens_.reserve;
                ++tokens_.per_schedule[s_rand];
                return forced;
            }
            return s_rand;
        }
        if (!sensitive_waiting && rand_serves_sensitive) {
            auto best = tokens_.per_schedule.end();
            for (auto it = tokens_.per_schedule.begin(); it != tokens_.per_schedule.end(); ++it)
                if (it->second > 0 && (best == tokens_.per_schedule.end() || it->second > best->second))
                    best = it;  // map order breaks ties toward the smallest key
            if (best != tokens_.per_schedule.end()) {
                Schedule repaid = best->first;
                if (--best->second == 0) tokens_.per_schedule.erase(best);
                ++tokens_.reserve;
                return repaid;
            }
        }
        return s_rand;
    }

    const TokenState& tokens() const { return tokens_; }

private:
    // Prefer the heaviest decomposition term through the sensitive cell;
    // otherwise force a support matching through it. Empty means no
    // sensitive-serving schedule exists and the caller keeps the sample.
    Schedule sensitive_serving_schedule(const ConvexCombination& combo) const {
        const ConvexTerm* best = nullptr;
        for (const auto& term : combo.terms)
            if (term.schedule[sensitive_] > 0 && (best == nullptr || term.weight > best->weight)) best = &term;
        if (best != nullptr) return best->schedule;
        if (!set_.is_crossbar()) return Schedule{};
        const int n = set_.ports();
        const int row = sensitive_ / n, col = sensitive_ % n;
        std::vector<char> support(set_.dim());
        for (std::size_t i = 0; i < support.size(); ++i) support[i] = state_.mu_bar[i] > kBirkhoffSupportTol;
        for (int j = 0; j < n; ++j)
            if (j != col) support[static_cast<std::size_t>(row) * n + j] = 0;
        for (int i = 0; i < n; ++i)
            if (i != row) support[static_cast<std::size_t>(i) * n + col] = 0;
        support[static_cast<std::size_t>(row) * n + col] = 1;
        Permutation p;
        if (!support_perfect_matching(support, n, p)) return Schedule{};
        return p.to_schedule();
    }

    int sensitive_;
    TokenState tokens_;
};

}  // namespace syl
