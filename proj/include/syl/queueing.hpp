#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <vector>

#include "syl/types.hpp"

namespace syl {

// Net change per queue for one slot: arrivals minus offered service.
// Each component lies in [-s_max, a_max] where s_max and a_max bound a
// slot's service and arrivals.
inline std::vector<std::int64_t> net_increment(const std::vector<int>& arrivals,
                                               const Schedule& service) {
    if (arrivals.size() != service.size())
        throw std::invalid_argument("net_increment: dimension mismatch");
    std::vector<std::int64_t> z(arrivals.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (arrivals[i] < 0) throw std::invalid_argument("net_increment: negative arrivals");
        z[i] = static_cast<std::int64_t>(arrivals[i]) - service[i];
    }
    return z;
}

// Pure backlog arithmetic: [q + arrivals - service]^+ componentwise.
// Service offered to a queue holding fewer packets is wasted silently.
inline std::vector<std::int64_t> queue_update(const std::vector<std::int64_t>& q,
                                              const std::vector<int>& arrivals,
                                              const Schedule& service) {
    const std::vector<std::int64_t> z = net_increment(arrivals, service);
    if (q.size() != z.size()) throw std::invalid_argument("queue_update: dimension mismatch");
    std::vector<std::int64_t> next(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const std::int64_t v = q[i] + z[i];
        next[i] = v > 0 ? v : 0;
    }
    return next;
}

// Per-slot total backlog (l1 norm) together with exact prefix sums, so
// time-averaged backlogs and window means come out to integer-accurate
// arithmetic.
class StabilityTrace {
public:
    void record(std::uint64_t total_backlog) {
        const std::uint64_t prev = prefix_.empty() ? 0 : prefix_.back();
        totals_.push_back(total_backlog);
        prefix_.push_back(prev + total_backlog);
    }

    std::size_t size() const { return totals_.size(); }
    std::uint64_t total_at(std::size_t k) const { return totals_.at(k - 1); }  // 1-based slot index

    // Mean of ||Q_i||_1 over slots (from, to], 1-based inclusive bounds.
    double window_mean(std::size_t from, std::size_t to) const {
        if (from < 1 || to < from || to > size()) throw std::out_of_range("StabilityTrace: bad window");
        const std::uint64_t hi = prefix_[to - 1];
        const std::uint64_t lo = from >= 2 ? prefix_[from - 2] : 0;
        return static_cast<double>(hi - lo) / static_cast<double>(to - from + 1);
    }

    double running_mean() const { return size() == 0 ? 0.0 : window_mean(1, size()); }

    const std::vector<std::uint64_t>& totals() const { return totals_; }

private:
    std::vector<std::uint64_t> totals_;
    std::vector<std::uint64_t> prefix_;
};

// (1/k) sum_{i=1..k} ||Q_i||_1.
inline double stability_metric(const StabilityTrace& trace, std::size_t k) {
    if (k < 1 || k > trace.size()) throw std::out_of_range("stability_metric: k exceeds trace length");
    return trace.window_mean(1, k);
}

// True iff expected_arrival - expected_service <= -eta componentwise,
// the drift condition under which the queues are strongly stable.
inline bool drift_diagnostic(const RateVector& expected_arrival, const RateVector& expected_service,
                             double eta) {
    if (expected_arrival.size() != expected_service.size())
        throw std::invalid_argument("drift_diagnostic: dimension mismatch");
    if (eta <= 0.0) throw std::invalid_argument("drift_diagnostic: eta must be positive");
    for (std::size_t i = 0; i < expected_arrival.size(); ++i)
        if (expected_arrival[i] - expected_service[i] > -eta) return false;
    return true;
}

// The slotted-time queue state machine. Arrivals join their queue's
// FIFO tail, then service removes packets from the head, so service can
// reach same-slot arrivals and waiting times bottom out at 0 slots.
class QueueSystem {
public:
    explicit QueueSystem(int n, std::int64_t warmup_slots = 0)
        : n_(n),
          warmup_(warmup_slots),
          backlog_(n, 0),
          fifo_(n),
          arrived_(n, 0),
          departed_(n, 0),
          delay_counted_(n, 0),
          delay_sum_(n, 0),
          delay_hist_(n) {
        if (n < 1) throw std::invalid_argument("QueueSystem: need at least one queue");
    }

    int queue_count() const { return n_; }
    const std::vector<std::int64_t>& backlog() const { return backlog_; }

    std::uint64_t total_backlog() const {
        std::uint64_t t = 0;
        for (std::int64_t b : backlog_) t += static_cast<std::uint64_t>(b);
        return t;
    }

    // Waiting time of queue q's head-of-line packet; 0 when empty.
    std::int64_t hol_delay(int q, std::int64_t slot) const {
        return fifo_[q].empty() ? 0 : slot - fifo_[q].front();
    }

    void update(const std::vector<int>& arrivals, const Schedule& service, std::int64_t slot) {
        if (arrivals.size() != static_cast<std::size_t>(n_) || service.size() != static_cast<std::size_t>(n_))
            throw std::invalid_argument("QueueSystem: dimension mismatch");
        for (int q = 0; q < n_; ++q) {
            if (arrivals[q] < 0) throw std::invalid_argument("QueueSystem: negative arrivals");
            for (int a = 0; a < arrivals[q]; ++a) fifo_[q].push_back(slot);
            arrived_[q] += static_cast<std::uint64_t>(arrivals[q]);

            std::int64_t served = service[q];
            while (served > 0 && !fifo_[q].empty()) {
                const std::int64_t arrival_slot = fifo_[q].front();
                fifo_[q].pop_front();
                ++departed_[q];
                if (arrival_slot >= warmup_) {
                    const std::int64_t delay = slot - arrival_slot;
                    ++delay_counted_[q];
                    delay_sum_[q] += static_cast<std::uint64_t>(delay);
                    ++delay_hist_[q][delay];
                }
                --served;
            }
            backlog_[q] = static_cast<std::int64_t>(fifo_[q].size());

            // Backlog/record consistency plus per-queue conservation.
            if (arrived_[q] != departed_[q] + static_cast<std::uint64_t>(backlog_[q]))
                throw std::logic_error("QueueSystem: conservation violated");
        }
    }

    std::uint64_t arrived(int q) const { return arrived_[q]; }
    std::uint64_t departed(int q) const { return departed_[q]; }
    std::uint64_t pending(int q) const { return static_cast<std::uint64_t>(backlog_[q]); }

    // Delay statistics cover packets that arrived at or after the warmup
    // slot and departed within the horizon.
    std::uint64_t delay_counted(int q) const { return delay_counted_[q]; }
    std::uint64_t delay_sum(int q) const { return delay_sum_[q]; }
    const std::map<std::int64_t, std::uint64_t>& delay_histogram(int q) const { return delay_hist_[q]; }

    double mean_delay(int q) const {
        return delay_counted_[q] == 0 ? 0.0
                                      : static_cast<double>(delay_sum_[q]) / static_cast<double>(delay_counted_[q]);
    }

private:
    int n_;
    std::int64_t warmup_;
    std::vector<std::int64_t> backlog_;
    std::vector<std::deque<std::int64_t>> fifo_;  // arrival slots, oldest first
    std::vector<std::uint64_t> arrived_;
    std::vector<std::uint64_t> departed_;
    std::vector<std::uint64_t> delay_counted_;
    std::vector<std::uint64_t> delay_sum_;
    std::vector<std::map<std::int64_t, std::uint64_t>> delay_hist_;
};

}  // namespace syl
