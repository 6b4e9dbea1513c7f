#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "syl/matching.hpp"
#include "syl/types.hpp"

namespace syl {

// The discrete action set S. A crossbar set holds all n! permutation
// matrices plus the all-zeros matrix and is never materialized; an
// explicit set lists its schedules (and must contain the zero schedule,
// i.e. there is always the option to not serve).
class ScheduleSet {
public:
    enum class Kind { crossbar, explicit_list };

    static ScheduleSet crossbar(int ports) {
        if (ports < 1) throw std::invalid_argument("ScheduleSet: crossbar needs ports >= 1");
        ScheduleSet s;
        s.kind_ = Kind::crossbar;
        s.ports_ = ports;
        s.dim_ = static_cast<std::size_t>(ports) * ports;
        return s;
    }

    static ScheduleSet explicit_set(std::vector<Schedule> schedules) {
        if (schedules.empty()) throw std::invalid_argument("ScheduleSet: empty explicit set");
        const std::size_t dim = schedules[0].size();
        bool has_zero = false;
        std::set<Schedule> seen;
        for (const auto& s : schedules) {
            if (s.size() != dim) throw std::invalid_argument("ScheduleSet: mixed schedule lengths");
            if (!seen.insert(s).second) throw std::invalid_argument("ScheduleSet: duplicate schedule");
            bool all_zero = true;
            for (int x : s) {
                if (x < 0) throw std::invalid_argument("ScheduleSet: negative schedule entry");
                if (x != 0) all_zero = false;
            }
            if (all_zero) has_zero = true;
        }
        if (!has_zero) throw std::invalid_argument("ScheduleSet: explicit set must contain the zero schedule");
        ScheduleSet s;
        s.kind_ = Kind::explicit_list;
        s.dim_ = dim;
        s.schedules_ = std::move(schedules);
        return s;
    }

    Kind kind() const { return kind_; }
    bool is_crossbar() const { return kind_ == Kind::crossbar; }
    int ports() const { return ports_; }
    std::size_t dim() const { return dim_; }

    const std::vector<Schedule>& schedules() const {
        if (kind_ != Kind::explicit_list)
            throw std::logic_error("ScheduleSet: crossbar schedules are not materialized");
        return schedules_;
    }

    Schedule zero_schedule() const { return Schedule(dim_, 0); }

    // Enumerates every schedule (test helper). Refuses large crossbars.
    template <typename Fn>
    void for_each_schedule(Fn&& fn) const {
        if (kind_ == Kind::explicit_list) {
            for (const auto& s : schedules_) fn(s);
            return;
        }
        if (ports_ > 8) throw std::invalid_argument("ScheduleSet: crossbar enumeration refused for n > 8");
        fn(zero_schedule());
        std::vector<int> cols(ports_);
        for (int i = 0; i < ports_; ++i) cols[i] = i;
        do {
            Permutation p{cols};
            fn(p.to_schedule());
        } while (std::next_permutation(cols.begin(), cols.end()));
    }

private:
    Kind kind_ = Kind::crossbar;
    int ports_ = 0;
    std::size_t dim_ = 0;
    std::vector<Schedule> schedules_;
};

}  // namespace syl
