#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace syl {

// A rate vector: arrival rate, service rate, or a learned average.
// For an n x n crossbar it is the row-major flattening of the matrix.
using RateVector = std::vector<double>;

// One feasible service action for a slot, as a non-negative integer
// vector (crossbar: a flattened permutation matrix or all zeros).
using Schedule = std::vector<int>;

// Row -> column assignment; materializable as a 0/1 matrix.
struct Permutation {
    std::vector<int> to_col;

    int size() const { return static_cast<int>(to_col.size()); }

    Schedule to_schedule() const {
        const int n = size();
        Schedule s(static_cast<std::size_t>(n) * n, 0);
        for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i) * n + to_col[i]] = 1;
        return s;
    }
};

struct ConvexTerm {
    Schedule schedule;
    double weight = 0.0;
};

// Weights over schedules representing a point of conv(S).
struct ConvexCombination {
    std::vector<ConvexTerm> terms;

    double weight_sum() const {
        double t = 0.0;
        for (const auto& term : terms) t += term.weight;
        return t;
    }

    RateVector reconstruct(std::size_t dim) const {
        RateVector v(dim, 0.0);
        for (const auto& term : terms) {
            if (term.schedule.size() != dim)
                throw std::invalid_argument("ConvexCombination: schedule dimension mismatch");
            for (std::size_t j = 0; j < dim; ++j) v[j] += term.weight * term.schedule[j];
        }
        return v;
    }
};

inline double linf_distance(const RateVector& a, const RateVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("linf_distance: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
        if (x > d) d = x;
    }
    return d;
}

inline double l2_norm_sq(const RateVector& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

inline double inner(const RateVector& a, const RateVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double inner(const RateVector& a, const Schedule& b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace syl
