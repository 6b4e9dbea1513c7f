#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "syl/types.hpp"

namespace syl {

// n x n real weight matrix, row major. Weights are queue backlogs or
// rate entries in practice but may be any finite reals.
struct WeightMatrix {
    int n = 0;
    std::vector<double> w;  // n * n, row major

    WeightMatrix() = default;
    WeightMatrix(int n_, std::vector<double> w_) : n(n_), w(std::move(w_)) {
        if (n < 1 || w.size() != static_cast<std::size_t>(n) * n)
            throw std::invalid_argument("WeightMatrix: not a square matrix");
        for (double x : w)
            if (!std::isfinite(x)) throw std::invalid_argument("WeightMatrix: non-finite entry");
    }

    double at(int i, int j) const { return w[static_cast<std::size_t>(i) * n + j]; }
};

struct MatchingResult {
    Permutation perm;
    double total_weight = 0.0;
};

namespace detail {

// Assignment problem by shortest augmenting paths with dual potentials,
// O(n^3). Minimizes total cost; columns are 1-based internally with a
// virtual column 0. Returns row -> column (0-based).
inline std::vector<int> min_cost_assignment(const WeightMatrix& cost) {
    const int n = cost.n;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

// Exact maximum-weight perfect matching. Maximization is implemented by
// negating the weights into the minimization assignment solver above.
// Tie-breaking among optimal permutations is whatever the solver yields,
// deterministic for a fixed input.
inline MatchingResult max_weight_perfect_matching(const WeightMatrix& w) {
    WeightMatrix neg = w;
    for (double& x : neg.w) x = -x;
    MatchingResult r;
    r.perm.to_col = detail::min_cost_assignment(neg);
    for (int i = 0; i < w.n; ++i) r.total_weight += w.at(i, r.perm.to_col[i]);
    return r;
}

// Exhaustive test oracle over all n! permutations; ties broken by the
// lexicographically smallest permutation. Refuses n > 8.
inline MatchingResult brute_force_matching(const WeightMatrix& w) {
    if (w.n > 8) throw std::invalid_argument("brute_force_matching: n > 8 refused");
    std::vector<int> perm(w.n);
    std::iota(perm.begin(), perm.end(), 0);
    MatchingResult best;
    best.total_weight = -std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < w.n; ++i) total += w.at(i, perm[i]);
        if (total > best.total_weight) {
            best.total_weight = total;
            best.perm.to_col = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Perfect matching restricted to allowed cells, or nullopt-style miss.
// Runs max-weight with weight 1 on allowed cells and -n elsewhere; any
// matching through a forbidden cell scores below n - 0.5.
inline bool support_perfect_matching(const std::vector<char>& support, int n, Permutation& out) {
    if (support.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("support_perfect_matching: not a square matrix");
    WeightMatrix w;
    w.n = n;
    w.w.resize(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) w.w[i] = support[i] ? 1.0 : -static_cast<double>(n);
    const MatchingResult r = max_weight_perfect_matching(w);
    if (r.total_weight < n - 0.5) return false;
    out = r.perm;
    return true;
}

}  // namespace syl
