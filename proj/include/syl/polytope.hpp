#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "syl/matching.hpp"
#include "syl/schedule_set.hpp"
#include "syl/types.hpp"

namespace syl {

inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kBirkhoffSupportTol = 1e-10;
inline constexpr double kBirkhoffResidualFloor = 1e-8;
inline constexpr double kSimplexResidualLimit = 1e-6;
inline constexpr double kDecompositionCacheTol = 1e-6;

struct CapacityMargin {
    double eta_star = 0.0;
    bool feasible = false;
};

struct SimplexWeights {
    std::vector<double> weights;  // one per schedule in the explicit set
    double residual = 0.0;        // l2 norm of (sum_j theta_j s_j - mu)
};

namespace detail {

// Euclidean projection onto the probability simplex (sort-based).
inline void project_to_simplex(std::vector<double>& v) {
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    int rho = -1;
    for (std::size_t j = 0; j < u.size(); ++j) {
        css += u[j];
        const double t = (css - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            rho = static_cast<int>(j);
            tau = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(x - tau, 0.0);
}

inline void check_dim(const RateVector& v, const ScheduleSet& set, const char* who) {
    if (v.size() != set.dim()) {
        std::ostringstream os;
        os << who << ": dimension mismatch (got " << v.size() << ", set dimension " << set.dim() << ")";
        throw std::invalid_argument(os.str());
    }
}

}  // namespace detail

// Linear maximization oracle: argmax over s in S of <direction, s>.
// Crossbar sets go through the matching kernel; the zero schedule wins
// unless the best permutation has strictly positive value.
inline Schedule lmo(const RateVector& direction, const ScheduleSet& set) {
    detail::check_dim(direction, set, "lmo");
    for (double x : direction)
        if (!std::isfinite(x)) throw std::invalid_argument("lmo: non-finite direction");
    if (set.is_crossbar()) {
        const MatchingResult best = max_weight_perfect_matching(WeightMatrix(set.ports(), direction));
        if (0.0 < best.total_weight) return best.perm.to_schedule();
        return set.zero_schedule();
    }
    const auto& schedules = set.schedules();
    std::size_t best_idx = 0;
    double best_val = inner(direction, schedules[0]);
    for (std::size_t i = 1; i < schedules.size(); ++i) {
        const double val = inner(direction, schedules[i]);
        if (val > best_val) {
            best_val = val;
            best_idx = i;
        }
    }
    return schedules[best_idx];
}

// Simplex-constrained least squares min ||sum theta_j s_j - mu||^2 by
// projected gradient with a 1/L step, L from power iteration.
inline SimplexWeights simplex_weights(const RateVector& mu, const ScheduleSet& set,
                                      int max_iters = 100000, double improvement_tol = 1e-12) {
    if (set.is_crossbar())
        throw std::invalid_argument("simplex_weights: requires an explicit schedule set");
    detail::check_dim(mu, set, "simplex_weights");
    const auto& schedules = set.schedules();
    const std::size_t m = schedules.size();
    if (m > 10000) throw std::invalid_argument("simplex_weights: explicit set too large");
    const std::size_t d = set.dim();

    auto apply = [&](const std::vector<double>& theta, RateVector& out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const double w = theta[j];
            if (w == 0.0) continue;
            const Schedule& s = schedules[j];
            for (std::size_t i = 0; i < d; ++i) out[i] += w * s[i];
        }
    };
    auto apply_t = [&](const RateVector& x, std::vector<double>& out) {
        for (std::size_t j = 0; j < m; ++j) out[j] = inner(x, schedules[j]);
    };

    // Largest eigenvalue of S^T S by power iteration (through matvecs).
    double lambda_max = 0.0;
    {
        std::vector<double> v(m, 1.0 / std::sqrt(static_cast<double>(m)));
        RateVector sv(d);
        std::vector<double> av(m);
        for (int it = 0; it < 100; ++it) {
            apply(v, sv);
            apply_t(sv, av);
            double nrm = std::sqrt(l2_norm_sq(av));
            if (nrm < 1e-300) break;
            lambda_max = nrm;
            for (std::size_t j = 0; j < m; ++j) v[j] = av[j] / nrm;
        }
    }
    const double step = lambda_max > 1e-300 ? 1.0 / (2.0 * lambda_max) : 0.0;

    std::vector<double> theta(m, 1.0 / static_cast<double>(m));
    RateVector resid(d);
    std::vector<double> grad(m);
    auto objective = [&]() {
        apply(theta, resid);
        for (std::size_t i = 0; i < d; ++i) resid[i] -= mu[i];
        return l2_norm_sq(resid);
    };
    double f = objective();
    if (step > 0.0) {
        for (int it = 0; it < max_iters; ++it) {
            apply_t(resid, grad);
            for (std::size_t j = 0; j < m; ++j) theta[j] -= 2.0 * step * grad[j];
            detail::project_to_simplex(theta);
            const double f_next = objective();
            if (f - f_next < improvement_tol || f_next >= f) {
                f = std::min(f, f_next);
                break;
            }
            f = f_next;
        }
    }
    SimplexWeights out;
    out.weights = std::move(theta);
    out.residual = std::sqrt(std::max(f, 0.0));
    return out;
}

// True iff mu lies in conv(S) within tol. A crossbar point qualifies
// exactly when it is non-negative and all row and column sums share a
// common value t <= 1; explicit sets fall back to least squares, run to
// its numerical floor so the residual can certify tol-level membership.
inline bool membership(const RateVector& mu, const ScheduleSet& set, double tol = kMembershipTol) {
    detail::check_dim(mu, set, "membership");
    if (set.is_crossbar()) {
        const int n = set.ports();
        double total = 0.0;
        for (double x : mu) {
            if (x < -tol) return false;
            total += x;
        }
        const double t = total / n;
        if (t > 1.0 + tol) return false;
        for (int i = 0; i < n; ++i) {
            double row = 0.0, col = 0.0;
            for (int j = 0; j < n; ++j) {
                row += mu[static_cast<std::size_t>(i) * n + j];
                col += mu[static_cast<std::size_t>(j) * n + i];
            }
            if (std::abs(row - t) > tol || std::abs(col - t) > tol) return false;
        }
        return true;
    }
    return simplex_weights(mu, set, 100000, 0.0).residual <= tol;
}

// Largest eta >= 0 with lambda + eta*1 still in conv(S), by bisection
// until the bracket width is at most tol.
inline CapacityMargin capacity_margin(const RateVector& lambda, const ScheduleSet& set, double tol = 1e-6) {
    detail::check_dim(lambda, set, "capacity_margin");
    for (double x : lambda)
        if (x < 0.0) throw std::invalid_argument("capacity_margin: lambda must be non-negative");
    if (tol <= 0.0) throw std::invalid_argument("capacity_margin: tol must be positive");

    auto feasible_at = [&](double eta) {
        RateVector shifted(lambda);
        for (double& x : shifted) x += eta;
        return membership(shifted, set);
    };
    if (!feasible_at(0.0)) return {0.0, false};

    double hi = 1.0;
    if (!set.is_crossbar()) {
        int max_entry = 1;
        for (const auto& s : set.schedules())
            for (int x : s) max_entry = std::max(max_entry, x);
        hi = static_cast<double>(max_entry);
    }
    if (feasible_at(hi)) return {hi, true};
    double lo = 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible_at(mid))
            lo = mid;
        else
            hi = mid;
    }
    return {lo, true};
}

// Greedy Birkhoff decomposition of a crossbar point: peel perfect
// matchings off the support of the row-sum-normalized matrix until the
// residual mass clears, then hand the slack 1 - t to the zero schedule.
inline ConvexCombination birkhoff_decompose(const RateVector& mu, const ScheduleSet& set) {
    if (!set.is_crossbar()) throw std::invalid_argument("birkhoff_decompose: requires a crossbar set");
    detail::check_dim(mu, set, "birkhoff_decompose");
    if (!membership(mu, set)) throw std::domain_error("birkhoff_decompose: point is not in conv(S)");

    const int n = set.ports();
    const double t = std::accumulate(mu.begin(), mu.end(), 0.0) / n;
    ConvexCombination combo;
    if (t < 1e-12) {
        combo.terms.push_back({set.zero_schedule(), 1.0});
        return combo;
    }

    std::vector<double> rem(mu);
    for (double& x : rem) x = std::max(x / t, 0.0);
    double mass = std::accumulate(rem.begin(), rem.end(), 0.0);
    std::vector<char> support(rem.size());
    while (mass > kBirkhoffResidualFloor) {
        for (std::size_t i = 0; i < rem.size(); ++i) support[i] = rem[i] > kBirkhoffSupportTol;
        Permutation p;
        if (!support_perfect_matching(support, n, p)) {
            std::ostringstream os;
            os << "birkhoff_decompose: no support matching with residual mass " << mass;
            throw std::runtime_error(os.str());
        }
        double theta = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
            theta = std::min(theta, rem[static_cast<std::size_t>(i) * n + p.to_col[i]]);
        for (int i = 0; i < n; ++i) {
            double& cell = rem[static_cast<std::size_t>(i) * n + p.to_col[i]];
            cell = std::max(cell - theta, 0.0);
        }
        combo.terms.push_back({p.to_schedule(), theta * t});
        mass = std::accumulate(rem.begin(), rem.end(), 0.0);
    }

    const double zero_weight = t > 1.0 - kMembershipTol ? 0.0 : 1.0 - t;
    if (zero_weight > 0.0) combo.terms.push_back({set.zero_schedule(), zero_weight});

    // Renormalize so the weights sum to exactly 1.
    double total = combo.weight_sum();
    if (total <= 0.0) throw std::runtime_error("birkhoff_decompose: degenerate weights");
    for (auto& term : combo.terms) term.weight /= total;
    double drift = 1.0 - combo.weight_sum();
    auto largest = std::max_element(combo.terms.begin(), combo.terms.end(),
                                    [](const ConvexTerm& a, const ConvexTerm& b) { return a.weight < b.weight; });
    largest->weight += drift;
    return combo;
}

// Least-squares decomposition over an explicit set. Residuals beyond
// the limit mean the point is effectively outside conv(S).
inline ConvexCombination simplex_decompose(const RateVector& mu, const ScheduleSet& set) {
    const SimplexWeights sw = simplex_weights(mu, set);
    if (sw.residual > kSimplexResidualLimit) {
        std::ostringstream os;
        os << "simplex_decompose: residual " << sw.residual << " exceeds " << kSimplexResidualLimit
           << "; point treated as outside conv(S)";
        throw std::domain_error(os.str());
    }
    ConvexCombination combo;
    const auto& schedules = set.schedules();
    for (std::size_t j = 0; j < schedules.size(); ++j)
        if (sw.weights[j] > 1e-15) combo.terms.push_back({schedules[j], sw.weights[j]});
    return combo;
}

inline ConvexCombination decompose(const RateVector& mu, const ScheduleSet& set) {
    return set.is_crossbar() ? birkhoff_decompose(mu, set) : simplex_decompose(mu, set);
}

// Per-policy decomposition cache: recompute only once the target has
// moved more than kDecompositionCacheTol in l-infinity.
class DecompositionCache {
public:
    const ConvexCombination& get(const RateVector& target, const ScheduleSet& set) {
        if (!valid_ || linf_distance(target, last_target_) > kDecompositionCacheTol) {
            combo_ = decompose(target, set);
            last_target_ = target;
            valid_ = true;
        }
        return combo_;
    }

    void invalidate() { valid_ = false; }

private:
    RateVector last_target_;
    ConvexCombination combo_;
    bool valid_ = false;
};

}  // namespace syl
