#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "syl/polytope.hpp"
#include "syl/schedule_set.hpp"
#include "syl/types.hpp"

namespace syl {

struct QuadraticObjective {
    RateVector center;     // f(u) = (modulus/2) ||u - center||^2
    double modulus = 1.0;  // strong convexity of f
};

struct FrankWolfeOptions {
    int max_iters = 200;
    double gap_tol = 1e-6;
};

struct LearnerConfig {
    enum class Objective { quadratic, slack };

    Objective objective = Objective::slack;
    QuadraticObjective quadratic;  // used when objective == quadratic
    FrankWolfeOptions frank_wolfe;
    double sigma = 1.0;  // strong convexity of the prox phi(u) = 0.5||u||^2

    // Strong convexity modulus of the primal objective: the slack
    // objective g(gamma) = gamma^2 - gamma has second derivative 2.
    double strong_convexity() const {
        return objective == Objective::slack ? 2.0 : quadratic.modulus;
    }
};

// Dual-averaging state. weighted_sum tracks alpha_i-weighted inner
// solutions (in slack mode the vertex sequence mu_hat_i, which is what
// schedule randomization averages over).
struct LearnerState {
    RateVector s;             // dual accumulator
    std::int64_t k = 0;       // completed steps
    RateVector weighted_sum;  // sum_i alpha_i mu_i
    double weight_total = 0.0;
    RateVector mu_bar;           // weighted_sum / weight_total
    ConvexCombination last_mu;   // most recent inner solution, decomposition-ready
    double last_gamma = 0.0;     // slack mode only

    static LearnerState init(std::size_t dim) {
        LearnerState st;
        st.s.assign(dim, 0.0);
        st.weighted_sum.assign(dim, 0.0);
        st.mu_bar.assign(dim, 0.0);
        return st;
    }
};

// argmax_{v >= 0} { <s, v> - 0.5||v||^2 } in closed form: [s]^+.
inline RateVector dual_point(const LearnerState& st) {
    RateVector y(st.s);
    for (double& x : y) x = x > 0.0 ? x : 0.0;
    return y;
}

struct FrankWolfeResult {
    ConvexCombination combo;
    RateVector point;
    double gap = 0.0;
    int iters = 0;
};

// Minimizes (m/2)||u - c||^2 - <y, u> over conv(S) with Frank-Wolfe and
// exact line search, keeping the iterate as an explicit convex
// combination of schedules. The constant arrival term of the dual inner
// problem is dropped, so lambda never enters here.
inline FrankWolfeResult inner_argmin_quadratic(const RateVector& y, const LearnerConfig& cfg,
                                               const ScheduleSet& set,
                                               const ConvexCombination* warm_start = nullptr) {
    detail::check_dim(y, set, "inner_argmin_quadratic");
    for (double x : y)
        if (!std::isfinite(x)) throw std::invalid_argument("inner_argmin_quadratic: non-finite dual point");
    const RateVector& c = cfg.quadratic.center;
    detail::check_dim(c, set, "inner_argmin_quadratic (center)");
    const double m = cfg.quadratic.modulus;
    if (m <= 0.0) throw std::invalid_argument("inner_argmin_quadratic: modulus must be positive");
    const std::size_t dim = set.dim();

    std::map<Schedule, double> weights;
    if (warm_start != nullptr && !warm_start->terms.empty() &&
        warm_start->terms.front().schedule.size() == dim) {
        for (const auto& term : warm_start->terms) weights[term.schedule] += term.weight;
    } else {
        weights[lmo(y, set)] = 1.0;
    }

    RateVector u(dim, 0.0);
    for (const auto& [sched, w] : weights)
        for (std::size_t i = 0; i < dim; ++i) u[i] += w * sched[i];

    FrankWolfeResult out;
    RateVector dir(dim);
    int it = 0;
    double gap = 0.0;
    for (; it < cfg.frank_wolfe.max_iters; ++it) {
        for (std::size_t i = 0; i < dim; ++i) dir[i] = -(m * (u[i] - c[i]) - y[i]);
        const Schedule v = lmo(dir, set);
        double gap_v = 0.0, dd = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = v[i] - u[i];
            gap_v += dir[i] * d;
            dd += d * d;
        }
        gap = gap_v;
        if (gap <= cfg.frank_wolfe.gap_tol || dd == 0.0) break;
        double step = gap / (m * dd);
        step = std::min(std::max(step, 0.0), 1.0);
        for (auto& [sched, w] : weights) w *= 1.0 - step;
        weights[v] += step;
        for (std::size_t i = 0; i < dim; ++i) u[i] += step * (v[i] - u[i]);
    }

    for (const auto& [sched, w] : weights)
        if (w > 1e-15) out.combo.terms.push_back({sched, w});
    out.point = std::move(u);
    out.gap = gap;
    out.iters = it;
    return out;
}

struct SlackSolution {
    Schedule mu_hat;     // vertex maximizing <y, .> over conv(S)
    double gamma = 0.0;  // slack, clamped below at 0
};

// The slack-variable inner problem separates: the vertex part is a
// plain linear maximization, and minimizing gamma^2 - gamma + gamma<y,1>
// over gamma >= 0 gives gamma = max(0, (1 - <y,1>)/2).
inline SlackSolution inner_argmin_slack(const RateVector& y, const ScheduleSet& set) {
    detail::check_dim(y, set, "inner_argmin_slack");
    SlackSolution sol;
    sol.mu_hat = lmo(y, set);
    double y_dot_one = 0.0;
    for (double x : y) y_dot_one += x;
    sol.gamma = std::max(0.0, 0.5 * (1.0 - y_dot_one));
    return sol;
}

// One dual-averaging step: y_k = [s]^+, inner argmin, then
// s += alpha_k (A_k - mu_k) with alpha_k = 1/sqrt(k). Arrivals may be
// real-valued: observed packet counts in a live run, or an exact mean
// vector when exercising the deterministic dynamics.
inline void learner_step(LearnerState& st, const RateVector& arrivals, const LearnerConfig& cfg,
                         const ScheduleSet& set) {
    const std::size_t dim = set.dim();
    if (arrivals.size() != dim) throw std::invalid_argument("learner_step: arrivals dimension mismatch");
    for (double a : arrivals)
        if (a < 0.0) throw std::invalid_argument("learner_step: negative arrivals");

    const double alpha = 1.0 / std::sqrt(static_cast<double>(st.k + 1));
    const RateVector y = dual_point(st);

    RateVector mu_for_dual(dim);
    if (cfg.objective == LearnerConfig::Objective::quadratic) {
        FrankWolfeResult fw = inner_argmin_quadratic(y, cfg, set, &st.last_mu);
        for (std::size_t i = 0; i < dim; ++i) st.weighted_sum[i] += alpha * fw.point[i];
        mu_for_dual = std::move(fw.point);
        st.last_mu = std::move(fw.combo);
        st.last_gamma = 0.0;
    } else {
        const SlackSolution sol = inner_argmin_slack(y, set);
        for (std::size_t i = 0; i < dim; ++i) {
            mu_for_dual[i] = sol.mu_hat[i] - sol.gamma;
            st.weighted_sum[i] += alpha * sol.mu_hat[i];  // randomization averages mu_hat
        }
        st.last_mu.terms.assign(1, ConvexTerm{sol.mu_hat, 1.0});
        st.last_gamma = sol.gamma;
    }

    for (std::size_t i = 0; i < dim; ++i) st.s[i] += alpha * (arrivals[i] - mu_for_dual[i]);
    st.weight_total += alpha;
    for (std::size_t i = 0; i < dim; ++i) st.mu_bar[i] = st.weighted_sum[i] / st.weight_total;
    ++st.k;
}

inline void learner_step(LearnerState& st, const std::vector<int>& arrivals, const LearnerConfig& cfg,
                         const ScheduleSet& set) {
    learner_step(st, RateVector(arrivals.begin(), arrivals.end()), cfg, set);
}

// Convergence constants for the dual-averaging guarantees: B bounds half
// the squared diameter between conv(S) and the arrival support, eta is
// the capacity margin, and dominance_time is the step count after which
// the expected running average dominates lambda + (eta/2) 1.
struct BoundDiagnostics {
    double B = 0.0;
    double eta = 0.0;
    double sigma = 1.0;
    double m = 1.0;

    double radius_bound(double k) const { return B / (sigma * m) * (std::log(k) + 1.0) / std::sqrt(k); }
    double dominance_time() const {
        const double r = 4.0 * B / (eta * eta * sigma * m);
        return r * r;
    }
};

inline BoundDiagnostics bound_diagnostics(const ScheduleSet& set,
                                          const std::vector<RateVector>& arrival_support,
                                          const RateVector& lambda, const LearnerConfig& cfg,
                                          double margin_tol = 1e-6) {
    if (arrival_support.empty()) throw std::invalid_argument("bound_diagnostics: empty arrival support");
    for (const auto& a : arrival_support) detail::check_dim(a, set, "bound_diagnostics (arrival)");
    detail::check_dim(lambda, set, "bound_diagnostics (lambda)");

    BoundDiagnostics d;
    d.sigma = cfg.sigma;
    d.m = cfg.strong_convexity();

    // The max of the convex map mu -> ||mu - a||^2 over conv(S) sits at
    // a vertex, so enumerating schedules is exact.
    double max_sq = 0.0;
    set.for_each_schedule([&](const Schedule& s) {
        for (const auto& a : arrival_support) {
            double sq = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double diff = s[i] - a[i];
                sq += diff * diff;
            }
            if (sq > max_sq) max_sq = sq;
        }
    });
    d.B = 0.5 * max_sq;

    const CapacityMargin margin = capacity_margin(lambda, set, margin_tol);
    if (!margin.feasible || margin.eta_star <= 0.0)
        throw std::domain_error("bound_diagnostics: lambda has no positive capacity margin");
    d.eta = margin.eta_star;
    return d;
}

}  // namespace syl
