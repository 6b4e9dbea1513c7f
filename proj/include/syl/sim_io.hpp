#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "syl/config.hpp"
#include "syl/simulator.hpp"

namespace syl {

// 17 significant digits round-trips a double exactly.
inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace detail

inline void write_backlog_trace_csv(const std::filesystem::path& path, const StabilityTrace& trace) {
    auto out = detail::open_out(path);
    out << "slot,total_backlog\n";
    const auto& totals = trace.totals();
    for (std::size_t i = 0; i < totals.size(); ++i) out << (i + 1) << ',' << totals[i] << '\n';
}

// ports > 0 labels flows as crossbar (row, col) cells; otherwise the
// flow index goes in flow_row and flow_col stays 0.
inline void write_delays_csv(const std::filesystem::path& path, const SimResult& result, int ports) {
    auto out = detail::open_out(path);
    out << "flow_row,flow_col,delay_slots,count\n";
    for (std::size_t q = 0; q < result.flows.size(); ++q) {
        const int row = ports > 0 ? static_cast<int>(q) / ports : static_cast<int>(q);
        const int col = ports > 0 ? static_cast<int>(q) % ports : 0;
        for (const auto& [delay, count] : result.flows[q].histogram)
            out << row << ',' << col << ',' << delay << ',' << count << '\n';
    }
}

inline nlohmann::json learner_snapshot_json(const LearnerState& st) {
    return nlohmann::json{{"k", st.k},
                          {"s", st.s},
                          {"weighted_sum", st.weighted_sum},
                          {"weight_total", st.weight_total},
                          {"mu_bar", st.mu_bar},
                          {"last_gamma", st.last_gamma}};
}

inline void write_summary_json(const std::filesystem::path& path, const SimConfig& config,
                               const SimResult& result) {
    nlohmann::json j;
    j["config"] = config_to_json(config);
    j["seed"] = config.seed;
    j["horizon"] = config.horizon;
    j["mean_backlog"] = result.mean_backlog;
    j["final_backlog"] = result.final_backlog;
    j["plateau_stable"] = result.plateau_stable;
    j["wall_time_seconds"] = result.wall_seconds;
    j["tool_version"] = kToolVersion;

    std::uint64_t arrived = 0, completed = 0, pending = 0;
    nlohmann::json flows = nlohmann::json::array();
    const int ports = config.topology.is_crossbar() ? config.topology.ports() : 0;
    for (std::size_t q = 0; q < result.flows.size(); ++q) {
        const FlowStats& f = result.flows[q];
        arrived += f.arrived;
        completed += f.completed;
        pending += f.pending;
        flows.push_back({{"flow_row", ports > 0 ? static_cast<int>(q) / ports : static_cast<int>(q)},
                         {"flow_col", ports > 0 ? static_cast<int>(q) % ports : 0},
                         {"arrived", f.arrived},
                         {"completed", f.completed},
                         {"pending", f.pending},
                         {"mean_delay", f.mean_delay()}});
    }
    j["arrived"] = arrived;
    j["completed"] = completed;
    j["pending"] = pending;  // pending packets are excluded from the delay histograms
    j["flows"] = flows;
    if (result.has_learner) j["learner"] = learner_snapshot_json(result.learner);

    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells) {
    auto out = detail::open_out(path);
    out << "tau,policy,seed,mean_backlog,final_backlog,stable,error\n";
    for (const auto& c : cells) {
        out << fmt_double(c.tau) << ',' << c.policy << ',' << c.seed << ',';
        if (c.ok)
            out << fmt_double(c.mean_backlog) << ',' << c.final_backlog << ',' << (c.stable ? 1 : 0) << ",\n";
        else
            out << ",,," << c.error << '\n';
    }
}

inline void write_sweep_aggregate_csv(const std::filesystem::path& path,
                                      const std::vector<SweepCell>& cells) {
    struct Agg {
        int n = 0;
        double sum = 0.0, sumsq = 0.0;
    };
    std::map<std::pair<double, std::string>, Agg> groups;
    for (const auto& c : cells) {
        if (!c.ok) continue;
        Agg& a = groups[{c.tau, c.policy}];
        ++a.n;
        a.sum += c.mean_backlog;
        a.sumsq += c.mean_backlog * c.mean_backlog;
    }
    auto out = detail::open_out(path);
    out << "tau,policy,runs,mean_backlog,stderr\n";
    for (const auto& [key, a] : groups) {
        const double mean = a.sum / a.n;
        double se = 0.0;
        if (a.n > 1) {
            const double var = std::max(0.0, (a.sumsq - a.n * mean * mean) / (a.n - 1));
            se = std::sqrt(var / a.n);
        }
        out << fmt_double(key.first) << ',' << key.second << ',' << a.n << ',' << fmt_double(mean) << ','
            << fmt_double(se) << '\n';
    }
}

// Companion gnuplot scripts; the CSVs stay the real contract and no
// plotting library enters the build.
inline void write_run_plot_script(const std::filesystem::path& out_dir) {
    auto out = detail::open_out(out_dir / "plot.gp");
    out << "set datafile separator ','\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'backlog.png'\n"
        << "set xlabel 'slot'; set ylabel 'total backlog'\n"
        << "plot 'backlog_trace.csv' skip 1 using 1:2 with lines title 'backlog'\n"
        << "set output 'delays.png'\n"
        << "set xlabel 'delay (slots)'; set ylabel 'count'\n"
        << "plot 'delays.csv' skip 1 using 3:4 with impulses title 'delays'\n";
}

inline void write_sweep_plot_script(const std::filesystem::path& out_dir) {
    auto out = detail::open_out(out_dir / "plot.gp");
    out << "set datafile separator ','\n"
        << "set terminal pngcairo size 900,600\n"
        << "set output 'sweep.png'\n"
        << "set xlabel 'tau'; set ylabel 'mean aggregate backlog'\n"
        << "set logscale y\n"
        << "plot for [p in system(\"tail -n +2 sweep_agg.csv | cut -d, -f2 | sort -u | tr '\\n' ' '\")] \\\n"
        << "  'sweep_agg.csv' skip 1 using 1:(strcol(2) eq p ? column(4) : NaN) \\\n"
        << "  with linespoints title p\n";
}

inline std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Written before the run starts so an aborted run still leaves a record.
inline void write_manifest(const std::filesystem::path& out_dir, const std::string& config_path,
                           std::uint64_t seed) {
    nlohmann::json j{{"config_path", config_path},
                     {"seed", seed},
                     {"out_dir", out_dir.string()},
                     {"tool_version", kToolVersion},
                     {"timestamp", iso8601_now()}};
    auto out = detail::open_out(out_dir / "manifest.json");
    out << j.dump(2) << '\n';
}

}  // namespace syl
