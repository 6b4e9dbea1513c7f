// Command-line front end: run one simulation, sweep the traffic
// intensity grid, or decompose a crossbar rate matrix.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "syl/config.hpp"
#include "syl/polytope.hpp"
#include "syl/sim_io.hpp"
#include "syl/simulator.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path resolve_out_dir(const std::string& out_flag, const std::string& command,
                         const std::string& config_path, std::uint64_t seed) {
    if (!out_flag.empty()) return fs::path(out_flag);
    const char* root_env = std::getenv("SYL_SIM_OUT");
    const fs::path root = root_env != nullptr && *root_env != '\0' ? fs::path(root_env) : fs::path("out");
    const std::string stem = fs::path(config_path).stem().string();
    return root / (command + "-" + stem + "-seed" + std::to_string(seed));
}

void prepare_out_dir(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir) && !fs::is_empty(dir, ec)) {
        if (!force) throw UsageError("output directory " + dir.string() + " is not empty (use --force)");
    }
    fs::create_directories(dir);
}

void print_error_record(const std::string& kind, const std::string& message) {
    nlohmann::json j{{"error", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
}

void run_into(const syl::SimConfig& config, const fs::path& dir, bool emit_plot) {
    const syl::SimResult result = syl::run(config);
    syl::write_backlog_trace_csv(dir / "backlog_trace.csv", result.trace);
    syl::write_delays_csv(dir / "delays.csv", result,
                          config.topology.is_crossbar() ? config.topology.ports() : 0);
    syl::write_summary_json(dir / "summary.json", config, result);
    if (emit_plot) syl::write_run_plot_script(dir);
    std::cout << "run: " << config.policy.kind << " horizon " << config.horizon << " seed " << config.seed
              << " mean_backlog " << syl::fmt_double(result.mean_backlog) << " plateau_stable "
              << (result.plateau_stable ? "true" : "false") << "\n";
}

int cmd_run(const std::string& config_path, bool seed_set, std::uint64_t seed_flag,
            const std::string& out_flag, bool force, bool emit_plot) {
    syl::SimConfig config = syl::load_config_file(config_path);
    if (seed_set) config.seed = seed_flag;

    const fs::path out_dir = resolve_out_dir(out_flag, "run", config_path, config.seed);
    prepare_out_dir(out_dir, force);
    syl::write_manifest(out_dir, config_path, config.seed);

    if (config.compare_policies.empty()) {
        run_into(config, out_dir, emit_plot);
    } else {
        // Same seed per policy, so every policy faces the identical
        // arrival sample path while drawing its own selection stream.
        for (const auto& kind : config.compare_policies) {
            syl::SimConfig child = config;
            child.policy.kind = kind;
            child.compare_policies.clear();
            fs::create_directories(out_dir / kind);
            run_into(child, out_dir / kind, emit_plot);
        }
    }
    std::cout << "outputs: " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, double tau_from, double tau_to, double step,
              const std::string& policies_flag, int seeds, const std::string& out_flag, bool force,
              int jobs, double base_norm_flag, bool emit_plot) {
    if (step <= 0.0) throw UsageError("--step must be positive");
    if (tau_from < 0.0 || tau_from > tau_to) throw UsageError("need 0 <= --tau-from <= --tau-to");
    if (seeds < 1) throw UsageError("--seeds must be >= 1");

    syl::SimConfig tmpl = syl::load_config_file(config_path);

    std::vector<double> taus;
    for (double tau = tau_from; tau <= tau_to + 1e-12; tau += step) taus.push_back(tau);

    std::vector<std::string> policies;
    {
        std::stringstream ss(policies_flag);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) policies.push_back(item);
        }
        if (policies.empty()) throw UsageError("--policies must name at least one policy");
    }

    std::vector<std::uint64_t> seed_list;
    for (int i = 0; i < seeds; ++i) seed_list.push_back(tmpl.seed + static_cast<std::uint64_t>(i));

    // Template traffic is the base arrival matrix; tau rescales it so
    // tau = 1 sits on the capacity boundary.
    double base_norm = base_norm_flag;
    if (base_norm <= 0.0) {
        if (tmpl.topology.is_crossbar()) {
            const int n = tmpl.topology.ports();
            base_norm = 0.0;
            for (int i = 0; i < n; ++i) {
                double row = 0.0, col = 0.0;
                for (int j = 0; j < n; ++j) {
                    row += tmpl.traffic.rates[static_cast<std::size_t>(i) * n + j];
                    col += tmpl.traffic.rates[static_cast<std::size_t>(j) * n + i];
                }
                base_norm = std::max({base_norm, row, col});
            }
        } else {
            base_norm = 0.0;
            for (double r : tmpl.traffic.rates) base_norm += r;
        }
        if (base_norm <= 0.0) base_norm = 1.0;
    }

    const fs::path out_dir = resolve_out_dir(out_flag, "sweep", config_path, tmpl.seed);
    prepare_out_dir(out_dir, force);
    syl::write_manifest(out_dir, config_path, tmpl.seed);

    const std::vector<syl::SweepCell> cells =
        syl::sweep_tau(tmpl.traffic.rates, base_norm, taus, policies, seed_list, tmpl, jobs);

    syl::write_sweep_csv(out_dir / "sweep.csv", cells);
    syl::write_sweep_aggregate_csv(out_dir / "sweep_agg.csv", cells);
    if (emit_plot) syl::write_sweep_plot_script(out_dir);

    int failures = 0;
    for (const auto& c : cells) {
        if (!c.ok) ++failures;
        std::cout << "tau " << syl::fmt_double(c.tau) << " policy " << c.policy << " seed " << c.seed << " ";
        if (c.ok)
            std::cout << "mean_backlog " << syl::fmt_double(c.mean_backlog) << " stable "
                      << (c.stable ? "true" : "false") << "\n";
        else
            std::cout << "FAILED: " << c.error << "\n";
    }
    std::cout << "sweep: " << cells.size() << " cells, " << failures << " failed; outputs "
              << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_decompose(const std::string& matrix_path, bool with_margin, double tol, bool as_json) {
    const syl::WeightMatrix m = syl::load_matrix_file(matrix_path);
    for (double x : m.w)
        if (x < 0.0) throw UsageError("decompose: matrix entries must be non-negative");

    const syl::ScheduleSet set = syl::ScheduleSet::crossbar(m.n);
    const bool member = syl::membership(m.w, set);

    nlohmann::json j;
    j["n"] = m.n;
    j["membership"] = member;

    if (with_margin) {
        const syl::CapacityMargin margin = syl::capacity_margin(m.w, set, tol);
        j["eta_star"] = margin.eta_star;
        j["feasible"] = margin.feasible;
    }

    if (member) {
        const syl::ConvexCombination combo = syl::birkhoff_decompose(m.w, set);
        const syl::RateVector recon = combo.reconstruct(set.dim());
        const double residual = syl::linf_distance(recon, m.w);
        int perm_terms = 0;
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& term : combo.terms) {
            bool is_zero = true;
            for (int x : term.schedule)
                if (x != 0) is_zero = false;
            if (!is_zero) ++perm_terms;
            terms.push_back({{"weight", term.weight}, {"schedule", term.schedule}});
        }
        j["theta_sum"] = combo.weight_sum();
        j["permutation_terms"] = perm_terms;
        j["residual_linf"] = residual;
        j["terms"] = terms;
    }

    if (as_json) {
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    }

    std::cout << "matrix: " << m.n << " x " << m.n << "\n";
    std::cout << "membership = " << (member ? "true" : "false") << "\n";
    if (with_margin)
        std::cout << "eta_star = " << syl::fmt_double(j["eta_star"].get<double>()) << " (feasible = "
                  << (j["feasible"].get<bool>() ? "true" : "false") << ")\n";
    if (member) {
        std::cout << "permutation_terms = " << j["permutation_terms"].get<int>() << "\n";
        std::cout << "theta_sum = " << syl::fmt_double(j["theta_sum"].get<double>()) << "\n";
        std::cout << "residual_linf = " << syl::fmt_double(j["residual_linf"].get<double>()) << "\n";
        for (const auto& term : j["terms"]) {
            std::cout << "  theta " << syl::fmt_double(term["weight"].get<double>()) << " schedule [";
            const auto& s = term["schedule"];
            for (std::size_t i = 0; i < s.size(); ++i) std::cout << (i > 0 ? " " : "") << s[i].get<int>();
            std::cout << "]\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scheduling-policy simulator: learn-and-randomize schedules, max-weight baselines"};
    app.require_subcommand(1);

    std::string config_path, out_flag, policies_flag = "syl,max_weight", matrix_path;
    std::uint64_t seed_flag = 0;
    bool force = false, with_margin = false, as_json = false, emit_plot = false;
    double tau_from = 0.9, tau_to = 0.99, step = 0.03, tol = 1e-6, base_norm = 0.0;
    int seeds = 1, jobs = 1;

    CLI::App* run_cmd = app.add_subcommand("run", "Run one simulation from a config file");
    run_cmd->add_option("--config", config_path, "JSON config file")->required();
    CLI::Option* seed_opt = run_cmd->add_option("--seed", seed_flag, "Override the config seed");
    run_cmd->add_option("--out", out_flag, "Output directory (default under $SYL_SIM_OUT or ./out)");
    run_cmd->add_flag("--force", force, "Allow writing into a non-empty output directory");
    run_cmd->add_flag("--emit-plot", emit_plot, "Also write a gnuplot script next to the CSVs");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Sweep traffic intensity over a tau grid");
    sweep_cmd->add_option("--config", config_path, "JSON config template")->required();
    sweep_cmd->add_option("--tau-from", tau_from, "First tau");
    sweep_cmd->add_option("--tau-to", tau_to, "Last tau");
    sweep_cmd->add_option("--step", step, "Tau grid step");
    sweep_cmd->add_option("--policies", policies_flag, "Comma-separated policy names");
    sweep_cmd->add_option("--seeds", seeds, "Number of seeds per cell (base seed from the config)");
    sweep_cmd->add_option("--jobs", jobs, "Parallel cells");
    sweep_cmd->add_option("--base-norm", base_norm,
                          "Scale of the template rates (default: capacity boundary scale)");
    sweep_cmd->add_option("--out", out_flag, "Output directory");
    sweep_cmd->add_flag("--force", force, "Allow writing into a non-empty output directory");
    sweep_cmd->add_flag("--emit-plot", emit_plot, "Also write a gnuplot script next to the CSVs");

    CLI::App* dec_cmd = app.add_subcommand("decompose", "Decompose a crossbar rate matrix");
    dec_cmd->add_option("matrix", matrix_path, "Whitespace-separated matrix file, one row per line")
        ->required();
    dec_cmd->add_flag("--margin", with_margin, "Also report the capacity margin of the matrix");
    dec_cmd->add_option("--tol", tol, "Bisection tolerance for the margin");
    dec_cmd->add_flag("--json", as_json, "Emit a JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run_cmd->parsed())
            return cmd_run(config_path, seed_opt->count() > 0, seed_flag, out_flag, force, emit_plot);
        if (sweep_cmd->parsed())
            return cmd_sweep(config_path, tau_from, tau_to, step, policies_flag, seeds, out_flag, force,
                             jobs, base_norm, emit_plot);
        if (dec_cmd->parsed()) return cmd_decompose(matrix_path, with_margin, tol, as_json);
    } catch (const UsageError& e) {
        print_error_record("usage", e.what());
        return kExitUsage;
    } catch (const syl::ConfigError& e) {
        print_error_record("config", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        print_error_record("config", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        print_error_record("runtime", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
