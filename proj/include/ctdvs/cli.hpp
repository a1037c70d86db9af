#ifndef CTDVS_CLI_HPP
#define CTDVS_CLI_HPP

#include <cstdio>
#include <cstdlib>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctdvs/scenario.hpp"
#include "ctdvs/scenario_json.hpp"
#include "ctdvs/svg_plot.hpp"
#include "ctdvs/trace_csv.hpp"

namespace ctdvs {

namespace cli_exit {
constexpr int ok = 0;
constexpr int usage = 2;
constexpr int validation = 3;
constexpr int synthesis = 4;
constexpr int io = 5;
} // namespace cli_exit

inline std::string default_output_dir()
{
    if (const char* env = std::getenv("CTDVS_OUT_DIR"); env && *env)
        return env;
    return ".";
}

struct DesignOptions {
    std::optional<double> k_lambda;
    std::optional<double> pole_a;
    std::optional<double> pole_b;
    std::optional<double> kp;
    std::optional<double> ki;
    bool json_output = false;
};

/// Offline design utility: poles to gains, or gains to poles, plus the
/// stability verdict.
inline int cmd_design(const DesignOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        if (!opt.k_lambda) {
            err << "design: --k-lambda is required\n";
            return cli_exit::usage;
        }
        PiGains gains;
        if (opt.kp && opt.ki) {
            gains = PiGains{*opt.kp, *opt.ki, *opt.k_lambda};
        } else if (opt.pole_a && opt.pole_b) {
            gains = solve_pi_gains(*opt.k_lambda, PolePair{*opt.pole_a, *opt.pole_b});
        } else {
            err << "design: give either --pole-a/--pole-b or --kp/--ki\n";
            return cli_exit::usage;
        }
        const ClosedLoopPoles poles = closed_loop_poles(gains);
        const bool stable = is_stable(poles);

        if (opt.json_output) {
            nlohmann::json j;
            j["kp"] = gains.kp;
            j["ki"] = gains.ki;
            j["k_lambda"] = gains.k_lambda;
            j["poles"] = {{"a", poles.pair().a},
                          {"b", poles.pair().b},
                          {"conjugate", poles.conjugate},
                          {"p1_re", poles.p1.real()},
                          {"p1_im", poles.p1.imag()},
                          {"p2_re", poles.p2.real()},
                          {"p2_im", poles.p2.imag()}};
            j["radius"] = poles.radius();
            j["stable"] = stable;
            j["pure_integral"] = is_pure_integral(gains);
            out << j.dump(2) << "\n";
        } else {
            char line[160];
            std::snprintf(line, sizeof line, "%-12s %.9g\n", "kp", gains.kp);
            out << line;
            std::snprintf(line, sizeof line, "%-12s %.9g\n", "ki", gains.ki);
            out << line;
            std::snprintf(line, sizeof line, "%-12s %.9g\n", "k_lambda", gains.k_lambda);
            out << line;
            if (poles.conjugate)
                std::snprintf(line, sizeof line, "%-12s %.9g +/- %.9gi\n", "poles",
                              poles.pair().a, poles.pair().b);
            else
                std::snprintf(line, sizeof line, "%-12s %.9g, %.9g\n", "poles",
                              poles.p1.real(), poles.p2.real());
            out << line;
            std::snprintf(line, sizeof line, "%-12s %.9g\n", "radius", poles.radius());
            out << line;
            out << "stable       " << (stable ? "yes" : "no") << "\n";
            if (is_pure_integral(gains))
                out << "warning: kp = 0 (pure integral control; fragile placement)\n";
        }
        return cli_exit::ok;
    } catch (const ValidationError& e) {
        err << "design: " << e.what() << "\n";
        return cli_exit::validation;
    }
}

inline ScenarioConfig load_scenario_or_default(const std::string& path, std::ostream& err)
{
    ScenarioConfig cfg = path.empty() ? default_scenario() : load_scenario_file(path);
    for (const auto& w : validate_scenario(cfg))
        err << "warning: " << w << "\n";
    return cfg;
}

struct RunOptions {
    std::string scenario_path; // empty: built-in default scenario
    std::string scheme = "ctdvs";
    std::optional<std::uint64_t> seed;
    std::string out_dir = default_output_dir();
    bool emit_plots = false;
};

inline std::string trace_file_name(Scheme scheme, std::uint64_t seed)
{
    return "trace_" + std::string(scheme_name(scheme)) + "_" + std::to_string(seed) + ".csv";
}

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        const auto scheme = parse_scheme(opt.scheme);
        if (!scheme) {
            err << "run: unknown scheme '" << opt.scheme << "'\n";
            return cli_exit::usage;
        }
        const ScenarioConfig cfg = load_scenario_or_default(opt.scenario_path, err);
        const std::uint64_t seed = opt.seed.value_or(cfg.default_seed);
        const SimTrace trace = run_scenario(cfg, *scheme, seed);

        const std::filesystem::path dir(opt.out_dir);
        const std::filesystem::path csv = dir / trace_file_name(*scheme, seed);
        write_file_atomic(csv, trace_to_csv(trace));
        out << "wrote " << csv.string() << "\n";
        if (opt.emit_plots) {
            const std::string stem = csv.stem().string();
            write_trace_plots(csv, dir, stem);
            out << "wrote " << (dir / (stem + "_energy.svg")).string() << " and companions\n";
        }
        char line[256];
        std::snprintf(line, sizeof line,
                      "scheme=%s seed=%llu avg_energy=%.4f%% misses=%ld\n",
                      scheme_name(*scheme), static_cast<unsigned long long>(seed),
                      100.0 * trace.average_energy, trace.miss_count);
        out << line;
        return cli_exit::ok;
    } catch (const SynthesisError& e) {
        err << "run: synthesis failure: " << e.what() << "\n";
        return cli_exit::synthesis;
    } catch (const ValidationError& e) {
        err << "run: " << e.what() << "\n";
        return cli_exit::validation;
    } catch (const IoError& e) {
        err << "run: " << e.what() << "\n";
        return cli_exit::io;
    }
}

struct CompareOptions {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = default_output_dir();
    bool emit_plots = false;
};

/// Run all four schemes under common random numbers and tabulate them.
inline int cmd_compare(const CompareOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        const ScenarioConfig cfg = load_scenario_or_default(opt.scenario_path, err);
        const std::uint64_t seed = opt.seed.value_or(cfg.default_seed);
        const Scheme schemes[] = {Scheme::dvs0, Scheme::dvs1, Scheme::dvs2, Scheme::ctdvs};

        std::vector<std::future<SimTrace>> futures;
        for (Scheme s : schemes)
            futures.push_back(std::async(std::launch::async,
                                         [&cfg, s, seed] { return run_scenario(cfg, s, seed); }));
        std::vector<SimTrace> traces;
        for (auto& f : futures)
            traces.push_back(f.get());

        const std::filesystem::path dir(opt.out_dir);
        for (const auto& t : traces) {
            const std::filesystem::path csv = dir / trace_file_name(t.scheme, seed);
            write_file_atomic(csv, trace_to_csv(t));
            if (opt.emit_plots)
                write_trace_plots(csv, dir, csv.stem().string());
        }

        const SchemeComparison cmp = compare_schemes(traces);
        char line[256];
        out << "scheme   avg_energy  saving    total_cost    misses  diverged\n";
        std::ostringstream csv_out;
        csv_out << "scheme,avg_energy,energy_saving,total_cost,misses,diverged\n";
        for (const auto& row : cmp.rows) {
            std::snprintf(line, sizeof line, "%-8s %9.2f%% %8.2f%% %13.6g %7ld  %s\n",
                          scheme_name(row.scheme), 100.0 * row.average_energy,
                          100.0 * row.energy_saving, row.total_cost, row.miss_count,
                          row.any_diverged ? "yes" : "no");
            out << line;
            csv_out << scheme_name(row.scheme) << ',' << format_number(row.average_energy)
                    << ',' << format_number(row.energy_saving) << ','
                    << format_number(row.total_cost) << ',' << row.miss_count << ','
                    << (row.any_diverged ? 1 : 0) << "\n";
        }
        const std::filesystem::path cmp_csv = dir / ("compare_" + std::to_string(seed) + ".csv");
        write_file_atomic(cmp_csv, csv_out.str());
        out << "wrote " << cmp_csv.string() << "\n";
        return cli_exit::ok;
    } catch (const SynthesisError& e) {
        err << "compare: synthesis failure: " << e.what() << "\n";
        return cli_exit::synthesis;
    } catch (const ValidationError& e) {
        err << "compare: " << e.what() << "\n";
        return cli_exit::validation;
    } catch (const IoError& e) {
        err << "compare: " << e.what() << "\n";
        return cli_exit::io;
    }
}

} // namespace ctdvs

#endif
