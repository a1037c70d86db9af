// Command-line front end for the ctdvs simulation library.

#include <CLI11.hpp>

#include "ctdvs/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Control-driven dynamic voltage scaling co-simulation"};
    app.require_subcommand(1);

    ctdvs::DesignOptions design;
    double k_lambda = 0, pole_a = 0, pole_b = 0, kp = 0, ki = 0;
    auto* cmd_design = app.add_subcommand("design", "design or inspect a PI power manager");
    auto* opt_kl = cmd_design->add_option("--k-lambda", k_lambda,
                                          "assumed maximum execution time factor");
    auto* opt_a = cmd_design->add_option("--pole-a", pole_a, "desired pole real part");
    auto* opt_b = cmd_design->add_option("--pole-b", pole_b, "desired pole imaginary part");
    auto* opt_kp = cmd_design->add_option("--kp", kp, "proportional gain to inspect");
    auto* opt_ki = cmd_design->add_option("--ki", ki, "integral gain to inspect");
    cmd_design->add_flag("--json", design.json_output, "machine-readable output");

    ctdvs::RunOptions run;
    auto* cmd_run = app.add_subcommand("run", "simulate one scheme and write its trace CSV");
    cmd_run->add_option("--scenario", run.scenario_path,
                        "scenario JSON file (default: built-in study scenario)");
    cmd_run->add_option("--scheme", run.scheme, "dvs0 | dvs1 | dvs2 | ctdvs")->required();
    std::uint64_t run_seed = 0;
    auto* opt_run_seed = cmd_run->add_option("--seed", run_seed, "random seed");
    cmd_run->add_option("--out", run.out_dir, "output directory (or $CTDVS_OUT_DIR)");
    cmd_run->add_flag("--emit-plots", run.emit_plots, "also write SVG plots from the CSV");

    ctdvs::CompareOptions cmp;
    auto* cmd_compare =
        app.add_subcommand("compare", "run all four schemes under one seed and tabulate");
    cmd_compare->add_option("--scenario", cmp.scenario_path, "scenario JSON file");
    std::uint64_t cmp_seed = 0;
    auto* opt_cmp_seed = cmd_compare->add_option("--seed", cmp_seed, "random seed");
    cmd_compare->add_option("--out", cmp.out_dir, "output directory (or $CTDVS_OUT_DIR)");
    cmd_compare->add_flag("--emit-plots", cmp.emit_plots, "also write SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ctdvs::cli_exit::usage;
    }

    if (cmd_design->parsed()) {
        if (opt_kl->count())
            design.k_lambda = k_lambda;
        if (opt_a->count())
            design.pole_a = pole_a;
        if (opt_b->count())
            design.pole_b = pole_b;
        if (opt_kp->count())
            design.kp = kp;
        if (opt_ki->count())
            design.ki = ki;
        return ctdvs::cmd_design(design, std::cout, std::cerr);
    }
    if (cmd_run->parsed()) {
        if (opt_run_seed->count())
            run.seed = run_seed;
        return ctdvs::cmd_run(run, std::cout, std::cerr);
    }
    if (cmd_compare->parsed()) {
        if (opt_cmp_seed->count())
            cmp.seed = cmp_seed;
        return ctdvs::cmd_compare(cmp, std::cout, std::cerr);
    }
    return ctdvs::cli_exit::usage;
}
