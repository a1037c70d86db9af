#ifndef CTDVS_SCENARIO_HPP
#define CTDVS_SCENARIO_HPP

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctdvs/energy.hpp"
#include "ctdvs/plantlab.hpp"
#include "ctdvs/pmdesign.hpp"
#include "ctdvs/scheduler.hpp"
#include "ctdvs/taskmodel.hpp"

namespace ctdvs {

enum class Scheme { dvs0, dvs1, dvs2, ctdvs };

inline const char* scheme_name(Scheme s)
{
    switch (s) {
    case Scheme::dvs0: return "dvs0";
    case Scheme::dvs1: return "dvs1";
    case Scheme::dvs2: return "dvs2";
    case Scheme::ctdvs: return "ctdvs";
    }
    return "unknown";
}

inline std::optional<Scheme> parse_scheme(const std::string& name)
{
    if (name == "dvs0" || name == "DVS0" || name == "dvs-0") return Scheme::dvs0;
    if (name == "dvs1" || name == "DVS1" || name == "dvs-1") return Scheme::dvs1;
    if (name == "dvs2" || name == "DVS2" || name == "dvs-2") return Scheme::dvs2;
    if (name == "ctdvs" || name == "CTDVS" || name == "ctDVS") return Scheme::ctdvs;
    return std::nullopt;
}

/// Feedback manager configuration. Gains come either from the pole-placement
/// design (default) or verbatim from `explicit_gains`.
struct CtdvsParams {
    double setpoint = 0.95;
    PolePair poles{0.3, 0.1};
    std::optional<PiGains> explicit_gains;
    std::optional<double> k_lambda; // default: max lambda of the schedule
    GainScheduling scheduling = GainScheduling::consistent;
    bool anti_windup = true;
};

struct ScenarioConfig {
    TaskSet tasks;
    LambdaSchedule lambda_schedule;
    double alpha_min = 0.1;
    double horizon_s = 12.0;
    double manager_period_s = 0.1; // window for speed updates and reporting
    double micro_step_s = 1e-4;
    EnergyModel energy{};
    CtdvsParams ctdvs{};
    PendulumParams plant{};
    double control_cost_weight = 0.01;
    std::uint64_t default_seed = 1;
};

/// The shipped three-pendulum scenario: periods 20/25/30 ms, estimated
/// execution 4 ms, WCET 6 ms, the four-block load-factor schedule, and the
/// pole-designed manager at a 95% utilization setpoint.
inline ScenarioConfig default_scenario()
{
    ScenarioConfig cfg;
    cfg.tasks.tasks = {
        {0.020, 0.004, 0.006, 1},
        {0.025, 0.004, 0.006, 2},
        {0.030, 0.004, 0.006, 3},
    };
    cfg.lambda_schedule.breakpoints = {{0.0, 0.8}, {3.0, 1.0}, {6.0, 0.5}, {9.0, 1.5}};
    return cfg;
}

inline PiGains resolved_gains(const ScenarioConfig& cfg)
{
    if (cfg.ctdvs.explicit_gains)
        return *cfg.ctdvs.explicit_gains;
    const double kl = cfg.ctdvs.k_lambda.value_or(cfg.lambda_schedule.k_lambda());
    return solve_pi_gains(kl, cfg.ctdvs.poles);
}

/// Full validation of a loaded scenario. Throws ValidationError on hard
/// violations; soft concerns come back as warnings.
inline std::vector<std::string> validate_scenario(const ScenarioConfig& cfg)
{
    std::vector<std::string> warnings;
    validate(cfg.tasks);
    validate(cfg.lambda_schedule);
    if (!(cfg.alpha_min > 0.0 && cfg.alpha_min < 1.0))
        throw ValidationError("alpha_min must be in (0, 1)");
    if (!(cfg.horizon_s > 0.0))
        throw ValidationError("horizon must be positive");
    if (!(cfg.micro_step_s > 0.0))
        throw ValidationError("micro step must be positive");
    if (!(cfg.manager_period_s > 0.0))
        throw ValidationError("manager period must be positive");
    if (!(cfg.ctdvs.setpoint > 0.0 && cfg.ctdvs.setpoint <= 1.0))
        throw ValidationError("utilization setpoint must be in (0, 1]");
    if (!(cfg.control_cost_weight >= 0.0))
        throw ValidationError("control cost weight must be nonnegative");
    if (cfg.energy.kind == EnergyModel::Kind::cmos)
        validate(cfg.energy.cmos);

    const std::int64_t micro_ns = to_nanos(cfg.micro_step_s);
    auto aligned = [micro_ns](double t_s) { return to_nanos(t_s) % micro_ns == 0; };
    if (!aligned(cfg.horizon_s))
        throw ValidationError("horizon must be a multiple of the micro step");
    if (!aligned(cfg.manager_period_s))
        throw ValidationError("manager period must be a multiple of the micro step");
    double max_period = 0.0;
    for (const auto& t : cfg.tasks.tasks) {
        if (!aligned(t.period_s))
            throw ValidationError("task periods must be multiples of the micro step");
        max_period = std::max(max_period, t.period_s);
    }
    if (cfg.manager_period_s < max_period)
        warnings.push_back("manager period is shorter than the longest task period; "
                           "window utilization measurements will be coarse");
    const double schedule_max = cfg.lambda_schedule.k_lambda();
    if (cfg.ctdvs.k_lambda && *cfg.ctdvs.k_lambda < schedule_max)
        warnings.push_back("designed k_lambda is below the schedule's maximum factor; "
                           "the stability margin assumed by the design does not hold");
    if (is_pure_integral(resolved_gains(cfg)))
        warnings.push_back("pole placement yields kp = 0 (pure integral control)");
    return warnings;
}

inline SpeedFactor scheme_constant_speed(const ScenarioConfig& cfg, Scheme scheme)
{
    switch (scheme) {
    case Scheme::dvs0: return SpeedFactor{1.0};
    case Scheme::dvs1: return dvs1_speed(cfg.tasks, cfg.alpha_min);
    case Scheme::dvs2: return dvs2_speed(cfg.tasks, cfg.alpha_min);
    default: throw ValidationError("no constant speed for the feedback scheme");
    }
}

/// One reporting row per manager window.
struct TraceRow {
    double t = 0.0;
    double alpha = 1.0;
    double requested_util = 0.0;
    double measured_util = 0.0;
    double energy_instant = 0.0;
    double energy_avg = 0.0;
    std::vector<double> loop_costs;
    long misses = 0;
    std::vector<std::uint8_t> diverged;
};

struct SimTrace {
    Scheme scheme = Scheme::dvs0;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
    std::vector<int> loop_ids;
    std::vector<TraceRow> rows;
    double average_energy = 0.0;
    long miss_count = 0;
    std::vector<double> final_costs;
    std::vector<std::uint8_t> diverged;
    std::vector<double> diverged_at_s;
    ScheduleTrace schedule;
};

namespace detail {

inline void fnv_mix(std::uint64_t& h, const char* data, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ULL;
    }
}

inline void fnv_mix_number(std::uint64_t& h, double v)
{
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g;", v);
    fnv_mix(h, buf, static_cast<std::size_t>(n));
}

} // namespace detail

/// Stable hash of everything that determines a run; embedded in outputs so
/// traces from different scenarios cannot be compared by accident.
inline std::uint64_t scenario_fingerprint(const ScenarioConfig& cfg, std::uint64_t seed)
{
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a offset basis
    using detail::fnv_mix;
    using detail::fnv_mix_number;
    for (const auto& t : cfg.tasks.tasks) {
        fnv_mix_number(h, t.period_s);
        fnv_mix_number(h, t.est_nominal_exec_s);
        fnv_mix_number(h, t.wcet_nominal_s);
        fnv_mix_number(h, t.loop_id);
    }
    for (const auto& bp : cfg.lambda_schedule.breakpoints) {
        fnv_mix_number(h, bp.start_s);
        fnv_mix_number(h, bp.lambda);
    }
    fnv_mix_number(h, cfg.alpha_min);
    fnv_mix_number(h, cfg.horizon_s);
    fnv_mix_number(h, cfg.manager_period_s);
    fnv_mix_number(h, cfg.micro_step_s);
    fnv_mix_number(h, static_cast<double>(cfg.energy.kind));
    if (cfg.energy.kind == EnergyModel::Kind::cmos) {
        fnv_mix_number(h, cfg.energy.cmos.switched_capacitance);
        fnv_mix_number(h, cfg.energy.cmos.v_threshold);
        fnv_mix_number(h, cfg.energy.cmos.v_max);
        fnv_mix_number(h, cfg.energy.cmos.sample_interval_s);
        fnv_mix_number(h, cfg.energy.cmos.f_max_hz);
    }
    fnv_mix_number(h, cfg.ctdvs.setpoint);
    const PiGains g = resolved_gains(cfg);
    fnv_mix_number(h, g.kp);
    fnv_mix_number(h, g.ki);
    fnv_mix_number(h, g.k_lambda);
    fnv_mix_number(h, cfg.ctdvs.scheduling == GainScheduling::consistent ? 0.0 : 1.0);
    fnv_mix_number(h, cfg.ctdvs.anti_windup ? 1.0 : 0.0);
    fnv_mix_number(h, cfg.plant.v_intensity);
    fnv_mix_number(h, cfg.plant.e_variance);
    fnv_mix_number(h, cfg.plant.x0(0));
    fnv_mix_number(h, cfg.plant.x0(1));
    fnv_mix_number(h, cfg.control_cost_weight);
    fnv_mix_number(h, static_cast<double>(seed));
    return h;
}

/// Run one scheme over the scenario. Deterministic: the trace is a pure
/// function of (config, scheme, seed), and the noise streams depend on the
/// seed and loop only, so all schemes under one seed see identical noise.
inline SimTrace run_scenario(const ScenarioConfig& cfg, Scheme scheme, std::uint64_t seed)
{
    validate_scenario(cfg);

    const std::size_t n_loops = cfg.tasks.tasks.size();
    const double omega_hat = estimated_workload(cfg.tasks);

    std::vector<LqgController> controllers;
    std::vector<PendulumPlant> plants;
    std::vector<NoiseStream> process_noise;
    std::vector<NoiseStream> measurement_noise;
    std::vector<CostAccumulator> costs;
    SimTrace trace;
    for (std::size_t i = 0; i < n_loops; ++i) {
        const auto& task = cfg.tasks.tasks[i];
        controllers.push_back(LqgController::synthesize(cfg.plant, task.period_s,
                                                        cfg.control_cost_weight));
        plants.emplace_back(cfg.plant);
        process_noise.emplace_back(seed, task.loop_id, NoiseStream::process);
        measurement_noise.emplace_back(seed, task.loop_id, NoiseStream::measurement);
        costs.push_back({task.loop_id, 0.0, cfg.control_cost_weight});
        trace.loop_ids.push_back(task.loop_id);
    }

    std::unique_ptr<SpeedPolicy> policy;
    if (scheme == Scheme::ctdvs)
        policy = std::make_unique<CtdvsSpeed>(resolved_gains(cfg), cfg.ctdvs.setpoint,
                                              omega_hat, cfg.alpha_min,
                                              cfg.ctdvs.scheduling, cfg.ctdvs.anti_windup);
    else
        policy = std::make_unique<ConstantSpeed>(scheme_constant_speed(cfg, scheme));

    EnergyLedger ledger(cfg.energy);
    std::vector<std::optional<double>> pending_input(n_loops);
    long misses_so_far = 0;
    double last_grid_t = 0.0;

    auto loop_index = [&](int loop_id) {
        for (std::size_t i = 0; i < n_loops; ++i)
            if (cfg.tasks.tasks[i].loop_id == loop_id)
                return i;
        throw ValidationError("unknown loop id");
    };

    ScheduleHooks hooks;
    hooks.on_release = [&](int loop_id, double) {
        const std::size_t i = loop_index(loop_id);
        const double y = plants[i].sample_output(measurement_noise[i]);
        return controllers[i].job_compute(y);
    };
    hooks.on_complete = [&](int loop_id, double, double payload, bool missed) {
        pending_input[loop_index(loop_id)] = payload;
        if (missed)
            ++misses_so_far;
    };
    hooks.on_grid = [&](double t) {
        const double dt = t - last_grid_t;
        for (std::size_t i = 0; i < n_loops; ++i) {
            costs[i].add(plants[i].output_true(), plants[i].input(), dt);
            plants[i].advance(dt, process_noise[i], t);
        }
        for (std::size_t i = 0; i < n_loops; ++i) {
            if (pending_input[i]) {
                plants[i].set_input(*pending_input[i]);
                pending_input[i].reset();
            }
        }
        last_grid_t = t;
    };
    hooks.on_window = [&](const UtilizationWindow& w, SpeedFactor) {
        ledger.add(w.length_s, w.alpha);
        TraceRow row;
        row.t = w.start_s + w.length_s;
        row.alpha = w.alpha;
        row.requested_util = w.requested_util;
        // The reported measurement is the controlled variable, never above 1.
        row.measured_util = std::min(w.estimated_util, 1.0);
        row.energy_instant = cfg.energy.eval(w.alpha);
        row.energy_avg = ledger_average(ledger);
        row.misses = misses_so_far;
        for (std::size_t i = 0; i < n_loops; ++i) {
            row.loop_costs.push_back(costs[i].j_value);
            row.diverged.push_back(plants[i].diverged() ? 1 : 0);
        }
        trace.rows.push_back(std::move(row));
    };

    trace.schedule = run_schedule(cfg.tasks, cfg.lambda_schedule, *policy, cfg.horizon_s,
                                  cfg.manager_period_s, cfg.alpha_min, &hooks,
                                  cfg.micro_step_s);

    trace.scheme = scheme;
    trace.seed = seed;
    trace.fingerprint = scenario_fingerprint(cfg, seed);
    trace.average_energy = ledger_average(ledger);
    trace.miss_count = trace.schedule.miss_count;
    for (std::size_t i = 0; i < n_loops; ++i) {
        trace.final_costs.push_back(costs[i].j_value);
        trace.diverged.push_back(plants[i].diverged() ? 1 : 0);
        trace.diverged_at_s.push_back(plants[i].diverged() ? plants[i].diverged_at() : 0.0);
    }
    return trace;
}

struct SchemeSummary {
    Scheme scheme = Scheme::dvs0;
    double average_energy = 0.0;
    double energy_saving = 0.0;
    double total_cost = 0.0;
    long miss_count = 0;
    bool any_diverged = false;
};

struct SchemeComparison {
    std::uint64_t seed = 0;
    std::vector<SchemeSummary> rows;
};

/// Tabulate runs that share one scenario and seed. Traces with mismatched
/// fingerprints cannot be meaningfully compared and are rejected.
inline SchemeComparison compare_schemes(const std::vector<SimTrace>& traces)
{
    if (traces.empty())
        throw ValidationError("nothing to compare");
    SchemeComparison cmp;
    cmp.seed = traces.front().seed;
    for (const auto& t : traces) {
        if (t.fingerprint != traces.front().fingerprint)
            throw ValidationError("mismatched scenario fingerprints in comparison");
        SchemeSummary row;
        row.scheme = t.scheme;
        row.average_energy = t.average_energy;
        row.energy_saving = 1.0 - t.average_energy;
        for (double j : t.final_costs)
            row.total_cost += j;
        row.miss_count = t.miss_count;
        for (auto d : t.diverged)
            row.any_diverged = row.any_diverged || d != 0;
        cmp.rows.push_back(row);
    }
    return cmp;
}

} // namespace ctdvs

#endif
