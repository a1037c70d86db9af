#ifndef CTDVS_TASKMODEL_HPP
#define CTDVS_TASKMODEL_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctdvs {

/// Raised when a scenario or task-set value violates a model invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Normalized CPU speed: actual operating speed over full speed.
struct SpeedFactor {
    double value = 1.0;
};

inline SpeedFactor clamp_speed(double x, double alpha_min)
{
    return SpeedFactor{std::clamp(x, alpha_min, 1.0)};
}

/// Design-time construction: out-of-range speeds are an error, not a clamp.
inline SpeedFactor checked_speed(double x, double alpha_min)
{
    if (!(x >= alpha_min && x <= 1.0))
        throw ValidationError("speed factor " + std::to_string(x) + " outside [" +
                              std::to_string(alpha_min) + ", 1]");
    return SpeedFactor{x};
}

/// One periodic control task. Times are seconds at full CPU speed.
/// The estimated nominal execution time is the scheduler's best guess;
/// the actual per-job demand is that estimate scaled by the execution
/// time factor in effect at release.
struct TaskSpec {
    double period_s = 0.0;
    double est_nominal_exec_s = 0.0; // estimated execution time at full speed
    double wcet_nominal_s = 0.0;     // worst-case execution time at full speed
    int loop_id = 0;
};

inline void validate(const TaskSpec& t)
{
    if (!(t.period_s > 0.0) || !std::isfinite(t.period_s))
        throw ValidationError("task " + std::to_string(t.loop_id) + ": period must be positive");
    if (!(t.est_nominal_exec_s > 0.0))
        throw ValidationError("task " + std::to_string(t.loop_id) +
                              ": estimated execution time must be positive");
    if (t.est_nominal_exec_s > t.wcet_nominal_s)
        throw ValidationError("task " + std::to_string(t.loop_id) +
                              ": estimated execution time exceeds WCET");
    if (t.wcet_nominal_s > t.period_s)
        throw ValidationError("task " + std::to_string(t.loop_id) + ": WCET exceeds period");
}

struct TaskSet {
    std::vector<TaskSpec> tasks;
};

inline void validate(const TaskSet& ts)
{
    if (ts.tasks.empty())
        throw ValidationError("task set is empty");
    double wcet_load = 0.0;
    for (const auto& t : ts.tasks) {
        validate(t);
        wcet_load += t.wcet_nominal_s / t.period_s;
        for (const auto& u : ts.tasks)
            if (&t != &u && t.loop_id == u.loop_id)
                throw ValidationError("duplicate loop id " + std::to_string(t.loop_id));
    }
    if (wcet_load > 1.0 + 1e-12)
        throw ValidationError("worst-case load " + std::to_string(wcet_load) +
                              " exceeds 1; no feasible full-speed schedule");
}

/// Piecewise-constant execution time factor over the run. Each breakpoint
/// takes effect at its start time (half-open intervals).
struct LambdaBreakpoint {
    double start_s = 0.0;
    double lambda = 1.0;
};

struct LambdaSchedule {
    std::vector<LambdaBreakpoint> breakpoints;

    double at(double t) const
    {
        double v = breakpoints.empty() ? 1.0 : breakpoints.front().lambda;
        for (const auto& bp : breakpoints) {
            if (bp.start_s <= t)
                v = bp.lambda;
            else
                break;
        }
        return v;
    }

    /// Largest factor in the schedule; the design bound on the unknown load.
    double k_lambda() const
    {
        double k = 0.0;
        for (const auto& bp : breakpoints)
            k = std::max(k, bp.lambda);
        return k;
    }
};

inline void validate(const LambdaSchedule& s)
{
    if (s.breakpoints.empty())
        throw ValidationError("lambda schedule is empty");
    if (s.breakpoints.front().start_s != 0.0)
        throw ValidationError("lambda schedule must start at t = 0");
    for (std::size_t i = 0; i < s.breakpoints.size(); ++i) {
        if (!(s.breakpoints[i].lambda > 0.0))
            throw ValidationError("lambda values must be positive");
        if (i > 0 && !(s.breakpoints[i].start_s > s.breakpoints[i - 1].start_s))
            throw ValidationError("lambda breakpoints must be strictly increasing in time");
    }
}

/// Estimated full-speed workload: sum of estimated execution time over period.
inline double estimated_workload(const TaskSet& ts)
{
    double w = 0.0;
    for (const auto& t : ts.tasks)
        w += t.est_nominal_exec_s / t.period_s;
    return w;
}

/// Static speed sized for worst-case execution times.
inline SpeedFactor dvs1_speed(const TaskSet& ts, double alpha_min)
{
    double w = 0.0;
    for (const auto& t : ts.tasks)
        w += t.wcet_nominal_s / t.period_s;
    if (w > 1.0 + 1e-12)
        throw ValidationError("WCET-based speed would exceed full speed");
    return clamp_speed(w, alpha_min);
}

/// Static speed sized for estimated execution times.
inline SpeedFactor dvs2_speed(const TaskSet& ts, double alpha_min)
{
    return clamp_speed(estimated_workload(ts), alpha_min);
}

/// EDF schedulability at a given speed: total utilization at most one.
inline bool edf_feasible_at_speed(const TaskSet& ts, double lambda, SpeedFactor alpha)
{
    if (!(lambda > 0.0))
        throw ValidationError("execution time factor must be positive");
    return lambda * estimated_workload(ts) <= alpha.value;
}

} // namespace ctdvs

#endif
