#ifndef CTDVS_SCHEDULER_HPP
#define CTDVS_SCHEDULER_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "ctdvs/pmdesign.hpp"
#include "ctdvs/taskmodel.hpp"

namespace ctdvs {

// Discrete event times (releases, manager windows, grid ticks, horizon) are
// generated from integer nanosecond counts so that coincident events compare
// exactly; only job completion times live between the grid points.
inline std::int64_t to_nanos(double seconds)
{
    return std::llround(seconds * 1e9);
}

inline double to_seconds(std::int64_t nanos)
{
    return static_cast<double>(nanos) * 1e-9;
}

/// One released instance of a task. Demand is stored in nominal (full-speed)
/// seconds and drains at the current speed per unit wall time.
struct JobRecord {
    int loop_id = 0;
    double release_s = 0.0;
    double deadline_s = 0.0;
    double nominal_demand_s = 0.0;
    double remaining_s = 0.0;
    double executed_wall_s = 0.0;
    double completion_s = std::numeric_limits<double>::quiet_NaN();
    double payload = 0.0;
    bool completed = false;
    bool missed = false;
};

/// One manager window. Two utilization views coexist: the busy fraction of
/// the window (capped at 1 by construction) and the task-rate estimate
/// sum_i c_i/h_i built from observed per-task execution times, which is the
/// quantity the utilization model is written in and which may exceed 1
/// under overload. The estimate is what feeds the power manager; busy time
/// quantizes with the release pattern (a 30 ms task contributes 4,3,3 jobs
/// to consecutive 100 ms windows) and would rattle the loop.
struct UtilizationWindow {
    double start_s = 0.0;
    double length_s = 0.0;
    double busy_s = 0.0;
    double requested_demand_s = 0.0;
    double requested_util = 0.0; // lambda * (workload / alpha), exact ratio
    double estimated_util = 0.0; // task-rate estimate from observed jobs
    double lambda = 1.0;
    double alpha = 1.0;
    bool complete = true;
};

inline double measured_utilization(const UtilizationWindow& w)
{
    if (!(w.length_s > 0.0))
        throw ValidationError("utilization window has zero length");
    return std::clamp(w.busy_s / w.length_s, 0.0, 1.0);
}

/// Demand relative to capacity; unlike the measured value this may exceed 1.
/// The ratio is formed as lambda * (workload / alpha) so a speed equal to the
/// estimated workload cancels exactly.
inline double requested_utilization(const TaskSet& ts, double lambda, SpeedFactor alpha)
{
    return lambda * (estimated_workload(ts) / alpha.value);
}

/// Supplies the speed for the next window each time the manager runs.
class SpeedPolicy {
public:
    virtual ~SpeedPolicy() = default;
    virtual SpeedFactor initial_speed() = 0;
    virtual SpeedFactor on_window(const UtilizationWindow& closed) = 0;
};

class ConstantSpeed final : public SpeedPolicy {
public:
    explicit ConstantSpeed(SpeedFactor alpha) : alpha_(alpha) {}
    SpeedFactor initial_speed() override { return alpha_; }
    SpeedFactor on_window(const UtilizationWindow&) override { return alpha_; }

private:
    SpeedFactor alpha_;
};

/// Feedback power manager: full speed until the first invocation, then one
/// PI step per closed window.
class CtdvsSpeed final : public SpeedPolicy {
public:
    CtdvsSpeed(PiGains gains, double setpoint, double omega_hat, double alpha_min,
               GainScheduling scheduling = GainScheduling::consistent, bool anti_windup = true)
        : gains_(gains), omega_hat_(omega_hat), alpha_min_(alpha_min),
          scheduling_(scheduling), anti_windup_(anti_windup)
    {
        state_.setpoint = setpoint;
    }

    SpeedFactor initial_speed() override { return SpeedFactor{1.0}; }

    SpeedFactor on_window(const UtilizationWindow& closed) override
    {
        const auto r = pm_step(state_, gains_, std::max(0.0, closed.estimated_util),
                               omega_hat_, alpha_min_, scheduling_, anti_windup_);
        state_ = r.state;
        return r.speed;
    }

    const PiRuntimeState& state() const { return state_; }

private:
    PiGains gains_;
    PiRuntimeState state_;
    double omega_hat_;
    double alpha_min_;
    GainScheduling scheduling_;
    bool anti_windup_;
};

/// Callbacks into the co-simulation. All optional; the pure scheduling
/// surface runs without them.
struct ScheduleHooks {
    // Called at each job release; the returned payload rides along to the
    // completion callback (the computed actuation command, in the co-sim).
    std::function<double(int loop_id, double t)> on_release;
    std::function<void(int loop_id, double t, double payload, bool missed)> on_complete;
    std::function<void(double t)> on_grid;
    std::function<void(const UtilizationWindow&, SpeedFactor next_alpha)> on_window;
};

struct SpeedSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    double alpha = 1.0;
};

struct ScheduleTrace {
    std::vector<JobRecord> jobs;
    std::vector<UtilizationWindow> windows;
    std::vector<SpeedSegment> speed_segments;
    long miss_count = 0;
    double busy_total_s = 0.0;
};

struct ScheduleParams {
    std::int64_t horizon_ns = 0;
    std::int64_t window_ns = 0;
    std::int64_t grid_ns = 0; // 0 disables grid callbacks
    double alpha_min = 0.1;
};

namespace detail {

struct ReadyRef {
    std::int64_t deadline_ns;
    int loop_id;
    std::size_t job_index;
};

struct ReadyLater {
    bool operator()(const ReadyRef& x, const ReadyRef& y) const
    {
        if (x.deadline_ns != y.deadline_ns)
            return x.deadline_ns > y.deadline_ns;
        return x.loop_id > y.loop_id;
    }
};

} // namespace detail

/// Continuous-time preemptive EDF at a piecewise-constant speed. Jobs are
/// never aborted: a late job runs to completion, its miss is counted, and
/// later releases of the same task queue behind it. Ties at equal event
/// times resolve as completion, grid tick, window close, end of run,
/// release; equal-deadline jobs run lowest loop id first.
class SchedulerEngine {
public:
    SchedulerEngine(const TaskSet& ts, const LambdaSchedule& sched, SpeedPolicy& policy,
                    const ScheduleParams& params, const ScheduleHooks* hooks = nullptr)
        : ts_(ts), policy_(policy), params_(params), hooks_(hooks)
    {
        if (!(params.horizon_ns > 0))
            throw ValidationError("horizon must be positive");
        if (!(params.window_ns > 0))
            throw ValidationError("manager window must be positive");
        for (const auto& t : ts.tasks)
            validate(t);
        validate(sched);
        for (const auto& bp : sched.breakpoints)
            lambda_bps_.push_back({to_nanos(bp.start_s), bp.lambda});
        omega_hat_ = estimated_workload(ts);
        next_release_.assign(ts.tasks.size(), 0);
        for (const auto& t : ts.tasks)
            period_ns_.push_back(to_nanos(t.period_s));
        task_obs_exec_s_.assign(ts.tasks.size(), 0.0);
        window_exec_sum_.assign(ts.tasks.size(), 0.0);
        window_exec_count_.assign(ts.tasks.size(), 0);
    }

    ScheduleTrace run()
    {
        alpha_ = policy_.initial_speed().value;
        segment_start_s_ = 0.0;
        // Seed the per-task execution-time observations with the estimate
        // until the first real job of each task completes.
        for (std::size_t i = 0; i < ts_.tasks.size(); ++i)
            task_obs_exec_s_[i] = ts_.tasks[i].est_nominal_exec_s / alpha_;
        open_window(0);

        enum Kind { completion = 0, grid = 1, window = 2, end = 3, release = 4 };
        const double horizon_s = to_seconds(params_.horizon_ns);
        std::int64_t next_grid = params_.grid_ns;

        while (true) {
            double best_t = horizon_s;
            int best_kind = end;
            std::size_t best_task = 0;

            if (!ready_.empty()) {
                const auto& front = trace_.jobs[ready_.top().job_index];
                double t_c = now_s_ + front.remaining_s / alpha_;
                // Snap completions that land within a picosecond of a grid,
                // window, release, or horizon time onto it, so accumulated
                // rounding cannot push an exactly-on-time completion past
                // the boundary it belongs to.
                for (const double t_int : {to_seconds(next_grid),
                                           to_seconds(window_start_ns_ + params_.window_ns),
                                           horizon_s, next_release_time()})
                    if (t_int > now_s_ && std::abs(t_c - t_int) <= 1e-12)
                        t_c = t_int;
                if (t_c < best_t || (t_c == best_t && completion < best_kind)) {
                    best_t = t_c;
                    best_kind = completion;
                }
            }
            if (params_.grid_ns > 0 && next_grid <= params_.horizon_ns) {
                const double t_g = to_seconds(next_grid);
                if (t_g < best_t || (t_g == best_t && grid < best_kind)) {
                    best_t = t_g;
                    best_kind = grid;
                }
            }
            {
                const double t_w = to_seconds(window_start_ns_ + params_.window_ns);
                if (window_start_ns_ + params_.window_ns <= params_.horizon_ns &&
                    (t_w < best_t || (t_w == best_t && window < best_kind))) {
                    best_t = t_w;
                    best_kind = window;
                }
            }
            for (std::size_t i = 0; i < ts_.tasks.size(); ++i) {
                const std::int64_t r_ns = next_release_[i] * period_ns_[i];
                if (r_ns >= params_.horizon_ns)
                    continue;
                const double t_r = to_seconds(r_ns);
                // Releases lose every tie against the other kinds; among
                // simultaneous releases the lowest loop id goes first.
                if (t_r < best_t) {
                    best_t = t_r;
                    best_kind = release;
                    best_task = i;
                } else if (t_r == best_t && best_kind == release &&
                           ts_.tasks[i].loop_id < ts_.tasks[best_task].loop_id) {
                    best_task = i;
                }
            }

            advance_to(best_t);

            switch (best_kind) {
            case completion: {
                const auto ref = ready_.top();
                ready_.pop();
                auto& job = trace_.jobs[ref.job_index];
                job.remaining_s = 0.0;
                job.completed = true;
                job.completion_s = now_s_;
                job.missed = now_s_ > job.deadline_s + 1e-9;
                if (job.missed)
                    ++trace_.miss_count;
                const std::size_t ti = task_index(job.loop_id);
                window_exec_sum_[ti] += job.executed_wall_s;
                window_exec_count_[ti] += 1;
                if (hooks_ && hooks_->on_complete)
                    hooks_->on_complete(job.loop_id, now_s_, job.payload, job.missed);
                break;
            }
            case grid:
                if (hooks_ && hooks_->on_grid)
                    hooks_->on_grid(now_s_);
                next_grid += params_.grid_ns;
                break;
            case window:
                close_window(window_start_ns_ + params_.window_ns, true);
                break;
            case release: {
                const auto& task = ts_.tasks[best_task];
                const std::int64_t period_ns = period_ns_[best_task];
                const std::int64_t r_ns = next_release_[best_task] * period_ns;
                ++next_release_[best_task];
                JobRecord job;
                job.loop_id = task.loop_id;
                job.release_s = to_seconds(r_ns);
                job.deadline_s = to_seconds(r_ns + period_ns);
                job.nominal_demand_s = lambda_at(r_ns) * task.est_nominal_exec_s;
                job.remaining_s = job.nominal_demand_s;
                if (hooks_ && hooks_->on_release)
                    job.payload = hooks_->on_release(task.loop_id, now_s_);
                trace_.jobs.push_back(job);
                ready_.push({r_ns + period_ns, task.loop_id, trace_.jobs.size() - 1});
                break;
            }
            case end: {
                if (window_start_ns_ < params_.horizon_ns)
                    close_window(params_.horizon_ns, false);
                trace_.speed_segments.push_back({segment_start_s_, horizon_s, alpha_});
                // Unfinished jobs whose deadlines fell inside the run missed.
                while (!ready_.empty()) {
                    auto& job = trace_.jobs[ready_.top().job_index];
                    ready_.pop();
                    if (job.deadline_s <= horizon_s + 1e-12 && job.remaining_s > 1e-9) {
                        job.missed = true;
                        ++trace_.miss_count;
                    }
                }
                return std::move(trace_);
            }
            }
        }
    }

private:
    void advance_to(double t)
    {
        const double dt = t - now_s_;
        if (dt > 0.0 && !ready_.empty()) {
            auto& front = trace_.jobs[ready_.top().job_index];
            front.remaining_s -= alpha_ * dt;
            front.executed_wall_s += dt;
            window_busy_s_ += dt;
            trace_.busy_total_s += dt;
        }
        now_s_ = t;
    }

    double next_release_time() const
    {
        std::int64_t best = params_.horizon_ns;
        for (std::size_t i = 0; i < ts_.tasks.size(); ++i)
            best = std::min(best, next_release_[i] * period_ns_[i]);
        return to_seconds(best);
    }

    std::size_t task_index(int loop_id) const
    {
        for (std::size_t i = 0; i < ts_.tasks.size(); ++i)
            if (ts_.tasks[i].loop_id == loop_id)
                return i;
        throw ValidationError("unknown loop id");
    }

    double lambda_at(std::int64_t t_ns) const
    {
        double v = lambda_bps_.front().second;
        for (const auto& bp : lambda_bps_) {
            if (bp.first <= t_ns)
                v = bp.second;
            else
                break;
        }
        return v;
    }

    void open_window(std::int64_t start_ns)
    {
        window_start_ns_ = start_ns;
        window_busy_s_ = 0.0;
        window_lambda_ = lambda_at(start_ns);
        window_alpha_ = alpha_;
    }

    void close_window(std::int64_t end_ns, bool complete)
    {
        UtilizationWindow w;
        w.start_s = to_seconds(window_start_ns_);
        w.length_s = to_seconds(end_ns) - w.start_s;
        w.busy_s = window_busy_s_;
        w.lambda = window_lambda_;
        w.alpha = window_alpha_;
        w.requested_util = window_lambda_ * (omega_hat_ / window_alpha_);
        w.requested_demand_s = w.requested_util * w.length_s;
        for (std::size_t i = 0; i < ts_.tasks.size(); ++i) {
            if (window_exec_count_[i] > 0)
                task_obs_exec_s_[i] = window_exec_sum_[i] / window_exec_count_[i];
            w.estimated_util += task_obs_exec_s_[i] / ts_.tasks[i].period_s;
            window_exec_sum_[i] = 0.0;
            window_exec_count_[i] = 0;
        }
        w.complete = complete;
        trace_.windows.push_back(w);

        SpeedFactor next = SpeedFactor{alpha_};
        if (complete)
            next = policy_.on_window(w);
        if (hooks_ && hooks_->on_window)
            hooks_->on_window(w, next);
        if (next.value != alpha_) {
            trace_.speed_segments.push_back({segment_start_s_, now_s_, alpha_});
            segment_start_s_ = now_s_;
            alpha_ = next.value;
        }
        open_window(end_ns);
    }

    const TaskSet& ts_;
    SpeedPolicy& policy_;
    ScheduleParams params_;
    const ScheduleHooks* hooks_;

    std::vector<std::pair<std::int64_t, double>> lambda_bps_;
    std::vector<std::int64_t> next_release_;
    std::vector<std::int64_t> period_ns_;
    std::vector<double> task_obs_exec_s_;
    std::vector<double> window_exec_sum_;
    std::vector<int> window_exec_count_;
    std::priority_queue<detail::ReadyRef, std::vector<detail::ReadyRef>, detail::ReadyLater>
        ready_;
    ScheduleTrace trace_;
    double omega_hat_ = 0.0;
    double now_s_ = 0.0;
    double alpha_ = 1.0;
    double segment_start_s_ = 0.0;
    std::int64_t window_start_ns_ = 0;
    double window_busy_s_ = 0.0;
    double window_lambda_ = 1.0;
    double window_alpha_ = 1.0;
};

/// Run the task set under the given schedule and speed policy; the full
/// event trace comes back for inspection.
inline ScheduleTrace run_schedule(const TaskSet& ts, const LambdaSchedule& sched,
                                  SpeedPolicy& policy, double horizon_s, double window_s,
                                  double alpha_min = 0.1,
                                  const ScheduleHooks* hooks = nullptr, double grid_s = 0.0)
{
    ScheduleParams params;
    params.horizon_ns = to_nanos(horizon_s);
    params.window_ns = to_nanos(window_s);
    params.grid_ns = to_nanos(grid_s);
    params.alpha_min = alpha_min;
    SchedulerEngine engine(ts, sched, policy, params, hooks);
    return engine.run();
}

} // namespace ctdvs

#endif
