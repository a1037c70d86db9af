#ifndef CTDVS_PMDESIGN_HPP
#define CTDVS_PMDESIGN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "ctdvs/taskmodel.hpp"

namespace ctdvs {

// Pole coordinates follow the coefficient-matching convention used by the
// design equations: a pair (a, b) names the characteristic polynomial
//   z^2 + 2a z + (a^2 + b^2),
// whose roots on the z-plane are -a +/- bi. The mirror does not change the
// stability radius sqrt(a^2 + b^2) or the decay rate, only the sign of the
// oscillatory mode, so every stability and settling statement below holds
// in either reading.
struct PolePair {
    double a = 0.0;
    double b = 0.0; // nonnegative; zero means a real double pole
};

/// PI gains of the power manager together with the workload-factor bound
/// the design assumed.
struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
    double k_lambda = 1.0;
};

/// Place the closed-loop poles of the utilization loop by matching the
/// quadratic coefficients:
///   k_lambda*(kp + ki) - 2 = 2a,   1 - k_lambda*kp = a^2 + b^2.
inline PiGains solve_pi_gains(double k_lambda, PolePair poles)
{
    if (!(k_lambda > 0.0))
        throw ValidationError("k_lambda must be positive");
    const double radius_sq = poles.a * poles.a + poles.b * poles.b;
    const double kp = (1.0 - radius_sq) / k_lambda;
    const double ki = (2.0 + 2.0 * poles.a) / k_lambda - kp;
    return PiGains{kp, ki, k_lambda};
}

/// Same placement for two real poles, matched in sum/product form.
inline PiGains solve_pi_gains(double k_lambda, double pole1, double pole2)
{
    if (!(k_lambda > 0.0))
        throw ValidationError("k_lambda must be positive");
    const double kp = (1.0 - pole1 * pole2) / k_lambda;
    const double ki = (2.0 + pole1 + pole2) / k_lambda - kp;
    return PiGains{kp, ki, k_lambda};
}

/// Pure-integral designs (kp == 0) arise when the pole radius is exactly 1
/// - sum of squares; they are permitted but fragile, so callers may warn.
inline bool is_pure_integral(const PiGains& g, double tol = 1e-12)
{
    return std::abs(g.kp) <= tol;
}

/// The two closed-loop poles recovered from a gain set, in the same
/// coefficient convention the design consumes.
struct ClosedLoopPoles {
    std::complex<double> p1;
    std::complex<double> p2;
    bool conjugate = false;

    PolePair pair() const { return PolePair{p1.real(), std::abs(p1.imag())}; }
    double radius() const { return std::max(std::abs(p1), std::abs(p2)); }
};

inline ClosedLoopPoles closed_loop_poles(const PiGains& g)
{
    const double c1 = g.k_lambda * (g.kp + g.ki) - 2.0; // = p1 + p2
    const double c0 = 1.0 - g.k_lambda * g.kp;          // = p1 * p2
    const double half = 0.5 * c1;
    const double disc = half * half - c0;
    ClosedLoopPoles out;
    if (disc < 0.0) {
        const double b = std::sqrt(-disc);
        out.p1 = {half, b};
        out.p2 = {half, -b};
        out.conjugate = true;
    } else {
        const double root = std::sqrt(disc);
        out.p1 = {half + root, 0.0};
        out.p2 = {half - root, 0.0};
        out.conjugate = false;
    }
    return out;
}

/// Stability of the loop: both poles strictly inside the unit circle.
inline bool is_stable(PolePair poles)
{
    return poles.a * poles.a + poles.b * poles.b < 1.0;
}

inline bool is_stable(const ClosedLoopPoles& poles)
{
    return poles.radius() < 1.0;
}

/// How the online speed command folds the known workload estimate into the
/// PI output. `consistent` keeps the loop gain equal to the design model's;
/// `literal` divides the reciprocal-speed command by the workload estimate.
enum class GainScheduling { consistent, literal };

/// Online state of the power manager. `beta` is the reciprocal of the
/// commanded speed and stays in [1, 1/alpha_min]; `integrator` is the
/// running error sum including the current step, which realizes
/// G_C(z) = kp + ki*z/(z-1) exactly.
struct PiRuntimeState {
    double beta = 1.0; // 1/alpha commanded; 1 = full speed
    double integrator = 0.0;
    double setpoint = 0.95;
};

struct PmStepResult {
    PiRuntimeState state;
    SpeedFactor speed;
    double dbeta = 0.0; // PI increment before gain scheduling
    bool clamped = false;
};

/// One manager invocation: PI on the utilization error, gain scheduling by
/// the workload estimate, saturation to the speed range, and conditional
/// integration so the integrator does not wind up against the clamp.
/// The utilization input is the task-rate estimate and may exceed 1 under
/// overload; letting the manager see the excess is what makes recovery
/// from a load-factor jump take a couple of windows instead of a crawl
/// against a clipped error.
inline PmStepResult pm_step(const PiRuntimeState& st, const PiGains& g, double measured_u,
                            double omega_hat, double alpha_min,
                            GainScheduling scheduling = GainScheduling::consistent,
                            bool anti_windup = true)
{
    if (!(measured_u >= 0.0))
        throw ValidationError("measured utilization must be nonnegative");
    if (!(omega_hat > 0.0))
        throw ValidationError("workload estimate must be positive");
    if (!(alpha_min > 0.0 && alpha_min <= 1.0))
        throw ValidationError("alpha_min must be in (0, 1]");

    const double e = st.setpoint - measured_u;
    const double integrator_try = st.integrator + e;
    const double dbeta = g.kp * e + g.ki * integrator_try;
    const double scale =
        scheduling == GainScheduling::consistent ? 1.0 / omega_hat : omega_hat;

    const double beta_max = 1.0 / alpha_min;
    const double beta_try = st.beta + dbeta * scale;
    const double beta_new = std::clamp(beta_try, 1.0, beta_max);
    const bool clamped = beta_try != beta_new;
    // Skip the integrator commit only while the error keeps pushing beta
    // into the active bound.
    const bool winding =
        clamped && ((beta_try > beta_max && e > 0.0) || (beta_try < 1.0 && e < 0.0));

    PmStepResult out;
    out.state.beta = beta_new;
    out.state.integrator = (anti_windup && winding) ? st.integrator : integrator_try;
    out.state.setpoint = st.setpoint;
    out.speed = clamp_speed(1.0 / beta_new, alpha_min);
    out.dbeta = dbeta;
    out.clamped = clamped;
    return out;
}

/// Configuration for simulating the idealized utilization loop the manager
/// was designed against: U(j+1) = lambda * beta_design(j) with the workload
/// estimate cancelled by gain scheduling.
struct DesignSimConfig {
    double setpoint = 0.95;
    double lambda_c = 1.0;
    double omega_hat = 0.5;
    int steps = 100;
    bool saturate = true;
    double alpha_min = 0.1;
    std::optional<double> initial_beta_design; // default: full speed (omega_hat)
};

/// Returns U(1..steps), the model's demanded utilization (it may pass 1
/// transiently). With lambda_c equal to the design bound and the actuator
/// clamp inactive, the trajectory obeys
///   U(j+1) + (KL*kp + KL*ki - 2) U(j) + (1 - KL*kp) U(j-1) = KL*ki*U_R.
inline std::vector<double> simulate_design_model(const PiGains& g, const DesignSimConfig& cfg)
{
    if (cfg.steps < 1)
        throw ValidationError("design simulation needs at least one step");
    double beta_d = cfg.initial_beta_design.value_or(cfg.omega_hat);
    double s = 0.0;
    double u = cfg.lambda_c * beta_d;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(cfg.steps));
    const double beta_lo = cfg.omega_hat;
    const double beta_hi = cfg.omega_hat / cfg.alpha_min;
    for (int j = 0; j < cfg.steps; ++j) {
        out.push_back(u);
        const double e = cfg.setpoint - u;
        s += e;
        beta_d += g.kp * e + g.ki * s;
        if (cfg.saturate)
            beta_d = std::clamp(beta_d, beta_lo, beta_hi);
        u = cfg.lambda_c * beta_d;
    }
    return out;
}

} // namespace ctdvs

#endif
