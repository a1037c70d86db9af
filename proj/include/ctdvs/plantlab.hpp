#ifndef CTDVS_PLANTLAB_HPP
#define CTDVS_PLANTLAB_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <random>

#include "ctdvs/controlmath.hpp"
#include "ctdvs/scheduler.hpp"

namespace ctdvs {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// One independent Gaussian stream. Streams are keyed by (seed, loop, kind)
/// so the draw sequences never depend on the scheme under test: every
/// scheme sharing a seed sees the same noise.
class NoiseStream {
public:
    enum Kind : int { process = 1, measurement = 2 };

    NoiseStream(std::uint64_t seed, int loop_id, Kind kind)
        : engine_(splitmix64(seed ^ splitmix64((std::uint64_t(loop_id) << 8) |
                                               std::uint64_t(kind))))
    {
    }

    double draw() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Continuous-time model of one inverted pendulum with held input and the
/// noise levels of the study scenario.
struct PendulumParams {
    Eigen::Matrix2d a = (Eigen::Matrix2d() << 0.0, 1.0, 100.0, 0.0).finished();
    Eigen::Vector2d b = Eigen::Vector2d(0.0, 100.0);
    Eigen::RowVector2d c = Eigen::RowVector2d(1.0, 0.0);
    Eigen::Vector2d noise_gain = Eigen::Vector2d(0.0, 1.0);
    double v_intensity = 0.1;  // process noise spectral density
    double e_variance = 1e-4;  // per-sample measurement noise variance
    // Noise levels the estimator is designed for. Kept apart from the
    // simulated levels so a noise-free diagnostic run still uses the same
    // regulator as the nominal experiment.
    double design_v_intensity = 0.1;
    double design_e_variance = 1e-4;
    Eigen::Vector2d x0 = Eigen::Vector2d::Zero();
    double divergence_limit = 1e6;
};

/// Plant state, advanced on the simulation micro-grid under zero-order-hold
/// actuation. Once the output magnitude passes the divergence limit the
/// state is clamped there so the run stays finite and the event is
/// reportable instead of fatal.
class PendulumPlant {
public:
    explicit PendulumPlant(const PendulumParams& params = {}) : p_(params), x_(params.x0) {}

    void set_input(double u) { u_ = u; }
    double input() const { return u_; }
    double output_true() const { return (p_.c * x_)(0); }
    const Eigen::Vector2d& state() const { return x_; }
    void set_state(const Eigen::Vector2d& x) { x_ = x; }
    const PendulumParams& params() const { return p_; }
    bool diverged() const { return diverged_; }
    double diverged_at() const { return diverged_at_; }

    double sample_output(NoiseStream& measurement_noise) const
    {
        const double e = p_.e_variance > 0.0
                             ? std::sqrt(p_.e_variance) * measurement_noise.draw()
                             : 0.0;
        return output_true() + e;
    }

    /// Exact discrete propagation over dt with held input plus one process
    /// noise draw (two standard normals, in fixed order).
    void advance(double dt_s, NoiseStream& process_noise, double t_now_s = 0.0)
    {
        const Step& step = step_for(dt_s);
        Eigen::Vector2d w = Eigen::Vector2d::Zero();
        if (p_.v_intensity > 0.0) {
            const Eigen::Vector2d z(process_noise.draw(), process_noise.draw());
            w = step.noise_transform * z;
        }
        x_ = step.phi * x_ + step.gamma * u_ + w;
        if (!diverged_ && std::abs(output_true()) > p_.divergence_limit) {
            diverged_ = true;
            diverged_at_ = t_now_s;
        }
        if (diverged_)
            x_ = x_.cwiseMax(-p_.divergence_limit).cwiseMin(p_.divergence_limit);
    }

private:
    struct Step {
        Eigen::Matrix2d phi;
        Eigen::Vector2d gamma;
        Eigen::Matrix2d noise_transform; // N with N N' = Q_d
    };

    const Step& step_for(double dt_s)
    {
        const std::int64_t key = to_nanos(dt_s);
        auto it = cache_.find(key);
        if (it != cache_.end())
            return it->second;
        auto [phi, gamma] = zoh_discretize(p_.a, p_.b, dt_s);
        Step step;
        step.phi = phi;
        step.gamma = gamma;
        step.noise_transform.setZero();
        if (p_.v_intensity > 0.0) {
            const Matrix qd = discretize_noise(p_.a, p_.noise_gain, p_.v_intensity, dt_s);
            // Q_d from short steps is near rank one; an eigen square root
            // tolerates the semidefinite case where Cholesky would not.
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(qd);
            const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            step.noise_transform = es.eigenvectors() * ev.asDiagonal();
        }
        return cache_.emplace(key, step).first->second;
    }

    PendulumParams p_;
    Eigen::Vector2d x_;
    double u_ = 0.0;
    bool diverged_ = false;
    double diverged_at_ = 0.0;
    std::map<std::int64_t, Step> cache_;
};

/// Discrete LQG regulator for one loop: Kalman correction at the sample,
/// state feedback, prediction to the next sample. The synthesis assumes the
/// loop runs at its nominal period with no delay; scheduling-induced
/// latency acts on the plant only.
class LqgController {
public:
    LqgController() = default;

    static LqgController synthesize(const PendulumParams& p, double period_s,
                                    double control_weight = 0.01)
    {
        LqgController c;
        auto [phi, gamma] = zoh_discretize(p.a, p.b, period_s);
        c.phi_ = phi;
        c.gamma_ = gamma;
        c.c_ = p.c;
        c.period_s_ = period_s;
        const Matrix q_lqr = p.c.transpose() * p.c * period_s;
        Matrix r_lqr(1, 1);
        r_lqr(0, 0) = control_weight * period_s;
        c.k_ = lqr_gain(phi, gamma, q_lqr, r_lqr);
        const Matrix q_d =
            discretize_noise(p.a, p.noise_gain, p.design_v_intensity, period_s);
        c.l_ = kalman_gain(phi, p.c, q_d, p.design_e_variance);
        const double rho_reg = spectral_radius(c.phi_ - c.gamma_ * c.k_);
        const double rho_est =
            spectral_radius((Matrix::Identity(2, 2) - c.l_ * c.c_) * c.phi_);
        if (!(rho_reg < 1.0) || !(rho_est < 1.0))
            throw SynthesisError("synthesized loop is not stable at period " +
                                 std::to_string(period_s));
        c.q_d_ = q_d;
        return c;
    }

    /// One job's computation: correct the estimate with the fresh sample,
    /// emit the command, and predict ahead one period assuming it lands.
    double job_compute(double y)
    {
        const Eigen::Vector2d corrected = xhat_ + l_ * (y - (c_ * xhat_)(0));
        const double u = -(k_ * corrected)(0);
        xhat_ = phi_ * corrected + gamma_ * u;
        return u;
    }

    const Matrix& regulator_gain() const { return k_; }
    const Matrix& estimator_gain() const { return l_; }
    const Matrix& phi() const { return phi_; }
    const Matrix& gamma() const { return gamma_; }
    const Matrix& process_covariance() const { return q_d_; }
    double period_s() const { return period_s_; }
    const Eigen::Vector2d& estimate() const { return xhat_; }
    void set_estimate(const Eigen::Vector2d& x) { xhat_ = x; }

private:
    Matrix phi_{2, 2};
    Matrix gamma_{2, 1};
    Matrix c_{1, 2};
    Matrix k_{1, 2};
    Matrix l_{2, 1};
    Matrix q_d_{2, 2};
    double period_s_ = 0.0;
    Eigen::Vector2d xhat_ = Eigen::Vector2d::Zero();
};

/// Running control cost J = integral of y^2 + weight * u^2.
struct CostAccumulator {
    int loop_id = 0;
    double j_value = 0.0;
    double weight = 0.01;

    void add(double y, double u, double dt_s)
    {
        if (!(dt_s > 0.0))
            throw ValidationError("cost step must be positive");
        j_value += (y * y + weight * u * u) * dt_s;
    }
};

inline CostAccumulator accumulate_cost(CostAccumulator acc, double y, double u, double dt_s)
{
    acc.add(y, u, dt_s);
    return acc;
}

} // namespace ctdvs

#endif
