#ifndef CTDVS_ENERGY_HPP
#define CTDVS_ENERGY_HPP

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ctdvs/taskmodel.hpp"

namespace ctdvs {

/// Normalized dynamic CPU energy per sample, quadratic in speed.
inline double energy_quadratic(double alpha)
{
    return alpha * alpha;
}

/// Parameters of the first-order CMOS delay-model energy expression.
/// Units are free as long as they are used consistently; only the
/// normalized value is used by the simulator.
struct CmosParams {
    double switched_capacitance = 1.0;
    double v_threshold = 0.0;
    double v_max = 1.0;
    double sample_interval_s = 1.0;
    double f_max_hz = 1.0;

    double v0() const
    {
        const double d = v_max - v_threshold;
        return d * d / v_max;
    }
};

inline void validate(const CmosParams& p)
{
    if (!(p.v_threshold >= 0.0 && p.v_threshold < p.v_max))
        throw ValidationError("CMOS params require 0 <= V_t < V_max");
    if (!(p.switched_capacitance > 0.0 && p.sample_interval_s > 0.0 && p.f_max_hz > 0.0))
        throw ValidationError("CMOS params must be positive");
}

/// Energy per sample from the first-order CMOS delay model.
inline double energy_cmos(const CmosParams& p, double alpha)
{
    const double v0 = p.v0();
    const double ratio = p.v_threshold / v0;
    const double radicand = alpha * ratio + 0.25 * alpha * alpha;
    assert(radicand >= 0.0);
    const double bracket = ratio + 0.5 * alpha + std::sqrt(radicand);
    return p.switched_capacitance * v0 * v0 * p.sample_interval_s * p.f_max_hz * alpha *
           bracket * bracket;
}

/// Same, normalized by the full-speed value so it is comparable with
/// the quadratic model.
inline double energy_cmos_normalized(const CmosParams& p, double alpha)
{
    return energy_cmos(p, alpha) / energy_cmos(p, 1.0);
}

struct EnergyModel {
    enum class Kind { quadratic, cmos } kind = Kind::quadratic;
    CmosParams cmos{};

    double eval(double alpha) const
    {
        return kind == Kind::quadratic ? energy_quadratic(alpha)
                                       : energy_cmos_normalized(cmos, alpha);
    }
};

struct EnergySegment {
    double duration_s = 0.0;
    double alpha = 1.0;
};

/// Time-weighted normalized energy over a run of piecewise-constant speeds.
class EnergyLedger {
public:
    EnergyLedger() = default;
    explicit EnergyLedger(EnergyModel model) : model_(model) {}

    void add(double duration_s, double alpha)
    {
        if (!(duration_s >= 0.0))
            throw ValidationError("energy segment duration must be nonnegative");
        segments_.push_back({duration_s, alpha});
        total_s_ += duration_s;
        weighted_ += duration_s * model_.eval(alpha);
    }

    const std::vector<EnergySegment>& segments() const { return segments_; }
    double total_duration_s() const { return total_s_; }
    double cumulative_energy() const { return weighted_; }
    const EnergyModel& model() const { return model_; }

private:
    EnergyModel model_{};
    std::vector<EnergySegment> segments_;
    double total_s_ = 0.0;
    double weighted_ = 0.0;
};

inline double ledger_average(const EnergyLedger& ledger)
{
    if (!(ledger.total_duration_s() > 0.0))
        throw ValidationError("energy ledger is empty");
    return ledger.cumulative_energy() / ledger.total_duration_s();
}

} // namespace ctdvs

#endif
