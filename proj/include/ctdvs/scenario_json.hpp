#ifndef CTDVS_SCENARIO_JSON_HPP
#define CTDVS_SCENARIO_JSON_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "ctdvs/scenario.hpp"

namespace ctdvs {

// Scenario files are JSON. Time-valued fields carry an explicit unit suffix
// (_ms or _s) so millisecond task tables read naturally while everything is
// stored in seconds internally.

inline ScenarioConfig scenario_from_json(const nlohmann::json& j)
{
    ScenarioConfig cfg;

    if (!j.contains("tasks") || !j["tasks"].is_array())
        throw ValidationError("scenario: missing 'tasks' array");
    int next_loop_id = 1;
    for (const auto& jt : j["tasks"]) {
        TaskSpec t;
        if (jt.contains("period_ms"))
            t.period_s = jt["period_ms"].get<double>() * 1e-3;
        else
            t.period_s = jt.at("period_s").get<double>();
        if (jt.contains("estimated_exec_ms"))
            t.est_nominal_exec_s = jt["estimated_exec_ms"].get<double>() * 1e-3;
        else
            t.est_nominal_exec_s = jt.at("estimated_exec_s").get<double>();
        if (jt.contains("wcet_ms"))
            t.wcet_nominal_s = jt["wcet_ms"].get<double>() * 1e-3;
        else
            t.wcet_nominal_s = jt.at("wcet_s").get<double>();
        t.loop_id = jt.value("loop_id", next_loop_id);
        next_loop_id = t.loop_id + 1;
        cfg.tasks.tasks.push_back(t);
    }

    if (!j.contains("lambda_schedule") || !j["lambda_schedule"].is_array())
        throw ValidationError("scenario: missing 'lambda_schedule' array");
    for (const auto& jb : j["lambda_schedule"]) {
        LambdaBreakpoint bp;
        bp.start_s = jb.at("start_s").get<double>();
        bp.lambda = jb.at("lambda").get<double>();
        cfg.lambda_schedule.breakpoints.push_back(bp);
    }

    cfg.alpha_min = j.value("alpha_min", cfg.alpha_min);
    cfg.horizon_s = j.value("horizon_s", cfg.horizon_s);
    cfg.manager_period_s = j.value("manager_period_s", cfg.manager_period_s);
    cfg.micro_step_s = j.value("micro_step_s", cfg.micro_step_s);
    cfg.default_seed = j.value("seed", cfg.default_seed);
    cfg.control_cost_weight = j.value("control_cost_weight", cfg.control_cost_weight);

    if (j.contains("energy_model")) {
        const auto& je = j["energy_model"];
        if (je.is_string() && je.get<std::string>() == "quadratic") {
            cfg.energy.kind = EnergyModel::Kind::quadratic;
        } else if (je.is_object() && je.contains("cmos")) {
            cfg.energy.kind = EnergyModel::Kind::cmos;
            const auto& jc = je["cmos"];
            cfg.energy.cmos.switched_capacitance =
                jc.value("switched_capacitance", cfg.energy.cmos.switched_capacitance);
            cfg.energy.cmos.v_threshold = jc.at("v_threshold").get<double>();
            cfg.energy.cmos.v_max = jc.at("v_max").get<double>();
            cfg.energy.cmos.sample_interval_s =
                jc.value("sample_interval_s", cfg.energy.cmos.sample_interval_s);
            cfg.energy.cmos.f_max_hz = jc.value("f_max_hz", cfg.energy.cmos.f_max_hz);
        } else {
            throw ValidationError("scenario: energy_model must be \"quadratic\" or {cmos:{...}}");
        }
    }

    if (j.contains("manager")) {
        const auto& jm = j["manager"];
        cfg.ctdvs.setpoint = jm.value("setpoint", cfg.ctdvs.setpoint);
        if (jm.contains("poles")) {
            cfg.ctdvs.poles.a = jm["poles"].at("a").get<double>();
            cfg.ctdvs.poles.b = jm["poles"].at("b").get<double>();
        }
        if (jm.contains("gains")) {
            PiGains g;
            g.kp = jm["gains"].at("kp").get<double>();
            g.ki = jm["gains"].at("ki").get<double>();
            g.k_lambda = jm["gains"].value("k_lambda", 0.0);
            cfg.ctdvs.explicit_gains = g;
        }
        if (jm.contains("k_lambda")) {
            cfg.ctdvs.k_lambda = jm["k_lambda"].get<double>();
            if (cfg.ctdvs.explicit_gains && cfg.ctdvs.explicit_gains->k_lambda == 0.0)
                cfg.ctdvs.explicit_gains->k_lambda = *cfg.ctdvs.k_lambda;
        }
        if (cfg.ctdvs.explicit_gains && cfg.ctdvs.explicit_gains->k_lambda == 0.0)
            cfg.ctdvs.explicit_gains->k_lambda = 1.0;
        const std::string sched = jm.value("gain_scheduling", std::string("consistent"));
        if (sched == "consistent")
            cfg.ctdvs.scheduling = GainScheduling::consistent;
        else if (sched == "literal")
            cfg.ctdvs.scheduling = GainScheduling::literal;
        else
            throw ValidationError("scenario: gain_scheduling must be consistent or literal");
        cfg.ctdvs.anti_windup = jm.value("anti_windup", cfg.ctdvs.anti_windup);
    }

    if (j.contains("plant")) {
        const auto& jp = j["plant"];
        cfg.plant.v_intensity = jp.value("process_noise_intensity", cfg.plant.v_intensity);
        cfg.plant.e_variance = jp.value("measurement_noise_variance", cfg.plant.e_variance);
        if (jp.contains("initial_state")) {
            const auto& x0 = jp["initial_state"];
            cfg.plant.x0 = Eigen::Vector2d(x0.at(0).get<double>(), x0.at(1).get<double>());
        }
        cfg.plant.divergence_limit = jp.value("divergence_limit", cfg.plant.divergence_limit);
    }

    return cfg;
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg)
{
    nlohmann::json j;
    for (const auto& t : cfg.tasks.tasks)
        j["tasks"].push_back({{"period_ms", t.period_s * 1e3},
                              {"estimated_exec_ms", t.est_nominal_exec_s * 1e3},
                              {"wcet_ms", t.wcet_nominal_s * 1e3},
                              {"loop_id", t.loop_id}});
    for (const auto& bp : cfg.lambda_schedule.breakpoints)
        j["lambda_schedule"].push_back({{"start_s", bp.start_s}, {"lambda", bp.lambda}});
    j["alpha_min"] = cfg.alpha_min;
    j["horizon_s"] = cfg.horizon_s;
    j["manager_period_s"] = cfg.manager_period_s;
    j["micro_step_s"] = cfg.micro_step_s;
    j["seed"] = cfg.default_seed;
    j["control_cost_weight"] = cfg.control_cost_weight;
    if (cfg.energy.kind == EnergyModel::Kind::quadratic)
        j["energy_model"] = "quadratic";
    else
        j["energy_model"] = {{"cmos",
                              {{"switched_capacitance", cfg.energy.cmos.switched_capacitance},
                               {"v_threshold", cfg.energy.cmos.v_threshold},
                               {"v_max", cfg.energy.cmos.v_max},
                               {"sample_interval_s", cfg.energy.cmos.sample_interval_s},
                               {"f_max_hz", cfg.energy.cmos.f_max_hz}}}};
    j["manager"]["setpoint"] = cfg.ctdvs.setpoint;
    j["manager"]["poles"] = {{"a", cfg.ctdvs.poles.a}, {"b", cfg.ctdvs.poles.b}};
    if (cfg.ctdvs.explicit_gains)
        j["manager"]["gains"] = {{"kp", cfg.ctdvs.explicit_gains->kp},
                                 {"ki", cfg.ctdvs.explicit_gains->ki},
                                 {"k_lambda", cfg.ctdvs.explicit_gains->k_lambda}};
    if (cfg.ctdvs.k_lambda)
        j["manager"]["k_lambda"] = *cfg.ctdvs.k_lambda;
    j["manager"]["gain_scheduling"] =
        cfg.ctdvs.scheduling == GainScheduling::consistent ? "consistent" : "literal";
    j["manager"]["anti_windup"] = cfg.ctdvs.anti_windup;
    j["plant"]["process_noise_intensity"] = cfg.plant.v_intensity;
    j["plant"]["measurement_noise_variance"] = cfg.plant.e_variance;
    j["plant"]["initial_state"] = {cfg.plant.x0(0), cfg.plant.x0(1)};
    j["plant"]["divergence_limit"] = cfg.plant.divergence_limit;
    return j;
}

inline ScenarioConfig load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("scenario parse error in " + path + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("scenario field error in " + path + ": " + e.what());
    }
}

} // namespace ctdvs

#endif
