#include "lvmc/scm.hpp"

namespace lvmc {

DispatchSchedule scm_schedule(const NetLoadTrace& trace, const BatterySpec& spec,
                              const Tariff& tariff, double initial_soc_kwh) {
    spec.validate();
    if (trace.size() == 0 || trace.size() % kStepsPerDay != 0)
        throw InvalidInputError("scm_schedule: trace length must be a multiple of 48");
    if (initial_soc_kwh < spec.soc_min_kwh - 1e-9 || initial_soc_kwh > spec.capacity_kwh + 1e-9)
        throw ConstraintViolationError("scm_schedule: initial SOC outside [soc_min, capacity]");

    const double dt = kStepHours;
    const double eta = spec.charge_efficiency;
    std::vector<double> battery_kw(trace.size(), 0.0);

    double soc = std::clamp(initial_soc_kwh, spec.soc_min_kwh, spec.capacity_kwh);
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const double surplus = trace.pv_kw[t] - trace.demand_kw[t];
        double p = 0.0;
        if (surplus > 0.0) {
            const double headroom_rate = (spec.capacity_kwh - soc) / (eta * dt);
            p = std::min({surplus, spec.max_charge_kw, headroom_rate});
        } else if (surplus < 0.0) {
            const double energy_rate = (soc - spec.soc_min_kwh) * eta / dt;
            p = -std::min({-surplus, spec.max_discharge_kw, energy_rate});
        }
        battery_kw[t] = p;
        soc = battery_transition(soc, p, dt, spec);
        soc = std::clamp(soc, spec.soc_min_kwh, spec.capacity_kwh);  // float drift only
    }
    return assemble_schedule(trace, spec, tariff, std::clamp(initial_soc_kwh, spec.soc_min_kwh,
                                                             spec.capacity_kwh),
                             battery_kw);
}

}  // namespace lvmc
