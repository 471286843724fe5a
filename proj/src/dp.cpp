#include "lvmc/dp.hpp"

#include <cmath>
#include <cstdint>

namespace lvmc {

namespace {

int snap_level(double soc_kwh, double soc_min, double step_kwh, int levels) {
    const int j = static_cast<int>(std::lround((soc_kwh - soc_min) / step_kwh));
    return std::clamp(j, 0, levels - 1);
}

}  // namespace

DispatchSchedule solve_dp(const NetLoadTrace& trace, const BatterySpec& spec,
                          const Tariff& tariff, double initial_soc_kwh,
                          const DpOptions& options) {
    spec.validate();
    tariff.validate();
    const int horizon = static_cast<int>(trace.size());
    if (horizon < 1 || horizon > kStepsPerDay)
        throw InvalidInputError("solve_dp: horizon must be 1..48 steps");
    const int levels = options.soc_levels;
    if (levels < 2) throw InvalidInputError("solve_dp: need at least 2 SOC levels");
    if (initial_soc_kwh < spec.soc_min_kwh - 1e-9 || initial_soc_kwh > spec.capacity_kwh + 1e-9)
        throw ConstraintViolationError("solve_dp: initial SOC outside [soc_min, capacity]");

    const double dt = kStepHours;
    const double eta = spec.charge_efficiency;
    const double step_kwh = (spec.capacity_kwh - spec.soc_min_kwh) / (levels - 1);

    // Signed battery power that moves the SOC by k grid steps in one interval.
    std::vector<double> charge_power(levels), discharge_power(levels);
    for (int k = 0; k < levels; ++k) {
        charge_power[k] = k * step_kwh / (eta * dt);
        discharge_power[k] = -k * step_kwh * eta / dt;
    }
    const int full_charge_steps =
        std::min(levels - 1, static_cast<int>(std::floor(eta * spec.max_charge_kw * dt / step_kwh)));
    const int full_discharge_steps =
        std::min(levels - 1,
                 static_cast<int>(std::floor(spec.max_discharge_kw * dt / (eta * step_kwh))));

    // Terminal credit: leftover stored energy valued at the day's mean buy
    // price, discounted by the charge efficiency, and capped so that buying
    // at the cheapest slot purely to harvest the credit never pays off.
    double min_buy = tariff.buy_price[0];
    for (double p : tariff.buy_price) min_buy = std::min(min_buy, p);
    const double credit_rate = std::min(tariff.mean_buy() * eta, min_buy / eta);
    std::vector<double> value(static_cast<std::size_t>(levels));
    for (int j = 0; j < levels; ++j) value[j] = -(j * step_kwh) * credit_rate;

    std::vector<std::int16_t> choice(static_cast<std::size_t>(horizon) * levels);
    std::vector<double> next_value(static_cast<std::size_t>(levels));

    for (int t = horizon - 1; t >= 0; --t) {
        const double demand = trace.demand_kw[t];
        const double pv = trace.pv_kw[t];
        const double price = tariff.buy_at(static_cast<std::size_t>(t));

        const double surplus = std::max(0.0, pv - demand);
        const double deficit = std::max(0.0, demand - pv);
        const int surplus_steps = std::min(
            full_charge_steps,
            static_cast<int>(std::floor(eta * std::min(spec.max_charge_kw, surplus) * dt / step_kwh)));
        const int deficit_steps = std::min(
            full_discharge_steps,
            static_cast<int>(
                std::floor(std::min(spec.max_discharge_kw, deficit) * dt / (eta * step_kwh))));

        next_value.swap(value);
        for (int s = 0; s < levels; ++s) {
            const int deltas[5] = {0, full_charge_steps, surplus_steps, -full_discharge_steps,
                                   -deficit_steps};
            double best = 1e300;
            int best_target = s;
            for (int a = 0; a < 5; ++a) {
                const int target = std::clamp(s + deltas[a], 0, levels - 1);
                const int moved = target - s;
                const double p = moved >= 0 ? charge_power[moved] : discharge_power[-moved];
                const double xi = pv - p;
                const double grid = xi >= 0.0 ? demand - spec.inverter_efficiency * xi
                                              : demand - xi / spec.inverter_efficiency;
                const double cost = grid >= 0.0 ? price * grid * dt : tariff.feed_in * grid * dt;
                const double total = cost + next_value[target];
                if (total < best) {
                    best = total;
                    best_target = target;
                }
            }
            value[s] = best;
            choice[static_cast<std::size_t>(t) * levels + s] = static_cast<std::int16_t>(best_target);
        }
    }

    const int start_level = snap_level(initial_soc_kwh, spec.soc_min_kwh, step_kwh, levels);
    std::vector<double> battery_kw(static_cast<std::size_t>(horizon));
    std::vector<int> path(static_cast<std::size_t>(horizon) + 1);
    path[0] = start_level;
    int s = start_level;
    for (int t = 0; t < horizon; ++t) {
        const int target = choice[static_cast<std::size_t>(t) * levels + s];
        const int moved = target - s;
        battery_kw[t] = moved >= 0 ? charge_power[moved] : discharge_power[-moved];
        s = target;
        path[static_cast<std::size_t>(t) + 1] = s;
    }

    DispatchSchedule schedule =
        assemble_schedule(trace, spec, tariff, spec.soc_min_kwh + start_level * step_kwh,
                          battery_kw);
    // Report the SOC trajectory from the exact grid values rather than the
    // re-accumulated transitions, so chained daily solves hand over SOC
    // bit-exactly.
    for (std::size_t t = 0; t < path.size(); ++t)
        schedule.soc_kwh[t] = spec.soc_min_kwh + path[t] * step_kwh;
    // Keep the DP's own accumulated value as the objective so it is exactly
    // comparable with an enumeration that folds costs back-to-front.
    schedule.objective = value[start_level];
    return schedule;
}

DispatchSchedule solve_year(const NetLoadTrace& trace, const BatterySpec& spec,
                            const Tariff& tariff, double initial_soc_kwh,
                            const DpOptions& options) {
    if (trace.size() == 0 || trace.size() % kStepsPerDay != 0)
        throw InvalidInputError("solve_year: trace length must be a multiple of 48");
    const int days = trace.days();

    DispatchSchedule out;
    out.soc_kwh.reserve(trace.size() + 1);
    double soc = initial_soc_kwh;
    double cash = 0.0;
    for (int d = 0; d < days; ++d) {
        NetLoadTrace day;
        const auto begin = static_cast<std::size_t>(d) * kStepsPerDay;
        day.demand_kw.assign(trace.demand_kw.begin() + begin,
                             trace.demand_kw.begin() + begin + kStepsPerDay);
        day.pv_kw.assign(trace.pv_kw.begin() + begin, trace.pv_kw.begin() + begin + kStepsPerDay);
        day.assigned_cluster = trace.assigned_cluster;

        DispatchSchedule daily = solve_dp(day, spec, tariff, soc, options);
        soc = daily.soc_kwh.back();
        cash += daily.total_cost;

        if (d == 0) out.soc_kwh.push_back(daily.soc_kwh.front());
        out.battery_kw.insert(out.battery_kw.end(), daily.battery_kw.begin(),
                              daily.battery_kw.end());
        out.soc_kwh.insert(out.soc_kwh.end(), daily.soc_kwh.begin() + 1, daily.soc_kwh.end());
        out.inverter_kw.insert(out.inverter_kw.end(), daily.inverter_kw.begin(),
                               daily.inverter_kw.end());
        out.grid_kw.insert(out.grid_kw.end(), daily.grid_kw.begin(), daily.grid_kw.end());
    }
    out.total_cost = cash;
    // Whole-horizon objective: cash minus the final terminal credit.
    out.objective = cash - (soc - spec.soc_min_kwh) * tariff.mean_buy() * spec.charge_efficiency;
    return out;
}

}  // namespace lvmc
