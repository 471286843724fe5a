#include "lvmc/battery.hpp"

#include <cmath>

namespace lvmc {

void BatterySpec::validate() const {
    if (!(capacity_kwh > 0.0) || !(soc_min_kwh >= 0.0) || soc_min_kwh >= capacity_kwh)
        throw InvalidInputError("BatterySpec: need 0 <= soc_min < capacity");
    if (!(max_charge_kw > 0.0) || !(max_discharge_kw > 0.0))
        throw InvalidInputError("BatterySpec: rate limits must be positive");
    if (!(charge_efficiency > 0.0) || charge_efficiency > 1.0 || !(inverter_efficiency > 0.0) ||
        inverter_efficiency > 1.0)
        throw InvalidInputError("BatterySpec: efficiencies must be in (0, 1]");
}

std::vector<BatteryBandEntry> default_battery_table() {
    return {{4.0, 6.5, 4.2}, {6.0, 9.8, 5.0}, {10.0, 14.0, 5.0}};
}

BatterySpec battery_for_pv(double pv_capacity_kw, const std::vector<BatteryBandEntry>& table) {
    if (table.empty()) throw InvalidInputError("battery_for_pv: empty battery table");
    if (!(pv_capacity_kw >= 0.0))
        throw InvalidInputError("battery_for_pv: negative PV capacity");

    // Band i covers (previous band's max, pv_max]; PV sizes in a gap snap to
    // the nearest band, ties going to the larger battery.
    std::size_t best = 0;
    double best_dist = 1e300;
    double lo = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double hi = table[i].pv_max_kw;
        double dist = 0.0;
        if (pv_capacity_kw < lo)
            dist = lo - pv_capacity_kw;
        else if (pv_capacity_kw > hi)
            dist = pv_capacity_kw - hi;
        if (dist <= best_dist) {
            best_dist = dist;
            best = i;
        }
        lo = hi + 1.0;  // next band starts at the next whole-kW size
    }

    BatterySpec spec;
    spec.capacity_kwh = table[best].capacity_kwh;
    spec.soc_min_kwh = 0.1 * table[best].capacity_kwh;
    spec.max_charge_kw = table[best].power_kw;
    spec.max_discharge_kw = table[best].power_kw;
    spec.validate();
    return spec;
}

double Tariff::mean_buy() const {
    double s = 0.0;
    for (double p : buy_price) s += p;
    return s / kStepsPerDay;
}

double Tariff::peak_buy() const {
    double m = 0.0;
    for (double p : buy_price) m = std::max(m, p);
    return m;
}

void Tariff::validate() const {
    for (double p : buy_price)
        if (!(p >= 0.0)) throw InvalidInputError("Tariff: negative buy price");
    if (!(feed_in >= 0.0)) throw InvalidInputError("Tariff: negative feed-in rate");
    if (!(feed_in < peak_buy()))
        throw InvalidInputError("Tariff: feed-in must be below the peak buy price");
}

Tariff default_tariff() {
    Tariff t;
    for (int s = 0; s < kStepsPerDay; ++s) {
        const double hour = s * kStepHours;
        if (hour >= 14.0 && hour < 20.0)
            t.buy_price[s] = 0.55;  // peak 2pm-8pm
        else if ((hour >= 7.0 && hour < 14.0) || (hour >= 20.0 && hour < 22.0))
            t.buy_price[s] = 0.25;  // shoulder
        else
            t.buy_price[s] = 0.15;  // off-peak
    }
    t.feed_in = 0.08;
    return t;
}

Tariff flat_tariff(double buy, double feed_in) {
    Tariff t;
    t.buy_price.fill(buy);
    t.feed_in = feed_in;
    return t;
}

double battery_transition(double soc_kwh, double power_kw, double dt_hours,
                          const BatterySpec& spec) {
    const double tol = 1e-9 * (1.0 + std::abs(power_kw));
    if (power_kw > spec.max_charge_kw + tol || -power_kw > spec.max_discharge_kw + tol)
        throw ConstraintViolationError("battery_transition: power " + std::to_string(power_kw) +
                                       " kW outside rate limits");
    const double charge = std::max(0.0, power_kw);
    const double discharge = std::max(0.0, -power_kw);
    return soc_kwh + dt_hours * (spec.charge_efficiency * charge -
                                 discharge / spec.charge_efficiency);
}

DispatchSchedule assemble_schedule(const NetLoadTrace& trace, const BatterySpec& spec,
                                   const Tariff& tariff, double initial_soc_kwh,
                                   std::span<const double> battery_kw) {
    const std::size_t n = trace.size();
    if (battery_kw.size() != n)
        throw InvalidInputError("assemble_schedule: battery power length mismatch");

    DispatchSchedule out;
    out.battery_kw.assign(battery_kw.begin(), battery_kw.end());
    out.soc_kwh.resize(n + 1);
    out.inverter_kw.resize(n);
    out.grid_kw.resize(n);
    out.soc_kwh[0] = initial_soc_kwh;

    double cost = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double p = battery_kw[t];
        out.soc_kwh[t + 1] = battery_transition(out.soc_kwh[t], p, kStepHours, spec);
        out.inverter_kw[t] = inverter_power(trace.pv_kw[t], p);
        out.grid_kw[t] = grid_power(trace.demand_kw[t], out.inverter_kw[t],
                                    spec.inverter_efficiency);
        cost += stage_cost(out.grid_kw[t], tariff.buy_at(t), tariff.feed_in, kStepHours);
    }
    out.total_cost = cost;
    out.objective = cost;
    return out;
}

double ScheduleResiduals::worst() const {
    return std::max({energy_balance, soc_transition, rate_bound, soc_bound, complementarity});
}

ScheduleResiduals verify_schedule(const NetLoadTrace& trace, const BatterySpec& spec,
                                  const DispatchSchedule& schedule) {
    const std::size_t n = trace.size();
    if (schedule.battery_kw.size() != n || schedule.soc_kwh.size() != n + 1)
        throw InvalidInputError("verify_schedule: schedule/trace length mismatch");

    ScheduleResiduals r;
    for (std::size_t t = 0; t < n; ++t) {
        const double p = schedule.battery_kw[t];
        const double charge = p > 0.0 ? p : 0.0;
        const double discharge = p < 0.0 ? -p : 0.0;

        r.complementarity = std::max(r.complementarity, charge * discharge);
        r.rate_bound = std::max({r.rate_bound, charge - spec.max_charge_kw,
                                 discharge - spec.max_discharge_kw});

        const double soc_next = schedule.soc_kwh[t] +
                                kStepHours * (spec.charge_efficiency * charge -
                                              discharge / spec.charge_efficiency);
        r.soc_transition = std::max(r.soc_transition, std::abs(schedule.soc_kwh[t + 1] - soc_next));

        const double xi = trace.pv_kw[t] - p;
        const double adj = xi >= 0.0 ? spec.inverter_efficiency * xi
                                     : xi / spec.inverter_efficiency;
        r.energy_balance =
            std::max(r.energy_balance, std::abs(trace.demand_kw[t] - adj - schedule.grid_kw[t]));
    }
    for (double soc : schedule.soc_kwh)
        r.soc_bound = std::max({r.soc_bound, soc - spec.capacity_kwh, spec.soc_min_kwh - soc});
    r.rate_bound = std::max(r.rate_bound, 0.0);
    r.soc_bound = std::max(r.soc_bound, 0.0);
    return r;
}

}  // namespace lvmc
