#pragma once

#include <array>
#include <span>
#include <vector>

#include "lvmc/common.hpp"
#include "lvmc/timeseries.hpp"

namespace lvmc {

/// Battery ratings and efficiencies. Power is AC-side and signed at the
/// scheduling interface: positive charges, negative discharges.
struct BatterySpec {
    double capacity_kwh = 6.5;
    double soc_min_kwh = 0.65;
    double max_charge_kw = 4.2;
    double max_discharge_kw = 4.2;
    double charge_efficiency = 0.95;    // applied on charge, 1/eta on discharge
    double inverter_efficiency = 0.96;  // applied on export, 1/eta on import

    void validate() const;
};

/// Table of battery sizes keyed by attached PV size.
struct BatteryBandEntry {
    double pv_max_kw;      // band covers PV sizes up to this value
    double capacity_kwh;
    double power_kw;
};

/// Default size bands: <=4 kW PV -> 6.5 kWh / 4.2 kW, 5-6 kW -> 9.8 / 5.0,
/// 7-10 kW -> 14.0 / 5.0. PV sizes between bands snap to the nearest one.
std::vector<BatteryBandEntry> default_battery_table();

/// Pick a battery for a PV system of the given size.
BatterySpec battery_for_pv(double pv_capacity_kw,
                           const std::vector<BatteryBandEntry>& table = default_battery_table());

/// Time-of-use buy prices per half-hour slot plus a flat feed-in rate.
struct Tariff {
    std::array<double, kStepsPerDay> buy_price;  // $/kWh per half-hour of day
    double feed_in = 0.08;                       // $/kWh paid for exports

    double buy_at(std::size_t step) const { return buy_price[step % kStepsPerDay]; }
    double mean_buy() const;
    double peak_buy() const;
    void validate() const;
};

/// Default ToU tariff: peak 2pm-8pm $0.55, shoulder 7am-2pm and 8pm-10pm
/// $0.25, off-peak 10pm-7am $0.15, feed-in $0.08.
Tariff default_tariff();

Tariff flat_tariff(double buy, double feed_in);

// ---------------------------------------------------------------------------
// Elementary battery operations
// ---------------------------------------------------------------------------

/// SOC after applying a signed battery power for dt hours:
/// soc' = soc + dt * (eta * max(0,p) - max(0,-p) / eta).
/// Throws ConstraintViolationError if p exceeds the rate limits.
double battery_transition(double soc_kwh, double power_kw, double dt_hours,
                          const BatterySpec& spec);

/// Inverter AC power: pv minus battery power (charge subtracts, discharge adds).
inline double inverter_power(double pv_kw, double battery_kw) { return pv_kw - battery_kw; }

/// Grid power from the energy balance: demand - eta_i * x_i for export-side
/// inverter flow, demand - x_i / eta_i when the inverter draws power.
inline double grid_power(double demand_kw, double inverter_kw, double inverter_efficiency) {
    return inverter_kw >= 0.0 ? demand_kw - inverter_efficiency * inverter_kw
                              : demand_kw - inverter_kw / inverter_efficiency;
}

/// Cost of one step: imports priced at the slot buy price, exports credited
/// at the feed-in rate.
inline double stage_cost(double grid_kw, double buy_price, double feed_in, double dt_hours) {
    return grid_kw >= 0.0 ? buy_price * grid_kw * dt_hours : feed_in * grid_kw * dt_hours;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// A battery dispatch over a horizon, with the derived SOC trajectory, grid
/// exchange and cost. All schedulers emit this via assemble_schedule so the
/// energy balance is computed in exactly one place.
struct DispatchSchedule {
    std::vector<double> battery_kw;   // signed: + charge, - discharge
    std::vector<double> soc_kwh;      // length T+1, soc_kwh[0] = initial SOC
    std::vector<double> inverter_kw;
    std::vector<double> grid_kw;
    double total_cost = 0.0;          // sum of stage costs (cash, no salvage)
    double objective = 0.0;           // total_cost plus any terminal SOC credit

    std::size_t steps() const { return battery_kw.size(); }
};

/// Build the full schedule record from a battery power sequence.
DispatchSchedule assemble_schedule(const NetLoadTrace& trace, const BatterySpec& spec,
                                   const Tariff& tariff, double initial_soc_kwh,
                                   std::span<const double> battery_kw);

/// Worst constraint residuals of a schedule; all fields ~0 for a valid one.
struct ScheduleResiduals {
    double energy_balance = 0.0;   // |demand - eta-adjusted inverter - grid|
    double soc_transition = 0.0;   // |soc[t+1] - transition(soc[t], p[t])|
    double rate_bound = 0.0;       // rate-limit overshoot, kW
    double soc_bound = 0.0;        // SOC window overshoot, kWh
    double complementarity = 0.0;  // charge*discharge product, kW^2

    double worst() const;
};

/// Recompute every constraint of Eqs-style battery operation from scratch.
/// Independent of assemble_schedule's arithmetic path on purpose: it is the
/// checker used by the constraint fuzz suites.
ScheduleResiduals verify_schedule(const NetLoadTrace& trace, const BatterySpec& spec,
                                  const DispatchSchedule& schedule);

}  // namespace lvmc
