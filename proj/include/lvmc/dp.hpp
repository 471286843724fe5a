#pragma once

#include "lvmc/battery.hpp"

namespace lvmc {

/// SOC discretization for the daily scheduling DP.
struct DpOptions {
    int soc_levels = 101;  // uniform grid over [soc_min, capacity]
};

/// Solve one decision horizon (up to a day, tariff-aligned at slot 0) by
/// backward induction over the SOC grid.
///
/// Candidate actions per state: idle, charge / discharge at the rate limits,
/// and the two partial rates that exactly match the step's PV surplus or
/// demand deficit. Every action is snapped down to land exactly on a grid
/// point, so value lookups never interpolate.
///
/// End-of-horizon SOC above soc_min is credited at the day's mean buy price
/// times the charge efficiency; `objective` carries cost minus that credit,
/// `total_cost` the cash cost alone.
DispatchSchedule solve_dp(const NetLoadTrace& trace, const BatterySpec& spec,
                          const Tariff& tariff, double initial_soc_kwh,
                          const DpOptions& options = {});

/// Chain daily solves over a multi-day trace, passing each day's terminal
/// SOC to the next day.
DispatchSchedule solve_year(const NetLoadTrace& trace, const BatterySpec& spec,
                            const Tariff& tariff, double initial_soc_kwh,
                            const DpOptions& options = {});

}  // namespace lvmc
