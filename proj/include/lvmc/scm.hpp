#pragma once

#include "lvmc/battery.hpp"

namespace lvmc {

/// Self-consumption-maximization benchmark: PV first serves demand, excess
/// charges the battery (rate- and headroom-limited), deficits discharge it
/// (rate- and energy-limited). Remaining surplus exports, remaining deficit
/// imports. Price-blind by definition.
DispatchSchedule scm_schedule(const NetLoadTrace& trace, const BatterySpec& spec,
                              const Tariff& tariff, double initial_soc_kwh);

}  // namespace lvmc
