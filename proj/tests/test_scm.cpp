#include "doctest.h"
#include "lvmc/scm.hpp"
#include "test_util.hpp"

using namespace lvmc;

TEST_CASE("scm discharges a full battery into demand until the floor") {
    BatterySpec spec = testutil::small_battery();
    NetLoadTrace trace;
    trace.demand_kw.assign(kStepsPerDay, 1.0);
    trace.pv_kw.assign(kStepsPerDay, 0.0);

    const DispatchSchedule s = scm_schedule(trace, spec, default_tariff(), spec.capacity_kwh);
    CHECK(verify_schedule(trace, spec, s).worst() < 1e-9);

    // Early steps: battery covers the deficit, grid sees only inverter loss.
    CHECK(s.battery_kw[0] == doctest::Approx(-1.0));
    CHECK(s.grid_kw[0] == doctest::Approx(1.0 - 0.96));
    // After depletion the grid supplies everything.
    CHECK(s.soc_kwh.back() == doctest::Approx(spec.soc_min_kwh));
    CHECK(s.battery_kw.back() == 0.0);
    CHECK(s.grid_kw.back() == doctest::Approx(1.0));
}

TEST_CASE("scm caps charging at the rate limit and exports the rest") {
    BatterySpec spec = testutil::small_battery();
    NetLoadTrace trace;
    trace.demand_kw.assign(kStepsPerDay, 0.0);
    trace.pv_kw.assign(kStepsPerDay, 10.0);

    const DispatchSchedule s = scm_schedule(trace, spec, default_tariff(), spec.soc_min_kwh);
    CHECK(s.battery_kw[0] == doctest::Approx(4.2));
    CHECK(s.grid_kw[0] == doctest::Approx(-(10.0 - 4.2) * 0.96));
}

TEST_CASE("scm exports all surplus once the battery is full") {
    BatterySpec spec = testutil::small_battery();
    NetLoadTrace trace;
    trace.demand_kw.assign(kStepsPerDay, 0.2);
    trace.pv_kw.assign(kStepsPerDay, 0.0);
    for (int s = 16; s < 36; ++s) trace.pv_kw[s] = 3.0;  // strong PV 8am-6pm

    const DispatchSchedule s = scm_schedule(trace, spec, default_tariff(), spec.soc_min_kwh);
    bool reached_full = false;
    for (std::size_t t = 16; t < 36; ++t) {
        if (reached_full) {
            CHECK(s.battery_kw[t] == 0.0);
            CHECK(s.grid_kw[t] == doctest::Approx(0.2 - 0.96 * 3.0));
        }
        if (s.soc_kwh[t + 1] >= spec.capacity_kwh - 1e-9) reached_full = true;
    }
    CHECK(reached_full);
}

TEST_CASE("scm greedy storage properties hold per step") {
    Rng rng(17);
    BatterySpec spec = testutil::small_battery();
    spec.inverter_efficiency = 1.0;  // isolates the storage logic from inverter loss
    for (int rep = 0; rep < 25; ++rep) {
        const NetLoadTrace trace = testutil::random_trace(rng, 2, 5.0);
        const DispatchSchedule s =
            scm_schedule(trace, spec, default_tariff(), spec.soc_min_kwh);
        CHECK(verify_schedule(trace, spec, s).worst() < 1e-9);
        for (std::size_t t = 0; t < trace.size(); ++t) {
            const double surplus = trace.pv_kw[t] - trace.demand_kw[t];
            const double headroom = spec.capacity_kwh - s.soc_kwh[t];
            // Never import while PV covers demand and the battery has room.
            if (surplus > 0.0 && headroom > 1e-9) CHECK(s.grid_kw[t] <= 1e-9);
            // Never export while the battery could store the whole surplus.
            const double storable =
                std::min(spec.max_charge_kw,
                         headroom / (spec.charge_efficiency * kStepHours));
            if (surplus > 0.0 && surplus <= storable) CHECK(s.grid_kw[t] >= -1e-9);
            // Complementary: no discharge during surplus, no charge in deficit.
            if (surplus > 0.0) CHECK(s.battery_kw[t] >= 0.0);
            if (surplus < 0.0) CHECK(s.battery_kw[t] <= 0.0);
        }
    }
}

TEST_CASE("scm idles at exact balance") {
    BatterySpec spec = testutil::small_battery();
    NetLoadTrace trace;
    trace.demand_kw.assign(kStepsPerDay, 1.5);
    trace.pv_kw.assign(kStepsPerDay, 1.5);
    const DispatchSchedule s = scm_schedule(trace, spec, default_tariff(), 3.0);
    for (double p : s.battery_kw) CHECK(p == 0.0);
}
