#include "doctest.h"
#include "lvmc/dp.hpp"
#include "test_util.hpp"

using namespace lvmc;

namespace {

// ---------------------------------------------------------------------------
// Enumeration oracle: walks every action sequence recursively, recomputing
// the candidate actions, stage costs and terminal credit from their
// definitions. Costs fold back-to-front so the float association matches
// backward induction exactly.
// ---------------------------------------------------------------------------

struct ToyInstance {
    NetLoadTrace trace;
    BatterySpec spec;
    Tariff tariff;
    int levels = 5;
    double initial_soc = 0.0;
};

double oracle_best(const ToyInstance& inst, int t, int level) {
    const double step_kwh =
        (inst.spec.capacity_kwh - inst.spec.soc_min_kwh) / (inst.levels - 1);
    if (t == static_cast<int>(inst.trace.size())) {
        double min_buy = inst.tariff.buy_price[0];
        for (double p : inst.tariff.buy_price) min_buy = std::min(min_buy, p);
        const double credit_rate =
            std::min(inst.tariff.mean_buy() * inst.spec.charge_efficiency,
                     min_buy / inst.spec.charge_efficiency);
        return -(level * step_kwh) * credit_rate;
    }

    const double dt = kStepHours;
    const double eta = inst.spec.charge_efficiency;
    const double demand = inst.trace.demand_kw[static_cast<std::size_t>(t)];
    const double pv = inst.trace.pv_kw[static_cast<std::size_t>(t)];
    const double surplus = std::max(0.0, pv - demand);
    const double deficit = std::max(0.0, demand - pv);

    const int up_full = static_cast<int>(std::floor(eta * inst.spec.max_charge_kw * dt / step_kwh));
    const int up_surplus = static_cast<int>(
        std::floor(eta * std::min(inst.spec.max_charge_kw, surplus) * dt / step_kwh));
    const int down_full =
        static_cast<int>(std::floor(inst.spec.max_discharge_kw * dt / (eta * step_kwh)));
    const int down_deficit = static_cast<int>(
        std::floor(std::min(inst.spec.max_discharge_kw, deficit) * dt / (eta * step_kwh)));

    const int deltas[5] = {up_surplus, up_full, 0, -down_deficit, -down_full};
    double best = 1e300;
    for (int a = 0; a < 5; ++a) {
        const int target = std::clamp(level + deltas[a], 0, inst.levels - 1);
        const int moved = target - level;
        const double power =
            moved >= 0 ? moved * step_kwh / (eta * dt) : moved * step_kwh * eta / dt;
        const double xi = pv - power;
        const double grid = xi >= 0.0 ? demand - inst.spec.inverter_efficiency * xi
                                      : demand - xi / inst.spec.inverter_efficiency;
        const double cost = grid >= 0.0
                                ? inst.tariff.buy_at(static_cast<std::size_t>(t)) * grid * dt
                                : inst.tariff.feed_in * grid * dt;
        best = std::min(best, cost + oracle_best(inst, t + 1, target));
    }
    return best;
}

double oracle_minimum(const ToyInstance& inst) {
    const double step_kwh =
        (inst.spec.capacity_kwh - inst.spec.soc_min_kwh) / (inst.levels - 1);
    const int start = std::clamp(
        static_cast<int>(std::lround((inst.initial_soc - inst.spec.soc_min_kwh) / step_kwh)), 0,
        inst.levels - 1);
    return oracle_best(inst, 0, start);
}

ToyInstance random_toy(Rng& rng) {
    ToyInstance inst;
    const int horizon = 2 + static_cast<int>(rng.uniform_index(5));  // 2..6
    inst.levels = 2 + static_cast<int>(rng.uniform_index(4));        // 2..5
    inst.trace.demand_kw.resize(static_cast<std::size_t>(horizon));
    inst.trace.pv_kw.resize(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        inst.trace.demand_kw[static_cast<std::size_t>(t)] = rng.uniform(0.0, 3.0);
        inst.trace.pv_kw[static_cast<std::size_t>(t)] = rng.uniform(0.0, 4.0);
    }
    inst.spec.capacity_kwh = rng.uniform(2.0, 8.0);
    inst.spec.soc_min_kwh = rng.uniform(0.0, 0.3) * inst.spec.capacity_kwh;
    inst.spec.max_charge_kw = rng.uniform(1.0, 5.0);
    inst.spec.max_discharge_kw = rng.uniform(1.0, 5.0);
    inst.spec.charge_efficiency = rng.uniform(0.85, 1.0);
    inst.spec.inverter_efficiency = rng.uniform(0.9, 1.0);
    for (int s = 0; s < kStepsPerDay; ++s) inst.tariff.buy_price[s] = rng.uniform(0.1, 0.6);
    inst.tariff.feed_in = 0.05;
    inst.initial_soc = rng.uniform(inst.spec.soc_min_kwh, inst.spec.capacity_kwh);
    return inst;
}

}  // namespace

TEST_CASE("dp equals the enumeration oracle on toy instances") {
    Rng rng(1234);
    for (int rep = 0; rep < 60; ++rep) {
        const ToyInstance inst = random_toy(rng);
        const DispatchSchedule schedule =
            solve_dp(inst.trace, inst.spec, inst.tariff, inst.initial_soc,
                     DpOptions{inst.levels});
        CHECK(schedule.objective == oracle_minimum(inst));
        CHECK(verify_schedule(inst.trace, inst.spec, schedule).worst() < 1e-9);
    }
}

TEST_CASE("no arbitrage under a flat tariff with losses: battery idles") {
    Rng rng(99);
    const BatterySpec spec = testutil::small_battery();
    const Tariff tariff = flat_tariff(0.30, 0.08);
    NetLoadTrace trace = testutil::random_trace(rng, 1, 0.0);  // zero PV

    const DispatchSchedule s = solve_dp(trace, spec, tariff, 3.0);
    double expected = 0.0;
    for (std::size_t t = 0; t < trace.size(); ++t)
        expected += 0.30 * trace.demand_kw[t] * kStepHours;
    for (double p : s.battery_kw) CHECK(p == 0.0);
    CHECK(s.total_cost == doctest::Approx(expected));
}

TEST_CASE("dp schedules satisfy every battery constraint") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const NetLoadTrace trace = testutil::random_trace(rng, 1, 5.0);
        const BatterySpec spec = battery_for_pv(rng.uniform(2.0, 9.0));
        const DispatchSchedule s =
            solve_dp(trace, spec, default_tariff(), spec.soc_min_kwh);
        CHECK(verify_schedule(trace, spec, s).worst() < 1e-9);
    }
}

TEST_CASE("dp rejects bad inputs") {
    const BatterySpec spec = testutil::small_battery();
    NetLoadTrace trace;
    trace.demand_kw.assign(kStepsPerDay, 1.0);
    trace.pv_kw.assign(kStepsPerDay, 0.0);
    CHECK_THROWS_AS(solve_dp(trace, spec, default_tariff(), 100.0), ConstraintViolationError);
    CHECK_THROWS_AS(solve_dp(trace, spec, default_tariff(), 0.0), ConstraintViolationError);
    CHECK_THROWS_AS(solve_dp(trace, spec, default_tariff(), 2.0, DpOptions{1}),
                    InvalidInputError);
    NetLoadTrace long_trace;
    long_trace.demand_kw.assign(96, 1.0);
    long_trace.pv_kw.assign(96, 0.0);
    CHECK_THROWS_AS(solve_dp(long_trace, spec, default_tariff(), 2.0), InvalidInputError);
}

TEST_CASE("solve_year chains days with exact SOC continuity") {
    Rng rng(13);
    const BatterySpec spec = testutil::small_battery();
    const Tariff tariff = default_tariff();
    const NetLoadTrace trace = testutil::random_trace(rng, 5, 4.0);

    const DispatchSchedule year = solve_year(trace, spec, tariff, spec.soc_min_kwh);
    CHECK(year.steps() == trace.size());
    CHECK(verify_schedule(trace, spec, year).worst() < 1e-9);

    // Day boundaries: terminal SOC of day d is the initial SOC of day d+1,
    // and the yearly cost is the sum of the daily costs.
    double sum_daily = 0.0;
    double soc = spec.soc_min_kwh;
    for (int d = 0; d < 5; ++d) {
        NetLoadTrace day;
        day.demand_kw.assign(trace.demand_kw.begin() + d * kStepsPerDay,
                             trace.demand_kw.begin() + (d + 1) * kStepsPerDay);
        day.pv_kw.assign(trace.pv_kw.begin() + d * kStepsPerDay,
                         trace.pv_kw.begin() + (d + 1) * kStepsPerDay);
        const DispatchSchedule daily = solve_dp(day, spec, tariff, soc);
        CHECK(daily.soc_kwh.front() ==
              year.soc_kwh[static_cast<std::size_t>(d) * kStepsPerDay]);
        soc = daily.soc_kwh.back();
        sum_daily += daily.total_cost;
    }
    CHECK(year.total_cost == doctest::Approx(sum_daily).epsilon(1e-12));
}

TEST_CASE("zero trace costs nothing and leaves the SOC flat") {
    const BatterySpec spec = testutil::small_battery();
    NetLoadTrace trace;
    trace.demand_kw.assign(2 * kStepsPerDay, 0.0);
    trace.pv_kw.assign(2 * kStepsPerDay, 0.0);
    const DispatchSchedule s = solve_year(trace, spec, default_tariff(), 2.0);
    CHECK(s.total_cost == 0.0);
    for (double soc : s.soc_kwh) CHECK(soc == s.soc_kwh.front());
}

TEST_CASE("enlarging the battery never increases the optimal objective") {
    Rng rng(31);
    const Tariff tariff = default_tariff();
    for (int rep = 0; rep < 8; ++rep) {
        const NetLoadTrace trace = testutil::random_trace(rng, 1, 5.0);
        BatterySpec small = testutil::small_battery();
        small.soc_min_kwh = 0.5;
        BatterySpec big = small;
        big.capacity_kwh = small.capacity_kwh * rng.uniform(1.1, 2.0);

        const double cost_small =
            solve_dp(trace, small, tariff, small.soc_min_kwh).objective;
        const double cost_big = solve_dp(trace, big, tariff, big.soc_min_kwh).objective;
        CHECK(cost_big <= cost_small + 1e-9);
    }
}

TEST_CASE("doubling the SOC grid changes cost by at most one coarse step's value") {
    Rng rng(41);
    const Tariff tariff = default_tariff();
    for (int rep = 0; rep < 6; ++rep) {
        const NetLoadTrace trace = testutil::random_trace(rng, 1, 5.0);
        const BatterySpec spec = testutil::small_battery();
        const double coarse = solve_dp(trace, spec, tariff, spec.soc_min_kwh,
                                       DpOptions{101}).objective;
        const double fine = solve_dp(trace, spec, tariff, spec.soc_min_kwh,
                                     DpOptions{201}).objective;
        const double step_value =
            (spec.capacity_kwh - spec.soc_min_kwh) / 100.0 * tariff.peak_buy();
        CHECK(fine <= coarse + step_value);
    }
}

TEST_CASE("dp is deterministic") {
    Rng rng(55);
    const NetLoadTrace trace = testutil::random_trace(rng, 1, 4.0);
    const BatterySpec spec = testutil::small_battery();
    const DispatchSchedule a = solve_dp(trace, spec, default_tariff(), 1.0);
    const DispatchSchedule b = solve_dp(trace, spec, default_tariff(), 1.0);
    CHECK(a.battery_kw == b.battery_kw);
    CHECK(a.total_cost == b.total_cost);
}
