#include "doctest.h"
#include "lvmc/metrics.hpp"

using namespace lvmc;

TEST_CASE("voltage compliance daily rule") {
    std::vector<double> flat(48, 1.0);
    CHECK(!voltage_day_fails(flat));

    std::vector<double> one_spike(17520, 1.0);
    one_spike[5000] = 1.12;  // breaches the hard 1.1 limit once
    CHECK(voltage_problem(one_spike));

    std::vector<double> three_high(48, 1.0);
    three_high[10] = three_high[20] = three_high[30] = 1.06;  // 6.25 % > 5 %
    CHECK(voltage_day_fails(three_high));

    std::vector<double> two_high(48, 1.0);
    two_high[10] = two_high[20] = 1.06;  // 4.17 % <= 5 %
    CHECK(!voltage_day_fails(two_high));

    CHECK_THROWS_AS(voltage_problem(std::vector<double>{}), InvalidInputError);
}

TEST_CASE("voltage compliance is monotone in the band width") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> day(48);
        for (double& v : day) v = 1.0 + 0.08 * rng.normal();
        const VoltageBand narrow{};
        VoltageBand wide;
        wide.band_lo = 0.93;
        wide.band_hi = 1.07;
        wide.hard_lo = 0.88;
        wide.hard_hi = 1.12;
        if (!voltage_day_fails(day, narrow)) CHECK(!voltage_day_fails(day, wide));
    }
}

TEST_CASE("thermal loading ratios and the strict threshold") {
    const std::vector<double> zeros(10, 0.0);
    const ThermalResult none = thermal_loading(zeros, 400.0);
    CHECK(!none.problem);
    CHECK(none.peak == 0.0);

    const std::vector<double> at_cap{1155.0};
    const ThermalResult boundary = thermal_loading(at_cap, 1155.0);
    CHECK(boundary.ratio[0] == doctest::Approx(1.0));
    CHECK(!boundary.problem);  // strictly greater than 1 only

    const std::vector<double> uk{1200.0};
    const ThermalResult over = thermal_loading(uk, 400.0);
    CHECK(over.ratio[0] == doctest::Approx(3.0));
    CHECK(over.problem);

    // Homogeneity: degree 1 in current, degree -1 in capacity.
    const std::vector<double> i1{300.0}, i2{600.0};
    CHECK(thermal_loading(i2, 400.0).peak == doctest::Approx(2.0 * thermal_loading(i1, 400.0).peak));
    CHECK(thermal_loading(i1, 800.0).peak == doctest::Approx(0.5 * thermal_loading(i1, 400.0).peak));

    CHECK_THROWS_AS(thermal_loading(zeros, 0.0), InvalidInputError);
}

TEST_CASE("vuf: balanced sets, oracle agreement and invariances") {
    const Complex a = std::polar(1.0, 2.0 * M_PI / 3.0);
    const Phasor3 balanced{Complex(230.0, 0.0), 230.0 * a * a, 230.0 * a};
    CHECK(vuf_percent(balanced) < 1e-12);

    // Independent sequence-transform computation for an unbalanced set.
    const Phasor3 unbalanced{std::polar(230.0, 0.0), std::polar(230.0, -2.0 * M_PI / 3.0),
                             std::polar(207.0, 2.0 * M_PI / 3.0)};
    const Complex oracle_pos =
        (unbalanced[0] + a * unbalanced[1] + a * a * unbalanced[2]) / 3.0;
    const Complex oracle_neg =
        (unbalanced[0] + a * a * unbalanced[1] + a * unbalanced[2]) / 3.0;
    const double oracle = std::abs(oracle_neg) / std::abs(oracle_pos) * 100.0;
    CHECK(vuf_percent(unbalanced) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(vuf_percent(unbalanced) > 0.0);

    // Invariant to uniform scaling and rotation.
    const Complex rot = std::polar(3.7, 0.9);
    const Phasor3 rotated{unbalanced[0] * rot, unbalanced[1] * rot, unbalanced[2] * rot};
    CHECK(vuf_percent(rotated) == doctest::Approx(vuf_percent(unbalanced)).epsilon(1e-12));

    const Phasor3 zero{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
    CHECK_THROWS_AS(vuf_percent(zero), InvalidInputError);
}

TEST_CASE("metrics accumulator aggregates per-day failures and maxima") {
    // Two customers on a tiny feeder; hand-crafted voltage snapshots.
    FeederModel f;
    f.name = "mini";
    f.head_ampacity_a = 100.0;
    f.bus_ids = {"head", "b1"};
    FeederLine line;
    line.from = 0;
    line.to = 1;
    line.z_ohm = Eigen::Matrix3cd::Zero();
    f.lines.push_back(line);
    f.loads = {{"c0", 1, 0}, {"c1", 1, 1}};

    const Complex a = std::polar(1.0, 2.0 * M_PI / 3.0);
    auto snapshot = [&](double v_phase_a_pu, double head_current) {
        PowerFlowSolution sol;
        sol.bus_voltage_v.assign(2, Phasor3{Complex(230.0, 0.0), 230.0 * a * a, 230.0 * a});
        sol.bus_voltage_v[1][0] = Complex(230.0 * v_phase_a_pu, 0.0);
        sol.line_current_a.assign(1, Phasor3{});
        sol.head_current_a = {Complex(head_current, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0)};
        return sol;
    };

    MetricsAccumulator acc(f);
    // Day 1: customer 0 sees 1.06 pu for 4 slots (> 5 %), customer 1 stays
    // balanced at nominal; the head peaks at 120 A.
    for (int s = 0; s < 48; ++s)
        acc.consume(static_cast<std::size_t>(s), snapshot(s < 4 ? 1.06 : 1.0, s == 7 ? 120.0 : 50.0));
    // Day 2: all nominal.
    for (int s = 0; s < 48; ++s) acc.consume(static_cast<std::size_t>(48 + s), snapshot(1.0, 40.0));

    const MetricReport report = acc.finalize();
    CHECK(report.customer_voltage_problem[0]);
    CHECK(!report.customer_voltage_problem[1]);
    CHECK(report.pct_customers_voltage_problem == doctest::Approx(50.0));
    CHECK(report.transformer_loading_peak == doctest::Approx(1.2));
    CHECK(report.thermal_problem);
    CHECK(report.vuf_max_pct > 0.0);  // the 1.06 pu phase unbalances the set
}
