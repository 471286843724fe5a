#pragma once

#include <span>

#include "lvmc/powerflow.hpp"

namespace lvmc {

/// Voltage compliance thresholds in pu.
struct VoltageBand {
    double band_lo = 0.95;
    double band_hi = 1.05;
    double hard_lo = 0.90;
    double hard_hi = 1.10;
    double outside_fraction = 0.05;  // tolerated share of samples outside the band
};

/// Daily compliance rule: a day fails if more than 5 % of its samples fall
/// outside [0.95, 1.05] pu, or any sample leaves [0.9, 1.1] pu.
bool voltage_day_fails(std::span<const double> day_pu, const VoltageBand& band = {});

/// A customer has a voltage problem over a horizon if any day fails.
/// The series is split into 48-sample days (a trailing partial day is
/// evaluated over its own length).
bool voltage_problem(std::span<const double> series_pu, const VoltageBand& band = {});

struct ThermalResult {
    std::vector<double> ratio;  // per step, max-phase head current / capacity
    bool problem = false;       // any ratio strictly above 1
    double peak = 0.0;
};

ThermalResult thermal_loading(std::span<const double> head_current_a, double capacity_a);

/// Voltage unbalance factor in percent: |V-| / |V+| * 100 via the
/// symmetrical-component transform. Throws on a zero positive-sequence set.
double vuf_percent(const Phasor3& phasors);

struct MetricReport {
    double pct_customers_voltage_problem = 0.0;
    double transformer_loading_peak = 0.0;  // max over time of the head ratio
    bool thermal_problem = false;
    double vuf_max_pct = 0.0;               // max over time and monitored buses
    std::vector<bool> customer_voltage_problem;
};

/// Streaming computation of the three technical metrics over a time-series
/// power-flow run; feed every snapshot in order, then call finalize once.
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(const FeederModel& feeder);

    void consume(std::size_t step, const PowerFlowSolution& solution);
    MetricReport finalize();

private:
    void close_day();

    const FeederModel* feeder_;
    std::vector<int> monitored_buses_;  // head plus distinct load buses
    std::vector<int> day_outside_count_;
    std::vector<char> day_hard_violation_;
    std::vector<char> customer_problem_;
    int steps_into_day_ = 0;
    double loading_peak_ = 0.0;
    double vuf_max_ = 0.0;
};

}  // namespace lvmc
