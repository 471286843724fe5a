#pragma once

#include <optional>

#include "lvmc/battery.hpp"
#include "lvmc/feeder.hpp"
#include "lvmc/metrics.hpp"
#include "lvmc/pfa.hpp"

namespace lvmc {

enum class Scheduler { kDp, kPfa, kScm };

Scheduler scheduler_from_string(const std::string& name);
std::string to_string(Scheduler scheduler);

/// Nested Monte Carlo sweep configuration.
struct McConfig {
    int runs = 100;
    std::vector<double> pv_levels = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};  // percent
    std::vector<double> battery_levels = {0, 50, 100};                             // percent
    std::uint64_t seed = 1;
    Scheduler scheduler = Scheduler::kPfa;
    int days = 365;  // horizon simulated per cell (traces must cover it)
    double demand_power_factor = 0.95;
    int dp_soc_levels = 101;
    int parallelism = 1;

    void validate() const;
    std::size_t planned_simulations() const {
        return static_cast<std::size_t>(runs) * pv_levels.size() * battery_levels.size();
    }
};

/// One synthetic customer available for allocation.
struct PoolEntry {
    NetLoadTrace trace;
    double pv_capacity_kw = 0.0;
};

struct CustomerAllocation {
    int pool_index = 0;
    bool has_pv = false;
    bool has_battery = false;
    BatterySpec battery;  // meaningful only when has_battery
};

/// Algorithm of the sampling stage: draw traces without replacement for the
/// feeder's load points, give round(p_pv * n) of them PV, then a battery to
/// round(p_b * |PV set|) of the PV owners, sized from the trace's PV
/// capacity. Deterministic under seed.
std::vector<CustomerAllocation> sample_allocation(
    const std::vector<PoolEntry>& pool, std::size_t n_customers, double p_pv_percent,
    double p_b_percent, std::uint64_t seed,
    const std::vector<BatteryBandEntry>& battery_table = default_battery_table());

struct CellResult {
    int run = 0;
    double p_pv = 0.0;
    double p_b = 0.0;
    MetricReport metrics;
    bool failed = false;
    std::string error;
    std::uint64_t cell_seed = 0;
};

struct SummaryStats {
    double min = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, max = 0.0;
};

/// Order statistics with linear interpolation between closest ranks.
SummaryStats aggregate(std::span<const double> samples);

struct SummaryRow {
    double p_pv = 0.0;
    double p_b = 0.0;
    std::string metric;  // pct_voltage_problem | max_loading | max_vuf
    SummaryStats stats;
};

struct McResult {
    std::vector<CellResult> cells;     // ordered by (run, p_pv, p_b)
    std::vector<SummaryRow> summary;   // ordered by (p_pv, p_b, metric)
};

/// Everything run_assessment needs besides the config.
struct AssessmentInputs {
    const std::vector<PoolEntry>* pool = nullptr;
    const FeederModel* feeder = nullptr;
    Tariff tariff = default_tariff();
    const PolicyNet* policy = nullptr;  // required for the PFA scheduler
    std::vector<BatteryBandEntry> battery_table = default_battery_table();
};

/// Full sweep: allocate, schedule, run yearly power flow, compute metrics,
/// aggregate percentiles per (p_pv, p_b) cell. Cells execute independently
/// (seeds derived per cell), so results do not depend on the parallelism
/// degree or on which other cells are in the sweep.
McResult run_assessment(const McConfig& config, const AssessmentInputs& inputs);

std::string results_csv(const McResult& result);
std::string summary_csv(const McResult& result);

}  // namespace lvmc
