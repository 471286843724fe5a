#pragma once

#include <istream>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "lvmc/battery.hpp"
#include "lvmc/mc.hpp"
#include "lvmc/pfa.hpp"
#include "lvmc/timeseries.hpp"

namespace lvmc {

// ---------------------------------------------------------------------------
// Trace CSV: customer_id,timestamp_iso8601,demand_kw,pv_kw (half-hourly)
// ---------------------------------------------------------------------------

/// Parse and validate a trace CSV. Rows must be grouped per customer in
/// time order at half-hourly spacing; gaps of one or two steps are filled
/// by linear interpolation (reported through `warnings`), longer gaps are
/// rejected. Negative readings and schema violations raise errors naming
/// the offending row.
std::vector<CustomerProfile> parse_trace_csv(std::istream& in, const std::string& source_name,
                                             std::vector<std::string>* warnings = nullptr);

std::vector<CustomerProfile> ingest_traces(const std::string& path,
                                           std::vector<std::string>* warnings = nullptr);

/// Inverse of ingest_traces; doubles are printed with round-trip precision
/// so ingest(export(x)) == x. Timestamps start at `start_iso` (midnight,
/// January 1 by default).
std::string traces_to_csv(const std::vector<CustomerProfile>& profiles,
                          const std::string& start_iso = "2019-01-01T00:00");

/// Pool entries from profiles: the series become the trace, the PV capacity
/// comes from the profile's feature vector.
std::vector<PoolEntry> pool_from_profiles(const std::vector<CustomerProfile>& profiles);

// ---------------------------------------------------------------------------
// Schedule / benchmark CSV
// ---------------------------------------------------------------------------

/// Columns: t,demand_kw,pv_kw,battery_kw,soc_kwh,grid_kw,cost
std::string schedule_csv(const NetLoadTrace& trace, const DispatchSchedule& schedule,
                         const Tariff& tariff);

/// Columns: customer_id,dp_cost,pfa_cost,dp_seconds,pfa_seconds
std::string benchmark_csv(const SpeedupReport& report);

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct SynthesisConfig {
    int n_states = 40;
    double concentration = 1.0;
    int restarts = 10;
    std::size_t pool_size = 3000;
    int days = 365;
    double self_consumed_fraction = 0.3;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string corpus_csv;    // observed traces (optional when a pool is given)
    std::string feeder_id;     // fixture name: aus1 | aus2 | uk
    std::string feeder_json;   // or an explicit feeder description file
    std::string pool_csv;      // optional pre-synthesized pool
    std::string policy_json;   // optional pre-trained policy net
    McConfig mc;
    Tariff tariff = default_tariff();
    std::vector<BatteryBandEntry> battery_table = default_battery_table();
    SynthesisConfig synthesis;
    TrainOptions pfa;
};

/// Load and schema-validate an experiment config; relative paths are
/// resolved against the config file's directory and must exist.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::string& base_dir);

/// Resolve the config's feeder reference (fixture id or JSON file).
FeederModel load_feeder(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Write via a temp file in the same directory plus rename.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace lvmc
