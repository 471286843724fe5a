#pragma once

#include <functional>
#include <span>

#include "lvmc/feeder.hpp"

namespace lvmc {

/// Net power drawn by one customer; consumption positive, export negative.
struct Injection {
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

struct PowerFlowOptions {
    double tolerance_pu = 1e-6;  // max per-phase voltage change between sweeps
    int max_iterations = 100;
};

struct PowerFlowSolution {
    std::vector<Phasor3> bus_voltage_v;   // per bus, phase-to-neutral volts
    std::vector<Phasor3> line_current_a;  // per line, aligned with feeder.lines
    Phasor3 head_current_a{};
    int iterations = 0;
    double max_step_pu = 0.0;  // size of the final voltage update

    double voltage_pu(const FeederModel& feeder, int bus, int phase) const {
        return std::abs(bus_voltage_v[static_cast<std::size_t>(bus)]
                                     [static_cast<std::size_t>(phase)]) /
               feeder.v_base_ln_v;
    }
};

/// Forward/backward sweep solver with constant-power loads. Construct once
/// per feeder; solve() is const and safe to call from multiple threads.
class PowerFlowSolver {
public:
    explicit PowerFlowSolver(const FeederModel& feeder);

    const FeederModel& feeder() const { return *feeder_; }

    /// One snapshot; injections are per feeder.loads entry (same order).
    /// `warm_start` reuses a previous solution's voltages as the initial
    /// guess. Throws NumericalError, naming the worst bus, if the sweep
    /// does not converge.
    PowerFlowSolution solve(std::span<const Injection> injections,
                            const PowerFlowOptions& options = {},
                            const PowerFlowSolution* warm_start = nullptr) const;

private:
    const FeederModel* feeder_;
    std::vector<int> line_order_;          // topological, parents first
    std::vector<int> line_into_;           // per bus, index of the feeding line
    Phasor3 slack_v_{};
};

/// Convenience wrapper building a solver for one shot.
PowerFlowSolution solve_snapshot(const FeederModel& feeder, std::span<const Injection> injections,
                                 const PowerFlowOptions& options = {});

/// Per-customer injection series, [customer][step], customers aligned with
/// feeder.loads.
struct InjectionSeries {
    std::vector<std::vector<double>> p_kw;
    std::vector<std::vector<double>> q_kvar;

    std::size_t steps() const { return p_kw.empty() ? 0 : p_kw.front().size(); }
};

/// Solve every step independently, warm-starting each snapshot from the
/// previous one, and hand each solution to the visitor. Used for yearly
/// runs where storing all solutions would be wasteful.
void solve_timeseries_visit(const FeederModel& feeder, const InjectionSeries& series,
                            const std::function<void(std::size_t, const PowerFlowSolution&)>& visit,
                            const PowerFlowOptions& options = {});

/// Materialized variant for short series.
std::vector<PowerFlowSolution> solve_timeseries(const FeederModel& feeder,
                                                const InjectionSeries& series,
                                                const PowerFlowOptions& options = {});

/// Complex power audit of a solved snapshot: head in-feed versus delivered
/// load power plus series losses.
struct PowerBalance {
    Complex head_va{};
    Complex loads_va{};
    Complex losses_va{};
    double relative_residual = 0.0;
};

PowerBalance power_balance(const FeederModel& feeder, std::span<const Injection> injections,
                           const PowerFlowSolution& solution);

}  // namespace lvmc
