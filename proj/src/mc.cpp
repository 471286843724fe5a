#include "lvmc/mc.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "lvmc/dp.hpp"
#include "lvmc/scm.hpp"

namespace lvmc {

namespace {

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::uint64_t level_key(double percent) {
    return static_cast<std::uint64_t>(std::llround(percent * 1000.0));
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const int n_threads = std::max(1, threads);
    if (n_threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

Scheduler scheduler_from_string(const std::string& name) {
    if (name == "dp") return Scheduler::kDp;
    if (name == "pfa") return Scheduler::kPfa;
    if (name == "scm") return Scheduler::kScm;
    throw InvalidInputError("unknown scheduler '" + name + "' (expected dp, pfa or scm)");
}

std::string to_string(Scheduler scheduler) {
    switch (scheduler) {
        case Scheduler::kDp: return "dp";
        case Scheduler::kPfa: return "pfa";
        case Scheduler::kScm: return "scm";
    }
    return "?";
}

void McConfig::validate() const {
    if (runs < 1) throw InvalidInputError("McConfig: runs must be >= 1");
    if (days < 1) throw InvalidInputError("McConfig: days must be >= 1");
    if (pv_levels.empty() || battery_levels.empty())
        throw InvalidInputError("McConfig: penetration level lists must be nonempty");
    for (double p : pv_levels)
        if (p < 0.0 || p > 100.0)
            throw InvalidInputError("McConfig: PV level outside [0, 100]");
    for (double p : battery_levels)
        if (p < 0.0 || p > 100.0)
            throw InvalidInputError("McConfig: battery level outside [0, 100]");
    if (!(demand_power_factor > 0.0) || demand_power_factor > 1.0)
        throw InvalidInputError("McConfig: power factor must be in (0, 1]");
    if (dp_soc_levels < 2) throw InvalidInputError("McConfig: dp_soc_levels must be >= 2");
    if (parallelism < 1) throw InvalidInputError("McConfig: parallelism must be >= 1");
}

std::vector<CustomerAllocation> sample_allocation(const std::vector<PoolEntry>& pool,
                                                  std::size_t n_customers, double p_pv_percent,
                                                  double p_b_percent, std::uint64_t seed,
                                                  const std::vector<BatteryBandEntry>& table) {
    if (n_customers == 0) throw InvalidInputError("sample_allocation: no load points");
    if (pool.size() < n_customers)
        throw InvalidInputError("sample_allocation: pool smaller than the customer count (" +
                                std::to_string(pool.size()) + " < " +
                                std::to_string(n_customers) + ")");

    // Stage seeds: the load draw is shared by every penetration level of a
    // run; PV subsets by every battery level of a PV level.
    Rng load_rng(derive_seed(seed, {1}));
    const std::vector<std::size_t> traces =
        load_rng.sample_without_replacement(pool.size(), n_customers);

    const std::size_t n_pv = round_half_up(p_pv_percent / 100.0 * static_cast<double>(n_customers));
    Rng pv_rng(derive_seed(seed, {2, level_key(p_pv_percent)}));
    const std::vector<std::size_t> pv_positions =
        pv_rng.sample_without_replacement(n_customers, n_pv);

    const std::size_t n_b = round_half_up(p_b_percent / 100.0 * static_cast<double>(n_pv));
    Rng b_rng(derive_seed(seed, {3, level_key(p_pv_percent), level_key(p_b_percent)}));
    const std::vector<std::size_t> b_positions = b_rng.sample_without_replacement(n_pv, n_b);

    std::vector<CustomerAllocation> out(n_customers);
    for (std::size_t c = 0; c < n_customers; ++c)
        out[c].pool_index = static_cast<int>(traces[c]);
    for (std::size_t p : pv_positions) out[p].has_pv = true;
    for (std::size_t bi : b_positions) {
        const std::size_t customer = pv_positions[bi];
        out[customer].has_battery = true;
        out[customer].battery =
            battery_for_pv(pool[static_cast<std::size_t>(out[customer].pool_index)].pv_capacity_kw,
                           table);
    }
    return out;
}

SummaryStats aggregate(std::span<const double> samples) {
    if (samples.empty()) throw InvalidInputError("aggregate: empty sample set");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    return {sorted.front(), at(0.25), at(0.5), at(0.75), sorted.back()};
}

McResult run_assessment(const McConfig& config, const AssessmentInputs& inputs) {
    config.validate();
    if (inputs.pool == nullptr || inputs.feeder == nullptr)
        throw InvalidInputError("run_assessment: pool and feeder are required");
    const std::vector<PoolEntry>& pool = *inputs.pool;
    const FeederModel& feeder = *inputs.feeder;
    feeder.validate();
    inputs.tariff.validate();
    const std::size_t n_customers = feeder.loads.size();
    if (pool.size() < n_customers)
        throw InvalidInputError("run_assessment: pool smaller than feeder customer count");
    if (config.scheduler == Scheduler::kPfa && inputs.policy == nullptr)
        throw InvalidInputError("run_assessment: PFA scheduler needs a trained policy net");

    const auto horizon = static_cast<std::size_t>(config.days) * kStepsPerDay;
    for (const auto& entry : pool)
        if (entry.trace.size() < horizon)
            throw InvalidInputError("run_assessment: pool trace shorter than the configured days");

    // Slice pool traces to the simulated horizon once.
    std::vector<NetLoadTrace> sliced(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        sliced[i].assigned_cluster = pool[i].trace.assigned_cluster;
        sliced[i].demand_kw.assign(pool[i].trace.demand_kw.begin(),
                                   pool[i].trace.demand_kw.begin() + horizon);
        sliced[i].pv_kw.assign(pool[i].trace.pv_kw.begin(),
                               pool[i].trace.pv_kw.begin() + horizon);
    }

    // Battery schedules depend only on the trace and its Table-sized
    // battery, never on the allocation, so compute each one exactly once.
    std::vector<std::vector<double>> grid_series(pool.size());
    parallel_for(pool.size(), config.parallelism, [&](std::size_t i) {
        const BatterySpec spec = battery_for_pv(pool[i].pv_capacity_kw, inputs.battery_table);
        DispatchSchedule schedule;
        switch (config.scheduler) {
            case Scheduler::kDp:
                schedule = solve_year(sliced[i], spec, inputs.tariff, spec.soc_min_kwh,
                                      DpOptions{config.dp_soc_levels});
                break;
            case Scheduler::kPfa:
                schedule = infer_schedule(*inputs.policy, sliced[i], spec, inputs.tariff,
                                          spec.soc_min_kwh);
                break;
            case Scheduler::kScm:
                schedule = scm_schedule(sliced[i], spec, inputs.tariff, spec.soc_min_kwh);
                break;
        }
        grid_series[i] = std::move(schedule.grid_kw);
    });

    const double tan_phi =
        std::tan(std::acos(std::clamp(config.demand_power_factor, 0.0, 1.0)));

    struct CellKey {
        int run;
        std::size_t pv_idx;
        std::size_t b_idx;
    };
    std::vector<CellKey> cells;
    cells.reserve(config.planned_simulations());
    for (int run = 0; run < config.runs; ++run)
        for (std::size_t pi = 0; pi < config.pv_levels.size(); ++pi)
            for (std::size_t bi = 0; bi < config.battery_levels.size(); ++bi)
                cells.push_back({run, pi, bi});

    McResult result;
    result.cells.resize(cells.size());

    parallel_for(cells.size(), config.parallelism, [&](std::size_t ci) {
        const CellKey& key = cells[ci];
        const double p_pv = config.pv_levels[key.pv_idx];
        const double p_b = config.battery_levels[key.b_idx];
        CellResult& cell = result.cells[ci];
        cell.run = key.run;
        cell.p_pv = p_pv;
        cell.p_b = p_b;
        cell.cell_seed = derive_seed(config.seed, {static_cast<std::uint64_t>(key.run),
                                                   level_key(p_pv), level_key(p_b)});
        try {
            const auto allocation = sample_allocation(
                pool, n_customers, p_pv, p_b,
                derive_seed(config.seed, {0xa110c, static_cast<std::uint64_t>(key.run)}),
                inputs.battery_table);

            InjectionSeries series;
            series.p_kw.resize(n_customers);
            series.q_kvar.resize(n_customers);
            for (std::size_t c = 0; c < n_customers; ++c) {
                const auto pi = static_cast<std::size_t>(allocation[c].pool_index);
                const NetLoadTrace& trace = sliced[pi];
                auto& p = series.p_kw[c];
                auto& q = series.q_kvar[c];
                p.resize(horizon);
                q.resize(horizon);
                for (std::size_t t = 0; t < horizon; ++t) {
                    if (allocation[c].has_battery)
                        p[t] = grid_series[pi][t];
                    else if (allocation[c].has_pv)
                        p[t] = trace.demand_kw[t] - trace.pv_kw[t];
                    else
                        p[t] = trace.demand_kw[t];
                    q[t] = trace.demand_kw[t] * tan_phi;
                }
            }

            MetricsAccumulator acc(feeder);
            solve_timeseries_visit(feeder, series,
                                   [&](std::size_t step, const PowerFlowSolution& sol) {
                                       acc.consume(step, sol);
                                   });
            cell.metrics = acc.finalize();
        } catch (const Error& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    });

    // Percentile summaries per (p_pv, p_b) cell over successful runs.
    const char* metric_names[3] = {"pct_voltage_problem", "max_loading", "max_vuf"};
    for (std::size_t pi = 0; pi < config.pv_levels.size(); ++pi) {
        for (std::size_t bi = 0; bi < config.battery_levels.size(); ++bi) {
            std::vector<double> samples[3];
            for (const auto& cell : result.cells) {
                if (cell.failed || cell.p_pv != config.pv_levels[pi] ||
                    cell.p_b != config.battery_levels[bi])
                    continue;
                samples[0].push_back(cell.metrics.pct_customers_voltage_problem);
                samples[1].push_back(cell.metrics.transformer_loading_peak);
                samples[2].push_back(cell.metrics.vuf_max_pct);
            }
            for (int m = 0; m < 3; ++m) {
                SummaryRow row;
                row.p_pv = config.pv_levels[pi];
                row.p_b = config.battery_levels[bi];
                row.metric = metric_names[m];
                if (!samples[m].empty()) row.stats = aggregate(samples[m]);
                else row.stats = {std::nan(""), std::nan(""), std::nan(""), std::nan(""),
                                  std::nan("")};
                result.summary.push_back(std::move(row));
            }
        }
    }
    return result;
}

std::string results_csv(const McResult& result) {
    std::string out = "run,p_pv,p_b,pct_voltage_problem,max_loading,max_vuf\n";
    for (const auto& cell : result.cells) {
        out += std::to_string(cell.run);
        out += ',';
        out += format_double(cell.p_pv);
        out += ',';
        out += format_double(cell.p_b);
        out += ',';
        if (cell.failed) {
            out += "nan,nan,nan";
        } else {
            out += format_double(cell.metrics.pct_customers_voltage_problem);
            out += ',';
            out += format_double(cell.metrics.transformer_loading_peak);
            out += ',';
            out += format_double(cell.metrics.vuf_max_pct);
        }
        out += '\n';
    }
    return out;
}

std::string summary_csv(const McResult& result) {
    std::string out = "p_pv,p_b,metric,min,p25,median,p75,max\n";
    for (const auto& row : result.summary) {
        out += format_double(row.p_pv);
        out += ',';
        out += format_double(row.p_b);
        out += ',';
        out += row.metric;
        for (double v : {row.stats.min, row.stats.p25, row.stats.median, row.stats.p75,
                         row.stats.max}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace lvmc
