#include "lvmc/powerflow.hpp"

#include <cmath>

namespace lvmc {

namespace {

constexpr double kDeg120 = 2.0 * M_PI / 3.0;

}  // namespace

PowerFlowSolver::PowerFlowSolver(const FeederModel& feeder) : feeder_(&feeder) {
    feeder.validate();
    line_order_ = feeder.topological_line_order();
    line_into_.assign(feeder.bus_count(), -1);
    for (std::size_t i = 0; i < feeder.lines.size(); ++i)
        line_into_[static_cast<std::size_t>(feeder.lines[i].to)] = static_cast<int>(i);

    const double v = feeder.source_pu * feeder.v_base_ln_v;
    slack_v_ = {Complex(v, 0.0), std::polar(v, -kDeg120), std::polar(v, kDeg120)};
}

PowerFlowSolution PowerFlowSolver::solve(std::span<const Injection> injections,
                                         const PowerFlowOptions& options,
                                         const PowerFlowSolution* warm_start) const {
    const FeederModel& f = *feeder_;
    const std::size_t n_bus = f.bus_count();
    const std::size_t n_line = f.lines.size();
    if (injections.size() != f.loads.size())
        throw InvalidInputError("power flow: one injection per load point required");
    for (const auto& inj : injections)
        if (!std::isfinite(inj.p_kw) || !std::isfinite(inj.q_kvar))
            throw InvalidInputError("power flow: non-finite injection");

    // Aggregate load apparent power (VA) per bus and phase.
    std::vector<Phasor3> s_bus(n_bus, Phasor3{});
    for (std::size_t i = 0; i < injections.size(); ++i) {
        const LoadPoint& load = f.loads[i];
        s_bus[static_cast<std::size_t>(load.bus)][static_cast<std::size_t>(load.phase)] +=
            Complex(injections[i].p_kw * 1e3, injections[i].q_kvar * 1e3);
    }

    PowerFlowSolution sol;
    if (warm_start != nullptr && warm_start->bus_voltage_v.size() == n_bus)
        sol.bus_voltage_v = warm_start->bus_voltage_v;
    else
        sol.bus_voltage_v.assign(n_bus, slack_v_);
    sol.line_current_a.assign(n_line, Phasor3{});

    std::vector<Phasor3> current_acc(n_bus);
    auto backward = [&]() {
        for (std::size_t b = 0; b < n_bus; ++b)
            for (int ph = 0; ph < 3; ++ph) {
                const Complex s = s_bus[b][static_cast<std::size_t>(ph)];
                const Complex v = sol.bus_voltage_v[b][static_cast<std::size_t>(ph)];
                current_acc[b][static_cast<std::size_t>(ph)] =
                    s == Complex(0.0, 0.0) ? Complex(0.0, 0.0) : std::conj(s / v);
            }
        for (auto it = line_order_.rbegin(); it != line_order_.rend(); ++it) {
            const FeederLine& line = f.lines[static_cast<std::size_t>(*it)];
            const auto to = static_cast<std::size_t>(line.to);
            const auto from = static_cast<std::size_t>(line.from);
            sol.line_current_a[static_cast<std::size_t>(*it)] = current_acc[to];
            for (int ph = 0; ph < 3; ++ph)
                current_acc[from][static_cast<std::size_t>(ph)] +=
                    current_acc[to][static_cast<std::size_t>(ph)];
        }
        sol.head_current_a = current_acc[0];
    };

    double step = 0.0;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        backward();

        step = 0.0;
        std::size_t worst_bus = 0;
        // Head bus behind the transformer's series impedance.
        for (int ph = 0; ph < 3; ++ph) {
            const Complex v_new = slack_v_[static_cast<std::size_t>(ph)] -
                                  f.transformer.z_ohm * sol.head_current_a[static_cast<std::size_t>(ph)];
            step = std::max(step,
                            std::abs(v_new - sol.bus_voltage_v[0][static_cast<std::size_t>(ph)]));
            sol.bus_voltage_v[0][static_cast<std::size_t>(ph)] = v_new;
        }
        for (int li : line_order_) {
            const FeederLine& line = f.lines[static_cast<std::size_t>(li)];
            const auto from = static_cast<std::size_t>(line.from);
            const auto to = static_cast<std::size_t>(line.to);
            const Phasor3& i_line = sol.line_current_a[static_cast<std::size_t>(li)];
            for (int r = 0; r < 3; ++r) {
                Complex drop(0.0, 0.0);
                for (int c = 0; c < 3; ++c)
                    drop += line.z_ohm(r, c) * i_line[static_cast<std::size_t>(c)];
                const Complex v_new = sol.bus_voltage_v[from][static_cast<std::size_t>(r)] - drop;
                const double change =
                    std::abs(v_new - sol.bus_voltage_v[to][static_cast<std::size_t>(r)]);
                if (change > step) {
                    step = change;
                    worst_bus = to;
                }
                sol.bus_voltage_v[to][static_cast<std::size_t>(r)] = v_new;
            }
        }
        step /= f.v_base_ln_v;
        if (step < options.tolerance_pu) {
            sol.iterations = iter + 1;
            sol.max_step_pu = step;
            // Refresh currents against the final voltages so delivered load
            // powers match the specification exactly.
            backward();
            return sol;
        }
        if (iter == options.max_iterations - 1) {
            throw NumericalError("power flow did not converge in " +
                                 std::to_string(options.max_iterations) +
                                 " iterations; worst mismatch " + std::to_string(step) +
                                 " pu at bus " + f.bus_ids[worst_bus]);
        }
    }
    throw NumericalError("power flow did not converge");
}

PowerFlowSolution solve_snapshot(const FeederModel& feeder, std::span<const Injection> injections,
                                 const PowerFlowOptions& options) {
    return PowerFlowSolver(feeder).solve(injections, options);
}

void solve_timeseries_visit(const FeederModel& feeder, const InjectionSeries& series,
                            const std::function<void(std::size_t, const PowerFlowSolution&)>& visit,
                            const PowerFlowOptions& options) {
    if (series.p_kw.size() != feeder.loads.size() || series.q_kvar.size() != feeder.loads.size())
        throw InvalidInputError("solve_timeseries: one series per load point required");
    const std::size_t steps = series.steps();
    for (const auto& s : series.p_kw)
        if (s.size() != steps) throw InvalidInputError("solve_timeseries: ragged series");

    const PowerFlowSolver solver(feeder);
    std::vector<Injection> injections(feeder.loads.size());
    PowerFlowSolution previous;
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t c = 0; c < injections.size(); ++c)
            injections[c] = {series.p_kw[c][t], series.q_kvar[c][t]};
        PowerFlowSolution sol =
            solver.solve(injections, options, t > 0 ? &previous : nullptr);
        visit(t, sol);
        previous = std::move(sol);
    }
}

std::vector<PowerFlowSolution> solve_timeseries(const FeederModel& feeder,
                                                const InjectionSeries& series,
                                                const PowerFlowOptions& options) {
    std::vector<PowerFlowSolution> out;
    out.reserve(series.steps());
    solve_timeseries_visit(
        feeder, series, [&](std::size_t, const PowerFlowSolution& sol) { out.push_back(sol); },
        options);
    return out;
}

PowerBalance power_balance(const FeederModel& feeder, std::span<const Injection> injections,
                           const PowerFlowSolution& solution) {
    PowerBalance balance;
    for (int ph = 0; ph < 3; ++ph)
        balance.head_va += solution.bus_voltage_v[0][static_cast<std::size_t>(ph)] *
                           std::conj(solution.head_current_a[static_cast<std::size_t>(ph)]);
    for (const auto& inj : injections) balance.loads_va += Complex(inj.p_kw * 1e3, inj.q_kvar * 1e3);
    for (std::size_t li = 0; li < feeder.lines.size(); ++li) {
        const Phasor3& i_line = solution.line_current_a[li];
        for (int r = 0; r < 3; ++r) {
            Complex drop(0.0, 0.0);
            for (int c = 0; c < 3; ++c)
                drop += feeder.lines[li].z_ohm(r, c) * i_line[static_cast<std::size_t>(c)];
            balance.losses_va += drop * std::conj(i_line[static_cast<std::size_t>(r)]);
        }
    }
    const double denom = std::max(std::abs(balance.head_va), 1.0);
    balance.relative_residual =
        std::abs(balance.head_va - balance.loads_va - balance.losses_va) / denom;
    return balance;
}

}  // namespace lvmc
