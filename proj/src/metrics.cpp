#include "lvmc/metrics.hpp"

#include <cmath>

namespace lvmc {

namespace {

bool day_fails(std::span<const double> day_pu, const VoltageBand& band) {
    int outside = 0;
    for (double v : day_pu) {
        if (v < band.hard_lo || v > band.hard_hi) return true;
        if (v < band.band_lo || v > band.band_hi) ++outside;
    }
    return static_cast<double>(outside) / static_cast<double>(day_pu.size()) >
           band.outside_fraction;
}

}  // namespace

bool voltage_day_fails(std::span<const double> day_pu, const VoltageBand& band) {
    if (day_pu.empty()) throw InvalidInputError("voltage_day_fails: empty day");
    return day_fails(day_pu, band);
}

bool voltage_problem(std::span<const double> series_pu, const VoltageBand& band) {
    if (series_pu.empty()) throw InvalidInputError("voltage_problem: empty series");
    for (std::size_t begin = 0; begin < series_pu.size(); begin += kStepsPerDay) {
        const std::size_t len = std::min<std::size_t>(kStepsPerDay, series_pu.size() - begin);
        if (day_fails(series_pu.subspan(begin, len), band)) return true;
    }
    return false;
}

ThermalResult thermal_loading(std::span<const double> head_current_a, double capacity_a) {
    if (!(capacity_a > 0.0)) throw InvalidInputError("thermal_loading: capacity must be positive");
    ThermalResult result;
    result.ratio.reserve(head_current_a.size());
    for (double i : head_current_a) {
        const double ratio = i / capacity_a;
        result.ratio.push_back(ratio);
        result.peak = std::max(result.peak, ratio);
    }
    result.problem = result.peak > 1.0;
    return result;
}

double vuf_percent(const Phasor3& phasors) {
    for (const Complex& v : phasors)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidInputError("vuf: non-finite phasor");
    const Complex a = std::polar(1.0, 2.0 * M_PI / 3.0);
    const Complex a2 = a * a;
    const Complex v_pos = (phasors[0] + a * phasors[1] + a2 * phasors[2]) / 3.0;
    const Complex v_neg = (phasors[0] + a2 * phasors[1] + a * phasors[2]) / 3.0;
    const double pos_mag = std::abs(v_pos);
    if (pos_mag == 0.0)
        throw InvalidInputError("vuf: zero positive-sequence voltage, measure undefined");
    return std::abs(v_neg) / pos_mag * 100.0;
}

MetricsAccumulator::MetricsAccumulator(const FeederModel& feeder) : feeder_(&feeder) {
    day_outside_count_.assign(feeder.loads.size(), 0);
    day_hard_violation_.assign(feeder.loads.size(), 0);
    customer_problem_.assign(feeder.loads.size(), 0);

    monitored_buses_.push_back(0);
    std::vector<char> seen(feeder.bus_count(), 0);
    seen[0] = 1;
    for (const auto& load : feeder.loads) {
        if (!seen[static_cast<std::size_t>(load.bus)]) {
            seen[static_cast<std::size_t>(load.bus)] = 1;
            monitored_buses_.push_back(load.bus);
        }
    }
}

void MetricsAccumulator::close_day() {
    if (steps_into_day_ == 0) return;
    for (std::size_t c = 0; c < customer_problem_.size(); ++c) {
        const double fraction =
            static_cast<double>(day_outside_count_[c]) / static_cast<double>(steps_into_day_);
        if (day_hard_violation_[c] || fraction > 0.05) customer_problem_[c] = 1;
        day_outside_count_[c] = 0;
        day_hard_violation_[c] = 0;
    }
    steps_into_day_ = 0;
}

void MetricsAccumulator::consume(std::size_t, const PowerFlowSolution& solution) {
    const FeederModel& f = *feeder_;
    for (std::size_t c = 0; c < f.loads.size(); ++c) {
        const double v = solution.voltage_pu(f, f.loads[c].bus, f.loads[c].phase);
        if (v < 0.9 || v > 1.1) day_hard_violation_[c] = 1;
        if (v < 0.95 || v > 1.05) ++day_outside_count_[c];
    }
    if (++steps_into_day_ == kStepsPerDay) close_day();

    double head = 0.0;
    for (const Complex& i : solution.head_current_a) head = std::max(head, std::abs(i));
    loading_peak_ = std::max(loading_peak_, head / f.head_ampacity_a);

    for (int bus : monitored_buses_)
        vuf_max_ = std::max(
            vuf_max_, vuf_percent(solution.bus_voltage_v[static_cast<std::size_t>(bus)]));
}

MetricReport MetricsAccumulator::finalize() {
    close_day();
    MetricReport report;
    report.transformer_loading_peak = loading_peak_;
    report.thermal_problem = loading_peak_ > 1.0;
    report.vuf_max_pct = vuf_max_;
    report.customer_voltage_problem.assign(customer_problem_.begin(), customer_problem_.end());
    int with_problem = 0;
    for (char flag : customer_problem_) with_problem += flag != 0;
    report.pct_customers_voltage_problem =
        customer_problem_.empty()
            ? 0.0
            : 100.0 * static_cast<double>(with_problem) /
                  static_cast<double>(customer_problem_.size());
    return report;
}

}  // namespace lvmc
