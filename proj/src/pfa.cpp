#include "lvmc/pfa.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "lvmc/dp.hpp"

namespace lvmc {

namespace {

inline double softsign(double z) { return z / (1.0 + std::abs(z)); }
inline double softsign_grad_from_pre(double z) {
    const double d = 1.0 + std::abs(z);
    return 1.0 / (d * d);
}
inline double squash01(double z) { return std::clamp(z, 0.0, 1.0); }
// Leaky slope outside the clamp keeps saturated samples trainable.
inline double squash01_grad(double z) { return z > 0.0 && z < 1.0 ? 1.0 : 0.1; }

double series_p99(const std::vector<const NetLoadTrace*>& traces,
                  const std::vector<double> NetLoadTrace::* member) {
    std::vector<double> all;
    for (const auto* tr : traces)
        all.insert(all.end(), (tr->*member).begin(), (tr->*member).end());
    if (all.empty()) return 1.0;
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(0.99 * (all.size() - 1)),
                     all.end());
    const double v = all[static_cast<std::size_t>(0.99 * (all.size() - 1))];
    return v > 1e-9 ? v : 1.0;
}

}  // namespace

TrainingSet build_training_set(const std::vector<DpResult>& dp_results) {
    if (dp_results.empty()) throw InvalidInputError("build_training_set: no DP results");

    std::vector<const NetLoadTrace*> traces;
    for (const auto& r : dp_results) {
        if (r.trace == nullptr || r.schedule == nullptr || r.tariff == nullptr)
            throw InvalidInputError("build_training_set: null entry");
        if (r.schedule->battery_kw.size() != r.trace->size() ||
            r.schedule->soc_kwh.size() != r.trace->size() + 1)
            throw InvalidInputError("build_training_set: trace/schedule length mismatch");
        traces.push_back(r.trace);
    }

    TrainingSet set;
    set.scaling.demand_scale = series_p99(traces, &NetLoadTrace::demand_kw);
    set.scaling.pv_scale = series_p99(traces, &NetLoadTrace::pv_kw);
    set.scaling.price_scale = dp_results.front().tariff->peak_buy();

    std::size_t total = 0;
    for (const auto& r : dp_results) total += r.trace->size();
    set.samples.reserve(total);
    for (const auto& r : dp_results) {
        const double cap = r.spec.capacity_kwh;
        for (std::size_t t = 0; t < r.trace->size(); ++t) {
            set.samples.push_back({r.schedule->soc_kwh[t] / cap, r.trace->demand_kw[t],
                                   r.trace->pv_kw[t], r.tariff->buy_at(t),
                                   r.schedule->soc_kwh[t + 1] / cap});
        }
    }
    return set;
}

double PolicyNet::predict(double soc_prev_norm, double demand_kw, double pv_kw,
                          double price) const {
    const double x0 = soc_prev_norm;
    const double x1 = demand_kw / scaling.demand_scale;
    const double x2 = pv_kw / scaling.pv_scale;
    const double x3 = price / scaling.price_scale;
    double out = b2;
    for (int h = 0; h < hidden(); ++h) {
        const double pre = w1(h, 0) * x0 + w1(h, 1) * x1 + w1(h, 2) * x2 + w1(h, 3) * x3 + b1(h);
        out += w2(h) * softsign(pre);
    }
    return squash01(out);
}

TrainResult train_policy(const TrainingSet& data, const TrainOptions& options) {
    if (data.samples.size() < 1000)
        throw InvalidInputError("train_policy: need at least 1000 samples");
    const int hidden = options.hidden_units;
    if (hidden < 1) throw InvalidInputError("train_policy: hidden_units must be positive");

    Rng rng(options.seed);

    // Deterministic subsample + holdout split.
    std::vector<std::size_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
    const std::size_t used = std::min(order.size(), options.max_samples);
    const auto holdout_n = static_cast<std::size_t>(options.holdout_fraction * used);
    const std::size_t train_n = used - holdout_n;
    if (train_n == 0) throw InvalidInputError("train_policy: empty training split");

    auto fill = [&](std::size_t begin, std::size_t count, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
        x.resize(static_cast<Eigen::Index>(count), 4);
        y.resize(static_cast<Eigen::Index>(count));
        for (std::size_t i = 0; i < count; ++i) {
            const TrainingSample& s = data.samples[order[begin + i]];
            const auto r = static_cast<Eigen::Index>(i);
            x(r, 0) = s.soc_prev_norm;
            x(r, 1) = s.demand_kw / data.scaling.demand_scale;
            x(r, 2) = s.pv_kw / data.scaling.pv_scale;
            x(r, 3) = s.price / data.scaling.price_scale;
            y(r) = s.target_soc_norm;
        }
    };
    Eigen::MatrixXd x_train, x_hold;
    Eigen::VectorXd y_train, y_hold;
    fill(0, train_n, x_train, y_train);
    fill(train_n, holdout_n, x_hold, y_hold);

    PolicyNet net;
    net.scaling = data.scaling;
    net.w1.resize(hidden, 4);
    net.b1.resize(hidden);
    net.w2.resize(hidden);
    const double w2_range = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int h = 0; h < hidden; ++h) {
        for (int c = 0; c < 4; ++c) net.w1(h, c) = rng.uniform(-1.0, 1.0);
        net.b1(h) = rng.uniform(-0.5, 0.5);
        net.w2(h) = rng.uniform(-w2_range, w2_range);
    }
    net.b2 = 0.5;  // keeps the clamped output alive at initialization

    const auto n = static_cast<double>(train_n);
    Eigen::MatrixXd pre, act;
    Eigen::VectorXd out_pre, pred;

    auto forward = [&](const PolicyNet& p, const Eigen::MatrixXd& x) -> Eigen::VectorXd {
        Eigen::MatrixXd h_pre = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
        Eigen::MatrixXd h = h_pre.unaryExpr([](double z) { return softsign(z); });
        Eigen::VectorXd o = (h * p.w2).array() + p.b2;
        return o.unaryExpr([](double z) { return squash01(z); });
    };
    auto mse = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return (a - b).squaredNorm() / static_cast<double>(a.size());
    };

    double step = options.initial_step;
    double loss = mse(forward(net, x_train), y_train);
    TrainResult result;
    result.epoch_rmse.reserve(static_cast<std::size_t>(options.epochs));

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        // Forward with intermediates kept for the backward pass.
        pre = (x_train * net.w1.transpose()).rowwise() + net.b1.transpose();
        act = pre.unaryExpr([](double z) { return softsign(z); });
        out_pre = (act * net.w2).array() + net.b2;
        pred = out_pre.unaryExpr([](double z) { return squash01(z); });

        Eigen::VectorXd delta_out =
            (2.0 / n) * (pred - y_train).array() *
            out_pre.unaryExpr([](double z) { return squash01_grad(z); }).array();
        Eigen::VectorXd grad_w2 = act.transpose() * delta_out;
        const double grad_b2 = delta_out.sum();
        Eigen::MatrixXd delta_h =
            (delta_out * net.w2.transpose()).array() *
            pre.unaryExpr([](double z) { return softsign_grad_from_pre(z); }).array();
        Eigen::MatrixXd grad_w1 = delta_h.transpose() * x_train;
        Eigen::VectorXd grad_b1 = delta_h.colwise().sum();

        PolicyNet trial = net;
        trial.w1 -= step * grad_w1;
        trial.b1 -= step * grad_b1;
        trial.w2 -= step * grad_w2;
        trial.b2 -= step * grad_b2;

        const double trial_loss = mse(forward(trial, x_train), y_train);
        if (!std::isfinite(trial_loss))
            throw NumericalError("train_policy: loss diverged at epoch " + std::to_string(epoch));
        if (trial_loss <= loss) {
            net = std::move(trial);
            loss = trial_loss;
            step = std::min(step * 1.05, options.initial_step * 8.0);
        } else {
            step *= 0.5;  // plateau: reject the step and halve
        }
        result.epoch_rmse.push_back(std::sqrt(loss));
    }

    result.train_rmse = std::sqrt(loss);
    result.holdout_rmse =
        holdout_n > 0 ? std::sqrt(mse(forward(net, x_hold), y_hold)) : result.train_rmse;
    result.net = std::move(net);
    return result;
}

DispatchSchedule infer_schedule(const PolicyNet& net, const NetLoadTrace& trace,
                                const BatterySpec& spec, const Tariff& tariff,
                                double initial_soc_kwh) {
    spec.validate();
    if (trace.size() == 0 || trace.size() % kStepsPerDay != 0)
        throw InvalidInputError("infer_schedule: trace length must be a multiple of 48");
    const double cap = spec.capacity_kwh;
    const double dt = kStepHours;
    const double eta = spec.charge_efficiency;

    // Flat single-precision copies, transposed so the hidden loop runs over
    // contiguous lanes; the rollout is the hot path of the whole MC sweep.
    const int hidden = net.hidden();
    std::vector<float> w_in(static_cast<std::size_t>(hidden) * 4), b1(hidden), w2(hidden);
    for (int h = 0; h < hidden; ++h) {
        for (int c = 0; c < 4; ++c)
            w_in[static_cast<std::size_t>(c) * hidden + h] = static_cast<float>(net.w1(h, c));
        b1[h] = static_cast<float>(net.b1(h));
        w2[h] = static_cast<float>(net.w2(h));
    }
    const float b2 = static_cast<float>(net.b2);
    const float inv_demand = static_cast<float>(1.0 / net.scaling.demand_scale);
    const float inv_pv = static_cast<float>(1.0 / net.scaling.pv_scale);
    std::array<float, kStepsPerDay> price_norm;
    for (int s = 0; s < kStepsPerDay; ++s)
        price_norm[s] = static_cast<float>(tariff.buy_price[s] / net.scaling.price_scale);
    const float* wa = w_in.data();
    const float* wb = w_in.data() + hidden;
    const float* wc = w_in.data() + 2 * hidden;
    const float* wd = w_in.data() + 3 * hidden;
    std::vector<float> pre(static_cast<std::size_t>(hidden));

    std::vector<double> battery_kw(trace.size());
    double soc = std::clamp(initial_soc_kwh, spec.soc_min_kwh, cap);
    const double initial = soc;
    for (std::size_t t = 0; t < trace.size(); ++t) {
        const float x0 = static_cast<float>(soc / cap);
        const float x1 = static_cast<float>(trace.demand_kw[t]) * inv_demand;
        const float x2 = static_cast<float>(trace.pv_kw[t]) * inv_pv;
        const float x3 = price_norm[t % kStepsPerDay];
        float* z = pre.data();
        for (int h = 0; h < hidden; ++h)
            z[h] = wa[h] * x0 + wb[h] * x1 + wc[h] * x2 + wd[h] * x3 + b1[h];
        float out = b2;
        for (int h = 0; h < hidden; ++h)
            out += w2[h] * (z[h] / (1.0f + std::abs(z[h])));
        const double soc_pred = cap * std::clamp(static_cast<double>(out), 0.0, 1.0);

        // Invert the SOC update to the implied power, clamp to the rate box,
        // then clamp the resulting SOC to the capacity window.
        const double delta = soc_pred - soc;
        double p = delta > 0.0 ? delta / (eta * dt) : delta * eta / dt;
        p = std::clamp(p, -spec.max_discharge_kw, spec.max_charge_kw);
        double soc_next = soc + dt * (eta * std::max(0.0, p) - std::max(0.0, -p) / eta);
        if (soc_next > cap) {
            p = (cap - soc) / (eta * dt);
            soc_next = soc + dt * eta * p;
        } else if (soc_next < spec.soc_min_kwh) {
            p = (spec.soc_min_kwh - soc) * eta / dt;
            soc_next = soc - dt * (-p) / eta;
        }
        battery_kw[t] = p;
        soc = soc_next;
    }
    return assemble_schedule(trace, spec, tariff, initial, battery_kw);
}

SpeedupReport benchmark_speedup(const std::vector<NetLoadTrace>& traces,
                                const std::vector<BatterySpec>& specs, const PolicyNet& net,
                                const Tariff& tariff, int dp_soc_levels) {
    if (traces.size() < 10)
        throw InvalidInputError("benchmark_speedup: need at least 10 customers");
    if (specs.size() != traces.size())
        throw InvalidInputError("benchmark_speedup: one BatterySpec per trace required");

    using clock = std::chrono::steady_clock;
    SpeedupReport report;
    DpOptions dp_opts{dp_soc_levels};
    for (std::size_t i = 0; i < traces.size(); ++i) {
        BenchmarkRow row;
        row.customer_id = "c" + std::to_string(i);

        const auto dp_start = clock::now();
        const DispatchSchedule dp = solve_year(traces[i], specs[i], tariff,
                                               specs[i].soc_min_kwh, dp_opts);
        row.dp_seconds = std::chrono::duration<double>(clock::now() - dp_start).count();
        row.dp_cost = dp.total_cost;

        const auto pfa_start = clock::now();
        const DispatchSchedule pfa =
            infer_schedule(net, traces[i], specs[i], tariff, specs[i].soc_min_kwh);
        row.pfa_seconds = std::chrono::duration<double>(clock::now() - pfa_start).count();
        row.pfa_cost = pfa.total_cost;

        report.dp_mean_seconds += row.dp_seconds;
        report.pfa_mean_seconds += row.pfa_seconds;
        report.rows.push_back(std::move(row));
    }
    report.dp_mean_seconds /= static_cast<double>(report.rows.size());
    report.pfa_mean_seconds /= static_cast<double>(report.rows.size());
    report.ratio = report.pfa_mean_seconds / report.dp_mean_seconds;
    return report;
}

}  // namespace lvmc
