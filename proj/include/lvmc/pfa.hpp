#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lvmc/battery.hpp"

namespace lvmc {

/// One supervised sample: (previous SOC, demand, PV, price) -> next SOC.
/// SOC values are normalized by the owning customer's battery capacity.
struct TrainingSample {
    double soc_prev_norm;
    double demand_kw;
    double pv_kw;
    double price;
    double target_soc_norm;
};

/// Input scaling constants learned from the training corpus.
struct FeatureScaling {
    double demand_scale = 1.0;  // 99th percentile of corpus demand
    double pv_scale = 1.0;      // 99th percentile of corpus PV
    double price_scale = 1.0;   // peak buy price
};

struct TrainingSet {
    std::vector<TrainingSample> samples;
    FeatureScaling scaling;
};

/// A solved scheduling instance used as training material.
struct DpResult {
    const NetLoadTrace* trace = nullptr;
    const DispatchSchedule* schedule = nullptr;
    const Tariff* tariff = nullptr;
    BatterySpec spec;
};

/// Flatten DP outputs into per-time-step samples; one per (customer, step).
TrainingSet build_training_set(const std::vector<DpResult>& dp_results);

/// Single-hidden-layer regressor mapping the four scheduling inputs to the
/// next normalized SOC. Hidden units use softsign, the output is squashed
/// through a logistic so predictions always land in (0, 1).
struct PolicyNet {
    Eigen::MatrixXd w1;  // hidden x 4
    Eigen::VectorXd b1;  // hidden
    Eigen::VectorXd w2;  // hidden
    double b2 = 0.0;
    FeatureScaling scaling;

    int hidden() const { return static_cast<int>(b1.size()); }

    /// Scalar forward pass; soc_prev_norm in [0,1], the rest in raw units.
    double predict(double soc_prev_norm, double demand_kw, double pv_kw, double price) const;
};

struct TrainOptions {
    int hidden_units = 32;
    int epochs = 400;
    double initial_step = 1.0;
    double holdout_fraction = 0.1;
    std::size_t max_samples = 200000;  // larger sets are subsampled
    std::uint64_t seed = 1;
};

struct TrainResult {
    PolicyNet net;
    double train_rmse = 0.0;
    double holdout_rmse = 0.0;
    std::vector<double> epoch_rmse;  // accepted full-batch RMSE per epoch
};

/// Full-batch gradient descent on MSE with step halving whenever a step
/// fails to improve the loss (the failed step is rolled back, so the
/// per-epoch loss sequence is non-increasing). Deterministic under seed.
TrainResult train_policy(const TrainingSet& data, const TrainOptions& options = {});

/// Closed-loop rollout of the net over a trace with per-step projection
/// onto the battery's feasible set (rate clamp first, then SOC clamp, SOC
/// recomputed from the clamped power). The emitted schedule satisfies every
/// battery constraint regardless of the net's parameters.
DispatchSchedule infer_schedule(const PolicyNet& net, const NetLoadTrace& trace,
                                const BatterySpec& spec, const Tariff& tariff,
                                double initial_soc_kwh);

// ---------------------------------------------------------------------------
// DP vs PFA benchmark
// ---------------------------------------------------------------------------

struct BenchmarkRow {
    std::string customer_id;
    double dp_cost = 0.0;
    double pfa_cost = 0.0;
    double dp_seconds = 0.0;
    double pfa_seconds = 0.0;
};

struct SpeedupReport {
    std::vector<BenchmarkRow> rows;
    double dp_mean_seconds = 0.0;
    double pfa_mean_seconds = 0.0;
    double ratio = 0.0;  // pfa_mean / dp_mean
};

/// Wall-clock comparison of DP year solves against PFA inference on the
/// same traces. Requires at least 10 customers.
SpeedupReport benchmark_speedup(const std::vector<NetLoadTrace>& traces,
                                const std::vector<BatterySpec>& specs, const PolicyNet& net,
                                const Tariff& tariff, int dp_soc_levels = 101);

}  // namespace lvmc
