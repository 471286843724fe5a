#include "lvmc/markov.hpp"

#include <cmath>

namespace lvmc {

namespace {

constexpr int kMonthDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

int month_of_day(int day_of_year) {
    int d = day_of_year % 365;
    for (int m = 0; m < 12; ++m) {
        if (d < kMonthDays[m]) return m;
        d -= kMonthDays[m];
    }
    return 11;
}

}  // namespace

int season_of_day(int day_of_year) {
    const int m = month_of_day(day_of_year);
    if (m == 11 || m <= 1) return 0;  // Dec, Jan, Feb
    if (m <= 4) return 1;             // Mar-May
    if (m <= 7) return 2;             // Jun-Aug
    return 3;                         // Sep-Nov
}

int TransitionMatrixSet::state_of(double net_kw) const {
    if (n_states == 1) return 0;
    const double lo = state_edges.front();
    const double hi = state_edges.back();
    const double width = (hi - lo) / n_states;
    const int s = static_cast<int>(std::floor((net_kw - lo) / width));
    return std::clamp(s, 0, n_states - 1);
}

std::size_t TransitionMatrixSet::layer_for_day(int day) const {
    if (layers.size() <= 1) return 0;
    const int season = season_of_day(day);
    const int day_type = ((start_weekday + day) % 7 >= 5) ? 1 : 0;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (layers[i].season == season && layers[i].day_type == day_type) return i;
    return 0;
}

void TransitionMatrixSet::validate() const {
    if (n_states < 1 || state_edges.size() != static_cast<std::size_t>(n_states) + 1)
        throw InvalidInputError("TransitionMatrixSet: bad state edges");
    for (std::size_t i = 0; i + 1 < state_edges.size(); ++i)
        if (state_edges[i] > state_edges[i + 1])
            throw InvalidInputError("TransitionMatrixSet: edges must be nondecreasing");
    if (layers.empty()) throw InvalidInputError("TransitionMatrixSet: no layers");
    for (const auto& layer : layers) {
        if (layer.matrices.size() != kStepsPerDay)
            throw InvalidInputError("TransitionMatrixSet: expected 48 matrices per layer");
        for (const auto& m : layer.matrices) {
            if (m.rows() != n_states || m.cols() != n_states)
                throw InvalidInputError("TransitionMatrixSet: matrix shape mismatch");
            for (int r = 0; r < m.rows(); ++r) {
                double sum = 0.0;
                for (int c = 0; c < m.cols(); ++c) {
                    if (!(m(r, c) > 0.0))
                        throw InvalidInputError("TransitionMatrixSet: nonpositive entry");
                    sum += m(r, c);
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw InvalidInputError("TransitionMatrixSet: row does not sum to 1");
            }
        }
    }
}

double silverman_bandwidth(std::span<const double> counts) {
    const std::size_t k = counts.size();
    double n = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        n += counts[i];
        mean += counts[i] * static_cast<double>(i);
    }
    if (n <= 0.0) return 0.5;
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dev = static_cast<double>(i) - mean;
        var += counts[i] * dev * dev;
    }
    var /= n;
    const double sigma = std::sqrt(var);

    // Weighted quantile via the inverse ECDF with within-bin interpolation.
    auto quantile = [&](double q) {
        const double target = q * n;
        double cum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (counts[i] <= 0.0) continue;
            if (cum + counts[i] >= target)
                return static_cast<double>(i) - 0.5 + (target - cum) / counts[i];
            cum += counts[i];
        }
        return static_cast<double>(k - 1);
    };
    const double iqr = quantile(0.75) - quantile(0.25);

    const double spread = std::min(sigma, iqr / 1.34);
    const double h = 0.9 * spread * std::pow(n, -0.2);
    return std::max(h, 0.5);
}

std::vector<double> smooth_row(std::span<const double> counts, std::optional<double> bandwidth) {
    const std::size_t k = counts.size();
    if (k == 0) throw InvalidInputError("smooth_row: empty row");
    double total = 0.0;
    for (double c : counts) {
        if (!(c >= 0.0)) throw InvalidInputError("smooth_row: negative count");
        total += c;
    }
    std::vector<double> out(k);
    if (total <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(k));
        return out;
    }
    const double h = bandwidth.value_or(silverman_bandwidth(counts));
    // Truncation-corrected kernels: each source's kernel is normalized over
    // the state set, so boundary states are not drained toward the interior
    // and uniform counts smooth to the uniform distribution.
    std::vector<double> source_mass(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        if (counts[i] <= 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) {
            const double z = (static_cast<double>(j) - static_cast<double>(i)) / h;
            source_mass[i] += std::exp(-0.5 * z * z);
        }
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (counts[i] <= 0.0) continue;
            const double z = (static_cast<double>(j) - static_cast<double>(i)) / h;
            v += counts[i] * std::exp(-0.5 * z * z) / source_mass[i];
        }
        // Distant states underflow exp to zero; floor them so every
        // transition stays attainable.
        out[j] = std::max(v, 1e-100);
        norm += out[j];
    }
    for (double& v : out) v /= norm;
    return out;
}

TransitionMatrixSet build_transition_matrices(const std::vector<CustomerProfile>& profiles,
                                              int n_states, const MarkovOptions& options) {
    if (profiles.empty())
        throw InvalidInputError("build_transition_matrices: need at least one profile");
    if (n_states < 1)
        throw InvalidInputError("build_transition_matrices: n_states must be >= 1");

    double lo = 1e300, hi = -1e300;
    int min_days = 1 << 30;
    for (const auto& p : profiles) {
        validate_series(p.demand_kw, p.pv_kw, "profile " + p.id);
        min_days = std::min(min_days, p.days());
        for (std::size_t t = 0; t < p.demand_kw.size(); ++t) {
            const double net = p.demand_kw[t] - p.pv_kw[t];
            lo = std::min(lo, net);
            hi = std::max(hi, net);
        }
    }
    if (n_states >= 2 && hi - lo <= 0.0)
        throw DegenerateInputError(
            "build_transition_matrices: constant net load (zero range); "
            "refit with n_states = 1");

    TransitionMatrixSet set;
    set.n_states = n_states;
    set.start_weekday = options.start_weekday;
    set.state_edges.resize(static_cast<std::size_t>(n_states) + 1);
    for (int i = 0; i <= n_states; ++i)
        set.state_edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n_states;

    bool layered = options.layering == Layering::kSeasonDayType;
    if (options.layering == Layering::kAuto) layered = min_days >= 364;
    const std::size_t n_layers = layered ? 8 : 1;

    // Count observed transitions per (layer, slot).
    std::vector<std::vector<Eigen::MatrixXd>> counts(n_layers);
    for (auto& layer_counts : counts)
        layer_counts.assign(kStepsPerDay, Eigen::MatrixXd::Zero(n_states, n_states));

    for (const auto& p : profiles) {
        const std::size_t len = p.demand_kw.size();
        int prev_state = set.state_of(p.demand_kw[0] - p.pv_kw[0]);
        for (std::size_t i = 0; i + 1 < len; ++i) {
            const int slot = static_cast<int>(i % kStepsPerDay);
            const int day = static_cast<int>(i / kStepsPerDay);
            std::size_t layer = 0;
            if (layered) {
                const int season = season_of_day(day);
                const int day_type = ((options.start_weekday + day) % 7 >= 5) ? 1 : 0;
                layer = static_cast<std::size_t>(season * 2 + day_type);
            }
            const int next_state = set.state_of(p.demand_kw[i + 1] - p.pv_kw[i + 1]);
            counts[layer][static_cast<std::size_t>(slot)](prev_state, next_state) += 1.0;
            prev_state = next_state;
        }
    }

    set.layers.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        TransitionLayer& layer = set.layers[l];
        layer.season = layered ? static_cast<int>(l) / 2 : 0;
        layer.day_type = layered ? static_cast<int>(l) % 2 : 0;
        layer.matrices.assign(kStepsPerDay, Eigen::MatrixXd(n_states, n_states));
        layer.initial_row_sums.assign(static_cast<std::size_t>(n_states), 0.0);
        for (int s = 0; s < n_states; ++s)
            layer.initial_row_sums[static_cast<std::size_t>(s)] = counts[l][0].row(s).sum();
        for (int slot = 0; slot < kStepsPerDay; ++slot) {
            for (int s = 0; s < n_states; ++s) {
                std::vector<double> row(static_cast<std::size_t>(n_states));
                for (int c = 0; c < n_states; ++c)
                    row[static_cast<std::size_t>(c)] =
                        counts[l][static_cast<std::size_t>(slot)](s, c);
                const std::vector<double> smoothed = smooth_row(row, options.bandwidth);
                for (int c = 0; c < n_states; ++c)
                    layer.matrices[static_cast<std::size_t>(slot)](s, c) =
                        smoothed[static_cast<std::size_t>(c)];
            }
        }
    }
    return set;
}

int sample_initial_state(const TransitionMatrixSet& set, std::uint64_t seed) {
    const TransitionLayer& layer = set.layers[set.layer_for_day(0)];
    const std::vector<double> measure = smooth_row(layer.initial_row_sums);
    Rng rng(seed);
    return static_cast<int>(rng.categorical(measure));
}

double PvDecomposition::shape(int slot_of_day) const {
    const double hour = slot_of_day * kStepHours + 0.5 * kStepHours;
    if (hour < 6.0 || hour > 18.0) return 0.0;
    return std::sin(M_PI * (hour - 6.0) / 12.0);
}

NetLoadTrace synthesize_trace(const TransitionMatrixSet& set, int days, std::uint64_t seed,
                              const PvDecomposition& decomposition, int assigned_cluster) {
    if (days < 1) throw InvalidInputError("synthesize_trace: days must be >= 1");
    const std::size_t len = static_cast<std::size_t>(days) * kStepsPerDay;

    Rng rng(seed);
    NetLoadTrace trace;
    trace.assigned_cluster = assigned_cluster;
    trace.demand_kw.resize(len);
    trace.pv_kw.resize(len);

    const TransitionLayer& first = set.layers[set.layer_for_day(0)];
    int state = static_cast<int>(rng.categorical(smooth_row(first.initial_row_sums)));

    std::vector<double> row_buffer(static_cast<std::size_t>(set.n_states));
    for (std::size_t i = 0; i < len; ++i) {
        const double net = rng.uniform(set.bin_low(state), set.bin_high(state));
        const int slot = static_cast<int>(i % kStepsPerDay);
        const double pv = std::max(0.0, -net) + decomposition.self_consumed_fraction *
                                                    decomposition.pv_capacity_kw *
                                                    decomposition.shape(slot);
        trace.pv_kw[i] = pv;
        trace.demand_kw[i] = net + pv;

        if (i + 1 < len) {
            const int day = static_cast<int>(i / kStepsPerDay);
            const auto& matrix =
                set.layers[set.layer_for_day(day)].matrices[static_cast<std::size_t>(slot)];
            for (int c = 0; c < set.n_states; ++c)
                row_buffer[static_cast<std::size_t>(c)] = matrix(state, c);
            state = static_cast<int>(rng.categorical(row_buffer));
        }
    }
    return trace;
}

}  // namespace lvmc
