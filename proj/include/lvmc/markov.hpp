#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "lvmc/timeseries.hpp"

namespace lvmc {

/// One layer of 48 per-slot transition matrices. A model has a single layer,
/// or eight (four seasons x weekday/weekend) when the corpus spans a year.
struct TransitionLayer {
    int season = 0;    // 0 = Dec-Feb, 1 = Mar-May, 2 = Jun-Aug, 3 = Sep-Nov
    int day_type = 0;  // 0 weekday, 1 weekend
    std::vector<Eigen::MatrixXd> matrices;   // 48 row-stochastic n x n matrices
    std::vector<double> initial_row_sums;    // pre-normalization counts, slot 0
};

enum class Layering { kAuto, kNone, kSeasonDayType };

struct MarkovOptions {
    Layering layering = Layering::kAuto;
    int start_weekday = 0;  // day-of-week of day 0 (0 = Monday); day 0 is Jan 1
    std::optional<double> bandwidth;  // fixed KDE bandwidth; default Silverman
};

struct TransitionMatrixSet {
    int n_states = 0;
    std::vector<double> state_edges;  // n_states + 1, monotonically increasing
    std::vector<TransitionLayer> layers;
    int start_weekday = 0;

    bool layered() const { return layers.size() > 1; }
    int state_of(double net_kw) const;
    double bin_low(int state) const { return state_edges[static_cast<std::size_t>(state)]; }
    double bin_high(int state) const { return state_edges[static_cast<std::size_t>(state) + 1]; }

    /// Which layer applies to a given day index (day 0 = January 1).
    std::size_t layer_for_day(int day) const;

    /// Row sums within 1e-9 of one, all entries strictly positive.
    void validate() const;
};

/// Season index (southern-hemisphere meteorological) for a day-of-year on a
/// 365-day calendar starting January 1.
int season_of_day(int day_of_year);

/// Silverman rule-of-thumb bandwidth over state indices weighted by counts,
/// floored at 0.5 state widths.
double silverman_bandwidth(std::span<const double> counts);

/// Spread a row of transition counts with a Gaussian kernel over state
/// indices (each source kernel normalized over the bounded state set) and
/// normalize; all-zero rows get the uniform distribution. The result is
/// strictly positive and sums to one.
std::vector<double> smooth_row(std::span<const double> counts,
                               std::optional<double> bandwidth = std::nullopt);

/// Fit per-slot transition matrices from the pooled net load of a cluster.
/// Bins are equal-width over the observed [min, max]. A zero observed range
/// raises DegenerateInputError (callers should refit with n_states = 1,
/// which this function accepts and handles as a one-state chain).
TransitionMatrixSet build_transition_matrices(const std::vector<CustomerProfile>& profiles,
                                              int n_states, const MarkovOptions& options = {});

/// Draw the walk's first state from the KDE-smoothed slot-0 occupancy.
int sample_initial_state(const TransitionMatrixSet& set, std::uint64_t seed);

/// Rule for splitting a synthetic net-load scalar back into demand and PV:
/// pv = max(0, -net) + fraction * capacity * clear-sky shape, demand = net + pv.
struct PvDecomposition {
    double pv_capacity_kw = 0.0;
    double self_consumed_fraction = 0.3;

    double shape(int slot_of_day) const;  // clear-sky bell, 0 outside 6am-6pm
};

/// Markov walk of days*48 steps; states map to net-load values uniformly
/// within their bin, then split into demand and PV by the decomposition
/// rule. Bit-reproducible under seed.
NetLoadTrace synthesize_trace(const TransitionMatrixSet& set, int days, std::uint64_t seed,
                              const PvDecomposition& decomposition = {},
                              int assigned_cluster = 0);

}  // namespace lvmc
