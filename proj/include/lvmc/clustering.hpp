#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvmc/timeseries.hpp"

namespace lvmc {

struct ClusterDescriptor {
    std::vector<double> centroid;          // in original feature units
    std::vector<std::string> member_ids;
};

/// Result of MAP-DP clustering; `counts` is the concentration vector used
/// for the Dirichlet-categorical assignment of unobserved customers.
struct ClusterModel {
    std::vector<ClusterDescriptor> clusters;
    std::vector<double> counts;            // one per cluster, sums to |N|
    std::vector<int> assignments;          // per input profile, cluster index

    std::size_t size() const { return clusters.size(); }
    void validate(std::size_t n_profiles) const;
};

struct ClusterOptions {
    double concentration = 1.0;     // CRP concentration parameter
    double within_variance = 0.25;  // spherical component variance, standardized units
    double prior_variance = 1.0;    // variance of the base measure over centroids
    int restarts = 10;
    int max_iterations = 100;
    std::uint64_t seed = 1;
};

/// MAP-DP clustering of customer feature vectors. Features are standardized
/// per dimension; components are spherical Gaussians with a shared fixed
/// variance and a zero-mean Gaussian base measure; the number of clusters
/// emerges from a CRP prior (joining cluster k costs the component negative
/// log-likelihood minus log N_k, opening a new one costs the prior
/// predictive minus log concentration). Iterated conditional modes with
/// seeded restarts, best objective kept.
ClusterModel cluster_customers(const std::vector<CustomerProfile>& profiles,
                               const ClusterOptions& options = {});

/// Negative log-posterior objective used by MAP-DP (up to assignment-free
/// constants): sum of squared standardized distances to centroids over
/// 2*variance, minus K*log(concentration), minus sum of lgamma(count_k).
/// Exposed so tests can score alternative partitions with the same rule.
double map_dp_objective(const std::vector<std::vector<double>>& standardized_features,
                        const std::vector<int>& assignments, double concentration,
                        double within_variance);

/// Standardize features per dimension (zero mean, unit variance; constant
/// dimensions stay at zero).
std::vector<std::vector<double>> standardize_features(
    const std::vector<CustomerProfile>& profiles);

/// Draw one probability vector from Dirichlet(counts), then `m` categorical
/// cluster indices from it. Reproducible under seed.
std::vector<int> sample_cluster_assignments(const ClusterModel& model, std::size_t m,
                                            std::uint64_t seed);

}  // namespace lvmc
