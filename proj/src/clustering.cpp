#include "lvmc/clustering.hpp"

#include <cmath>
#include <numeric>

namespace lvmc {

void ClusterModel::validate(std::size_t n_profiles) const {
    if (clusters.size() != counts.size())
        throw InvalidInputError("ClusterModel: clusters/counts size mismatch");
    double total = 0.0;
    for (double c : counts) {
        if (c < 1.0) throw InvalidInputError("ClusterModel: every count must be >= 1");
        total += c;
    }
    if (std::abs(total - static_cast<double>(n_profiles)) > 1e-9)
        throw InvalidInputError("ClusterModel: counts must sum to the number of profiles");
}

std::vector<std::vector<double>> standardize_features(
    const std::vector<CustomerProfile>& profiles) {
    const std::size_t n = profiles.size();
    const std::size_t dim = profiles.front().features.size();
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (const auto& p : profiles) {
        if (p.features.size() != dim)
            throw InvalidInputError("cluster_customers: feature dimensions differ");
        for (std::size_t d = 0; d < dim; ++d) {
            if (!std::isfinite(p.features[d]))
                throw InvalidInputError("cluster_customers: non-finite feature value");
            mean[d] += p.features[d];
        }
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (const auto& p : profiles)
        for (std::size_t d = 0; d < dim; ++d) {
            const double dev = p.features[d] - mean[d];
            var[d] += dev * dev;
        }
    for (double& v : var) v /= static_cast<double>(n);

    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d)
            out[i][d] = var[d] > 1e-12 ? (profiles[i].features[d] - mean[d]) / std::sqrt(var[d])
                                       : 0.0;
    return out;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

struct Partition {
    std::vector<int> labels;
    std::vector<std::vector<double>> centroids;
    std::vector<int> sizes;
};

void recompute_centroids(const std::vector<std::vector<double>>& x, Partition& part) {
    const std::size_t dim = x.front().size();
    const std::size_t k = part.centroids.size();
    for (auto& c : part.centroids) std::fill(c.begin(), c.end(), 0.0);
    std::fill(part.sizes.begin(), part.sizes.end(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& c = part.centroids[static_cast<std::size_t>(part.labels[i])];
        for (std::size_t d = 0; d < dim; ++d) c[d] += x[i][d];
        ++part.sizes[static_cast<std::size_t>(part.labels[i])];
    }
    for (std::size_t j = 0; j < k; ++j)
        if (part.sizes[j] > 0)
            for (double& v : part.centroids[j]) v /= part.sizes[j];
}

void drop_empty_clusters(Partition& part) {
    std::vector<int> remap(part.centroids.size(), -1);
    std::size_t kept = 0;
    for (std::size_t j = 0; j < part.centroids.size(); ++j) {
        if (part.sizes[j] > 0) {
            remap[j] = static_cast<int>(kept);
            part.centroids[kept] = part.centroids[j];
            part.sizes[kept] = part.sizes[j];
            ++kept;
        }
    }
    part.centroids.resize(kept);
    part.sizes.resize(kept);
    for (int& l : part.labels) l = remap[static_cast<std::size_t>(l)];
}

}  // namespace

double map_dp_objective(const std::vector<std::vector<double>>& x,
                        const std::vector<int>& assignments, double concentration,
                        double within_variance) {
    int k = 0;
    for (int a : assignments) k = std::max(k, a + 1);
    std::vector<std::vector<double>> centroids(static_cast<std::size_t>(k),
                                               std::vector<double>(x.front().size(), 0.0));
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& c = centroids[static_cast<std::size_t>(assignments[i])];
        for (std::size_t d = 0; d < x[i].size(); ++d) c[d] += x[i][d];
        ++sizes[static_cast<std::size_t>(assignments[i])];
    }
    for (int j = 0; j < k; ++j) {
        if (sizes[static_cast<std::size_t>(j)] == 0)
            throw InvalidInputError("map_dp_objective: empty cluster label");
        for (double& v : centroids[static_cast<std::size_t>(j)])
            v /= sizes[static_cast<std::size_t>(j)];
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sse += sq_dist(x[i], centroids[static_cast<std::size_t>(assignments[i])]);

    double crp = -static_cast<double>(k) * std::log(concentration);
    for (int j = 0; j < k; ++j) crp -= std::lgamma(static_cast<double>(sizes[j]));
    return sse / (2.0 * within_variance) + crp;
}

ClusterModel cluster_customers(const std::vector<CustomerProfile>& profiles,
                               const ClusterOptions& options) {
    if (profiles.size() < 2)
        throw InvalidInputError("cluster_customers: need at least 2 profiles");
    if (!(options.concentration > 0.0))
        throw InvalidInputError("cluster_customers: concentration must be positive");
    const auto x = standardize_features(profiles);
    const std::size_t n = x.size();
    const auto dim = static_cast<double>(x.front().size());
    const double two_var = 2.0 * options.within_variance;
    const double predictive_var = options.within_variance + options.prior_variance;
    // Negative log densities up to the shared 2*pi constant.
    const double join_base = 0.5 * dim * std::log(options.within_variance);
    const double new_base =
        0.5 * dim * std::log(predictive_var) - std::log(options.concentration);

    Rng rng(options.seed);
    Partition best;
    double best_objective = 1e300;

    for (int restart = 0; restart < options.restarts; ++restart) {
        // Start from a single cluster; visit order differs per restart.
        Partition part;
        part.labels.assign(n, 0);
        part.centroids.assign(1, std::vector<double>(x.front().size(), 0.0));
        part.sizes.assign(1, 0);
        recompute_centroids(x, part);

        std::vector<std::size_t> visit(n);
        std::iota(visit.begin(), visit.end(), 0);
        for (std::size_t i = 0; i + 1 < n; ++i)
            std::swap(visit[i], visit[i + rng.uniform_index(n - i)]);

        bool changed = true;
        for (int iter = 0; iter < options.max_iterations && changed; ++iter) {
            changed = false;
            for (std::size_t vi = 0; vi < n; ++vi) {
                const std::size_t i = visit[vi];
                const int current = part.labels[i];

                // Component predictives with point i removed from its
                // cluster; a new cluster is scored under the base measure.
                double self_sq = 0.0;
                for (double v : x[i]) self_sq += v * v;
                int best_label = -1;
                double best_cost = self_sq / (2.0 * predictive_var) + new_base;
                for (std::size_t j = 0; j < part.centroids.size(); ++j) {
                    int size_wo = part.sizes[j] - (current == static_cast<int>(j) ? 1 : 0);
                    if (size_wo <= 0) continue;
                    const double cost = sq_dist(x[i], part.centroids[j]) / two_var + join_base -
                                        std::log(static_cast<double>(size_wo));
                    if (cost < best_cost) {
                        best_cost = cost;
                        best_label = static_cast<int>(j);
                    }
                }
                int new_label = best_label;
                if (new_label < 0) {
                    new_label = static_cast<int>(part.centroids.size());
                    part.centroids.push_back(x[i]);
                    part.sizes.push_back(0);
                }
                if (new_label != current) {
                    part.labels[i] = new_label;
                    changed = true;
                }
            }
            recompute_centroids(x, part);
            drop_empty_clusters(part);
            recompute_centroids(x, part);
        }

        const double objective =
            map_dp_objective(x, part.labels, options.concentration, options.within_variance);
        if (objective < best_objective) {
            best_objective = objective;
            best = std::move(part);
        }
    }

    // Report centroids in original feature units.
    ClusterModel model;
    const std::size_t k = best.centroids.size();
    const std::size_t n_features = profiles.front().features.size();
    model.clusters.assign(k, {});
    model.counts.assign(k, 0.0);
    model.assignments = best.labels;
    std::vector<std::vector<double>> sums(k, std::vector<double>(n_features, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(best.labels[i]);
        model.clusters[j].member_ids.push_back(profiles[i].id);
        model.counts[j] += 1.0;
        for (std::size_t d = 0; d < n_features; ++d) sums[j][d] += profiles[i].features[d];
    }
    for (std::size_t j = 0; j < k; ++j) {
        model.clusters[j].centroid.resize(n_features);
        for (std::size_t d = 0; d < n_features; ++d)
            model.clusters[j].centroid[d] = sums[j][d] / model.counts[j];
    }
    model.validate(n);
    return model;
}

std::vector<int> sample_cluster_assignments(const ClusterModel& model, std::size_t m,
                                            std::uint64_t seed) {
    if (m == 0) throw InvalidInputError("sample_cluster_assignments: m must be >= 1");
    if (model.counts.empty())
        throw InvalidInputError("sample_cluster_assignments: empty cluster model");
    for (double c : model.counts)
        if (c < 1.0)
            throw InvalidInputError("sample_cluster_assignments: counts must be >= 1");

    Rng rng(seed);
    const std::vector<double> p = rng.dirichlet(model.counts);
    std::vector<int> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<int>(rng.categorical(p));
    return out;
}

}  // namespace lvmc
