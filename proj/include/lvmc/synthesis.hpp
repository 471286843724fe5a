#pragma once

#include <nlohmann/json_fwd.hpp>

#include "lvmc/clustering.hpp"
#include "lvmc/markov.hpp"

namespace lvmc {

/// Fitted statistical model of a customer corpus: the cluster structure plus
/// one transition-matrix set per cluster and the per-cluster PV capacity used
/// by the trace decomposition rule.
struct SynthesisModel {
    ClusterModel clusters;
    std::vector<TransitionMatrixSet> chains;       // one per cluster
    std::vector<double> pv_capacity_kw;            // one per cluster
    double self_consumed_fraction = 0.3;

    void validate() const;
};

struct SynthesisOptions {
    int n_states = 40;
    ClusterOptions clustering;
    MarkovOptions markov;
    double self_consumed_fraction = 0.3;
};

/// Cluster the corpus and fit a Markov chain per cluster. Clusters whose
/// pooled net load is constant are refitted as one-state chains.
SynthesisModel fit_synthesis_model(const std::vector<CustomerProfile>& profiles,
                                   const SynthesisOptions& options = {});

/// Synthesize a pool of `m` traces: Dirichlet-categorical cluster assignment
/// followed by per-trace Markov walks. Deterministic under seed; trace i
/// depends only on (seed, i) so pools can be generated in any chunking.
std::vector<NetLoadTrace> synthesize_pool(const SynthesisModel& model, std::size_t m, int days,
                                          std::uint64_t seed);

nlohmann::json synthesis_model_to_json(const SynthesisModel& model);
SynthesisModel synthesis_model_from_json(const nlohmann::json& j);

}  // namespace lvmc
