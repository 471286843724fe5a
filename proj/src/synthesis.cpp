#include "lvmc/synthesis.hpp"

#include <nlohmann/json.hpp>

namespace lvmc {

void SynthesisModel::validate() const {
    if (chains.size() != clusters.size() || pv_capacity_kw.size() != clusters.size())
        throw InvalidInputError("SynthesisModel: per-cluster array sizes differ");
    for (const auto& chain : chains) chain.validate();
}

SynthesisModel fit_synthesis_model(const std::vector<CustomerProfile>& profiles,
                                   const SynthesisOptions& options) {
    SynthesisModel model;
    model.self_consumed_fraction = options.self_consumed_fraction;
    model.clusters = cluster_customers(profiles, options.clustering);

    const std::size_t k = model.clusters.size();
    model.chains.resize(k);
    model.pv_capacity_kw.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<CustomerProfile> members;
        for (std::size_t i = 0; i < profiles.size(); ++i)
            if (model.clusters.assignments[i] == static_cast<int>(j))
                members.push_back(profiles[i]);
        try {
            model.chains[j] = build_transition_matrices(members, options.n_states, options.markov);
        } catch (const DegenerateInputError&) {
            model.chains[j] = build_transition_matrices(members, 1, options.markov);
        }
        if (model.clusters.clusters[j].centroid.size() > kFeatPvCapacityKw)
            model.pv_capacity_kw[j] =
                std::max(0.0, model.clusters.clusters[j].centroid[kFeatPvCapacityKw]);
    }
    model.validate();
    return model;
}

std::vector<NetLoadTrace> synthesize_pool(const SynthesisModel& model, std::size_t m, int days,
                                          std::uint64_t seed) {
    if (m == 0) throw InvalidInputError("synthesize_pool: m must be >= 1");
    model.validate();
    const std::vector<int> assignments =
        sample_cluster_assignments(model.clusters, m, derive_seed(seed, {0x5a}));

    std::vector<NetLoadTrace> pool;
    pool.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto cluster = static_cast<std::size_t>(assignments[i]);
        PvDecomposition decomposition;
        decomposition.pv_capacity_kw = model.pv_capacity_kw[cluster];
        decomposition.self_consumed_fraction = model.self_consumed_fraction;
        pool.push_back(synthesize_trace(model.chains[cluster], days,
                                        derive_seed(seed, {0x7ace, i}), decomposition,
                                        static_cast<int>(cluster)));
    }
    return pool;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    return m;
}

}  // namespace

nlohmann::json synthesis_model_to_json(const SynthesisModel& model) {
    nlohmann::json j;
    j["self_consumed_fraction"] = model.self_consumed_fraction;
    j["counts"] = model.clusters.counts;
    j["pv_capacity_kw"] = model.pv_capacity_kw;

    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : model.clusters.clusters)
        clusters.push_back({{"centroid", c.centroid}, {"members", c.member_ids}});
    j["clusters"] = std::move(clusters);
    j["assignments"] = model.clusters.assignments;

    nlohmann::json chains = nlohmann::json::array();
    for (const auto& chain : model.chains) {
        nlohmann::json cj;
        cj["n_states"] = chain.n_states;
        cj["state_edges"] = chain.state_edges;
        cj["start_weekday"] = chain.start_weekday;
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& layer : chain.layers) {
            nlohmann::json lj;
            lj["season"] = layer.season;
            lj["day_type"] = layer.day_type;
            lj["initial_row_sums"] = layer.initial_row_sums;
            nlohmann::json mats = nlohmann::json::array();
            for (const auto& m : layer.matrices) mats.push_back(matrix_to_json(m));
            lj["matrices"] = std::move(mats);
            layers.push_back(std::move(lj));
        }
        cj["layers"] = std::move(layers);
        chains.push_back(std::move(cj));
    }
    j["chains"] = std::move(chains);
    return j;
}

SynthesisModel synthesis_model_from_json(const nlohmann::json& j) {
    SynthesisModel model;
    model.self_consumed_fraction = j.at("self_consumed_fraction").get<double>();
    model.clusters.counts = j.at("counts").get<std::vector<double>>();
    model.pv_capacity_kw = j.at("pv_capacity_kw").get<std::vector<double>>();
    for (const auto& cj : j.at("clusters")) {
        ClusterDescriptor c;
        c.centroid = cj.at("centroid").get<std::vector<double>>();
        c.member_ids = cj.at("members").get<std::vector<std::string>>();
        model.clusters.clusters.push_back(std::move(c));
    }
    if (j.contains("assignments"))
        model.clusters.assignments = j.at("assignments").get<std::vector<int>>();

    for (const auto& cj : j.at("chains")) {
        TransitionMatrixSet chain;
        chain.n_states = cj.at("n_states").get<int>();
        chain.state_edges = cj.at("state_edges").get<std::vector<double>>();
        chain.start_weekday = cj.value("start_weekday", 0);
        for (const auto& lj : cj.at("layers")) {
            TransitionLayer layer;
            layer.season = lj.at("season").get<int>();
            layer.day_type = lj.at("day_type").get<int>();
            layer.initial_row_sums = lj.at("initial_row_sums").get<std::vector<double>>();
            for (const auto& mj : lj.at("matrices")) layer.matrices.push_back(matrix_from_json(mj));
            chain.layers.push_back(std::move(layer));
        }
        model.chains.push_back(std::move(chain));
    }
    model.validate();
    return model;
}

}  // namespace lvmc
