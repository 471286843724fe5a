#include <nlohmann/json.hpp>

#include <cmath>

#include "doctest.h"
#include "lvmc/markov.hpp"
#include "lvmc/synthesis.hpp"

using namespace lvmc;

namespace {

// Independent kernel-sum oracle (truncation-corrected Gaussian kernels),
// including its own Silverman bandwidth.
std::vector<double> oracle_smooth(const std::vector<double>& counts, double bandwidth) {
    const std::size_t k = counts.size();
    auto kernel = [&](std::size_t j, std::size_t i) {
        const double z = (static_cast<double>(j) - static_cast<double>(i)) / bandwidth;
        return std::exp(-0.5 * z * z);
    };
    std::vector<double> out(k, 0.0);
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < k; ++i) {
            if (counts[i] <= 0.0) continue;
            double z_i = 0.0;
            for (std::size_t jj = 0; jj < k; ++jj) z_i += kernel(jj, i);
            out[j] += counts[i] * kernel(j, i) / z_i;
        }
        norm += out[j];
    }
    for (double& v : out) v /= norm;
    return out;
}

double oracle_silverman(const std::vector<double>& counts) {
    double n = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        n += counts[i];
        mean += counts[i] * static_cast<double>(i);
    }
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i)
        var += counts[i] * std::pow(static_cast<double>(i) - mean, 2);
    var /= n;
    auto quantile = [&](double q) {
        const double target = q * n;
        double cum = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] <= 0.0) continue;
            if (cum + counts[i] >= target)
                return static_cast<double>(i) - 0.5 + (target - cum) / counts[i];
            cum += counts[i];
        }
        return static_cast<double>(counts.size() - 1);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    return std::max(0.5, 0.9 * std::min(std::sqrt(var), iqr / 1.34) * std::pow(n, -0.2));
}

CustomerProfile alternating_profile(int days) {
    CustomerProfile p;
    p.id = "alt";
    const std::size_t len = static_cast<std::size_t>(days) * kStepsPerDay;
    p.demand_kw.resize(len);
    p.pv_kw.assign(len, 0.0);
    for (std::size_t t = 0; t < len; ++t) p.demand_kw[t] = t % 2 == 0 ? 0.0 : 1.0;
    return p;
}

TransitionMatrixSet two_state_sticky_chain(double stay) {
    TransitionMatrixSet set;
    set.n_states = 2;
    set.state_edges = {0.0, 0.5, 1.0};
    TransitionLayer layer;
    Eigen::MatrixXd m(2, 2);
    m << stay, 1.0 - stay, 1.0 - stay, stay;
    layer.matrices.assign(kStepsPerDay, m);
    layer.initial_row_sums = {1.0, 1.0};
    set.layers.push_back(std::move(layer));
    return set;
}

}  // namespace

TEST_CASE("smooth_row basics") {
    const std::vector<double> zeros(5, 0.0);
    CHECK(smooth_row(zeros) == std::vector<double>(5, 0.2));

    const auto peaked = smooth_row(std::vector<double>{0.0, 10.0, 0.0});
    CHECK(peaked[1] > peaked[0]);
    CHECK(peaked[0] == doctest::Approx(peaked[2]));
    double sum = 0.0;
    for (double v : peaked) {
        CHECK(v > 0.0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("smooth_row matches the independent kernel-sum oracle") {
    const std::vector<double> row{3.0, 0.0, 0.0, 7.0};
    const auto got = smooth_row(row);
    const auto expected = oracle_smooth(row, oracle_silverman(row));
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));

    // Explicit-bandwidth path, pinned at 0.5 state widths.
    const std::vector<double> counts{9.0, 1.0, 0.0};
    const auto got_fixed = smooth_row(counts, 0.5);
    const auto expected_fixed = oracle_smooth(counts, 0.5);
    for (std::size_t i = 0; i < got_fixed.size(); ++i)
        CHECK(std::abs(got_fixed[i] - expected_fixed[i]) < 1e-12);
}

TEST_CASE("silverman bandwidth floors at half a state width") {
    CHECK(silverman_bandwidth(std::vector<double>{0.0, 12.0, 0.0}) == 0.5);
    CHECK(silverman_bandwidth(std::vector<double>{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0}) > 0.5);
}

TEST_CASE("deterministic alternating profile dominates the smoothed rows") {
    const std::vector<CustomerProfile> corpus{alternating_profile(4)};
    const TransitionMatrixSet set = build_transition_matrices(corpus, 2);
    set.validate();
    CHECK(set.layers.size() == 1);
    CHECK(set.layers[0].matrices.size() == 48);

    // At even slots the chain sits in state 0 and must move to state 1;
    // smoothing leaks a little mass to the unobserved transition.
    const auto& even = set.layers[0].matrices[2];
    CHECK(even(0, 1) > 0.8);
    CHECK(even(0, 0) > 0.0);
    CHECK(even(0, 0) < 0.2);
    CHECK(even(0, 0) + even(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("state edges span the pooled net-load range") {
    CustomerProfile low;
    low.id = "low";
    low.demand_kw.assign(kStepsPerDay, 0.0);
    low.pv_kw.assign(kStepsPerDay, 0.0);
    for (int t = 0; t < kStepsPerDay; ++t) low.demand_kw[t] = 0.5 + 0.01 * t;
    CustomerProfile high = low;
    high.id = "high";
    for (int t = 0; t < kStepsPerDay; ++t) high.demand_kw[t] = 5.0 + 0.02 * t;

    const TransitionMatrixSet set = build_transition_matrices({low, high}, 10);
    CHECK(set.state_edges.front() == doctest::Approx(0.5));
    CHECK(set.state_edges.back() == doctest::Approx(5.0 + 0.02 * 47));
}

TEST_CASE("constant net load is degenerate unless refitted with one state") {
    CustomerProfile flat;
    flat.id = "flat";
    flat.demand_kw.assign(2 * kStepsPerDay, 1.5);
    flat.pv_kw.assign(2 * kStepsPerDay, 0.0);
    CHECK_THROWS_AS(build_transition_matrices({flat}, 8), DegenerateInputError);

    const TransitionMatrixSet one = build_transition_matrices({flat}, 1);
    const NetLoadTrace trace = synthesize_trace(one, 3, 11);
    for (std::size_t t = 0; t < trace.size(); ++t)
        CHECK(trace.net_kw(t) == doctest::Approx(1.5));  // single bin's midpoint
}

TEST_CASE("full-year corpora get season/day-type layers, short ones do not") {
    const std::vector<CustomerProfile> year{alternating_profile(365)};
    const TransitionMatrixSet layered = build_transition_matrices(year, 2);
    CHECK(layered.layers.size() == 8);
    int total_matrices = 0;
    for (const auto& layer : layered.layers)
        total_matrices += static_cast<int>(layer.matrices.size());
    CHECK(total_matrices == 384);
    layered.validate();

    const std::vector<CustomerProfile> week{alternating_profile(7)};
    CHECK(build_transition_matrices(week, 2).layers.size() == 1);
}

TEST_CASE("initial state sampling follows the smoothed slot-0 occupancy") {
    TransitionMatrixSet set = two_state_sticky_chain(0.9);
    set.n_states = 3;
    set.state_edges = {0.0, 1.0, 2.0, 3.0};
    Eigen::MatrixXd m(3, 3);
    m.setConstant(1.0 / 3.0);
    set.layers[0].matrices.assign(kStepsPerDay, m);

    SUBCASE("dominant mode wins most draws") {
        set.layers[0].initial_row_sums = {0.0, 0.0, 50.0};
        int hits = 0;
        for (int rep = 0; rep < 400; ++rep)
            hits += sample_initial_state(set, derive_seed(1, {static_cast<std::uint64_t>(rep)})) == 2;
        CHECK(hits > 200);
    }
    SUBCASE("uniform occupancy samples uniformly") {
        set.n_states = 4;
        set.state_edges = {0.0, 1.0, 2.0, 3.0, 4.0};
        Eigen::MatrixXd u(4, 4);
        u.setConstant(0.25);
        set.layers[0].matrices.assign(kStepsPerDay, u);
        set.layers[0].initial_row_sums = {10.0, 10.0, 10.0, 10.0};
        int counts[4] = {0, 0, 0, 0};
        for (int rep = 0; rep < 10000; ++rep)
            ++counts[sample_initial_state(set, derive_seed(2, {static_cast<std::uint64_t>(rep)}))];
        for (int c : counts)
            CHECK(std::abs(c / 10000.0 - 0.25) < 0.02);
    }
}

TEST_CASE("sticky chains give high lag-1 autocorrelation") {
    const TransitionMatrixSet set = two_state_sticky_chain(0.999);
    const NetLoadTrace trace = synthesize_trace(set, 365, 21);

    // State sequence recovered from the values (bins are [0,.5) and [.5,1]).
    std::vector<double> states(trace.size());
    for (std::size_t t = 0; t < trace.size(); ++t)
        states[t] = trace.net_kw(t) >= 0.5 ? 1.0 : 0.0;
    double mean = 0.0;
    for (double s : states) mean += s;
    mean /= static_cast<double>(states.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        den += (states[t] - mean) * (states[t] - mean);
        if (t + 1 < states.size()) num += (states[t] - mean) * (states[t + 1] - mean);
    }
    const double autocorr = num / den;
    // Analytic second eigenvalue of the symmetric two-state chain.
    const double lambda2 = 2.0 * 0.999 - 1.0;
    CHECK(autocorr > 0.9);
    CHECK(autocorr == doctest::Approx(lambda2).epsilon(0.05));
}

TEST_CASE("synthesized traces are bit-identical under the same seed") {
    const std::vector<CustomerProfile> corpus{alternating_profile(10)};
    const TransitionMatrixSet set = build_transition_matrices(corpus, 2);
    PvDecomposition decomposition;
    decomposition.pv_capacity_kw = 4.0;
    const NetLoadTrace a = synthesize_trace(set, 7, 99, decomposition);
    const NetLoadTrace b = synthesize_trace(set, 7, 99, decomposition);
    CHECK(a.demand_kw == b.demand_kw);
    CHECK(a.pv_kw == b.pv_kw);
    const NetLoadTrace c = synthesize_trace(set, 7, 100, decomposition);
    CHECK(a.demand_kw != c.demand_kw);
}

TEST_CASE("decomposition keeps both series nonnegative and consistent") {
    const std::vector<CustomerProfile> corpus{alternating_profile(10)};
    TransitionMatrixSet set = build_transition_matrices(corpus, 2);
    set.state_edges = {-3.0, 0.0, 3.0};  // force negative net-load draws
    PvDecomposition decomposition;
    decomposition.pv_capacity_kw = 5.0;
    const NetLoadTrace trace = synthesize_trace(set, 5, 13, decomposition);
    for (std::size_t t = 0; t < trace.size(); ++t) {
        CHECK(trace.demand_kw[t] >= 0.0);
        CHECK(trace.pv_kw[t] >= 0.0);
    }
}

TEST_CASE("pool synthesis honors the requested size and cluster features") {
    std::vector<CustomerProfile> corpus;
    for (int i = 0; i < 4; ++i) {
        CustomerProfile p = alternating_profile(10);
        p.id = "c" + std::to_string(i);
        p.features = {1.0, 1.0, 4.0, 12.0};
        corpus.push_back(std::move(p));
    }
    SynthesisOptions options;
    options.n_states = 2;
    options.clustering.restarts = 2;
    const SynthesisModel model = fit_synthesis_model(corpus, options);
    const auto pool = synthesize_pool(model, 3000, 1, 5);
    CHECK(pool.size() == 3000);
    for (const auto& trace : pool)
        CHECK(trace.assigned_cluster < static_cast<int>(model.clusters.size()));
}

TEST_CASE("synthesis model json round trip") {
    std::vector<CustomerProfile> corpus;
    for (int i = 0; i < 3; ++i) {
        CustomerProfile p = alternating_profile(6);
        p.id = "c" + std::to_string(i);
        p.features = {1.0, 2.0, 3.0, 10.0};
        corpus.push_back(std::move(p));
    }
    SynthesisOptions options;
    options.n_states = 3;
    options.clustering.restarts = 2;
    const SynthesisModel model = fit_synthesis_model(corpus, options);
    const SynthesisModel back = synthesis_model_from_json(synthesis_model_to_json(model));
    CHECK(back.clusters.counts == model.clusters.counts);
    CHECK(back.chains.size() == model.chains.size());
    CHECK(back.chains[0].state_edges == model.chains[0].state_edges);
    CHECK(back.chains[0].layers[0].matrices[5] == model.chains[0].layers[0].matrices[5]);

    // Same seed, same model -> same traces, whether fitted or reloaded.
    const NetLoadTrace a = synthesize_trace(model.chains[0], 2, 42);
    const NetLoadTrace b = synthesize_trace(back.chains[0], 2, 42);
    CHECK(a.demand_kw == b.demand_kw);
}
