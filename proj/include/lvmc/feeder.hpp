#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "lvmc/common.hpp"

namespace lvmc {

using Complex = std::complex<double>;
using Phasor3 = std::array<Complex, 3>;

struct TransformerSpec {
    double rating_kva = 750.0;
    Complex z_ohm{0.00167, 0.00837};  // per-phase series impedance, secondary side
};

struct FeederLine {
    int from = 0;
    int to = 0;
    double length_m = 0.0;
    double ampacity_a = 0.0;
    Eigen::Matrix3cd z_ohm;  // total phase-impedance matrix for the segment
};

struct LoadPoint {
    std::string customer_id;
    int bus = 0;
    int phase = 0;  // 0 = a, 1 = b, 2 = c
};

/// Radial three-phase LV feeder. Bus 0 is the feeder head (transformer
/// secondary); lines are directed away from it and must form a tree.
struct FeederModel {
    std::string name;
    double v_base_ln_v = 230.0;
    double source_pu = 1.0;
    double head_ampacity_a = 400.0;
    TransformerSpec transformer;
    std::vector<std::string> bus_ids;
    std::vector<FeederLine> lines;
    std::vector<LoadPoint> loads;

    std::size_t bus_count() const { return bus_ids.size(); }
    double total_length_m() const;

    /// Checks the tree property, load references and impedance signs;
    /// throws InvalidInputError on violation.
    void validate() const;

    /// Line indices ordered so every parent precedes its children.
    std::vector<int> topological_line_order() const;
};

/// Eliminate the neutral conductor of a 4x4 primitive impedance matrix
/// (bonded-neutral assumption): Zabc = Zpp - Zpn Znn^-1 Znp.
Eigen::Matrix3cd kron_reduce(const Eigen::Matrix4cd& z4);

/// Capacity scaling (UK -> Australian-type): transformer impedance and line
/// resistances divided by the factor, reactances kept, ampacities and the
/// transformer rating multiplied by it.
FeederModel scale_feeder(const FeederModel& feeder, double capacity_factor);

nlohmann::json feeder_to_json(const FeederModel& feeder);
FeederModel feeder_from_json(const nlohmann::json& j);

/// Macro-parameters for a generated test feeder.
struct FixtureParams {
    std::string name = "fixture";
    double total_length_m = 5656.0;
    int customers = 223;
    double head_ampacity_a = 400.0;
    double transformer_kva = 750.0;
    int branches = 3;            // parallel mains leaving the head
    double service_length_m = 15.0;
};

/// Build a radial feeder with the requested totals: customers spread
/// uniformly along the mains (two per pole, round-robin phases), span
/// lengths jittered by the seed but summing exactly to the requested total.
FeederModel generate_fixture_feeder(const FixtureParams& params, std::uint64_t seed);

/// The three shipped test feeders: "uk" (Table-style base), and "aus1" /
/// "aus2", which are base feeders capacity-scaled by three.
FeederModel fixture_feeder(const std::string& id, std::uint64_t seed = 1);

}  // namespace lvmc
