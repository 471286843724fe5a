#include "lvmc/feeder.hpp"

#include <nlohmann/json.hpp>
#include <queue>

namespace lvmc {

double FeederModel::total_length_m() const {
    double total = 0.0;
    for (const auto& line : lines) total += line.length_m;
    return total;
}

void FeederModel::validate() const {
    const auto n = static_cast<int>(bus_count());
    if (n == 0) throw InvalidInputError("FeederModel: no buses");
    if (lines.size() != bus_count() - 1)
        throw InvalidInputError("FeederModel: a radial feeder needs exactly buses-1 lines");

    std::vector<int> indegree(bus_count(), 0);
    for (const auto& line : lines) {
        if (line.from < 0 || line.from >= n || line.to < 0 || line.to >= n)
            throw InvalidInputError("FeederModel: line references unknown bus");
        ++indegree[static_cast<std::size_t>(line.to)];
        for (int r = 0; r < 3; ++r) {
            if (line.z_ohm(r, r).real() < 0.0)
                throw InvalidInputError("FeederModel: negative line resistance");
        }
    }
    if (indegree[0] != 0)
        throw InvalidInputError("FeederModel: bus 0 must be the root");
    for (std::size_t b = 1; b < bus_count(); ++b)
        if (indegree[b] != 1)
            throw InvalidInputError("FeederModel: bus " + bus_ids[b] +
                                    " must have exactly one feeding line (non-radial input)");
    // Reachability from the root completes the tree check.
    if (topological_line_order().size() != lines.size())
        throw InvalidInputError("FeederModel: network is not connected to the head");

    for (const auto& load : loads) {
        if (load.bus < 0 || load.bus >= n)
            throw InvalidInputError("FeederModel: load at unknown bus");
        if (load.phase < 0 || load.phase > 2)
            throw InvalidInputError("FeederModel: load phase must be 0..2");
    }
    if (!(v_base_ln_v > 0.0) || !(head_ampacity_a > 0.0))
        throw InvalidInputError("FeederModel: base voltage and head ampacity must be positive");
}

std::vector<int> FeederModel::topological_line_order() const {
    std::vector<std::vector<int>> lines_from(bus_count());
    for (std::size_t i = 0; i < lines.size(); ++i)
        lines_from[static_cast<std::size_t>(lines[i].from)].push_back(static_cast<int>(i));

    std::vector<int> order;
    order.reserve(lines.size());
    std::queue<int> frontier;
    frontier.push(0);
    while (!frontier.empty()) {
        const int bus = frontier.front();
        frontier.pop();
        for (int li : lines_from[static_cast<std::size_t>(bus)]) {
            order.push_back(li);
            frontier.push(lines[static_cast<std::size_t>(li)].to);
        }
    }
    return order;
}

Eigen::Matrix3cd kron_reduce(const Eigen::Matrix4cd& z4) {
    const Complex znn = z4(3, 3);
    if (std::abs(znn) < 1e-15)
        throw InvalidInputError("kron_reduce: neutral self-impedance is zero");
    Eigen::Matrix3cd zpp = z4.topLeftCorner<3, 3>();
    const Eigen::Vector3cd zpn = z4.topRightCorner<3, 1>();
    const Eigen::RowVector3cd znp = z4.bottomLeftCorner<1, 3>();
    return zpp - (zpn * znp) / znn;
}

FeederModel scale_feeder(const FeederModel& feeder, double capacity_factor) {
    if (!(capacity_factor > 0.0))
        throw InvalidInputError("scale_feeder: capacity factor must be positive");
    FeederModel out = feeder;
    out.transformer.z_ohm /= capacity_factor;
    out.transformer.rating_kva *= capacity_factor;
    out.head_ampacity_a *= capacity_factor;
    for (auto& line : out.lines) {
        line.ampacity_a *= capacity_factor;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                line.z_ohm(r, c) = Complex(line.z_ohm(r, c).real() / capacity_factor,
                                           line.z_ohm(r, c).imag());
    }
    return out;
}

namespace {

nlohmann::json z3_to_json(const Eigen::Matrix3cd& z) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 3; ++c) row.push_back({z(r, c).real(), z(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::Matrix3cd z3_from_json(const nlohmann::json& j) {
    Eigen::Matrix3cd z;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const auto& e = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c));
            z(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        }
    return z;
}

Eigen::Matrix4cd z4_from_json(const nlohmann::json& j) {
    Eigen::Matrix4cd z;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const auto& e = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c));
            z(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        }
    return z;
}

}  // namespace

nlohmann::json feeder_to_json(const FeederModel& feeder) {
    nlohmann::json j;
    j["name"] = feeder.name;
    j["v_base_ln_v"] = feeder.v_base_ln_v;
    j["source_pu"] = feeder.source_pu;
    j["head_ampacity_a"] = feeder.head_ampacity_a;
    j["transformer"] = {{"rating_kva", feeder.transformer.rating_kva},
                        {"z_ohm", {feeder.transformer.z_ohm.real(), feeder.transformer.z_ohm.imag()}}};
    j["buses"] = feeder.bus_ids;
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& line : feeder.lines)
        lines.push_back({{"from", line.from},
                         {"to", line.to},
                         {"length_m", line.length_m},
                         {"ampacity_a", line.ampacity_a},
                         {"z_ohm", z3_to_json(line.z_ohm)}});
    j["lines"] = std::move(lines);
    nlohmann::json loads = nlohmann::json::array();
    for (const auto& load : feeder.loads)
        loads.push_back({{"customer", load.customer_id}, {"bus", load.bus}, {"phase", load.phase}});
    j["loads"] = std::move(loads);
    return j;
}

FeederModel feeder_from_json(const nlohmann::json& j) {
    FeederModel f;
    f.name = j.value("name", "feeder");
    f.v_base_ln_v = j.value("v_base_ln_v", 230.0);
    f.source_pu = j.value("source_pu", 1.0);
    f.head_ampacity_a = j.at("head_ampacity_a").get<double>();
    const auto& tx = j.at("transformer");
    f.transformer.rating_kva = tx.at("rating_kva").get<double>();
    f.transformer.z_ohm = Complex(tx.at("z_ohm").at(0).get<double>(),
                                  tx.at("z_ohm").at(1).get<double>());
    f.bus_ids = j.at("buses").get<std::vector<std::string>>();
    for (const auto& lj : j.at("lines")) {
        FeederLine line;
        line.from = lj.at("from").get<int>();
        line.to = lj.at("to").get<int>();
        line.length_m = lj.value("length_m", 0.0);
        line.ampacity_a = lj.value("ampacity_a", 0.0);
        // Lines carry either a reduced 3x3 matrix or a 4x4 with explicit
        // neutral, in which case the neutral is Kron-eliminated on load.
        if (lj.contains("z4_ohm"))
            line.z_ohm = kron_reduce(z4_from_json(lj.at("z4_ohm")));
        else
            line.z_ohm = z3_from_json(lj.at("z_ohm"));
        f.lines.push_back(std::move(line));
    }
    for (const auto& dj : j.at("loads")) {
        LoadPoint load;
        load.customer_id = dj.at("customer").get<std::string>();
        load.bus = dj.at("bus").get<int>();
        load.phase = dj.at("phase").get<int>();
        f.loads.push_back(std::move(load));
    }
    f.validate();
    return f;
}

namespace {

/// Primitive 4x4 impedance per km for a four-wire segment: identical phase
/// and neutral conductors, purely reactive mutual coupling.
Eigen::Matrix4cd primitive_z4_per_km(double r_ohm_km, double x_self, double x_mutual) {
    Eigen::Matrix4cd z;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            z(r, c) = r == c ? Complex(r_ohm_km, x_self) : Complex(0.0, x_mutual);
    return z;
}

}  // namespace

FeederModel generate_fixture_feeder(const FixtureParams& params, std::uint64_t seed) {
    if (!(params.total_length_m > 0.0) || params.customers < 1 ||
        !(params.head_ampacity_a > 0.0))
        throw InvalidInputError("generate_fixture_feeder: positive totals required");

    FeederModel f;
    f.name = params.name;
    f.head_ampacity_a = params.head_ampacity_a;
    f.transformer.rating_kva = params.transformer_kva;
    // 4 % impedance at X/R = 5 on a 400 V base.
    const double z_base = 0.4 * 0.4 / (params.transformer_kva / 1000.0);
    const double z_mag = 0.04 * z_base;
    f.transformer.z_ohm = Complex(z_mag / std::sqrt(26.0), z_mag * 5.0 / std::sqrt(26.0));

    const Eigen::Matrix3cd mains_z_km = kron_reduce(primitive_z4_per_km(0.164, 0.35, 0.25));
    const Eigen::Matrix3cd service_z_km = kron_reduce(primitive_z4_per_km(0.868, 0.30, 0.22));

    const int per_pole = 2;
    const int n_poles = (params.customers + per_pole - 1) / per_pole;
    const int branches = std::max(1, std::min(params.branches, n_poles));
    const double services_total = params.customers * params.service_length_m;
    const double mains_total = params.total_length_m - services_total;
    if (mains_total <= 0.0) {
        // Too short for a pole-and-drop layout: hang every customer straight
        // off the head, splitting the length evenly.
        f.bus_ids.push_back("head");
        const double each = params.total_length_m / params.customers;
        for (int c = 0; c < params.customers; ++c) {
            const int bus = static_cast<int>(f.bus_count());
            f.bus_ids.push_back("c" + std::to_string(c));
            FeederLine service;
            service.from = 0;
            service.to = bus;
            service.length_m = each;
            service.ampacity_a = 100.0;
            service.z_ohm = service_z_km * (each / 1000.0);
            f.lines.push_back(std::move(service));
            f.loads.push_back({"c" + std::to_string(c), bus, c % 3});
        }
        f.validate();
        return f;
    }

    // Jittered span lengths, rescaled so the sum is exact.
    Rng rng(seed);
    std::vector<double> spans(static_cast<std::size_t>(n_poles));
    double raw = 0.0;
    for (double& s : spans) {
        s = rng.uniform(0.5, 1.5);
        raw += s;
    }
    for (double& s : spans) s *= mains_total / raw;

    f.bus_ids.push_back("head");
    std::vector<int> branch_tail(static_cast<std::size_t>(branches), 0);
    int customer = 0;
    for (int pole = 0; pole < n_poles; ++pole) {
        const int branch = pole % branches;
        const int bus = static_cast<int>(f.bus_count());
        f.bus_ids.push_back("p" + std::to_string(pole));

        FeederLine main_line;
        main_line.from = branch_tail[static_cast<std::size_t>(branch)];
        main_line.to = bus;
        main_line.length_m = spans[static_cast<std::size_t>(pole)];
        main_line.ampacity_a = params.head_ampacity_a / 2.0;
        main_line.z_ohm = mains_z_km * (main_line.length_m / 1000.0);
        f.lines.push_back(std::move(main_line));
        branch_tail[static_cast<std::size_t>(branch)] = bus;

        for (int s = 0; s < per_pole && customer < params.customers; ++s, ++customer) {
            const int service_bus = static_cast<int>(f.bus_count());
            f.bus_ids.push_back("c" + std::to_string(customer));
            FeederLine service;
            service.from = bus;
            service.to = service_bus;
            service.length_m = params.service_length_m;
            service.ampacity_a = 100.0;
            service.z_ohm = service_z_km * (params.service_length_m / 1000.0);
            f.lines.push_back(std::move(service));
            f.loads.push_back({"c" + std::to_string(customer), service_bus, customer % 3});
        }
    }
    f.validate();
    return f;
}

FeederModel fixture_feeder(const std::string& id, std::uint64_t seed) {
    FixtureParams params;
    if (id == "uk") {
        params.name = "uk";
        FeederModel f = generate_fixture_feeder(params, seed);
        return f;
    }
    if (id == "aus2") {
        params.name = "aus2";
        FeederModel f = scale_feeder(generate_fixture_feeder(params, seed), 3.0);
        f.name = "aus2";
        return f;
    }
    if (id == "aus1") {
        params.name = "aus1";
        params.total_length_m = 10235.0;
        params.customers = 302;
        params.head_ampacity_a = 385.0;
        FeederModel f = scale_feeder(generate_fixture_feeder(params, seed), 3.0);
        f.name = "aus1";
        return f;
    }
    throw InvalidInputError("fixture_feeder: unknown feeder id '" + id +
                            "' (expected aus1, aus2 or uk)");
}

}  // namespace lvmc
