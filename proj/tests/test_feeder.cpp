#include <nlohmann/json.hpp>

#include "doctest.h"
#include "lvmc/feeder.hpp"

using namespace lvmc;

TEST_CASE("kron reduction matches the block formula") {
    Eigen::Matrix4cd z4;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            z4(r, c) = r == c ? Complex(0.3, 0.35) : Complex(0.05, 0.2 + 0.01 * (r + c));
    const Eigen::Matrix3cd zred = kron_reduce(z4);

    // Independent element-wise computation.
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            const Complex expected = z4(r, c) - z4(r, 3) * z4(3, c) / z4(3, 3);
            CHECK(std::abs(zred(r, c) - expected) < 1e-15);
        }

    // The neutral return shows up as extra series resistance.
    CHECK(zred(0, 0).real() > z4(0, 0).real());
}

TEST_CASE("fixture feeders reproduce the published macro-parameters") {
    const FeederModel aus1 = fixture_feeder("aus1");
    CHECK(aus1.loads.size() == 302);
    CHECK(aus1.head_ampacity_a == doctest::Approx(1155.0));
    CHECK(aus1.total_length_m() == doctest::Approx(10235.0).epsilon(1e-9));

    const FeederModel aus2 = fixture_feeder("aus2");
    CHECK(aus2.loads.size() == 223);
    CHECK(aus2.head_ampacity_a == doctest::Approx(1200.0));
    CHECK(aus2.total_length_m() == doctest::Approx(5656.0).epsilon(1e-9));

    const FeederModel uk = fixture_feeder("uk");
    CHECK(uk.loads.size() == 223);
    CHECK(uk.head_ampacity_a == doctest::Approx(400.0));
    CHECK(uk.total_length_m() == doctest::Approx(5656.0).epsilon(1e-9));

    CHECK_THROWS_AS(fixture_feeder("nope"), InvalidInputError);
}

TEST_CASE("scaling triples capacity, divides resistance, keeps reactance") {
    const FeederModel uk = fixture_feeder("uk");
    const FeederModel scaled = scale_feeder(uk, 3.0);
    CHECK(scaled.head_ampacity_a == doctest::Approx(1200.0));
    CHECK(scaled.transformer.rating_kva == doctest::Approx(3.0 * uk.transformer.rating_kva));
    CHECK(scaled.transformer.z_ohm.real() ==
          doctest::Approx(uk.transformer.z_ohm.real() / 3.0));
    for (std::size_t li = 0; li < uk.lines.size(); ++li)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                CHECK(scaled.lines[li].z_ohm(r, c).real() ==
                      doctest::Approx(uk.lines[li].z_ohm(r, c).real() / 3.0));
                CHECK(scaled.lines[li].z_ohm(r, c).imag() ==
                      uk.lines[li].z_ohm(r, c).imag());
            }

    // Factor 1 is the identity.
    const FeederModel same = scale_feeder(uk, 1.0);
    CHECK(same.head_ampacity_a == uk.head_ampacity_a);
    CHECK(same.lines[0].z_ohm == uk.lines[0].z_ohm);
}

TEST_CASE("round-robin phases and seeded determinism") {
    const FeederModel a = fixture_feeder("uk", 5);
    const FeederModel b = fixture_feeder("uk", 5);
    const FeederModel c = fixture_feeder("uk", 6);
    CHECK(a.lines[0].length_m == b.lines[0].length_m);
    CHECK(a.lines[0].length_m != c.lines[0].length_m);
    for (std::size_t i = 0; i < a.loads.size(); ++i)
        CHECK(a.loads[i].phase == static_cast<int>(i % 3));
}

TEST_CASE("a one-customer ten-metre request gives a two-bus feeder") {
    FixtureParams params;
    params.customers = 1;
    params.total_length_m = 10.0;
    params.head_ampacity_a = 80.0;
    const FeederModel f = generate_fixture_feeder(params, 1);
    CHECK(f.bus_count() == 2);
    CHECK(f.lines.size() == 1);
    CHECK(f.total_length_m() == doctest::Approx(10.0));
}

TEST_CASE("feeder json round trip preserves the model") {
    const FeederModel f = fixture_feeder("aus2", 3);
    const FeederModel back = feeder_from_json(feeder_to_json(f));
    CHECK(back.bus_ids == f.bus_ids);
    CHECK(back.head_ampacity_a == f.head_ampacity_a);
    CHECK(back.loads.size() == f.loads.size());
    REQUIRE(back.lines.size() == f.lines.size());
    for (std::size_t li = 0; li < f.lines.size(); ++li)
        CHECK(back.lines[li].z_ohm == f.lines[li].z_ohm);
}

TEST_CASE("feeder json accepts 4x4 matrices and reduces them on load") {
    nlohmann::json j;
    j["name"] = "mini";
    j["head_ampacity_a"] = 100.0;
    j["transformer"] = {{"rating_kva", 100.0}, {"z_ohm", {0.001, 0.005}}};
    j["buses"] = {"head", "c0"};
    nlohmann::json z4 = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c)
            row.push_back({r == c ? 0.2 : 0.0, r == c ? 0.3 : 0.1});
        z4.push_back(row);
    }
    j["lines"] = {{{"from", 0}, {"to", 1}, {"length_m", 50.0}, {"ampacity_a", 80.0},
                   {"z4_ohm", z4}}};
    j["loads"] = {{{"customer", "c0"}, {"bus", 1}, {"phase", 0}}};

    const FeederModel f = feeder_from_json(j);
    Eigen::Matrix4cd z;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            z(r, c) = r == c ? Complex(0.2, 0.3) : Complex(0.0, 0.1);
    CHECK(std::abs(f.lines[0].z_ohm(0, 0) - kron_reduce(z)(0, 0)) < 1e-15);
}

TEST_CASE("validation rejects non-radial and dangling inputs") {
    FeederModel f = fixture_feeder("uk");
    SUBCASE("cycle") {
        f.lines[1].to = f.lines[0].to;  // two lines feeding one bus
        CHECK_THROWS_AS(f.validate(), InvalidInputError);
    }
    SUBCASE("unknown load bus") {
        f.loads[0].bus = static_cast<int>(f.bus_count()) + 5;
        CHECK_THROWS_AS(f.validate(), InvalidInputError);
    }
    SUBCASE("line count mismatch") {
        f.lines.pop_back();
        CHECK_THROWS_AS(f.validate(), InvalidInputError);
    }
}
