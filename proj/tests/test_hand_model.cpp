#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "dash/errors.hpp"
#include "dash/hand_model.hpp"
#include "support.hpp"

using namespace dash;
using Catch::Approx;

TEST_CASE("reference weight columns match the reference table", "[hand_model]") {
    struct Row {
        const char* v;
        std::array<double, 6> w;
        std::array<double, 4> b;
    };
    const Row rows[] = {
        {"v1", {-1.05, 0.01, 0.1, 0.83, 0.67, 0.99}, {0.47, -0.07, 0.03, -0.01}},
        {"v2", {-0.43, 0.2, 0.51, 0.54, 0.6, 0.76}, {0.38, 0.01, -0.04, -0.16}},
        {"v3", {-0.43, 0.2, 0.51, 0.54, 0.6, 0.76}, {0.38, 0.01, -0.04, -0.16}},
        {"v4", {-0.59, -0.12, 0.26, 0.38, 0.62, 1.69}, {0.45, 0.44, -0.05, -0.3}},
        {"v5", {-0.59, -0.19, -0.32, 0.72, 0.63, 0.65}, {0.58, -0.03, -0.09, -0.07}},
    };
    for (const auto& r : rows) {
        const auto w = reference_weights(r.v);
        CHECK(w.gains() == r.w);
        CHECK(w.biases() == r.b);
    }
    CHECK(reference_weights("v2") == reference_weights("v3"));
    CHECK_THROWS_AS(reference_weights("allegro"), ValidationError);
}

TEST_CASE("MCP determinants are well away from singular", "[hand_model]") {
    CHECK(reference_weights("v1").mcp_determinant() == Approx(-0.8725).margin(1e-12));
    CHECK(reference_weights("v2").mcp_determinant() == Approx(-0.3342).margin(1e-12));
    CHECK(reference_weights("v4").mcp_determinant() == Approx(-0.1930).margin(1e-12));
    CHECK(reference_weights("v5").mcp_determinant() == Approx(-0.4856).margin(1e-12));
    for (const char* v : test::kVersions) {
        CHECK(std::abs(reference_weights(v).mcp_determinant()) > 0.1);
        CHECK(reference_weights(v).mcp_invertible());
    }
    CalibrationWeights singular;
    singular.w1 = 1.0;
    singular.w3 = 2.0;
    singular.w2 = 0.5;
    singular.w4 = 1.0;
    CHECK_FALSE(singular.mcp_invertible());
}

TEST_CASE("design parameters match the reference table", "[hand_model]") {
    const auto v1 = reference_design("v1");
    CHECK(v1.palm_width_mm == 94);
    CHECK(v1.palm_length_mm == 102);
    CHECK(v1.finger_length_mm == 90);
    CHECK(v1.finger_strength_n == 37.8);
    const auto v3 = reference_design("v3");
    CHECK(v3.thumb_angle_deg == 0.0);
    CHECK(v3.fingertip_edge_mm == 1.73);
    CHECK(v3.fingertip_thickness_mm == 7.98);
    CHECK(reference_design("v4").mcp_diameter_mm == 10);
    CHECK(reference_design("v4").thumb_angle_deg == 22.5);
    CHECK(reference_design("v5").dip_crease_width_mm == 13.0);
    CHECK(reference_design("v5").finger_strength_n == 27.4);
    for (const char* v : test::kVersions) CHECK_NOTHROW(reference_design(v).validate());
}

TEST_CASE("known hands list the five iterations and the rigid baseline", "[hand_model]") {
    const auto hands = reference_hands();
    REQUIRE(hands.size() == 6);
    CHECK(hands.back().name == "allegro");
    CHECK(hands.back().is_baseline());
    for (std::size_t i = 0; i < 5; ++i) CHECK_FALSE(hands[i].is_baseline());
    CHECK(is_known_hand("v3"));
    CHECK_FALSE(is_known_hand("v6"));
}

TEST_CASE("finger and joint names round-trip", "[hand_model]") {
    for (FingerId f : kFingers) CHECK(parse_finger(to_string(f)) == f);
    CHECK_THROWS_AS(parse_finger("pinky"), ValidationError);
    CHECK(to_string(Joint::McpSide) == "mcp_side");
}

TEST_CASE("normalize maps the range onto [0,1] and clamps", "[hand_model]") {
    const JointRange r{-30.0, 30.0};
    CHECK(normalize(-30.0, r) == 0.0);
    CHECK(normalize(0.0, r) == 0.5);
    CHECK(normalize(30.0, r) == 1.0);
    CHECK(normalize(-90.0, r) == 0.0);
    CHECK(normalize(45.0, r) == 1.0);
    CHECK_THROWS_AS(normalize(std::nan(""), r), RangeError);
    CHECK_THROWS_AS(normalize(std::numeric_limits<double>::infinity(), r), RangeError);
    CHECK(denormalize(0.25, r) == -15.0);
    CHECK_THROWS_AS(denormalize(1.5, r), RangeError);
    CHECK_THROWS_AS(denormalize(-0.1, r), RangeError);
}

TEST_CASE("normalize and denormalize are inverse inside the range", "[hand_model][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const JointLimits limits;
    for (int i = 0; i < 1000; ++i) {
        const JointAngles x{u(rng), u(rng), u(rng), u(rng)};
        const auto back = normalize(denormalize(x, limits), limits);
        for (Joint j : kJoints) CHECK(back[j] == Approx(x[j]).margin(1e-12));
    }
}

TEST_CASE("clamp01 is idempotent and bounded", "[hand_model][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        const double c = clamp01(x);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
        CHECK(clamp01(c) == c);
        if (x >= 0.0 && x <= 1.0) CHECK(c == x);
    }
}

TEST_CASE("joint limits validate ordering", "[hand_model]") {
    JointLimits bad;
    bad.pip = {50.0, 10.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.pip = {10.0, 10.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    const JointLimits good;
    CHECK(parse_joint_limits(joint_limits_to_json(good)) == good);
    CHECK_THROWS_AS(parse_joint_limits(nlohmann::json{{"elbow", {0, 1}}}), ValidationError);
}

TEST_CASE("bundled weights file equals the built-in bundle", "[hand_model][data]") {
    const auto bundle = load_weights_bundle(test::data_path("weights.json"));
    CHECK(bundle == reference_weights_bundle());
    CHECK(bundle.size() == 5);
}

TEST_CASE("bundled design file equals the built-in parameters", "[hand_model][data]") {
    const auto designs = load_design_params(test::data_path("design_params.json"));
    REQUIRE(designs.size() == 5);
    for (const char* v : test::kVersions) CHECK(designs.at(v) == reference_design(v));
}

TEST_CASE("weights bundle parsing", "[hand_model]") {
    const auto base = weights_to_json("v9", reference_weights("v1"));

    SECTION("a base record applies to every finger") {
        const auto b = parse_weights_bundle(nlohmann::json::array({base}));
        CHECK(b.at("v9") == PerFinger<CalibrationWeights>::filled(reference_weights("v1")));
    }
    SECTION("a single object is accepted") {
        CHECK(parse_weights_bundle(base).count("v9") == 1);
    }
    SECTION("a finger record overrides one finger") {
        auto over = weights_to_json("v9", reference_weights("v5"));
        over["finger"] = "ring";
        const auto b = parse_weights_bundle(nlohmann::json::array({over, base}));
        CHECK(b.at("v9")[FingerId::Ring] == reference_weights("v5"));
        CHECK(b.at("v9")[FingerId::Thumb] == reference_weights("v1"));
    }
    SECTION("four finger records stand without a base record") {
        nlohmann::json doc = nlohmann::json::array();
        for (FingerId f : kFingers) {
            auto rec = weights_to_json("fit", reference_weights(f == FingerId::Index ? "v4" : "v2"));
            rec["finger"] = std::string(to_string(f));
            rec["rmse"] = {0.0, 0.0, 0.0};
            rec["n"] = 1000;
            doc.push_back(rec);
        }
        const auto b = parse_weights_bundle(doc);
        CHECK(b.at("fit")[FingerId::Index] == reference_weights("v4"));
        CHECK(b.at("fit")[FingerId::Middle] == reference_weights("v2"));
    }
    SECTION("a lone finger record without a base is rejected") {
        auto over = base;
        over["finger"] = "index";
        CHECK_THROWS_AS(parse_weights_bundle(nlohmann::json::array({over})), ValidationError);
    }
    SECTION("malformed records") {
        auto missing = base;
        missing.erase("b");
        CHECK_THROWS_AS(parse_weights_bundle(missing), ValidationError);
        auto extra = base;
        extra["gain"] = 1;
        CHECK_THROWS_AS(parse_weights_bundle(extra), ValidationError);
        auto short_w = base;
        short_w["w"] = {1, 2, 3};
        CHECK_THROWS_AS(parse_weights_bundle(short_w), ValidationError);
        CHECK_THROWS_AS(parse_weights_bundle(nlohmann::json::array({base, base})), ValidationError);
        auto bad_finger = base;
        bad_finger["finger"] = "pinky";
        CHECK_THROWS_AS(parse_weights_bundle(bad_finger), ValidationError);
    }
}

TEST_CASE("file errors are I/O or validation errors", "[hand_model]") {
    CHECK_THROWS_AS(read_json_file("/nonexistent/weights.json"), IoError);
    test::TempDir dir("hm");
    test::spit(dir.file("bad.json"), "{not json");
    CHECK_THROWS_AS(read_json_file(dir.file("bad.json")), ValidationError);
}
