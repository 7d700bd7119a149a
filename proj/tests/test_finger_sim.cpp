#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "dash/calibration.hpp"
#include "dash/errors.hpp"
#include "dash/finger_sim.hpp"
#include "support.hpp"

using namespace dash;
using namespace dash::finger_sim;
using Catch::Approx;

namespace {

// Central-difference Jacobian of the simulator's motor map at an interior point.
Eigen::Matrix<double, 3, 4> numeric_jacobian(const FingerSimulator& sim, const JointAngles& q, double h = 1e-5) {
    Eigen::Matrix<double, 3, 4> jac;
    for (Joint j : kJoints) {
        JointAngles lo = q, hi = q;
        lo[j] -= h;
        hi[j] += h;
        const auto a = sim.motors_from_state(lo), b = sim.motors_from_state(hi);
        for (int k = 0; k < 3; ++k) jac(k, static_cast<int>(j)) = (b[k] - a[k]) / (2 * h);
    }
    return jac;
}

FingerGeometry uneven_geometry() {
    FingerGeometry g;
    g.mcp_fwd_arm.r0_mm = 6.0;
    g.pip_arm.r0_mm = 4.0;
    g.dip_arm.r0_mm = 3.0;
    g.side_moment_arm_mm = 4.5;
    g.pulley_radius_mm = 6.0;
    return g;
}

}  // namespace

TEST_CASE("implied weights match a finite-difference Jacobian", "[finger_sim][oracle]") {
    for (const auto& g : {FingerGeometry{}, uneven_geometry()}) {
        const FingerSimulator sim(g);
        const auto w = sim.implied_weights();
        const auto jac = numeric_jacobian(sim, {0.5, 0.5, 0.5, 0.5});
        CHECK(jac(0, 0) == Approx(w.w1).margin(1e-7));
        CHECK(jac(0, 1) == Approx(w.w3).margin(1e-7));
        CHECK(jac(1, 0) == Approx(w.w2).margin(1e-7));
        CHECK(jac(1, 1) == Approx(w.w4).margin(1e-7));
        CHECK(jac(2, 2) == Approx(w.w5 / 2).margin(1e-7));
        CHECK(jac(2, 3) == Approx(w.w6 / 2).margin(1e-7));
        CHECK(jac(0, 2) == Approx(0.0).margin(1e-9));
        CHECK(jac(2, 0) == Approx(0.0).margin(1e-9));
        const auto zero = sim.motors_from_state({});
        CHECK(zero == MotorTriple{});
        CHECK(w.b1 == 0.0);
        CHECK(w.b3 + w.b4 == 0.0);
    }
}

TEST_CASE("implied weights for the default geometry by hand", "[finger_sim]") {
    // arms 5 mm, pulley 5 mm; the curl tendon spans (100 + 90) deg and is widest
    const FingerSimulator sim(FingerGeometry{});
    const double widest = 5.0 * (190.0 * std::numbers::pi / 180.0);
    CHECK(sim.max_winding_angle_rad() == Approx(widest / 5.0).epsilon(1e-12));
    const auto w = sim.implied_weights();
    CHECK(w.w1 == Approx(60.0 / 190.0).epsilon(1e-12));
    CHECK(w.w4 == Approx(90.0 / 190.0).epsilon(1e-12));
    CHECK(w.w5 == Approx(200.0 / 190.0).epsilon(1e-12));
    CHECK(w.w6 == Approx(180.0 / 190.0).epsilon(1e-12));
}

TEST_CASE("generate then fit recovers the implied weights", "[finger_sim][oracle]") {
    for (const auto& g : {FingerGeometry{}, uneven_geometry()}) {
        const FingerSimulator sim(g);
        const auto ds = sim.generate_dataset({});
        REQUIRE(ds.count() == 1000);
        const auto report = calibration::fit(ds);
        const auto got = report.weights.gains(), want = sim.implied_weights().gains();
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-6);
        CHECK(std::abs(report.weights.b1) <= 1e-6);
        CHECK(std::abs(report.weights.b2) <= 1e-6);
        CHECK(std::abs(report.weights.b3 + report.weights.b4) <= 1e-6);
        for (double r : report.rmse) CHECK(r < 1e-9);
    }
}

TEST_CASE("default sweep lands on the sample budget", "[finger_sim]") {
    const FingerSimulator sim(FingerGeometry{});
    const auto shape = sim.grid_shape({});
    CHECK(shape[0] * shape[1] * shape[2] * shape[3] == 1000);

    SweepOptions coarse;
    coarse.increment_deg = 10.0;
    coarse.sample_budget = 0;
    const auto full = sim.grid_shape(coarse);
    CHECK(full == std::array<std::size_t, 4>{7, 10, 11, 10});
    CHECK(sim.generate_dataset(coarse).count() == 7700);
}

TEST_CASE("grid points sit on multiples of the increment", "[finger_sim][property]") {
    const JointLimits limits;
    const FingerSimulator sim(FingerGeometry{}, limits);
    SweepOptions opts;
    opts.increment_deg = 3.0;
    const auto ds = sim.generate_dataset(opts);
    for (const auto& s : ds.samples) {
        const auto raw = denormalize(s.joints, limits);
        for (Joint j : kJoints) {
            const double steps = (raw[j] - limits[j].raw_min) / 3.0;
            REQUIRE(std::abs(steps - std::round(steps)) < 1e-9);
        }
    }
}

TEST_CASE("sweep argument errors", "[finger_sim]") {
    const FingerSimulator sim(FingerGeometry{});
    SweepOptions opts;
    opts.increment_deg = -3.0;
    CHECK_THROWS_AS(sim.generate_dataset(opts), ConfigError);
    opts.increment_deg = 0.0;
    CHECK_THROWS_AS(sim.generate_dataset(opts), ConfigError);
    opts = {};
    opts.sample_budget = kSampleHardCap + 1;
    CHECK_THROWS_AS(sim.generate_dataset(opts), ConfigError);
    opts = {};
    opts.sample_budget = 0;  // full 3-degree grid is far above the cap
    CHECK_THROWS_AS(sim.generate_dataset(opts), ConfigError);
    opts = {};
    opts.noise_sigma = -0.1;
    CHECK_THROWS_AS(sim.generate_dataset(opts), ConfigError);
}

TEST_CASE("noise is seeded and bounded", "[finger_sim][property]") {
    const FingerSimulator sim(FingerGeometry{});
    SweepOptions opts;
    opts.noise_sigma = 0.01;
    opts.seed = 42;
    const auto a = sim.generate_dataset(opts), b = sim.generate_dataset(opts);
    opts.seed = 43;
    const auto c = sim.generate_dataset(opts);
    bool differs = false;
    for (std::size_t i = 0; i < a.count(); ++i) {
        REQUIRE(a.samples[i].motors == b.samples[i].motors);
        differs = differs || !(a.samples[i].motors == c.samples[i].motors);
        for (int k = 0; k < 3; ++k) {
            REQUIRE(a.samples[i].motors[k] >= 0.0);
            REQUIRE(a.samples[i].motors[k] <= 1.0);
        }
    }
    CHECK(differs);
}

TEST_CASE("random sweep draws exactly the budget", "[finger_sim]") {
    const FingerSimulator sim(FingerGeometry{});
    SweepOptions opts;
    opts.mode = SweepMode::Random;
    opts.sample_budget = 250;
    opts.seed = 3;
    const auto ds = sim.generate_dataset(opts);
    CHECK(ds.count() == 250);
    const auto report = calibration::fit(ds);
    CHECK(report.weights.w4 == Approx(sim.implied_weights().w4).margin(1e-9));
}

TEST_CASE("motor values stay in [0,1] over the joint range", "[finger_sim][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const FingerSimulator sim(uneven_geometry());
    for (int i = 0; i < 1000; ++i) {
        const auto m = sim.motors_from_state({u(rng), u(rng), u(rng), u(rng)});
        for (int k = 0; k < 3; ++k) {
            REQUIRE(m[k] >= 0.0);
            REQUIRE(m[k] <= 1.0);
        }
    }
    const auto top = sim.motors_from_state({1, 1, 1, 1});
    CHECK(std::max({top[0], top[1], top[2]}) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tendon excursion is monotone in each joint", "[finger_sim][property]") {
    FingerGeometry g;
    g.pip_arm = {4.0, 1.5};
    g.dip_arm = {3.0, -0.5};
    const FingerSimulator sim(g);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        JointAngles q{u(rng), u(rng), u(rng), u(rng)};
        const auto base = sim.excursion(q);
        q.pip = std::min(1.0, q.pip + 0.05);
        q.dip = std::min(1.0, q.dip + 0.05);
        q.mcp_fwd = std::min(1.0, q.mcp_fwd + 0.05);
        const auto more = sim.excursion(q);
        CHECK(more.e1_mm >= base.e1_mm);
        CHECK(more.e2_mm >= base.e2_mm);
    }
}

TEST_CASE("angle-dependent arms are not affine", "[finger_sim]") {
    FingerGeometry g;
    g.pip_arm = {4.0, 2.0};
    const FingerSimulator sim(g);
    CHECK_THROWS_AS(sim.implied_weights(), ConfigError);
    const auto report = calibration::fit(sim.generate_dataset({}));
    CHECK(report.rmse[2] > 1e-4);
    CHECK(report.rmse[0] < 1e-9);

    FingerGeometry negative;
    negative.pip_arm = {1.0, -2.0};  // arm reaches zero inside the PIP range
    CHECK_THROWS_AS(FingerSimulator(negative), ConfigError);
}

TEST_CASE("explicit winding angle rescales motors", "[finger_sim]") {
    const FingerSimulator derived(FingerGeometry{});
    FingerGeometry g;
    g.max_winding_angle_rad = derived.max_winding_angle_rad() * 2.0;
    const FingerSimulator wide(g);
    const auto a = derived.motors_from_state({0.4, 0.6, 0.2, 0.8});
    const auto b = wide.motors_from_state({0.4, 0.6, 0.2, 0.8});
    for (int k = 0; k < 3; ++k) CHECK(b[k] == Approx(a[k] / 2.0).epsilon(1e-12));

    g.max_winding_angle_rad = derived.max_winding_angle_rad() * 0.5;
    CHECK_THROWS_AS(FingerSimulator(g), ConfigError);
}

TEST_CASE("planar fingertip kinematics", "[finger_sim]") {
    const FingerGeometry g;
    const auto straight = fingertip_positions({}, g);
    CHECK(straight.points[0].x == 0.0);
    CHECK(straight.points[3].x == Approx(100.0));
    CHECK(straight.points[3].y == Approx(0.0).margin(1e-12));

    const auto bent = fingertip_positions({12.0, 90.0, 90.0, 90.0}, g);
    CHECK(bent.points[1].x == Approx(0.0).margin(1e-12));
    CHECK(bent.points[1].y == Approx(-45.0));
    CHECK(bent.points[2].x == Approx(-30.0));
    CHECK(bent.points[2].y == Approx(-45.0));
    CHECK(bent.points[3].x == Approx(-30.0).margin(1e-12));
    CHECK(bent.points[3].y == Approx(-20.0));
    CHECK(bent.splay_deg == 12.0);
}

TEST_CASE("link lengths are preserved in every pose", "[finger_sim][property]") {
    const FingerGeometry g = uneven_geometry();
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int i = 0; i < 500; ++i) {
        const auto pose = fingertip_positions({0.0, u(rng), u(rng), u(rng)}, g);
        for (std::size_t k = 0; k < 3; ++k) {
            const double dx = pose.points[k + 1].x - pose.points[k].x;
            const double dy = pose.points[k + 1].y - pose.points[k].y;
            REQUIRE(std::hypot(dx, dy) == Approx(g.link_lengths_mm[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("geometry JSON", "[finger_sim][io]") {
    FingerGeometry g = uneven_geometry();
    g.pip_arm.r1_mm_per_rad = 0.75;
    g.max_winding_angle_rad = 9.0;
    g.seed = 77;
    CHECK(parse_geometry(geometry_to_json(g)).pip_arm == g.pip_arm);
    CHECK(parse_geometry(geometry_to_json(g)).max_winding_angle_rad == g.max_winding_angle_rad);
    CHECK(parse_geometry(geometry_to_json(g)).seed == 77);

    const auto scalar = parse_geometry({{"moment_arms_mm", 7.0}});
    CHECK(scalar.mcp_fwd_arm.r0_mm == 7.0);
    CHECK(scalar.dip_arm.r0_mm == 7.0);
    const auto mixed = parse_geometry({{"moment_arms_mm", {4.0, {5.0, 1.0}, 3.0}}});
    CHECK(mixed.pip_arm == MomentArm{5.0, 1.0});

    CHECK_THROWS_AS(parse_geometry({{"tendons", 3}}), ConfigError);
    CHECK_THROWS_AS(parse_geometry({{"link_lengths_mm", {1, 2}}}), ConfigError);
    CHECK_THROWS_AS(parse_geometry({{"pulley_radius_mm", -1.0}}), ConfigError);
    CHECK_THROWS_AS(parse_geometry(nlohmann::json::array()), ConfigError);
}

TEST_CASE("bundled default geometry equals the built-in default", "[finger_sim][data]") {
    const auto g = load_geometry(test::data_path("default_geometry.json"));
    CHECK(geometry_to_json(g) == geometry_to_json(FingerGeometry{}));
}
