#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dasmr/core/rng.hpp"
#include "dasmr/kinematics.hpp"

using namespace dasmr::kinematics;
using dasmr::core::RngStream;

namespace {
const RobotParams kDefault{};
}

TEST_CASE("worked example at v=1, omega=0.5") {
    const ChassisTwist t{1.0, 0.5};
    const auto R = icr_radius(t);
    REQUIRE(R.has_value());
    CHECK(*R == Catch::Approx(2.0).margin(1e-15));

    // Frozen against a 30-digit independent evaluation of the closed forms.
    const auto ang = steering_angles(t, kDefault);
    CHECK_FALSE(ang.clamped);
    CHECK(ang.phi_l == Catch::Approx(0.16977827396833845).epsilon(1e-9));
    CHECK(ang.phi_r == Catch::Approx(0.13255153229667402).epsilon(1e-9));

    const auto radii = wheel_icr_radii(*R, kDefault);
    CHECK(radii.R_l == Catch::Approx(1.7755280904564704).epsilon(1e-9));
    CHECK(radii.R_r == Catch::Approx(2.2699118925632334).epsilon(1e-9));

    const auto spd = wheel_speeds(t, kDefault);
    CHECK(spd.omega_l == Catch::Approx(5.918426968188235).epsilon(1e-9));
    CHECK(spd.omega_r == Catch::Approx(7.566372975210778).epsilon(1e-9));

    // Commonly quoted four-to-six digit roundings of the same numbers.
    CHECK(ang.phi_l == Catch::Approx(0.169747).margin(2e-4));
    CHECK(ang.phi_r == Catch::Approx(0.132552).margin(2e-4));
    CHECK(radii.R_l == Catch::Approx(1.775528).margin(2e-4));
    CHECK(radii.R_r == Catch::Approx(2.269868).margin(2e-4));
    CHECK(spd.omega_l == Catch::Approx(5.918426).margin(2e-4));
    CHECK(spd.omega_r == Catch::Approx(7.566228).margin(2e-3));
}

TEST_CASE("straight-line branch") {
    const ChassisTwist t{0.7, 0.0};
    CHECK_FALSE(icr_radius(t).has_value());
    const auto ang = steering_angles(t, kDefault);
    CHECK(ang.phi_l == 0.0);
    CHECK(ang.phi_r == 0.0);
    CHECK_FALSE(ang.clamped);
    const auto spd = wheel_speeds(t, kDefault);
    CHECK(spd.omega_l == Catch::Approx(0.7 / 0.15).epsilon(1e-12));
    CHECK(spd.omega_r == spd.omega_l);
}

TEST_CASE("turn-in-place radii at R=0") {
    const auto radii = wheel_icr_radii(0.0, kDefault);
    CHECK(radii.R_l == Catch::Approx(0.39051248379533272).epsilon(1e-9));
    CHECK(radii.R_r == radii.R_l);
    CHECK(radii.R_l == Catch::Approx(0.390512).margin(2e-4));
}

TEST_CASE("steering clamp flag") {
    // R = 0.4 m is far below the minimum feasible radius.
    const ChassisTwist t{0.2, 0.5};
    const auto ang = steering_angles(t, kDefault);
    CHECK(ang.clamped);
    CHECK(std::abs(ang.phi_l) <= kDefault.phi_max + 1e-15);
    CHECK(std::abs(ang.phi_r) <= kDefault.phi_max + 1e-15);
}

TEST_CASE("minimum turn radius") {
    // W/2 + (L/2)/tan(phi_max) with the default geometry.
    CHECK(kDefault.min_turn_radius() ==
          Catch::Approx(0.25 + 0.3 / std::tan(0.6)).epsilon(1e-12));
    // The inner wheel exactly saturates at that radius.
    const double R = kDefault.min_turn_radius();
    const ChassisTwist t{R, 1.0};  // v chosen so v/omega = R
    const auto ang = steering_angles(t, kDefault);
    CHECK(ang.phi_l == Catch::Approx(kDefault.phi_max).epsilon(1e-12));
    CHECK_FALSE(ang.clamped);
}

TEST_CASE("mirror symmetry: negating omega swaps sides") {
    RngStream rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(0.05, 1.0);
        const double R = rng.uniform(kDefault.min_turn_radius(), 50.0);
        const ChassisTwist left{v, v / R};
        const ChassisTwist right{v, -v / R};
        const auto al = steering_angles(left, kDefault);
        const auto ar = steering_angles(right, kDefault);
        CHECK(al.phi_l == Catch::Approx(-ar.phi_r).margin(1e-15));
        CHECK(al.phi_r == Catch::Approx(-ar.phi_l).margin(1e-15));
        const auto sl = wheel_speeds(left, kDefault);
        const auto sr = wheel_speeds(right, kDefault);
        CHECK(sl.omega_l == Catch::Approx(sr.omega_r).margin(1e-12));
        CHECK(sl.omega_r == Catch::Approx(sr.omega_l).margin(1e-12));
        // Forward motion keeps both wheels spinning forward on either side.
        CHECK(sr.omega_l > 0.0);
        CHECK(sr.omega_r > 0.0);
    }
}

TEST_CASE("forward/inverse round-trip on random feasible twists") {
    RngStream rng(77);
    const WheelState prev{};
    int straight = 0;
    for (int i = 0; i < 10000; ++i) {
        ChassisTwist t;
        t.v = rng.uniform(-1.0, 1.0);
        if (rng.uniform() < 0.02) {
            t.omega_c = 0.0;
            ++straight;
        } else {
            // Sample a feasible signed radius, then omega from it.
            const double mag = rng.uniform(kDefault.min_turn_radius() * 1.001, 80.0);
            const double R = (rng.uniform() < 0.5) ? mag : -mag;
            t.omega_c = t.v / R;
        }
        const auto ws = wheel_state_from_twist(t, prev, 0.025, kDefault);
        if (t.v == 0.0 && t.omega_c == 0.0) continue;
        if (t.omega_c == 0.0) {
            const auto back = twist_from_wheel_state(ws, kDefault);
            CHECK(back.v == Catch::Approx(t.v).margin(1e-9));
            CHECK(back.omega_c == 0.0);
            continue;
        }
        const auto back = twist_from_wheel_state(ws, kDefault);
        CHECK(back.v == Catch::Approx(t.v).epsilon(1e-9).margin(1e-12));
        CHECK(back.omega_c == Catch::Approx(t.omega_c).epsilon(1e-9).margin(1e-12));
    }
    CHECK(straight > 100);
}

TEST_CASE("steering velocities by backward difference") {
    const ChassisTwist t{1.0, 0.5};
    const WheelState at_rest{};
    const auto ws = wheel_state_from_twist(t, at_rest, 0.025, kDefault);
    CHECK(ws.phi_dot_l == Catch::Approx(0.16977827396833845 / 0.025).epsilon(1e-9));
    CHECK(ws.phi_dot_r == Catch::Approx(0.13255153229667402 / 0.025).epsilon(1e-9));
    // A second step at the same twist has zero steering velocity.
    const auto ws2 = wheel_state_from_twist(t, ws, 0.025, kDefault);
    CHECK(ws2.phi_dot_l == 0.0);
    CHECK(ws2.phi_dot_r == 0.0);
    CHECK_THROWS_AS(wheel_state_from_twist(t, ws, 0.0, kDefault), std::invalid_argument);
}

TEST_CASE("inverse map rejects inconsistent wheel states") {
    const ChassisTwist t{1.0, 0.5};
    auto ws = wheel_state_from_twist(t, WheelState{}, 0.025, kDefault);
    ws.phi_r += 0.05;  // steering angles no longer share an ICR
    CHECK_THROWS_AS(twist_from_wheel_state(ws, kDefault), std::runtime_error);

    auto ws2 = wheel_state_from_twist(t, WheelState{}, 0.025, kDefault);
    ws2.omega_l *= 1.1;  // wheel speeds disagree on the yaw rate
    CHECK_THROWS_AS(twist_from_wheel_state(ws2, kDefault), std::runtime_error);

    WheelState straight{};
    straight.omega_l = 2.0;
    straight.omega_r = 2.5;
    CHECK_THROWS_AS(twist_from_wheel_state(straight, kDefault), std::runtime_error);
}

TEST_CASE("parameter validation") {
    RobotParams p = kDefault;
    p.track_W = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = kDefault;
    p.phi_max = 1.6;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = kDefault;
    p.twist_time_constant = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_NOTHROW(kDefault.validate());
}
