#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tsagrid/tsa.hpp"

using namespace tsagrid;

namespace {

TimeStampedMeasurement frame(std::string id, double t) {
    TimeStampedMeasurement m;
    m.device_id = std::move(id);
    m.timestamp = t;
    m.values["V"] = Phasor::polar(25000.0, 0.1);
    m.values["I"] = Phasor::polar(120.0, -0.6);
    return m;
}

}  // namespace

TEST_CASE("time offset to phase error") {
    CHECK(phase_error_from_time_offset(0.0, 60.0) == 0.0);
    CHECK(std::abs(phase_error_from_time_offset(1.0 / 60.0, 60.0)) < 1e-15);
    CHECK(phase_error_from_time_offset(1.0 / 240.0, 60.0) == doctest::Approx(kPi / 2).epsilon(1e-14));
    CHECK(phase_error_from_time_offset(1.0 / 120.0, 60.0) == doctest::Approx(kPi));
    CHECK(phase_error_from_time_offset(-1.0 / 240.0, 50.0 * 1.2) == doctest::Approx(-kPi / 2));
    CHECK(oracle::error_code_of([] { phase_error_from_time_offset(0.1, 0.0); }) == "parameter");
    CHECK(oracle::error_code_of([] { phase_error_from_time_offset(0.1, -60.0); }) == "parameter");

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dt(-0.05, 0.05);
    std::uniform_int_distribution<int> k(-20, 20);
    for (int i = 0; i < 500; ++i) {
        const double t = dt(rng);
        const double a = phase_error_from_time_offset(t, 60.0);
        const double b = phase_error_from_time_offset(t + k(rng) / 60.0, 60.0);
        CHECK(a > -kPi);
        CHECK(a <= kPi);
        CHECK(std::abs(std::remainder(a - b, 2 * kPi)) < 1e-9);
    }
}

TEST_CASE("attack spec: timing error wins") {
    AttackSpec spec{"R", 1.0 / 240.0, 0.3};
    CHECK(spec.phase_error(60.0) == doctest::Approx(kPi / 2));
    spec.dt_seconds.reset();
    CHECK(spec.phase_error(60.0) == 0.3);
    spec.dtheta_radians = 4.0;
    CHECK(spec.phase_error(60.0) == doctest::Approx(4.0 - 2 * kPi));
    spec.dtheta_radians.reset();
    CHECK(spec.phase_error(60.0) == 0.0);
}

TEST_CASE("apply_attack rotates phasors") {
    const auto m = frame("S", 1.0);
    CHECK(apply_attack(m, 0.0).values == m.values);

    TimeStampedMeasurement unit;
    unit.values["V"] = Phasor::polar(1.0, 0.0);
    const auto flipped = apply_attack(unit, kPi);
    CHECK(flipped.values.at("V").angle == kPi);
    CHECK(std::abs(flipped.values.at("V").to_complex() - oracle::Cx(-1.0, 0.0)) < 1e-15);

    TimeStampedMeasurement big;
    big.values["V"] = Phasor::polar(25000.0, 0.0);
    const auto shifted = apply_attack(big, 0.7);
    CHECK(shifted.values.at("V").magnitude == 25000.0);
    CHECK(shifted.values.at("V").angle == 0.7);
    CHECK(shifted.timestamp == big.timestamp);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(-10.0, 10.0);
    for (int i = 0; i < 300; ++i) {
        const double a = ang(rng), b = ang(rng);
        const auto twice = apply_attack(apply_attack(m, a), b);
        const auto once = apply_attack(m, a + b);
        for (const auto& [name, p] : m.values) {
            CHECK(twice.values.at(name).magnitude == p.magnitude);
            CHECK(std::abs(std::remainder(twice.values.at(name).angle - once.values.at(name).angle, 2 * kPi)) <
                  1e-12);
        }
    }
}

TEST_CASE("shift_timestamp moves only the time") {
    const auto m = frame("S", 1.0);
    const auto s = shift_timestamp(m, 0.25);
    CHECK(s.timestamp == 1.25);
    CHECK(s.values == m.values);
}

TEST_CASE("time-stamp alignment") {
    SUBCASE("same instant: one group") {
        const std::vector<TimeStampedMeasurement> in{frame("R", 1.000), frame("S", 1.000)};
        const auto g = align(in, 0.0);
        REQUIRE(g.size() == 1);
        CHECK(g[0].device_ids() == std::vector<std::string>{"R", "S"});
        CHECK(g[0].find("S") != nullptr);
        CHECK(g[0].find("X") == nullptr);
    }
    SUBCASE("20 ms apart with 1 ms tolerance: two groups in time order") {
        const std::vector<TimeStampedMeasurement> in{frame("S", 1.020), frame("R", 1.000)};
        const auto g = align(in, 0.001);
        REQUIRE(g.size() == 2);
        CHECK(g[0].timestamp == 1.000);
        CHECK(g[0].device_ids() == std::vector<std::string>{"R"});
        CHECK(g[1].device_ids() == std::vector<std::string>{"S"});
    }
    SUBCASE("same device twice in a group") {
        const std::vector<TimeStampedMeasurement> in{frame("S", 1.000), frame("S", 1.000)};
        CHECK(oracle::error_code_of([&] { align(in, 0.0); }) == "alignment_conflict");
    }
    SUBCASE("a forged time stamp splits a frame") {
        const std::vector<TimeStampedMeasurement> in{frame("S", 2.0), shift_timestamp(frame("R", 2.0), 0.01)};
        CHECK(align(in, 0.001).size() == 2);
        CHECK(align(in, 0.02).size() == 1);
    }
    SUBCASE("bad tolerance") {
        const std::vector<TimeStampedMeasurement> in{frame("S", 2.0)};
        CHECK(oracle::error_code_of([&] { align(in, -1.0); }) == "parameter");
    }
}
