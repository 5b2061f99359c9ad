#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tsagrid/gps_timing.hpp"

using namespace tsagrid;

TEST_CASE("utc from receiver time") {
    CHECK(utc_from_receiver({100.0, 0.07, 0.0}) == 100.0 - 0.07);
    CHECK(utc_from_receiver({100.0, 0.07, 0.0}) == doctest::Approx(99.93).epsilon(1e-15));
    CHECK(utc_from_receiver({1234.5, 0.0, 0.0}) == 1234.5);
    // Extended-precision reference: 604799.9327999870
    CHECK(std::abs(utc_from_receiver({604800.0, 0.0672, 1.3e-8}) - 604799.9327999870) < 2e-10);
    CHECK(oracle::error_code_of([] { utc_from_receiver({std::nan(""), 0.0, 0.0}); }) == "parameter");
    CHECK(oracle::error_code_of([] { utc_from_receiver({1.0, INFINITY, 0.0}); }) == "parameter");
    CHECK(oracle::error_code_of([] { utc_from_receiver({1.0, -0.1, 0.0}); }) == "parameter");
}

TEST_CASE("acquisition picks the highest peak") {
    const std::vector<CorrelationPeak> spoofed{{0.0, 0.0, 1.0}, {3.0, 0.0, 1.5}};
    auto got = acquire(spoofed, 0.1);
    REQUIRE(got);
    CHECK(got->amplitude == 1.5);
    CHECK(got->code_phase == 3.0);

    const std::vector<CorrelationPeak> weak{{5.0, 0.0, 0.2}};
    CHECK_FALSE(acquire(weak, 0.5));
    CHECK_FALSE(acquire(weak, 0.2));  // must exceed the floor

    const std::vector<CorrelationPeak> tie{{20.0, 0.0, 1.0}, {10.0, 0.0, 1.0}};
    got = acquire(tie, 0.0);
    REQUIRE(got);
    CHECK(got->code_phase == 10.0);

    CHECK_FALSE(acquire(std::span<const CorrelationPeak>{}, 0.0));
}

TEST_CASE("weaker counterfeit peak never captures") {
    SpoofCampaign c;
    c.fake_amplitude_ratio = 0.8;
    c.drag_target_chips = 10.0;
    const auto out = run_spoof_campaign(c);
    CHECK_FALSE(out.captured);
    CHECK(out.achieved_dt == 0.0);
    CHECK_FALSE(out.capture_step);
    for (const auto& p : out.trajectory) CHECK(p.tracked_phase == c.true_peak.code_phase);

    c.fake_amplitude_ratio = 1.0;  // equality does not capture either
    CHECK_FALSE(run_spoof_campaign(c).captured);
}

TEST_CASE("drag of 10.23 chips gives 10 microseconds") {
    SpoofCampaign c;
    c.fake_amplitude_ratio = 1.5;
    c.drag_target_chips = 10.23;
    c.chip_duration = 1.0 / 1.023e6;
    const auto out = run_spoof_campaign(c);
    CHECK(out.captured);
    CHECK(out.final_offset_chips == 10.23);
    CHECK(out.achieved_dt == 10.23 * (1.0 / 1.023e6));
    CHECK(std::abs(out.achieved_dt - 1.0e-5) < 1e-20);
    CHECK(out.trajectory.back().tracked_phase == 10.23);
}

TEST_CASE("slew limit sets the number of drag steps") {
    for (double target : {10.0, 7.3, -4.6, 0.25}) {
        SpoofCampaign c;
        c.drag_target_chips = target;
        c.drag_rate = 2.0;  // above the loop limit
        c.max_slew = 0.5;
        const auto out = run_spoof_campaign(c);
        REQUIRE(out.captured);
        const auto expected = static_cast<std::size_t>(std::ceil(std::abs(target) / c.max_slew));
        CHECK(out.steps - *out.capture_step == expected);
        CHECK(out.final_offset_chips == target);
        for (std::size_t i = 1; i < out.trajectory.size(); ++i)
            CHECK(std::abs(out.trajectory[i].tracked_phase - out.trajectory[i - 1].tracked_phase) <= 0.5);
    }
}

TEST_CASE("stage ordering and zero drag") {
    SpoofCampaign c;
    c.drag_target_chips = 3.0;
    c.fake_start_offset = -4.0;
    c.true_peak.code_phase = 100.0;
    const auto out = run_spoof_campaign(c);
    REQUIRE(out.captured);
    std::size_t capture = 0, first_drag = 0;
    for (const auto& p : out.trajectory) {
        if (p.stage == SpoofStage::capture) capture = p.step;
        if (p.stage == SpoofStage::drag && first_drag == 0) first_drag = p.step;
    }
    CHECK(capture == *out.capture_step);
    CHECK(capture < first_drag);
    CHECK(out.trajectory.back().tracked_phase == 103.0);
    CHECK(out.achieved_dt == (out.trajectory.back().tracked_phase - 100.0) * c.chip_duration);

    c.drag_target_chips = 0.0;
    const auto still = run_spoof_campaign(c);
    CHECK(still.captured);
    CHECK(still.achieved_dt == 0.0);
}

TEST_CASE("capture iff stronger and within the radius before the step budget runs out") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ratio(0.5, 2.0), start(-6.0, 6.0), rate(0.05, 1.0), radius(0.1, 1.0);
    std::uniform_int_distribution<int> budget(1, 60);
    int captured = 0, tested = 0;
    for (int i = 0; i < 2000; ++i) {
        SpoofCampaign c;
        c.fake_amplitude_ratio = ratio(rng);
        c.fake_start_offset = start(rng);
        c.approach_rate = rate(rng);
        c.capture_radius = radius(rng);
        c.max_steps = static_cast<std::size_t>(budget(rng));
        c.drag_target_chips = 1.0;
        const double gap = std::abs(c.fake_start_offset) - c.capture_radius;
        const double needed = gap <= 0.0 ? 0.0 : std::ceil(gap / c.approach_rate);
        if (gap > 0.0 && std::abs(gap / c.approach_rate - std::round(gap / c.approach_rate)) < 1e-9) continue;
        const bool expect = c.fake_amplitude_ratio > 1.0 && needed <= static_cast<double>(c.max_steps);
        const auto out = run_spoof_campaign(c);
        CHECK(out.captured == expect);
        if (out.captured) {
            CHECK(*out.capture_step == static_cast<std::size_t>(needed));
            ++captured;
        } else {
            CHECK(out.achieved_dt == 0.0);
        }
        ++tested;
    }
    CHECK(captured > 100);
    CHECK(tested - captured > 100);
}

TEST_CASE("campaign parameters are validated") {
    SpoofCampaign c;
    c.approach_rate = 0.0;
    CHECK(oracle::error_code_of([&] { run_spoof_campaign(c); }) == "parameter");
    c = SpoofCampaign{};
    c.capture_radius = -1.0;
    CHECK(oracle::error_code_of([&] { run_spoof_campaign(c); }) == "parameter");
    c = SpoofCampaign{};
    c.max_slew = 0.0;
    CHECK(oracle::error_code_of([&] { run_spoof_campaign(c); }) == "parameter");
}
