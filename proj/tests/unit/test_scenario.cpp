#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "tsagrid/event_location.hpp"
#include "tsagrid/line_fault.hpp"
#include "tsagrid/scenario.hpp"
#include "tsagrid/tsa.hpp"

using namespace tsagrid;

namespace {

const std::filesystem::path kScenarios = TSAGRID_SCENARIO_DIR;

const char* const kLineFault = R"(kind: line_fault
line:
  z_per_km: [0.249168, 0.60241]
  capacitance_nf_per_km: 19.469
  length_km: 400
terminations:
  source_emf: {magnitude: 25000, angle_deg: 10}
  load_emf: {magnitude: 20000, angle_deg: 0}
fault:
  location: 0.5
  impedance: [10, 0]
  type: three_phase_ground
attack:
  receiving: {dtheta_deg: 30}
)";

const char* const kEvent = R"(kind: event_location
propagation_speed_km_s: 500
anchors:
  - {id: A, x: 0, y: 0}
  - {id: B, x: 300, y: 0}
  - {id: C, x: 100, y: 250}
  - {id: D, x: 320, y: 280}
event: {x: 140, y: 90, t: 0}
attack: {anchor: A, dt_seconds: 0.01}
)";

std::string message_of(std::string_view text) {
    try {
        parse_scenario(text, "test.yaml");
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return {};
}

std::string csv(const ResultTable& t) {
    std::ostringstream out;
    write_csv(t, out);
    return out.str();
}

double cell(const ResultTable& t, std::size_t row, std::string_view column) {
    const auto& v = t.rows().at(row).values.at(t.column_index(column));
    REQUIRE(v);
    return *v;
}

}  // namespace

TEST_CASE("scenario kinds") {
    CHECK(all_scenario_kinds().size() == 4);
    for (auto k : all_scenario_kinds()) CHECK(parse_scenario_kind(to_string(k)) == k);
    CHECK_FALSE(parse_scenario_kind("power_flow"));
}

TEST_CASE("a single grid point equals the direct library call") {
    const auto scn = parse_scenario(kLineFault);
    CHECK(scn.kind == ScenarioKind::line_fault);
    CHECK(scn.grid_size() == 1);
    CHECK(scn.hash == sha256_hex(kLineFault));
    const auto table = run_sweep(scn);
    REQUIRE(table.rows().size() == 1);
    CHECK(table.rows()[0].error.empty());

    FaultScenario f;
    f.line = LineParams::from_capacitance({0.249168, 0.60241}, 19.469e-9, 400.0, 60.0);
    f.d = 0.5;
    f.fault_impedance = Complex(10.0, 0.0);
    f.terminations.source_emf = Phasor::polar(25000.0, degrees_to_radians(10.0));
    f.terminations.load_emf = Phasor::polar(20000.0, 0.0);
    const auto t = simulate_fault(f);
    const double th = degrees_to_radians(30.0);
    const auto ind = attacked_indicators(t, f.line, 0.0, th);
    CHECK(cell(table, 0, "dtheta_r_rad") == th);
    // nF/km in the file versus F/km here differ in the last bit.
    CHECK(cell(table, 0, "abs_m") == doctest::Approx(std::abs(ind.m)).epsilon(1e-12));
    CHECK(cell(table, 0, "d_est") == doctest::Approx(locate_fault(ind, f.line).d).epsilon(1e-12));
    CHECK(cell(table, 0, "d_error_km") == doctest::Approx(location_error(t, f.line, 0.0, th) * 400.0).epsilon(1e-12));
}

TEST_CASE("timing attack given in seconds overrides the angle") {
    std::string text = kLineFault;
    text.replace(text.find("{dtheta_deg: 30}"), 16, "{dtheta_deg: 30, dt_seconds: 0.0013888888888888889}");
    const auto table = run_sweep(parse_scenario(text));
    CHECK(cell(table, 0, "dtheta_r_rad") == doctest::Approx(kPi / 6).epsilon(1e-12));
    CHECK(cell(table, 0, "dtheta_r_rad") == phase_error_from_time_offset(0.0013888888888888889, 60.0));
}

TEST_CASE("diagnostics name the file, position and field") {
    SUBCASE("unknown kind lists the valid ones") {
        const auto msg = message_of("kind: power_flow\n");
        CHECK(msg.find("test.yaml:1:") != std::string::npos);
        for (auto k : all_scenario_kinds()) CHECK(msg.find(to_string(k)) != std::string::npos);
    }
    SUBCASE("missing propagation speed is not defaulted") {
        std::string text = kEvent;
        text.erase(text.find("propagation_speed_km_s: 500\n"), 28);
        CHECK(message_of(text).find("propagation_speed_km_s") != std::string::npos);
    }
    SUBCASE("a bad value points at its line") {
        std::string text = kLineFault;
        text.replace(text.find("length_km: 400"), 14, "length_km: -4");
        const auto msg = message_of(text);
        CHECK(msg.find("test.yaml:5:") != std::string::npos);
        CHECK(msg.find("line.length_km") != std::string::npos);
    }
    SUBCASE("unknown fields are rejected") {
        const auto msg = message_of(std::string(kLineFault) + "colour: blue\n");
        CHECK(msg.find("colour") != std::string::npos);
        CHECK(msg.find("terminations") != std::string::npos);
    }
    SUBCASE("malformed YAML") {
        CHECK(message_of("kind: [line_fault\n").find("test.yaml") != std::string::npos);
    }
    SUBCASE("line constants need exactly one shunt description") {
        std::string text = kLineFault;
        text.insert(text.find("  length_km"), "  y_per_km: [0, 7.3e-6]\n");
        CHECK_FALSE(message_of(text).empty());
    }
    SUBCASE("unreadable file is an I/O error") {
        CHECK(oracle::error_code_of([] { load_scenario(kScenarios / "no_such_file.yaml"); }) == "io");
    }
}

TEST_CASE("sweep axes") {
    const std::string base = kLineFault;
    auto with_sweep = [&](const std::string& sweep) { return base + "sweep:\n" + sweep; };

    const auto scn = parse_scenario(with_sweep(
        "  - {parameter: fault.location, start: 0.1, stop: 0.9, steps: 5}\n"
        "  - {parameter: attack.receiving.dtheta_deg, start: -180, stop: 180, steps: 4, include_start: false}\n"));
    CHECK(scn.grid_size() == 20);
    CHECK(scn.sweep[0].values() == std::vector<double>{0.1, 0.30000000000000004, 0.5, 0.7000000000000001, 0.9});
    CHECK(scn.sweep[1].values() == std::vector<double>{-90.0, 0.0, 90.0, 180.0});
    CHECK(SweepAxis{"x", 2.0, 7.0, 1, true}.values() == std::vector<double>{2.0});
    CHECK(SweepAxis{"x", 2.0, 7.0, 1, false}.values() == std::vector<double>{7.0});

    const auto table = run_sweep(scn);
    REQUIRE(table.rows().size() == 20);
    CHECK(table.columns()[0] == "fault.location");
    CHECK(table.columns()[1] == "attack.receiving.dtheta_deg");
    CHECK(cell(table, 0, "fault.location") == 0.1);
    CHECK(cell(table, 3, "attack.receiving.dtheta_deg") == 180.0);
    CHECK(cell(table, 4, "fault.location") == 0.30000000000000004);

    CHECK(message_of(with_sweep("  - {parameter: fault.depth, start: 0, stop: 1, steps: 2}\n")).find("fault.depth") !=
          std::string::npos);
    CHECK_FALSE(message_of(with_sweep("  - {parameter: fault.type, start: 0, stop: 1, steps: 2}\n")).empty());
    CHECK_FALSE(message_of(with_sweep("  - {parameter: fault.location, start: 0, stop: 1, steps: 0}\n")).empty());
    CHECK_FALSE(message_of(with_sweep("  - {parameter: kind, start: 0, stop: 1, steps: 2}\n")).empty());
    CHECK_FALSE(message_of(with_sweep("  - {parameter: fault.location, start: 0, stop: 1, steps: 2}\n"
                                      "  - {parameter: fault.location, start: 0, stop: 1, steps: 3}\n"))
                     .empty());
    CHECK_FALSE(message_of(with_sweep("  - {parameter: fault.location, start: 0, stop: 1, steps: 2, bogus: 1}\n"))
                    .empty());
}

TEST_CASE("failures at a grid point become error rows") {
    std::string text = kLineFault;
    text.replace(text.find("impedance: [10, 0]"), 18, "impedance: [0, 0]");
    text += "sweep:\n  - {parameter: fault.location, start: 0, stop: 0.5, steps: 2}\n";
    const auto table = run_sweep(parse_scenario(text));
    REQUIRE(table.rows().size() == 2);
    CHECK(table.rows()[0].error == "degenerate_scenario");
    CHECK(cell(table, 0, "fault.location") == 0.0);
    CHECK_FALSE(table.rows()[0].values[table.column_index("d_est")]);
    CHECK(table.rows()[1].error.empty());
}

TEST_CASE("event location: measured times and attack injection") {
    const auto table = run_sweep(parse_scenario(kEvent));
    REQUIRE(table.rows().size() == 1);
    CHECK(table.rows()[0].error.empty());

    ToaScenario s;
    s.v_e = 500.0;
    s.anchors = {{"A", 0, 0}, {"B", 300, 0}, {"C", 100, 250}, {"D", 320, 280}};
    s.truth = EventPoint{140, 90, 0};
    s.arrival_times = inject_time_attack(arrival_times(*s.truth, s.anchors, 500.0), 0, 0.01);
    const auto sol = solve_toa(s);
    const auto sens = toa_sensitivity(s, 0);
    CHECK(cell(table, 0, "x_est") == sol.x);
    CHECK(cell(table, 0, "y_est") == sol.y);
    CHECK(cell(table, 0, "dx_dt1") == sens.dx_dt1);

    // Arrival times given directly and not consistent with any causal event.
    std::string acausal = kEvent;
    acausal.replace(acausal.find("event: {x: 140, y: 90, t: 0}"), 28,
                    "event: {x: 140, y: 90, t: 0}\narrival_times: [-1, 0, 0, 0]");
    CHECK_FALSE(message_of(acausal).empty());
    std::string unknown = kEvent;
    unknown.replace(unknown.find("anchor: A"), 9, "anchor: Z");
    CHECK(message_of(unknown).find("Z") != std::string::npos);
}

TEST_CASE("bundled scenarios") {
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".yaml") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(load_scenario(entry.path()));
    }

    SUBCASE("healthy line: false alarms vanish only on the diagonal") {
        const auto scn = load_scenario(kScenarios / "line_fault_false_alarm.yaml");
        const auto table = run_sweep(scn, 2);
        REQUIRE(table.rows().size() == 73 * 73);
        const auto is = table.column_index("attack.sending.dtheta_deg");
        const auto ir = table.column_index("attack.receiving.dtheta_deg");
        const auto im = table.column_index("abs_m");
        for (const auto& row : table.rows()) {
            const double ds = *row.values[is], dr = *row.values[ir];
            const bool same_phase = std::abs(std::remainder(ds - dr, 360.0)) < 1e-9;
            CHECK((*row.values[im] < 1e-9) == same_phase);
        }
    }
    SUBCASE("time-of-arrival sweep is exact without an attack") {
        const auto table = run_sweep(load_scenario(kScenarios / "event_location_dt_sweep.yaml"));
        REQUIRE(table.rows().size() == 21);
        for (std::size_t i = 0; i < table.rows().size(); ++i) {
            CHECK(table.rows()[i].error.empty());
            if (cell(table, i, "dt_seconds") == 0.0) CHECK(cell(table, i, "error_km") < 1e-9);
            else CHECK(cell(table, i, "error_km") > 0.1);
        }
    }
    SUBCASE("line trips step the series impedance") {
        const auto table = run_sweep(load_scenario(kScenarios / "voltage_stability_line_trips.yaml"));
        const double first = cell(table, 0, "z_t_abs");
        CHECK(cell(table, 6, "z_t_abs") == doctest::Approx(1.5 * first).epsilon(1e-9));
        CHECK(cell(table, 12, "z_t_abs") == doctest::Approx(3.0 * first).epsilon(1e-9));
    }
    SUBCASE("spoof trajectory") {
        const auto scn = load_scenario(kScenarios / "gps_spoof_drag.yaml");
        const auto traj = spoof_trajectory(scn);
        CHECK(traj.columns() == std::vector<std::string>{"step", "tracked_phase_chips"});
        CHECK(*traj.rows().back().values[1] == 10.0);
        const auto sweep = load_scenario(kScenarios / "gps_spoof_ratio_sweep.yaml");
        CHECK(oracle::error_code_of([&] { spoof_trajectory(sweep); }) != "");
    }
}

TEST_CASE("output does not depend on the thread count") {
    for (const char* name : {"line_fault_tsa_sweep.yaml", "voltage_stability_tsa.yaml", "event_location_dt_sweep.yaml",
                             "gps_spoof_ratio_sweep.yaml"}) {
        INFO(name);
        const auto scn = load_scenario(kScenarios / name);
        const auto one = csv(run_sweep(scn, 1));
        CHECK(csv(run_sweep(scn, 3)) == one);
        CHECK(csv(run_sweep(scn, 8)) == one);
    }
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
