#include "tsagrid/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "tsagrid/event_location.hpp"
#include "tsagrid/gps_timing.hpp"
#include "tsagrid/line_fault.hpp"
#include "tsagrid/tsa.hpp"
#include "tsagrid/voltage_stability.hpp"

namespace tsagrid {

namespace {

constexpr ScenarioKind kKinds[] = {ScenarioKind::line_fault, ScenarioKind::voltage_stability,
                                   ScenarioKind::event_location, ScenarioKind::gps_spoof};

std::string kind_list() {
    std::string s;
    for (auto k : kKinds) {
        if (!s.empty()) s += ", ";
        s += to_string(k);
    }
    return s;
}

// Typed, position-aware view of one node of the scenario document.
class Block {
public:
    Block(const std::string* source, YAML::Node node, std::string path)
        : source_(source), node_(std::move(node)), path_(std::move(path)) {}

    const YAML::Node& node() const { return node_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& message) const {
        std::ostringstream os;
        os << *source_ << ':';
        const auto mark = node_.Mark();
        if (mark.line >= 0) os << mark.line + 1 << ':' << mark.column + 1 << ':';
        os << ' ' << (path_.empty() ? std::string("<root>") : path_) << ": " << message;
        throw ScenarioError(os.str());
    }

    bool has(const std::string& key) const {
        return node_.IsMap() && node_[key] && !node_[key].IsNull();
    }

    std::optional<Block> find(const std::string& key) const {
        if (!node_.IsMap()) fail("expected a mapping");
        if (!has(key)) return std::nullopt;
        return Block(source_, node_[key], join(key));
    }

    Block at(const std::string& key) const {
        auto b = find(key);
        if (!b) fail("missing required field '" + key + "'");
        return *b;
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        if (!node_.IsMap()) fail("expected a mapping");
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                std::string allowed;
                for (auto k : keys) allowed += (allowed.empty() ? "" : ", ") + std::string(k);
                Block(source_, kv.first, join(key)).fail("unknown field (allowed: " + allowed + ")");
            }
        }
    }

    double number() const {
        if (!node_.IsScalar()) fail("expected a number");
        double v = 0.0;
        try {
            v = node_.as<double>();
        } catch (const YAML::Exception&) {
            fail("expected a number, got '" + node_.Scalar() + "'");
        }
        if (!std::isfinite(v)) fail("value must be finite");
        return v;
    }

    double number(const std::string& key) const { return at(key).number(); }

    double number_or(const std::string& key, double fallback) const {
        auto b = find(key);
        return b ? b->number() : fallback;
    }

    std::optional<double> optional_number(const std::string& key) const {
        auto b = find(key);
        if (!b) return std::nullopt;
        return b->number();
    }

    double positive(const std::string& key) const {
        auto b = at(key);
        const double v = b.number();
        if (!(v > 0.0)) b.fail("must be positive");
        return v;
    }

    std::size_t count(const std::string& key) const {
        auto b = at(key);
        const double v = b.number();
        if (v < 0.0 || v != std::floor(v)) b.fail("expected a nonnegative integer");
        return static_cast<std::size_t>(v);
    }

    bool flag() const {
        if (!node_.IsScalar()) fail("expected true or false");
        try {
            return node_.as<bool>();
        } catch (const YAML::Exception&) {
            fail("expected true or false");
        }
    }

    std::string text() const {
        if (!node_.IsScalar()) fail("expected a string");
        return node_.Scalar();
    }

    std::string text(const std::string& key) const { return at(key).text(); }

    /// [re, im]
    Complex complex() const {
        if (!node_.IsSequence() || node_.size() != 2) fail("expected a complex value [re, im]");
        return {item(0).number(), item(1).number()};
    }

    Complex complex(const std::string& key) const { return at(key).complex(); }

    /// {magnitude, angle_deg}
    Phasor phasor() const {
        allow_only({"magnitude", "angle_deg"});
        const double mag = number("magnitude");
        if (mag < 0.0) at("magnitude").fail("magnitude must be nonnegative");
        return Phasor::polar(mag, degrees_to_radians(number_or("angle_deg", 0.0)));
    }

    Phasor phasor(const std::string& key) const { return at(key).phasor(); }

    std::vector<Block> items() const {
        if (!node_.IsSequence()) fail("expected a list");
        std::vector<Block> out;
        for (std::size_t i = 0; i < node_.size(); ++i) out.push_back(item(i));
        return out;
    }

private:
    Block item(std::size_t i) const { return Block(source_, node_[i], join(std::to_string(i))); }
    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const std::string* source_;
    YAML::Node node_;
    std::string path_;
};

// ---- shared parameter blocks -------------------------------------------------

LineParams parse_line(const Block& b) {
    b.allow_only({"z_per_km", "y_per_km", "capacitance_nf_per_km", "length_km", "frequency_hz"});
    const Complex z = b.complex("z_per_km");
    const double length = b.positive("length_km");
    const double freq = b.has("frequency_hz") ? b.positive("frequency_hz") : 60.0;
    if (b.has("y_per_km") == b.has("capacitance_nf_per_km"))
        b.fail("give exactly one of 'y_per_km' or 'capacitance_nf_per_km'");
    LineParams line = b.has("y_per_km")
                          ? LineParams{z, b.complex("y_per_km"), length, freq}
                          : LineParams::from_capacitance(z, b.positive("capacitance_nf_per_km") * 1e-9,
                                                         length, freq);
    try {
        line.validate();
    } catch (const Error& e) {
        b.fail(e.what());
    }
    return line;
}

// Timing error wins over phase error when a block gives both.
AttackSpec parse_attack_end(const std::optional<Block>& b, std::string target) {
    AttackSpec spec{std::move(target), std::nullopt, std::nullopt};
    if (!b) return spec;
    b->allow_only({"dtheta_deg", "dt_seconds"});
    spec.dt_seconds = b->optional_number("dt_seconds");
    if (auto deg = b->optional_number("dtheta_deg")) spec.dtheta_radians = degrees_to_radians(*deg);
    return spec;
}

struct EndAttacks {
    AttackSpec sending;
    AttackSpec receiving;
    double start_time = 0.0;
};

EndAttacks parse_end_attacks(const Block& root, bool timed) {
    EndAttacks a{parse_attack_end(std::nullopt, "S"), parse_attack_end(std::nullopt, "R"), 0.0};
    auto b = root.find("attack");
    if (!b) return a;
    if (timed)
        b->allow_only({"sending", "receiving", "start_time"});
    else
        b->allow_only({"sending", "receiving"});
    a.sending = parse_attack_end(b->find("sending"), "S");
    a.receiving = parse_attack_end(b->find("receiving"), "R");
    if (timed) a.start_time = b->number_or("start_time", 0.0);
    return a;
}

// ---- per-kind setups --------------------------------------------------------

struct LineFaultSetup {
    FaultScenario fault;
    EndAttacks attack;
    double threshold = 1e-6;
};

LineFaultSetup parse_line_fault(const Block& root) {
    LineFaultSetup s;
    s.fault.line = parse_line(root.at("line"));

    auto tb = root.at("terminations");
    tb.allow_only({"source_emf", "source_impedance", "load_emf", "load_impedance"});
    auto& tm = s.fault.terminations;
    tm.source_emf = tb.phasor("source_emf");
    tm.source_impedance = tb.has("source_impedance") ? tb.complex("source_impedance") : Complex{};
    tm.load_emf = tb.has("load_emf") ? tb.phasor("load_emf") : Phasor{};
    tm.load_impedance = tb.has("load_impedance") ? tb.complex("load_impedance") : Complex{};

    if (auto fb = root.find("fault"); fb && !(fb->node().IsScalar() && fb->text() == "none")) {
        fb->allow_only({"location", "impedance", "type"});
        auto loc = fb->at("location");
        s.fault.d = loc.number();
        if (s.fault.d < 0.0 || s.fault.d > 1.0) loc.fail("fault location must lie in [0, 1]");
        s.fault.fault_impedance = fb->has("impedance") ? fb->complex("impedance") : Complex{};
        if (fb->has("type")) {
            auto tb2 = fb->at("type");
            auto type = parse_fault_type(tb2.text());
            if (!type) tb2.fail("unknown fault type (three_phase_ground, line_to_ground, line_to_line)");
            s.fault.fault_type = *type;
        }
    }
    s.attack = parse_end_attacks(root, false);
    if (auto db = root.find("detection")) {
        db->allow_only({"threshold_volts"});
        s.threshold = db->positive("threshold_volts");
    }
    return s;
}

struct VoltageSetup {
    CorridorConfig corridor;
    std::vector<TopologyEvent> events;
    std::vector<double> frame_times;
    EndAttacks attack;
    std::optional<double> power_base;
    double frequency_hz = 60.0;
};

VoltageSetup parse_voltage(const Block& root) {
    VoltageSetup s;
    auto cb = root.at("corridor");
    cb.allow_only({"lines", "line_series_impedance", "line_shunt_impedance", "generator_emf",
                   "generator_impedance", "load_impedance"});
    s.corridor.line_count = cb.count("lines");
    if (s.corridor.line_count == 0) cb.at("lines").fail("corridor needs at least one line");
    s.corridor.line_series_impedance = cb.complex("line_series_impedance");
    s.corridor.line_shunt_impedance = cb.complex("line_shunt_impedance");
    if (s.corridor.line_shunt_impedance == Complex{})
        cb.at("line_shunt_impedance").fail("shunt impedance must be nonzero");
    s.corridor.generator_emf = cb.phasor("generator_emf");
    s.corridor.generator_impedance = cb.complex("generator_impedance");
    s.corridor.load_impedance = cb.complex("load_impedance");
    if (s.corridor.load_impedance == Complex{}) cb.at("load_impedance").fail("load impedance must be nonzero");

    auto tb = root.at("timeline");
    tb.allow_only({"start", "stop", "frame_interval", "events"});
    const double start = tb.number_or("start", 0.0);
    const double stop = tb.number("stop");
    const double dt = tb.positive("frame_interval");
    if (stop < start) tb.at("stop").fail("stop must not precede start");
    const auto frames = static_cast<std::size_t>(std::floor((stop - start) / dt + 1e-9)) + 1;
    if (frames > 1'000'000) tb.fail("timeline has more than 1e6 frames");
    for (std::size_t i = 0; i < frames; ++i) s.frame_times.push_back(start + static_cast<double>(i) * dt);

    if (auto eb = tb.find("events")) {
        for (const auto& e : eb->items()) {
            e.allow_only({"time", "action", "line"});
            TopologyEvent ev;
            ev.time = e.number("time");
            const auto action = e.has("action") ? e.text("action") : std::string("trip");
            if (action == "trip")
                ev.action = TopologyAction::trip;
            else if (action == "restore")
                ev.action = TopologyAction::restore;
            else
                e.at("action").fail("action must be 'trip' or 'restore'");
            ev.line = e.count("line");
            if (ev.line >= s.corridor.line_count) e.at("line").fail("no such line in the corridor");
            s.events.push_back(ev);
        }
    }
    s.attack = parse_end_attacks(root, true);
    if (root.has("frequency_hz")) s.frequency_hz = root.positive("frequency_hz");
    if (auto mb = root.find("margins")) {
        mb->allow_only({"power_base_va"});
        if (mb->has("power_base_va")) s.power_base = mb->positive("power_base_va");
    }
    return s;
}

struct EventSetup {
    ToaScenario clean;
    std::size_t attacked = 0;
    double dt = 0.0;
};

EventSetup parse_event(const Block& root) {
    EventSetup s;
    if (!root.has("propagation_speed_km_s"))
        root.fail("missing required parameter 'propagation_speed_km_s' (v_e has no default)");
    s.clean.v_e = root.positive("propagation_speed_km_s");
    auto ab = root.at("anchors");
    for (const auto& a : ab.items()) {
        a.allow_only({"id", "x", "y"});
        s.clean.anchors.push_back(Anchor{a.text("id"), a.number("x"), a.number("y")});
    }
    if (s.clean.anchors.size() < 3) ab.fail("at least 3 anchors are required");
    for (std::size_t i = 0; i < s.clean.anchors.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (s.clean.anchors[i].id == s.clean.anchors[j].id)
                ab.fail("duplicate anchor id '" + s.clean.anchors[i].id + "'");

    if (auto eb = root.find("event")) {
        eb->allow_only({"x", "y", "t"});
        s.clean.truth = EventPoint{eb->number("x"), eb->number("y"), eb->number_or("t", 0.0)};
    }
    if (auto tb = root.find("arrival_times")) {
        for (const auto& t : tb->items()) s.clean.arrival_times.push_back(t.number());
        if (s.clean.arrival_times.size() != s.clean.anchors.size())
            tb->fail("need exactly one arrival time per anchor");
        if (s.clean.truth)
            for (double t : s.clean.arrival_times)
                if (t < s.clean.truth->t) tb->fail("arrival time precedes the event time");
    } else if (s.clean.truth) {
        s.clean.arrival_times = arrival_times(*s.clean.truth, s.clean.anchors, s.clean.v_e);
    } else {
        root.fail("give 'event' (ground truth) or 'arrival_times'");
    }

    if (auto atk = root.find("attack")) {
        atk->allow_only({"anchor", "dt_seconds"});
        const auto id = atk->text("anchor");
        const auto it = std::find_if(s.clean.anchors.begin(), s.clean.anchors.end(),
                                     [&](const Anchor& a) { return a.id == id; });
        if (it == s.clean.anchors.end()) atk->at("anchor").fail("no anchor with id '" + id + "'");
        s.attacked = static_cast<std::size_t>(it - s.clean.anchors.begin());
        s.dt = atk->number_or("dt_seconds", 0.0);
    }
    return s;
}

struct SpoofSetup {
    SpoofCampaign campaign;
    double nominal_frequency = 60.0;
};

SpoofSetup parse_spoof(const Block& root) {
    SpoofSetup s;
    auto& c = s.campaign;
    if (auto pb = root.find("true_peak")) {
        pb->allow_only({"code_phase", "doppler_hz", "amplitude"});
        c.true_peak.code_phase = pb->number_or("code_phase", 0.0);
        c.true_peak.doppler = pb->number_or("doppler_hz", 0.0);
        c.true_peak.amplitude = pb->number_or("amplitude", 1.0);
    }
    auto cb = root.at("campaign");
    cb.allow_only({"fake_amplitude_ratio", "fake_start_offset_chips", "approach_rate", "capture_radius",
                   "max_slew", "drag_target_chips", "drag_rate", "chip_duration_s", "max_steps"});
    c.fake_amplitude_ratio = cb.positive("fake_amplitude_ratio");
    c.fake_start_offset = cb.number_or("fake_start_offset_chips", c.fake_start_offset);
    c.approach_rate = cb.number_or("approach_rate", c.approach_rate);
    c.capture_radius = cb.number_or("capture_radius", c.capture_radius);
    c.max_slew = cb.number_or("max_slew", c.max_slew);
    c.drag_target_chips = cb.number("drag_target_chips");
    c.drag_rate = cb.number_or("drag_rate", c.drag_rate);
    c.chip_duration = cb.number_or("chip_duration_s", c.chip_duration);
    if (cb.has("max_steps")) c.max_steps = cb.count("max_steps");
    try {
        c.validate();
    } catch (const Error& e) {
        cb.fail(e.what());
    }
    s.nominal_frequency = root.number_or("nominal_frequency_hz", 60.0);
    if (!(s.nominal_frequency > 0.0)) root.at("nominal_frequency_hz").fail("must be positive");
    return s;
}

// ---- per-kind evaluation ----------------------------------------------------

using Cells = std::vector<std::optional<double>>;

struct PointRows {
    std::vector<ResultRow> rows;
};

const std::vector<std::string>& kind_columns(ScenarioKind kind) {
    static const std::vector<std::string> line{"dtheta_s_rad", "dtheta_r_rad", "abs_m", "abs_n", "d_est", "d_error_km"};
    static const std::vector<std::string> volt{"t", "z_t_abs", "z_sh_abs", "z_th_abs",
                                               "e_th_abs", "e_th_angle_rad", "margin_z", "margin_p"};
    static const std::vector<std::string> event{"dt_seconds", "x_est", "y_est", "error_km", "dx_dt1", "dy_dt1"};
    static const std::vector<std::string> spoof{"captured", "capture_step", "steps",
                                                "final_offset_chips", "achieved_dt", "dtheta_rad"};
    switch (kind) {
        case ScenarioKind::line_fault: return line;
        case ScenarioKind::voltage_stability: return volt;
        case ScenarioKind::event_location: return event;
        case ScenarioKind::gps_spoof: return spoof;
    }
    return line;
}

// First error code wins; cells computed before the failure are kept.
void note(std::string& error, const Error& e) {
    if (error.empty()) error = std::string(to_string(e.code()));
}

std::vector<ResultRow> eval_line_fault(const Block& root) {
    const auto s = parse_line_fault(root);
    const auto& line = s.fault.line;
    const double th_s = s.attack.sending.phase_error(line.frequency_hz);
    const double th_r = s.attack.receiving.phase_error(line.frequency_hz);
    const auto t = simulate_fault(s.fault);
    const auto ind = attacked_indicators(t, line, th_s, th_r);

    Cells cells{th_s, th_r, std::abs(ind.m), std::abs(ind.n), std::nullopt, std::nullopt};
    std::string error;
    const bool detected = std::max(std::abs(ind.m), std::abs(ind.n)) > s.threshold;
    if (detected) {
        try {
            cells[4] = locate_fault(ind, line).d;
        } catch (const Error& e) {
            note(error, e);
        }
    }
    if (s.fault.fault_impedance) {
        try {
            cells[5] = location_error(t, line, th_s, th_r) * line.length_km;
        } catch (const Error& e) {
            note(error, e);
        }
    }
    return {ResultRow{std::move(cells), std::move(error)}};
}

std::vector<ResultRow> eval_voltage(const Block& root) {
    const auto s = parse_voltage(root);
    const auto frames = simulate_corridor(s.corridor, s.events, s.frame_times);
    std::vector<ResultRow> rows;
    rows.reserve(frames.size());
    const Complex z_g = s.corridor.generator_impedance;
    for (const auto& f : frames) {
        const bool active = f.time >= s.attack.start_time;
        const double freq = s.frequency_hz;
        const double th_s = active ? s.attack.sending.phase_error(freq) : 0.0;
        const double th_r = active ? s.attack.receiving.phase_error(freq) : 0.0;
        Cells cells(8);
        cells[0] = f.time;
        std::string error;
        try {
            const auto teq = attacked_t_equivalent(f.phasors, th_s, th_r);
            const auto e_g = generator_emf(f.phasors.v_s.rotated(th_s), f.phasors.i_s.rotated(th_s), z_g);
            const auto th = thevenin_reduce(teq, z_g, f.phasors.v_r.rotated(th_r), e_g);
            const auto m = stability_margins(th, teq.z_l, teq.z_l);
            cells[1] = std::abs(teq.z_t);
            cells[2] = std::abs(teq.z_sh);
            cells[3] = std::abs(th.z_th);
            cells[4] = th.e_th.magnitude;
            cells[5] = th.e_th.angle;
            cells[6] = m.margin_z;
            cells[7] = s.power_base ? m.margin_p / *s.power_base : m.margin_p;
        } catch (const Error& e) {
            note(error, e);
        }
        rows.push_back(ResultRow{std::move(cells), std::move(error)});
    }
    return rows;
}

std::vector<ResultRow> eval_event(const Block& root) {
    const auto s = parse_event(root);
    ToaScenario scn = s.clean;
    scn.arrival_times = inject_time_attack(s.clean.arrival_times, s.attacked, s.dt);

    Cells cells{s.dt, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
    std::string error;
    try {
        const auto sol = solve_toa(scn);
        cells[1] = sol.x;
        cells[2] = sol.y;
        if (scn.truth) cells[3] = std::hypot(sol.x - scn.truth->x, sol.y - scn.truth->y);
    } catch (const Error& e) {
        note(error, e);
    }
    try {
        const auto sens = toa_sensitivity(scn, s.attacked);
        cells[4] = sens.dx_dt1;
        cells[5] = sens.dy_dt1;
    } catch (const Error& e) {
        note(error, e);
    }
    return {ResultRow{std::move(cells), std::move(error)}};
}

std::vector<ResultRow> eval_spoof(const Block& root) {
    const auto s = parse_spoof(root);
    const auto out = run_spoof_campaign(s.campaign);
    Cells cells{out.captured ? 1.0 : 0.0,
                out.capture_step ? std::optional<double>(static_cast<double>(*out.capture_step))
                                 : std::nullopt,
                static_cast<double>(out.steps),
                out.final_offset_chips,
                out.achieved_dt,
                phase_error_from_time_offset(out.achieved_dt, s.nominal_frequency)};
    return {ResultRow{std::move(cells), {}}};
}

std::vector<ResultRow> evaluate(ScenarioKind kind, const Block& root) {
    switch (kind) {
        case ScenarioKind::line_fault: return eval_line_fault(root);
        case ScenarioKind::voltage_stability: return eval_voltage(root);
        case ScenarioKind::event_location: return eval_event(root);
        case ScenarioKind::gps_spoof: return eval_spoof(root);
    }
    return {};
}

void validate_kind(ScenarioKind kind, const Block& root) {
    switch (kind) {
        case ScenarioKind::line_fault: {
            root.allow_only({"kind", "name", "description", "line", "terminations", "fault", "attack",
                             "detection", "sweep", "output"});
            parse_line_fault(root);
            break;
        }
        case ScenarioKind::voltage_stability: {
            root.allow_only({"kind", "name", "description", "corridor", "timeline", "attack", "margins", "frequency_hz",
                             "sweep", "output"});
            parse_voltage(root);
            break;
        }
        case ScenarioKind::event_location: {
            root.allow_only({"kind", "name", "description", "propagation_speed_km_s", "anchors", "event",
                             "arrival_times", "attack", "sweep", "output"});
            parse_event(root);
            break;
        }
        case ScenarioKind::gps_spoof: {
            root.allow_only({"kind", "name", "description", "true_peak", "campaign", "nominal_frequency_hz",
                             "sweep", "output"});
            parse_spoof(root);
            break;
        }
    }
}

// ---- sweep plumbing ---------------------------------------------------------

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

// Walks a dotted path; nullopt when any segment is missing.
std::optional<YAML::Node> resolve(YAML::Node node, const std::string& path) {
    for (const auto& part : split_path(path)) {
        if (part.empty()) return std::nullopt;
        if (node.IsMap()) {
            if (!node[part]) return std::nullopt;
            node.reset(node[part]);
        } else if (node.IsSequence()) {
            if (part.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
            const auto idx = std::stoul(part);
            if (idx >= node.size()) return std::nullopt;
            node.reset(node[idx]);
        } else {
            return std::nullopt;
        }
    }
    return node;
}

YAML::Node document_at_point(const Scenario& scn, const std::vector<double>& values) {
    YAML::Node doc = YAML::Clone(scn.document);
    for (std::size_t i = 0; i < scn.sweep.size(); ++i) {
        auto n = resolve(doc, scn.sweep[i].parameter);
        if (!n) throw ScenarioError("sweep parameter '" + scn.sweep[i].parameter + "' vanished");
        *n = format_number(values[i]);
    }
    return doc;
}

std::vector<std::vector<double>> grid_points(const Scenario& scn) {
    std::vector<std::vector<double>> axes;
    for (const auto& a : scn.sweep) axes.push_back(a.values());
    std::vector<std::vector<double>> points{{}};
    for (const auto& axis : axes) {
        std::vector<std::vector<double>> next;
        next.reserve(points.size() * axis.size());
        for (const auto& p : points)
            for (double v : axis) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    return points;
}

std::vector<ResultRow> run_point(const Scenario& scn, const std::vector<double>& values) {
    std::vector<ResultRow> rows;
    try {
        const auto doc = document_at_point(scn, values);
        rows = evaluate(scn.kind, Block(&scn.source, doc, ""));
    } catch (const Error& e) {
        rows.push_back(ResultRow{Cells(kind_columns(scn.kind).size()), std::string(to_string(e.code()))});
    } catch (const std::exception&) {
        rows.push_back(ResultRow{Cells(kind_columns(scn.kind).size()), "internal"});
    }
    for (auto& r : rows) {
        Cells full(values.begin(), values.end());
        full.insert(full.end(), r.values.begin(), r.values.end());
        r.values = std::move(full);
    }
    return rows;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
        case ScenarioKind::line_fault: return "line_fault";
        case ScenarioKind::voltage_stability: return "voltage_stability";
        case ScenarioKind::event_location: return "event_location";
        case ScenarioKind::gps_spoof: return "gps_spoof";
    }
    return "line_fault";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) noexcept {
    for (auto k : kKinds)
        if (to_string(k) == name) return k;
    return std::nullopt;
}

std::span<const ScenarioKind> all_scenario_kinds() noexcept { return kKinds; }

std::vector<double> SweepAxis::values() const {
    std::vector<double> v;
    v.reserve(steps);
    if (include_start) {
        if (steps == 1) return {start};
        for (std::size_t i = 0; i < steps; ++i)
            v.push_back(i + 1 == steps ? stop
                                       : start + (stop - start) * static_cast<double>(i) /
                                                     static_cast<double>(steps - 1));
    } else {
        for (std::size_t i = 1; i <= steps; ++i)
            v.push_back(i == steps ? stop
                                   : start + (stop - start) * static_cast<double>(i) /
                                                 static_cast<double>(steps));
    }
    return v;
}

std::size_t Scenario::grid_size() const {
    std::size_t n = 1;
    for (const auto& a : sweep) n *= a.steps;
    return n;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::io, "SHA-256 digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

Scenario parse_scenario(std::string_view text, std::string source) {
    Scenario scn;
    scn.source = std::move(source);
    scn.hash = sha256_hex(text);
    try {
        scn.document = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ScenarioError(scn.source + ":" + std::to_string(e.mark.line + 1) + ":" +
                            std::to_string(e.mark.column + 1) + ": parse error: " + e.msg);
    }
    const Block root(&scn.source, scn.document, "");
    if (!scn.document.IsMap()) root.fail("scenario must be a mapping");

    auto kb = root.at("kind");
    const auto kind = parse_scenario_kind(kb.text());
    if (!kind) kb.fail("unknown kind '" + kb.text() + "' (valid kinds: " + kind_list() + ")");
    scn.kind = *kind;
    if (root.has("name")) scn.name = root.text("name");

    if (auto sb = root.find("sweep")) {
        for (const auto& ab : sb->items()) {
            ab.allow_only({"parameter", "start", "stop", "steps", "include_start"});
            SweepAxis axis;
            axis.parameter = ab.text("parameter");
            axis.start = ab.number("start");
            axis.stop = ab.number("stop");
            axis.steps = ab.count("steps");
            if (axis.steps < 1) ab.at("steps").fail("steps must be >= 1");
            if (auto ib = ab.find("include_start")) axis.include_start = ib->flag();
            if (axis.parameter == "sweep" || axis.parameter.starts_with("sweep.") ||
                axis.parameter == "output" || axis.parameter.starts_with("output.") ||
                axis.parameter == "kind")
                ab.at("parameter").fail("sweep axes must reference scenario parameters");
            const auto target = resolve(scn.document, axis.parameter);
            if (!target)
                ab.at("parameter").fail("no parameter '" + axis.parameter + "' in this scenario");
            Block(&scn.source, *target, axis.parameter).number();
            for (const auto& other : scn.sweep)
                if (other.parameter == axis.parameter) ab.at("parameter").fail("parameter swept twice");
            scn.sweep.push_back(std::move(axis));
        }
    }
    if (scn.grid_size() > 10'000'000) root.at("sweep").fail("sweep grid exceeds 1e7 points");

    if (auto ob = root.find("output")) {
        ob->allow_only({"path", "format", "trajectory"});
        if (ob->has("path")) scn.output.path = ob->text("path");
        if (ob->has("format")) {
            auto fb = ob->at("format");
            auto fmt = parse_output_format(fb.text());
            if (!fmt) fb.fail("format must be 'csv' or 'jsonl'");
            scn.output.format = *fmt;
        }
        if (ob->has("trajectory")) {
            if (scn.kind != ScenarioKind::gps_spoof)
                ob->at("trajectory").fail("trajectory output exists only for gps_spoof scenarios");
            if (scn.grid_size() != 1)
                ob->at("trajectory").fail("trajectory output needs a single-point sweep");
            scn.output.trajectory_path = ob->text("trajectory");
        }
    }

    validate_kind(scn.kind, root);
    // Every grid point must at least parse; values outside a block's domain fail here.
    for (const auto& point : grid_points(scn)) {
        if (scn.sweep.empty()) break;
        const auto doc = document_at_point(scn, point);
        validate_kind(scn.kind, Block(&scn.source, doc, ""));
        if (scn.grid_size() > 4096) break;  // large grids: the first point vouches for the schema
    }
    return scn;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read scenario file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io, "error reading " + path.string());
    return parse_scenario(ss.str(), path.filename().string());
}

std::vector<std::string> result_columns(const Scenario& scn) {
    std::vector<std::string> cols;
    for (const auto& a : scn.sweep) cols.push_back(a.parameter);
    const auto& kc = kind_columns(scn.kind);
    cols.insert(cols.end(), kc.begin(), kc.end());
    return cols;
}

ResultTable run_sweep(const Scenario& scn, unsigned threads) {
    const auto points = grid_points(scn);
    if (points.empty()) throw ScenarioError(scn.source + ": empty sweep grid");

    std::vector<std::vector<ResultRow>> results(points.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(points.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < points.size(); ++i) results[i] = run_point(scn, points[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < points.size(); i = next++)
                    results[i] = run_point(scn, points[i]);
            });
    }

    ResultTable table(result_columns(scn), Provenance{scn.hash, std::string(kVersion)});
    for (auto& rows : results)
        for (auto& r : rows) table.add_row(std::move(r.values), std::move(r.error));
    return table;
}

ResultTable spoof_trajectory(const Scenario& scn) {
    if (scn.kind != ScenarioKind::gps_spoof) throw ScenarioError("trajectory needs a gps_spoof scenario");
    if (scn.grid_size() != 1) throw ScenarioError("trajectory needs a single-point sweep");
    const auto points = grid_points(scn);
    const auto doc = document_at_point(scn, points.front());
    const auto setup = parse_spoof(Block(&scn.source, doc, ""));
    const auto out = run_spoof_campaign(setup.campaign);
    ResultTable table({"step", "tracked_phase_chips"}, Provenance{scn.hash, std::string(kVersion)});
    for (const auto& p : out.trajectory) table.add_row({static_cast<double>(p.step), p.tracked_phase});
    return table;
}

}  // namespace tsagrid
