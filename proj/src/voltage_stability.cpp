#include "tsagrid/voltage_stability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsagrid/error.hpp"

namespace tsagrid {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Denominators within rounding of zero, relative to the magnitude of their
// terms, count as singular: polar inputs never cancel exactly.
Complex checked_div(Complex num, Complex den, double scale, const char* what) {
    if (std::abs(den) <= 1e-13 * scale) throw Error(ErrorCode::degenerate_measurement, what);
    return num / den;
}

}  // namespace

bool is_open_circuit(Complex z) noexcept { return std::isinf(z.real()) || std::isinf(z.imag()); }

Complex parallel(Complex z1, Complex z2) {
    if (is_open_circuit(z1)) return z2;
    if (is_open_circuit(z2)) return z1;
    if (z1 == Complex{} || z2 == Complex{}) return Complex{};
    const Complex y = 1.0 / z1 + 1.0 / z2;
    if (y == Complex{})
        throw Error(ErrorCode::degenerate_measurement, "parallel branches cancel (resonance)");
    return 1.0 / y;
}

TEquivalent estimate_t_equivalent(const TerminalPhasors& t) {
    const Complex v_s = t.v_s.to_complex(), i_s = t.i_s.to_complex();
    const Complex v_r = t.v_r.to_complex(), i_r = t.i_r.to_complex();
    return TEquivalent{
        checked_div(2.0 * (v_s - v_r), i_s + i_r, std::abs(i_s) + std::abs(i_r), "Z_T undefined: I_S + I_R = 0"),
        checked_div(-(v_s * i_r + v_r * i_s), i_r * i_r - i_s * i_s, std::norm(i_s) + std::norm(i_r),
                    "Z_sh undefined: I_R^2 = I_S^2"),
        checked_div(v_r, i_r, 0.0, "Z_L undefined: I_R = 0")};
}

TEquivalent attacked_t_equivalent(const TerminalPhasors& t, double dtheta_s, double dtheta_r) {
    const Complex v_s = t.v_s.to_complex(), i_s = t.i_s.to_complex();
    const Complex v_r = t.v_r.to_complex(), i_r = t.i_r.to_complex();
    // Divide the sending-end rotation out of both quotients; only the
    // asynchronism Δθ_R - Δθ_S survives.
    const double async = dtheta_r - dtheta_s;
    const Complex eps = async == 0.0 ? Complex{1.0, 0.0} : std::polar(1.0, async);
    const Complex eps2 = async == 0.0 ? Complex{1.0, 0.0} : std::polar(1.0, 2.0 * async);
    return TEquivalent{
        checked_div(2.0 * (v_s - v_r * eps), i_s + i_r * eps, std::abs(i_s) + std::abs(i_r),
                    "Z_T undefined: I_S + I_R = 0"),
        checked_div(-(v_s * i_r + v_r * i_s) * eps, i_r * i_r * eps2 - i_s * i_s, std::norm(i_s) + std::norm(i_r),
                    "Z_sh undefined: I_R^2 = I_S^2"),
        checked_div(v_r, i_r, 0.0, "Z_L undefined: I_R = 0")};
}

Phasor generator_emf(const Phasor& v_s, const Phasor& i_s, Complex z_g) {
    if (!v_s.is_finite() || !i_s.is_finite() || !finite(z_g))
        throw Error(ErrorCode::parameter, "generator EMF inputs must be finite");
    return Phasor::from_complex(v_s.to_complex() + i_s.to_complex() * z_g);
}

TheveninState thevenin_reduce(const TEquivalent& teq, Complex z_g, const Phasor& v_r,
                              const Phasor& e_g) {
    if (teq.z_l == Complex{}) throw Error(ErrorCode::degenerate_measurement, "Z_L is zero");
    const Complex z_th = teq.z_t / 2.0 + parallel(teq.z_sh, teq.z_t / 2.0 + z_g);
    const Complex e_th = v_r.to_complex() * (z_th + teq.z_l) / teq.z_l;
    if (!finite(z_th) || !finite(e_th))
        throw Error(ErrorCode::degenerate_measurement, "Thevenin reduction is not finite");
    return TheveninState{Phasor::from_complex(e_th), z_th, e_g, z_g};
}

double transfer_power(const TheveninState& th, Complex z_l0, double k) {
    const Complex load = k * z_l0;
    const Complex total = th.z_th + load;
    if (total == Complex{}) throw Error(ErrorCode::degenerate_measurement, "Z_th + k Z_L0 is zero");
    return load.real() * std::norm(th.e_th.to_complex() / total);
}

StabilityMargins stability_margins(const TheveninState& th, Complex z_l, Complex z_l0) {
    if (std::abs(z_l) == 0.0 || std::abs(z_l0) == 0.0)
        throw Error(ErrorCode::degenerate_measurement, "load impedance is zero");
    StabilityMargins m;
    m.k_crit = std::abs(th.z_th / z_l);
    m.margin_z = 100.0 * (1.0 - m.k_crit);
    m.p_l = transfer_power(th, z_l0, std::abs(z_l) / std::abs(z_l0));
    m.p_lmax = transfer_power(th, z_l0, m.k_crit);
    m.margin_p = std::abs(z_l) > std::abs(th.z_th) ? std::max(0.0, m.p_lmax - m.p_l) : 0.0;
    return m;
}

void CorridorConfig::validate() const {
    if (line_count == 0) throw Error(ErrorCode::parameter, "corridor needs at least one line");
    if (!finite(line_series_impedance) || !finite(generator_impedance) || !finite(load_impedance) ||
        !generator_emf.is_finite())
        throw Error(ErrorCode::parameter, "corridor parameters must be finite");
    if (line_shunt_impedance == Complex{})
        throw Error(ErrorCode::parameter, "line shunt impedance must be nonzero");
}

TerminalPhasors solve_t_corridor(const TEquivalent& c, const Phasor& e_g, Complex z_g) {
    const Complex half = c.z_t / 2.0;
    const Complex right = half + c.z_l;
    const Complex middle = parallel(c.z_sh, right);
    const Complex total = z_g + half + middle;
    if (total == Complex{} || right == Complex{})
        throw Error(ErrorCode::degenerate_scenario, "corridor circuit is singular");
    const Complex i_s = e_g.to_complex() / total;
    const Complex v_s = e_g.to_complex() - z_g * i_s;
    const Complex v_m = i_s * middle;
    const Complex i_r = v_m / right;
    return TerminalPhasors{Phasor::from_complex(v_s), Phasor::from_complex(i_s),
                           Phasor::from_complex(i_r * c.z_l), Phasor::from_complex(i_r)};
}

std::vector<CorridorFrame> simulate_corridor(const CorridorConfig& config,
                                             std::span<const TopologyEvent> events,
                                             std::span<const double> frame_times) {
    config.validate();
    std::vector<TopologyEvent> ordered(events.begin(), events.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    for (const auto& e : ordered)
        if (e.line >= config.line_count)
            throw Error(ErrorCode::parameter, "topology event names line " + std::to_string(e.line) +
                                                  " of a " + std::to_string(config.line_count) +
                                                  "-line corridor");

    std::vector<bool> in_service(config.line_count, true);
    std::size_t applied = 0;
    std::vector<CorridorFrame> frames;
    frames.reserve(frame_times.size());
    double last_time = -std::numeric_limits<double>::infinity();
    for (double t : frame_times) {
        if (!(t >= last_time)) throw Error(ErrorCode::parameter, "frame times must be nondecreasing");
        last_time = t;
        while (applied < ordered.size() && ordered[applied].time <= t) {
            const auto& e = ordered[applied++];
            const bool target = e.action == TopologyAction::restore;
            if (in_service[e.line] == target)
                throw Error(ErrorCode::parameter, "line " + std::to_string(e.line) + " is already " +
                                                      (target ? "in service" : "tripped"));
            in_service[e.line] = target;
        }
        const auto n = static_cast<std::size_t>(std::count(in_service.begin(), in_service.end(), true));
        if (n == 0) throw Error(ErrorCode::island, "all corridor lines tripped");

        // Identical T sections in parallel keep their midpoints equipotential.
        const TEquivalent truth{config.line_series_impedance / static_cast<double>(n),
                                config.line_shunt_impedance / static_cast<double>(n),
                                config.load_impedance};
        frames.push_back(CorridorFrame{
            t, n, solve_t_corridor(truth, config.generator_emf, config.generator_impedance), truth});
    }
    return frames;
}

}  // namespace tsagrid
