#include "tsagrid/line_fault.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "tsagrid/error.hpp"

namespace tsagrid {

namespace {

struct WaveTerms {
    Complex a, b, c, d;
};

WaveTerms wave_terms(const TerminalPhasors& t, const LineParams& line) {
    const auto [gamma, z_c] = line_constants(line);
    const Complex gl = gamma * line.length_km;
    const Complex v_s = t.v_s.to_complex(), i_s = t.i_s.to_complex();
    const Complex v_r = t.v_r.to_complex(), i_r = t.i_r.to_complex();
    return WaveTerms{v_r - z_c * i_r, -(v_s - z_c * i_s) * std::exp(gl), -(v_r + z_c * i_r),
                     (v_s + z_c * i_s) * std::exp(-gl)};
}

Abcd section_abcd(const LineParams& line, double km) {
    if (km <= 0.0) return Abcd::identity();
    return Abcd::from_pi(equivalent_pi(line, std::min(km, line.length_km)));
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

std::string_view to_string(FaultType type) noexcept {
    switch (type) {
        case FaultType::three_phase_ground: return "three_phase_ground";
        case FaultType::line_to_ground: return "line_to_ground";
        case FaultType::line_to_line: return "line_to_line";
    }
    return "three_phase_ground";
}

std::optional<FaultType> parse_fault_type(std::string_view name) noexcept {
    for (auto t : {FaultType::three_phase_ground, FaultType::line_to_ground, FaultType::line_to_line})
        if (name == to_string(t)) return t;
    return std::nullopt;
}

double fault_impedance_scale(FaultType type) noexcept {
    // 3·Z_f in the series sequence connection of a ground fault; a phase-to-phase
    // fault splits Z_f between the two phases.
    switch (type) {
        case FaultType::three_phase_ground: return 1.0;
        case FaultType::line_to_ground: return 3.0;
        case FaultType::line_to_line: return 0.5;
    }
    return 1.0;
}

void FaultScenario::validate() const {
    line.validate();
    if (!(d >= 0.0 && d <= 1.0)) throw Error(ErrorCode::parameter, "fault location d must lie in [0, 1]");
    if (fault_impedance && !finite(*fault_impedance))
        throw Error(ErrorCode::parameter, "fault impedance must be finite");
    const auto& tm = terminations;
    if (!tm.source_emf.is_finite() || !tm.load_emf.is_finite() || !finite(tm.source_impedance) ||
        !finite(tm.load_impedance))
        throw Error(ErrorCode::parameter, "line terminations must be finite");
}

TerminalPhasors simulate_fault(const FaultScenario& scn) {
    scn.validate();
    const auto& tm = scn.terminations;
    const double L = scn.line.length_km;
    const Abcd fr = section_abcd(scn.line, scn.d * L);
    const Abcd sf = section_abcd(scn.line, (1.0 - scn.d) * L);

    const Complex e_s = tm.source_emf.to_complex(), z_s = tm.source_impedance;
    const Complex e_r = tm.load_emf.to_complex(), z_r = tm.load_impedance;

    // Fault-point quantities, affine in I_R from the R side and in I_S from the S side.
    const auto [p_v, p_i] = fr.forward(e_r, 0.0);
    const auto [q_v, q_i] = fr.forward(z_r, 1.0);
    const auto [r_v, r_i] = sf.backward(e_s, 0.0);
    const auto [s_v, s_i] = sf.backward(-z_s, 1.0);

    Complex i_r, i_s;
    if (scn.fault_impedance) {
        // Unknowns (I_R, I_S, I_f): V_F continuity, KCL at F, fault branch law.
        const Complex z_f = *scn.fault_impedance * fault_impedance_scale(scn.fault_type);
        Eigen::Matrix3cd a;
        a << q_v, -s_v, 0.0,
            -q_i, s_i, -1.0,
             q_v, 0.0, -z_f;
        const Eigen::Vector3cd rhs(r_v - p_v, p_i - r_i, -p_v);
        Eigen::FullPivLU<Eigen::Matrix3cd> lu(a);
        if (!lu.isInvertible()) throw Error(ErrorCode::degenerate_scenario, "fault circuit is singular");
        const Eigen::Vector3cd x = lu.solve(rhs);
        i_r = x(0);
        i_s = x(1);
    } else {
        Eigen::Matrix2cd a;
        a << q_v, -s_v,
            -q_i, s_i;
        const Eigen::Vector2cd rhs(r_v - p_v, p_i - r_i);
        Eigen::FullPivLU<Eigen::Matrix2cd> lu(a);
        if (!lu.isInvertible()) throw Error(ErrorCode::degenerate_scenario, "line circuit is singular");
        const Eigen::Vector2cd x = lu.solve(rhs);
        i_r = x(0);
        i_s = x(1);
    }
    if (!finite(i_r) || !finite(i_s))
        throw Error(ErrorCode::degenerate_scenario, "circuit solution is not finite");

    return TerminalPhasors{Phasor::from_complex(e_s - z_s * i_s), Phasor::from_complex(i_s),
                           Phasor::from_complex(e_r + z_r * i_r), Phasor::from_complex(i_r)};
}

FaultIndicators fault_indicators(const TerminalPhasors& t, const LineParams& line) {
    const auto w = wave_terms(t, line);
    return FaultIndicators{(w.d + w.c) / 2.0, (w.a + w.b) / 2.0};
}

FaultIndicators attacked_indicators(const TerminalPhasors& t, const LineParams& line,
                                    double dtheta_s, double dtheta_r) {
    const auto w = wave_terms(t, line);
    const Complex rot_s = std::polar(1.0, dtheta_s);
    const Complex rot_r = std::polar(1.0, dtheta_r);
    return FaultIndicators{(w.d * rot_s + w.c * rot_r) / 2.0, (w.a * rot_r + w.b * rot_s) / 2.0};
}

FaultLocation locate_fault(const FaultIndicators& ind, const LineParams& line) {
    if (ind.m == Complex{}) throw Error(ErrorCode::indeterminate_location, "fault indicator M is zero");
    const auto [gamma, z_c] = line_constants(line);
    const Complex de = std::log(ind.n / ind.m) / (2.0 * gamma * line.length_km);
    if (!finite(de))
        throw Error(ErrorCode::indeterminate_location, "ln(N/M) is not finite");
    return FaultLocation{de.real(), de.imag()};
}

double location_error(const TerminalPhasors& t, const LineParams& line, double dtheta) {
    const auto w = wave_terms(t, line);
    const auto [gamma, z_c] = line_constants(line);
    const Complex eps = std::polar(1.0, dtheta);
    const Complex clean_num = w.a + w.b, clean_den = w.c + w.d;
    const Complex attacked_num = w.b + w.a * eps, attacked_den = w.d + w.c * eps;
    if (clean_num == Complex{} || clean_den == Complex{} || attacked_num == Complex{} ||
        attacked_den == Complex{})
        throw Error(ErrorCode::singular_attack, "location error undefined: a wave term vanishes");
    const Complex dd = (std::log(clean_num / clean_den) - std::log(attacked_num / attacked_den)) /
                       (2.0 * gamma * line.length_km);
    if (!finite(dd)) throw Error(ErrorCode::singular_attack, "location error is not finite");
    return dd.real();
}

double location_error(const TerminalPhasors& t, const LineParams& line, double dtheta_s,
                      double dtheta_r) {
    return location_error(t, line, dtheta_r - dtheta_s);
}

}  // namespace tsagrid
