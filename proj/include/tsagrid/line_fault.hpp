#pragma once

#include <optional>
#include <string_view>

#include "tsagrid/phasor.hpp"

namespace tsagrid {

/// Both-end measurements. I_S enters the line at S, I_R leaves it at R.
struct TerminalPhasors {
    Phasor v_s;
    Phasor i_s;
    Phasor v_r;
    Phasor i_r;
};

enum class FaultType { three_phase_ground, line_to_ground, line_to_line };

std::string_view to_string(FaultType type) noexcept;
std::optional<FaultType> parse_fault_type(std::string_view name) noexcept;

/// Multiplier applied to the fault impedance in the single-phase equivalent.
double fault_impedance_scale(FaultType type) noexcept;

/// Source E_S behind Z_S at the sending bus; E_R behind Z_R at the receiving bus.
/// A passive load is E_R = 0 with Z_R the load impedance.
struct LineTerminations {
    Phasor source_emf;
    Complex source_impedance{};
    Phasor load_emf{};
    Complex load_impedance{};
};

struct FaultScenario {
    LineParams line;
    double d = 0.5;  ///< fault distance from the receiving end, fraction of L
    std::optional<Complex> fault_impedance;  ///< nullopt: healthy line
    FaultType fault_type = FaultType::three_phase_ground;
    LineTerminations terminations;

    void validate() const;
};

/// Forward circuit solve: S and R terminations, distributed sections SF and FR,
/// shunt fault at F. Throws degenerate_scenario when the circuit is singular.
TerminalPhasors simulate_fault(const FaultScenario& scenario);

struct FaultIndicators {
    Complex m;
    Complex n;
};

FaultIndicators fault_indicators(const TerminalPhasors& t, const LineParams& line);

/// Indicators computed from measurements rotated by Δθ_S at S and Δθ_R at R.
FaultIndicators attacked_indicators(const TerminalPhasors& t, const LineParams& line,
                                    double dtheta_s, double dtheta_r);

struct FaultLocation {
    double d = 0.0;         ///< real part of ln(N/M)/(2γL)
    double residual = 0.0;  ///< imaginary part; ~0 for consistent data
};

/// Throws indeterminate_location when M = 0 or the quotient has no finite log.
FaultLocation locate_fault(const FaultIndicators& indicators, const LineParams& line);

/**
 * ΔD = D_e(clean) - D_e(attacked) for an attack whose end-to-end phase
 * asynchronism is Δθ = Δθ_R - Δθ_S, from the traveling-wave terms
 *   A = V_R - Z_c I_R,  B = -(V_S - Z_c I_S) e^{γL},
 *   C = -(V_R + Z_c I_R),  D = (V_S + Z_c I_S) e^{-γL},  ε = e^{jΔθ}
 * as (ln((A+B)/(C+D)) - ln((B+Aε)/(D+Cε))) / (2γL), real part.
 */
double location_error(const TerminalPhasors& t, const LineParams& line, double dtheta);
double location_error(const TerminalPhasors& t, const LineParams& line, double dtheta_s,
                      double dtheta_r);

}  // namespace tsagrid
