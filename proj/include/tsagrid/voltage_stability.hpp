#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tsagrid/line_fault.hpp"
#include "tsagrid/phasor.hpp"

namespace tsagrid {

/// Open-circuit sentinel for shunt branches (an infinite impedance).
inline const Complex kOpenCircuit{std::numeric_limits<double>::infinity(), 0.0};

bool is_open_circuit(Complex z) noexcept;

/// Impedance of two branches in parallel. An open branch drops out; a shorted one dominates.
/// Throws degenerate_measurement when the admittances cancel.
Complex parallel(Complex z1, Complex z2);

/// Corridor reduced to Z_T/2 - Z_sh - Z_T/2 feeding the load Z_L.
struct TEquivalent {
    Complex z_t;
    Complex z_sh;
    Complex z_l;
};

TEquivalent estimate_t_equivalent(const TerminalPhasors& t);

/// T-equivalent from measurements rotated by Δθ_S (sending PMU) and Δθ_R (receiving PMU).
/// The load impedance is rotation-invariant and is returned as the clean V_R/I_R.
TEquivalent attacked_t_equivalent(const TerminalPhasors& t, double dtheta_s, double dtheta_r);

/// E_g = V_S + I_S·Z_g.
Phasor generator_emf(const Phasor& v_s, const Phasor& i_s, Complex z_g);

struct TheveninState {
    Phasor e_th;
    Complex z_th;
    Phasor e_g;
    Complex z_g;  ///< supplied, never estimated
};

/// Z_th = Z_T/2 + Z_sh ∥ (Z_T/2 + Z_g), E_th = V_R (Z_th + Z_L)/Z_L.
/// `e_g` is carried through for reporting; pass generator_emf() when it is known.
TheveninState thevenin_reduce(const TEquivalent& teq, Complex z_g, const Phasor& v_r,
                              const Phasor& e_g = {});

struct StabilityMargins {
    double margin_z = 0.0;  ///< percent
    double margin_p = 0.0;  ///< watts
    double k_crit = 0.0;
    double p_l = 0.0;     ///< watts
    double p_lmax = 0.0;  ///< watts
};

/// Active power into k·Z_L0 behind the Thevenin source: Re(k Z_L0) |E_th / (Z_th + k Z_L0)|².
double transfer_power(const TheveninState& th, Complex z_l0, double k);

/**
 * k_crit = |Z_th/Z_L|, MARGIN_Z = 100(1 - k_crit), P_L at k = |Z_L|/|Z_L0|,
 * P_Lmax at k = k_crit, MARGIN_P = P_Lmax - P_L while |Z_L| > |Z_th| and 0 otherwise.
 */
StabilityMargins stability_margins(const TheveninState& th, Complex z_l, Complex z_l0);

/// Identical parallel lines, each a T section, between a generator and a constant-impedance load.
struct CorridorConfig {
    std::size_t line_count = 3;
    Complex line_series_impedance;  ///< Z_T of one line
    Complex line_shunt_impedance;   ///< Z_sh of one line
    Phasor generator_emf;
    Complex generator_impedance;
    Complex load_impedance;

    void validate() const;
};

enum class TopologyAction { trip, restore };

struct TopologyEvent {
    double time = 0.0;
    TopologyAction action = TopologyAction::trip;
    std::size_t line = 0;  ///< zero-based line index
};

struct CorridorFrame {
    double time = 0.0;
    std::size_t lines_in_service = 0;
    TerminalPhasors phasors;
    TEquivalent truth;
};

/// Circuit solve of the T corridor: returns (V_S, I_S, V_R, I_R).
TerminalPhasors solve_t_corridor(const TEquivalent& corridor, const Phasor& e_g, Complex z_g);

/**
 * Piecewise-constant phasor stream sampled at `frame_times`. Events take
 * effect for frames at or after their time. Tripping the last line is an
 * island error.
 */
std::vector<CorridorFrame> simulate_corridor(const CorridorConfig& config,
                                             std::span<const TopologyEvent> events,
                                             std::span<const double> frame_times);

}  // namespace tsagrid
