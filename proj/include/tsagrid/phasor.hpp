#pragma once

#include <complex>
#include <numbers>
#include <utility>

namespace tsagrid {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle in radians into (-pi, pi].
double wrap_angle(double radians) noexcept;

double degrees_to_radians(double degrees) noexcept;
double radians_to_degrees(double radians) noexcept;

/// Principal complex square root: Re >= 0, and +j on the branch cut tie.
Complex principal_sqrt(Complex z) noexcept;

/**
 * Polar measurement value. Magnitude is nonnegative and the angle is kept
 * in (-pi, pi]; construct through polar() or from_complex() to get the
 * normalization.
 */
struct Phasor {
    double magnitude = 0.0;
    double angle = 0.0;

    static Phasor polar(double magnitude, double angle);
    static Phasor from_complex(Complex value) noexcept;

    Complex to_complex() const noexcept;

    /// Same magnitude, angle advanced by `radians` and re-wrapped.
    Phasor rotated(double radians) const noexcept;

    bool is_finite() const noexcept;

    friend bool operator==(const Phasor&, const Phasor&) = default;
};

/// Per-unit-length line data: z (ohm/km), y (S/km), length (km), system frequency (Hz).
struct LineParams {
    Complex z_per_km;
    Complex y_per_km;
    double length_km = 0.0;
    double frequency_hz = 60.0;

    /// Shunt admittance from a per-km capacitance in farads (y = j*2*pi*f*C).
    static LineParams from_capacitance(Complex z_per_km, double capacitance_f_per_km,
                                       double length_km, double frequency_hz);

    /// Throws Error(parameter) when the invariants do not hold.
    void validate() const;
};

struct LineConstants {
    Complex gamma;  ///< propagation constant, 1/km
    Complex z_c;    ///< characteristic impedance, ohm
};

LineConstants line_constants(const LineParams& line);

/// Lumped equivalent of a distributed section: series Z', total shunt Y' (Y'/2 per arm).
struct PiSection {
    Complex series_impedance;
    Complex shunt_admittance;
};

PiSection equivalent_pi(const LineParams& line, double section_km);

/// Two-port transmission matrix: [V_S; I_S] = [[a, b], [c, d]] [V_R; I_R].
struct Abcd {
    Complex a{1.0, 0.0};
    Complex b{};
    Complex c{};
    Complex d{1.0, 0.0};

    static Abcd identity() noexcept { return {}; }
    static Abcd from_pi(const PiSection& pi) noexcept;

    Complex determinant() const noexcept { return a * d - b * c; }

    /// Maps receiving-end (v, i) to sending-end (v, i).
    std::pair<Complex, Complex> forward(Complex v_r, Complex i_r) const noexcept;
    /// Inverse map, valid for reciprocal two-ports (determinant 1).
    std::pair<Complex, Complex> backward(Complex v_s, Complex i_s) const noexcept;
};

/// `near` sits at the sending side: result = near * far.
Abcd cascade(const Abcd& near, const Abcd& far) noexcept;

/// Sending-end voltage and current from the receiving end through a pi section.
/// Currents flow from the sending toward the receiving end.
std::pair<Phasor, Phasor> two_port_send_from_receive(const PiSection& pi, const Phasor& v_r,
                                                     const Phasor& i_r);

}  // namespace tsagrid
