#include "tsagrid/phasor.hpp"

#include <cmath>

#include "tsagrid/error.hpp"

namespace tsagrid {

namespace {

constexpr double kSeriesThreshold = 1e-8;

bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// sinh(x)/x with the short-section expansion below the threshold.
Complex sinhc(Complex x) noexcept {
    if (std::abs(x) < kSeriesThreshold) return 1.0 + x * x / 6.0;
    return std::sinh(x) / x;
}

// tanh(x/2)/(x/2).
Complex tanhc_half(Complex x) noexcept {
    if (std::abs(x) < kSeriesThreshold) return 1.0 - x * x / 12.0;
    const Complex half = x / 2.0;
    return std::tanh(half) / half;
}

}  // namespace

double wrap_angle(double radians) noexcept {
    double r = std::remainder(radians, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

double degrees_to_radians(double degrees) noexcept { return degrees * (kPi / 180.0); }
double radians_to_degrees(double radians) noexcept { return radians * (180.0 / kPi); }

Complex principal_sqrt(Complex z) noexcept {
    Complex r = std::sqrt(z);
    if (r.real() == 0.0 && r.imag() < 0.0) r = -r;
    return r;
}

Phasor Phasor::polar(double magnitude, double angle) {
    if (!std::isfinite(magnitude) || !std::isfinite(angle))
        throw Error(ErrorCode::parameter, "phasor components must be finite");
    if (magnitude < 0.0) throw Error(ErrorCode::parameter, "phasor magnitude must be nonnegative");
    return Phasor{magnitude, wrap_angle(angle)};
}

Phasor Phasor::from_complex(Complex value) noexcept {
    const double mag = std::abs(value);
    if (mag == 0.0) return Phasor{0.0, 0.0};
    return Phasor{mag, wrap_angle(std::arg(value))};
}

Complex Phasor::to_complex() const noexcept { return std::polar(magnitude, angle); }

Phasor Phasor::rotated(double radians) const noexcept {
    return Phasor{magnitude, wrap_angle(angle + radians)};
}

bool Phasor::is_finite() const noexcept {
    return std::isfinite(magnitude) && std::isfinite(angle);
}

LineParams LineParams::from_capacitance(Complex z_per_km, double capacitance_f_per_km,
                                        double length_km, double frequency_hz) {
    const double omega = 2.0 * kPi * frequency_hz;
    return LineParams{z_per_km, Complex{0.0, omega * capacitance_f_per_km}, length_km,
                      frequency_hz};
}

void LineParams::validate() const {
    if (!(length_km > 0.0) || !std::isfinite(length_km))
        throw Error(ErrorCode::parameter, "line length must be positive");
    if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
        throw Error(ErrorCode::parameter, "system frequency must be positive");
    if (z_per_km == Complex{} || !is_finite(z_per_km))
        throw Error(ErrorCode::parameter, "series impedance per km must be finite and nonzero");
    if (y_per_km == Complex{} || !is_finite(y_per_km))
        throw Error(ErrorCode::parameter, "shunt admittance per km must be finite and nonzero");
}

LineConstants line_constants(const LineParams& line) {
    if (line.z_per_km == Complex{} || line.y_per_km == Complex{})
        throw Error(ErrorCode::parameter, "line constants need nonzero z and y");
    return LineConstants{principal_sqrt(line.z_per_km * line.y_per_km),
                         principal_sqrt(line.z_per_km / line.y_per_km)};
}

PiSection equivalent_pi(const LineParams& line, double section_km) {
    if (!(section_km > 0.0))
        throw Error(ErrorCode::parameter, "section length must be positive");
    if (section_km > line.length_km * (1.0 + 1e-12))
        throw Error(ErrorCode::parameter, "section length exceeds the line length");
    const auto [gamma, z_c] = line_constants(line);
    const Complex x = gamma * section_km;
    return PiSection{line.z_per_km * section_km * sinhc(x),
                     line.y_per_km * section_km * tanhc_half(x)};
}

Abcd Abcd::from_pi(const PiSection& pi) noexcept {
    const Complex& z = pi.series_impedance;
    const Complex& y = pi.shunt_admittance;
    const Complex a = 1.0 + z * y / 2.0;
    return Abcd{a, z, y * (1.0 + z * y / 4.0), a};
}

std::pair<Complex, Complex> Abcd::forward(Complex v_r, Complex i_r) const noexcept {
    return {a * v_r + b * i_r, c * v_r + d * i_r};
}

std::pair<Complex, Complex> Abcd::backward(Complex v_s, Complex i_s) const noexcept {
    return {d * v_s - b * i_s, -c * v_s + a * i_s};
}

Abcd cascade(const Abcd& near, const Abcd& far) noexcept {
    return Abcd{near.a * far.a + near.b * far.c, near.a * far.b + near.b * far.d,
                near.c * far.a + near.d * far.c, near.c * far.b + near.d * far.d};
}

std::pair<Phasor, Phasor> two_port_send_from_receive(const PiSection& pi, const Phasor& v_r,
                                                     const Phasor& i_r) {
    if (!is_finite(pi.series_impedance) || !is_finite(pi.shunt_admittance) || !v_r.is_finite() ||
        !i_r.is_finite())
        throw Error(ErrorCode::parameter, "two-port inputs must be finite");
    const auto [v_s, i_s] = Abcd::from_pi(pi).forward(v_r.to_complex(), i_r.to_complex());
    return {Phasor::from_complex(v_s), Phasor::from_complex(i_s)};
}

}  // namespace tsagrid
