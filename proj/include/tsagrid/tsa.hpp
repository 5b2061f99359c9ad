#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsagrid/phasor.hpp"

namespace tsagrid {

/// Δθ = 2π·f·Δt wrapped into (-π, π].
double phase_error_from_time_offset(double dt_seconds, double frequency_hz);

/**
 * Adversary knob for one device. A timing error and a phase error may both
 * be given; the timing error is authoritative and the phase is derived from it.
 */
struct AttackSpec {
    std::string target_id;
    std::optional<double> dt_seconds;
    std::optional<double> dtheta_radians;

    /// Phase error at the given nominal frequency; zero when neither field is set.
    double phase_error(double frequency_hz) const;
};

struct TimeStampedMeasurement {
    std::string device_id;
    double timestamp = 0.0;  ///< seconds, UTC
    std::map<std::string, Phasor> values;
};

/// Rotates every phasor by Δθ. Magnitudes and the timestamp are untouched.
TimeStampedMeasurement apply_attack(const TimeStampedMeasurement& m, double dtheta);

/// Moves only the timestamp (for consumers of arrival times rather than phases).
TimeStampedMeasurement shift_timestamp(const TimeStampedMeasurement& m, double dt_seconds);

struct AlignedGroup {
    double timestamp = 0.0;  ///< earliest timestamp in the group
    std::vector<TimeStampedMeasurement> frames;

    std::vector<std::string> device_ids() const;
    const TimeStampedMeasurement* find(const std::string& device_id) const;
};

/**
 * Groups frames whose timestamps lie within `tolerance` of the group's first
 * (earliest) frame. Groups come back in time order, frames within a group in
 * device-id order. A device appearing twice in one group is an
 * alignment_conflict error.
 */
std::vector<AlignedGroup> align(std::span<const TimeStampedMeasurement> frames, double tolerance);

}  // namespace tsagrid
