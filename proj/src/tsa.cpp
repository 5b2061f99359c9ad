#include "tsagrid/tsa.hpp"

#include <algorithm>
#include <cmath>

#include "tsagrid/error.hpp"

namespace tsagrid {

double phase_error_from_time_offset(double dt_seconds, double frequency_hz) {
    if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
        throw Error(ErrorCode::parameter, "nominal frequency must be positive");
    if (!std::isfinite(dt_seconds)) throw Error(ErrorCode::parameter, "time offset must be finite");
    // Reduce in cycles first so whole periods cancel exactly.
    const double cycles = frequency_hz * dt_seconds;
    return wrap_angle(2.0 * kPi * (cycles - std::round(cycles)));
}

double AttackSpec::phase_error(double frequency_hz) const {
    if (dt_seconds) return phase_error_from_time_offset(*dt_seconds, frequency_hz);
    if (dtheta_radians) return wrap_angle(*dtheta_radians);
    return 0.0;
}

TimeStampedMeasurement apply_attack(const TimeStampedMeasurement& m, double dtheta) {
    TimeStampedMeasurement out = m;
    for (auto& [name, value] : out.values) value = value.rotated(dtheta);
    return out;
}

TimeStampedMeasurement shift_timestamp(const TimeStampedMeasurement& m, double dt_seconds) {
    TimeStampedMeasurement out = m;
    out.timestamp += dt_seconds;
    return out;
}

std::vector<std::string> AlignedGroup::device_ids() const {
    std::vector<std::string> ids;
    ids.reserve(frames.size());
    for (const auto& f : frames) ids.push_back(f.device_id);
    return ids;
}

const TimeStampedMeasurement* AlignedGroup::find(const std::string& device_id) const {
    for (const auto& f : frames)
        if (f.device_id == device_id) return &f;
    return nullptr;
}

std::vector<AlignedGroup> align(std::span<const TimeStampedMeasurement> frames, double tolerance) {
    if (!(tolerance >= 0.0)) throw Error(ErrorCode::parameter, "alignment tolerance must be >= 0");

    std::vector<TimeStampedMeasurement> sorted(frames.begin(), frames.end());
    for (const auto& f : sorted)
        if (!std::isfinite(f.timestamp))
            throw Error(ErrorCode::parameter, "timestamp of " + f.device_id + " is not finite");
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.timestamp < b.timestamp;
    });

    std::vector<AlignedGroup> groups;
    for (auto& frame : sorted) {
        if (groups.empty() || frame.timestamp - groups.back().timestamp > tolerance)
            groups.push_back(AlignedGroup{frame.timestamp, {}});
        auto& group = groups.back();
        if (group.find(frame.device_id) != nullptr)
            throw Error(ErrorCode::alignment_conflict,
                        "device " + frame.device_id + " reported twice near t=" +
                            std::to_string(group.timestamp));
        group.frames.push_back(std::move(frame));
    }
    for (auto& g : groups)
        std::sort(g.frames.begin(), g.frames.end(),
                  [](const auto& a, const auto& b) { return a.device_id < b.device_id; });
    return groups;
}

}  // namespace tsagrid
