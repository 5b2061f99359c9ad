#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tsagrid {

/// Civil C/A code chip duration, seconds.
inline constexpr double kCaChipDuration = 1.0 / 1.023e6;

struct UtcInputs {
    double t_rcv = 0.0;   ///< receiver clock time, s
    double t_p = 0.0;     ///< signal propagation time, s
    double dt_utc = 0.0;  ///< ground-segment UTC correction, s
};

/// t_utc = t_rcv - t_p - dt_utc, evaluated left to right.
double utc_from_receiver(const UtcInputs& inputs);

struct CorrelationPeak {
    double code_phase = 0.0;  ///< chips
    double doppler = 0.0;     ///< Hz
    double amplitude = 1.0;   ///< SNR-proportional height, > 0
};

/// Highest peak above the noise floor; ties go to the smaller code phase.
std::optional<CorrelationPeak> acquire(std::span<const CorrelationPeak> peaks, double noise_floor);

/**
 * Three-stage capture of a tracking loop by a counterfeit correlation peak.
 *
 * The counterfeit peak starts `fake_start_offset` chips from the authentic one
 * and closes in at `approach_rate` chips per step. Once it is within
 * `capture_radius` and strictly stronger, the attacker aligns it onto the
 * authentic peak and the receiver locks to it. The lock is then dragged toward
 * `drag_target_chips` (relative to the authentic peak) at
 * min(drag_rate, max_slew) chips per step.
 */
struct SpoofCampaign {
    CorrelationPeak true_peak;
    double fake_amplitude_ratio = 1.5;
    double fake_start_offset = 2.0;
    double approach_rate = 0.1;
    double drag_target_chips = 0.0;
    double drag_rate = 0.5;
    double capture_radius = 0.5;
    double max_slew = 0.5;
    double chip_duration = kCaChipDuration;
    std::size_t max_steps = 1'000'000;

    void validate() const;
};

enum class SpoofStage { approach, capture, drag };

struct TrajectoryPoint {
    std::size_t step = 0;
    double tracked_phase = 0.0;  ///< chips
    SpoofStage stage = SpoofStage::approach;
};

struct SpoofOutcome {
    bool captured = false;
    double achieved_dt = 0.0;         ///< seconds
    double final_offset_chips = 0.0;  ///< tracked minus authentic code phase
    std::size_t steps = 0;
    std::optional<std::size_t> capture_step;
    std::vector<TrajectoryPoint> trajectory;
};

SpoofOutcome run_spoof_campaign(const SpoofCampaign& campaign);

}  // namespace tsagrid
