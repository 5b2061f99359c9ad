#include "tsagrid/gps_timing.hpp"

#include <algorithm>
#include <cmath>

#include "tsagrid/error.hpp"

namespace tsagrid {

double utc_from_receiver(const UtcInputs& inputs) {
    if (!std::isfinite(inputs.t_rcv) || !std::isfinite(inputs.t_p) || !std::isfinite(inputs.dt_utc))
        throw Error(ErrorCode::parameter, "UTC inputs must be finite");
    if (inputs.t_p < 0.0) throw Error(ErrorCode::parameter, "propagation time must be nonnegative");
    return inputs.t_rcv - inputs.t_p - inputs.dt_utc;
}

std::optional<CorrelationPeak> acquire(std::span<const CorrelationPeak> peaks, double noise_floor) {
    const CorrelationPeak* best = nullptr;
    for (const auto& p : peaks) {
        if (!std::isfinite(p.code_phase) || !std::isfinite(p.amplitude))
            throw Error(ErrorCode::parameter, "correlation peaks must be finite");
        if (best == nullptr || p.amplitude > best->amplitude ||
            (p.amplitude == best->amplitude && p.code_phase < best->code_phase))
            best = &p;
    }
    if (best == nullptr || !(best->amplitude > noise_floor)) return std::nullopt;
    return *best;
}

void SpoofCampaign::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(true_peak.amplitude))
        throw Error(ErrorCode::parameter, "true peak amplitude must be positive");
    if (!positive(fake_amplitude_ratio))
        throw Error(ErrorCode::parameter, "fake amplitude ratio must be positive");
    if (!positive(approach_rate)) throw Error(ErrorCode::parameter, "approach_rate must be positive");
    if (!positive(capture_radius)) throw Error(ErrorCode::parameter, "capture_radius must be positive");
    if (!positive(max_slew)) throw Error(ErrorCode::parameter, "max_slew must be positive");
    if (!positive(drag_rate)) throw Error(ErrorCode::parameter, "drag_rate must be positive");
    if (!positive(chip_duration)) throw Error(ErrorCode::parameter, "chip_duration must be positive");
    if (!std::isfinite(fake_start_offset) || !std::isfinite(drag_target_chips) ||
        !std::isfinite(true_peak.code_phase))
        throw Error(ErrorCode::parameter, "campaign offsets must be finite");
}

SpoofOutcome run_spoof_campaign(const SpoofCampaign& campaign) {
    campaign.validate();

    const double origin = campaign.true_peak.code_phase;
    SpoofOutcome out;
    std::size_t step = 0;
    double fake = campaign.fake_start_offset;  // relative to the authentic peak
    double offset = 0.0;                       // tracked phase relative to the authentic peak

    auto record = [&](SpoofStage stage) {
        out.trajectory.push_back({step, origin + offset, stage});
    };
    record(SpoofStage::approach);

    // Stage 1: the counterfeit peak closes in; the loop stays on the authentic one.
    while (std::abs(fake) > campaign.capture_radius) {
        if (step >= campaign.max_steps) {
            out.steps = step;
            return out;
        }
        const double move = std::min(campaign.approach_rate, std::abs(fake));
        fake -= std::copysign(move, fake);
        ++step;
        record(SpoofStage::approach);
    }

    // Stage 2: overlap. A weaker or equal peak never wins the lock.
    if (!(campaign.fake_amplitude_ratio > 1.0)) {
        out.steps = step;
        return out;
    }
    out.captured = true;
    out.capture_step = step;
    out.trajectory.back().stage = SpoofStage::capture;

    // Stage 3: drag the lock to the commanded displacement.
    const double target = campaign.drag_target_chips;
    const double rate = std::min(campaign.drag_rate, campaign.max_slew);
    while (offset != target) {
        if (step >= campaign.max_steps) break;
        const double remaining = target - offset;
        offset = std::abs(remaining) <= rate ? target : offset + std::copysign(rate, remaining);
        ++step;
        record(SpoofStage::drag);
    }

    out.steps = step;
    out.final_offset_chips = offset;
    out.achieved_dt = offset * campaign.chip_duration;
    return out;
}

}  // namespace tsagrid
