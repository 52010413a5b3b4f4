#pragma once

#include <string>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc {

// Pulsed single-photon source. Brightness is the probability per excitation
// pulse of at least one fiber-coupled photon.
struct EmitterModel {
    double rep_rate_hz = 76e6;
    double brightness = 0.037;
    double g2_target = 0.0;   // source g2(0)
    double overlap = 1.0;     // pairwise wave-packet overlap of consecutive photons
    double lambda_nm = 925.7;

    void validate() const;
    double period_ps() const { return 1e12 / rep_rate_hz; }
};

enum class StageKind { loss, converter, noise_source, filter };

struct StageModel {
    StageKind kind = StageKind::loss;
    std::string label;

    // loss / filter
    double transmission = 1.0;

    // converter (eta(P) = eta_max sin^2(L sqrt(eta_n P)))
    double eta_max = 0.0;
    double eta_n = 0.0;  // 1/(W cm^2)
    double length_cm = 0.0;

    // noise source
    double rate_per_mw_hz = 0.0;
    double pedestal_hz = 0.0;

    // filter only: extinction applied to the noise channel
    double extinction_db = 0.0;

    void validate() const;
};

struct ChainModel {
    std::vector<StageModel> stages;
    double pump_power_w = 0.0;

    void validate() const;  // exactly one converter, pump_power >= 0
};

// eta(P) = eta_max sin^2(L sqrt(eta_n P)). Faithfully periodic: over-pumping
// reconverts, the curve is not clamped at the first maximum.
double converter_efficiency(double pump_power_w, double eta_max, double eta_n, double length_cm);

// First maximum of the efficiency curve, (pi/2L)^2 / eta_n.
double optimal_pump_power(double eta_n, double length_cm);

// Plain ratio n_out/n_in, no dead-time or efficiency corrections.
double external_efficiency(double n_in, double n_out);

struct RatePrediction {
    double input_rate_hz = 0.0;               // rep_rate * brightness
    std::vector<double> after_stage_hz;       // cascade, one entry per stage
    double signal_rate_hz = 0.0;              // final
    double noise_rate_hz = 0.0;               // total noise at the output
};

// Photon budget bookkeeping: each stage multiplies the running rate by its
// transmission (the converter uses converter_efficiency at the chain's pump
// power). Noise sources emit rate_per_mw*P + pedestal, attenuated by the
// extinction of every downstream filter.
RatePrediction predict_rates(const ChainModel& chain, const EmitterModel& emitter);

// Signal rate over total noise rate at the output. Returns +infinity when
// the total noise is exactly zero.
double predict_snr(const ChainModel& chain, const EmitterModel& emitter);

// End-to-end transmission seen by a single photon (all stage transmissions,
// converter evaluated at the chain's pump power).
double signal_transmission(const ChainModel& chain);

// Total noise rate delivered at the chain output.
double output_noise_rate(const ChainModel& chain);

}  // namespace qfc
