#include "qfc/chain.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qfc {

void EmitterModel::validate() const {
    if (!(rep_rate_hz > 0)) throw DomainError("emitter: rep_rate must be positive");
    if (!(brightness > 0 && brightness <= 1)) throw DomainError("emitter: brightness must be in (0, 1]");
    if (!(g2_target >= 0 && g2_target < 1)) throw DomainError("emitter: g2 must be in [0, 1)");
    if (!(overlap >= 0 && overlap <= 1)) throw DomainError("emitter: overlap must be in [0, 1]");
}

void StageModel::validate() const {
    switch (kind) {
        case StageKind::loss:
        case StageKind::filter:
            if (!(transmission >= 0 && transmission <= 1))
                throw DomainError("stage '" + label + "': transmission must be in [0, 1]");
            if (kind == StageKind::filter && extinction_db < 0)
                throw DomainError("stage '" + label + "': extinction must be >= 0 dB");
            break;
        case StageKind::converter:
            if (!(eta_max >= 0 && eta_max <= 1))
                throw DomainError("stage '" + label + "': eta_max must be in [0, 1]");
            if (eta_n < 0 || length_cm <= 0)
                throw DomainError("stage '" + label + "': converter needs eta_n >= 0, length > 0");
            break;
        case StageKind::noise_source:
            if (rate_per_mw_hz < 0 || pedestal_hz < 0)
                throw DomainError("stage '" + label + "': noise rates must be >= 0");
            break;
    }
}

void ChainModel::validate() const {
    if (pump_power_w < 0) throw DomainError("chain: pump_power must be >= 0");
    int converters = 0;
    for (const auto& s : stages) {
        s.validate();
        if (s.kind == StageKind::converter) ++converters;
    }
    if (converters != 1) throw DomainError("chain: exactly one converter stage required, found " +
                                           std::to_string(converters));
}

double converter_efficiency(double pump_power_w, double eta_max, double eta_n, double length_cm) {
    if (pump_power_w < 0 || eta_max < 0 || eta_n < 0 || length_cm < 0)
        throw DomainError("converter_efficiency: parameters must be >= 0");
    const double s = std::sin(length_cm * std::sqrt(eta_n * pump_power_w));
    return eta_max * s * s;
}

double optimal_pump_power(double eta_n, double length_cm) {
    if (!(eta_n > 0) || !(length_cm > 0))
        throw DomainError("optimal_pump_power: eta_n and length must be positive");
    const double x = std::numbers::pi / (2.0 * length_cm);
    return x * x / eta_n;
}

double external_efficiency(double n_in, double n_out) {
    if (!(n_in > 0)) throw DomainError("external_efficiency: n_in must be positive");
    return n_out / n_in;
}

double signal_transmission(const ChainModel& chain) {
    chain.validate();
    double t = 1.0;
    for (const auto& s : chain.stages) {
        switch (s.kind) {
            case StageKind::loss:
            case StageKind::filter:
                t *= s.transmission;
                break;
            case StageKind::converter:
                t *= converter_efficiency(chain.pump_power_w, s.eta_max, s.eta_n, s.length_cm);
                break;
            case StageKind::noise_source:
                break;
        }
    }
    return t;
}

double output_noise_rate(const ChainModel& chain) {
    chain.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < chain.stages.size(); ++i) {
        const auto& s = chain.stages[i];
        if (s.kind != StageKind::noise_source) continue;
        double rate = s.rate_per_mw_hz * chain.pump_power_w * 1e3 + s.pedestal_hz;
        for (std::size_t j = i + 1; j < chain.stages.size(); ++j) {
            if (chain.stages[j].kind == StageKind::filter)
                rate *= std::pow(10.0, -chain.stages[j].extinction_db / 10.0);
        }
        total += rate;
    }
    return total;
}

RatePrediction predict_rates(const ChainModel& chain, const EmitterModel& emitter) {
    chain.validate();
    emitter.validate();
    RatePrediction p;
    p.input_rate_hz = emitter.rep_rate_hz * emitter.brightness;
    double rate = p.input_rate_hz;
    p.after_stage_hz.reserve(chain.stages.size());
    for (const auto& s : chain.stages) {
        switch (s.kind) {
            case StageKind::loss:
            case StageKind::filter:
                rate *= s.transmission;
                break;
            case StageKind::converter:
                rate *= converter_efficiency(chain.pump_power_w, s.eta_max, s.eta_n, s.length_cm);
                break;
            case StageKind::noise_source:
                break;
        }
        p.after_stage_hz.push_back(rate);
    }
    p.signal_rate_hz = rate;
    p.noise_rate_hz = output_noise_rate(chain);
    return p;
}

double predict_snr(const ChainModel& chain, const EmitterModel& emitter) {
    bool has_noise = false;
    for (const auto& s : chain.stages)
        if (s.kind == StageKind::noise_source) has_noise = true;
    if (!has_noise) throw DomainError("predict_snr: chain has no noise_source stage");
    const RatePrediction p = predict_rates(chain, emitter);
    if (p.noise_rate_hz <= 0.0) return std::numeric_limits<double>::infinity();
    return p.signal_rate_hz / p.noise_rate_hz;
}

}  // namespace qfc
