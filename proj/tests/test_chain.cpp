#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qfc/chain.hpp"
#include "qfc/config.hpp"

using namespace qfc;

namespace {
RunConfig paper() { return load_config(QFC_SOURCE_DIR "/paper.cfg"); }
}  // namespace

TEST_CASE("converter efficiency curve") {
    const double eta_max = 0.664567, eta_n = 0.54109674, length = 4.0;
    // first maximum by construction of the calibration
    CHECK(optimal_pump_power(eta_n, length) == doctest::Approx(0.285).epsilon(1e-5));
    CHECK(converter_efficiency(0.285, eta_max, eta_n, length) ==
          doctest::Approx(eta_max).epsilon(1e-9));
    CHECK(converter_efficiency(0.0, eta_max, eta_n, length) == 0.0);
    // periodic, not clamped: argument pi at four times the optimum
    CHECK(converter_efficiency(4 * 0.285, eta_max, eta_n, length) ==
          doctest::Approx(0.0).epsilon(1e-9));
    CHECK(converter_efficiency(0.4, eta_max, eta_n, length) < eta_max);
    CHECK_THROWS_AS(converter_efficiency(-0.1, eta_max, eta_n, length), DomainError);
    CHECK_THROWS_AS(optimal_pump_power(0.0, length), DomainError);
}

TEST_CASE("calibrated cascade hits the measured operating point") {
    const RunConfig cfg = paper();
    CHECK(signal_transmission(cfg.chain) == doctest::Approx(0.484).epsilon(1e-3));

    const RatePrediction p = predict_rates(cfg.chain, cfg.emitter);
    CHECK(p.input_rate_hz == doctest::Approx(2.812e6).epsilon(1e-9));
    CHECK(p.signal_rate_hz == doctest::Approx(1.361e6).epsilon(1e-3));
    CHECK(p.noise_rate_hz == doctest::Approx(3235.0).epsilon(1e-3));
    CHECK(predict_snr(cfg.chain, cfg.emitter) > 400.0);
    CHECK(predict_snr(cfg.chain, cfg.emitter) == doctest::Approx(420.7).epsilon(1e-3));
    CHECK(p.after_stage_hz.size() == cfg.chain.stages.size());
    CHECK(p.after_stage_hz.back() == p.signal_rate_hz);
}

TEST_CASE("half pump power") {
    RunConfig cfg = paper();
    cfg.chain.pump_power_w = 0.1425;
    CHECK(signal_transmission(cfg.chain) == doctest::Approx(0.389).epsilon(2e-3));
}

TEST_CASE("rates are linear in brightness, noise is not") {
    RunConfig cfg = paper();
    const RatePrediction base = predict_rates(cfg.chain, cfg.emitter);
    cfg.emitter.brightness *= 2.0;
    const RatePrediction doubled = predict_rates(cfg.chain, cfg.emitter);
    CHECK(doubled.input_rate_hz == doctest::Approx(2 * base.input_rate_hz));
    CHECK(doubled.signal_rate_hz == doctest::Approx(2 * base.signal_rate_hz));
    CHECK(doubled.noise_rate_hz == doctest::Approx(base.noise_rate_hz));
}

TEST_CASE("noise sees only downstream filter extinction") {
    RunConfig cfg = paper();
    const double base = output_noise_rate(cfg.chain);
    // a filter placed before the noise source must not attenuate it
    StageModel extra;
    extra.kind = StageKind::filter;
    extra.label = "pre";
    extra.transmission = 1.0;
    extra.extinction_db = 30.0;
    cfg.chain.stages.insert(cfg.chain.stages.begin(), extra);
    CHECK(output_noise_rate(cfg.chain) == doctest::Approx(base));
    // the same filter after it attenuates by 30 dB
    cfg.chain.stages.erase(cfg.chain.stages.begin());
    cfg.chain.stages.push_back(extra);
    CHECK(output_noise_rate(cfg.chain) == doctest::Approx(base * 1e-3));
}

TEST_CASE("snr without any noise stage is a modelling error") {
    RunConfig cfg = paper();
    std::erase_if(cfg.chain.stages,
                  [](const StageModel& s) { return s.kind == StageKind::noise_source; });
    CHECK_THROWS_AS(predict_snr(cfg.chain, cfg.emitter), DomainError);
}

TEST_CASE("zero noise rates give infinite snr") {
    RunConfig cfg = paper();
    for (auto& s : cfg.chain.stages)
        if (s.kind == StageKind::noise_source) s.rate_per_mw_hz = s.pedestal_hz = 0.0;
    CHECK(std::isinf(predict_snr(cfg.chain, cfg.emitter)));
}

TEST_CASE("chain validation") {
    RunConfig cfg = paper();
    CHECK_NOTHROW(cfg.chain.validate());
    ChainModel no_converter;
    CHECK_THROWS_AS(no_converter.validate(), DomainError);
    ChainModel two = cfg.chain;
    for (const auto& s : cfg.chain.stages)
        if (s.kind == StageKind::converter) two.stages.push_back(s);
    CHECK_THROWS_AS(two.validate(), DomainError);
}

TEST_CASE("external efficiency") {
    CHECK(external_efficiency(2.8e6, 1.3e6) == doctest::Approx(1.3 / 2.8));
    CHECK_THROWS_AS(external_efficiency(0.0, 1.0), DomainError);
}
