#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qfc/phasematch.hpp"

using namespace qfc;

namespace {

// Waveguide-calibrated dispersion: the bulk Sellmeier shifted so that the
// 925.0 nm -> 1560 nm process phase-matches at 25.45 um / 43.4 C.
DispersionModel calibrated() {
    DispersionModel m;
    m.phase_mismatch_offset = 10709.318804447015;
    return m;
}

PhaseMatchSpec reference_spec() {
    PhaseMatchSpec s;
    s.lambda_sig_nm = 925.0;
    s.lambda_conv_nm = 1560.0;
    s.lambda_pump_nm = energy_match(925.0, 1560.0, EnergySolve::pump);
    s.poling_period_um = 25.45;
    s.temperature_c = 43.4;
    s.crystal_length_cm = 4.0;
    return s;
}

}  // namespace

TEST_CASE("refractive index: extraordinary LiNbO3 at telecom") {
    DispersionModel m;
    CHECK(refractive_index(1560.0, 25.0, m) == doctest::Approx(2.137593482).epsilon(1e-6));
    // dispersion is normal across the band of interest
    CHECK(refractive_index(925.7, 43.4, m) > refractive_index(1560.0, 43.4, m));
    CHECK(refractive_index(1560.0, 43.4, m) > refractive_index(2276.7, 43.4, m));
    // index rises with temperature
    CHECK(refractive_index(1560.0, 80.0, m) > refractive_index(1560.0, 25.0, m));
}

TEST_CASE("refractive index: validity window") {
    DispersionModel m;
    CHECK_THROWS_AS(refractive_index(300.0, 25.0, m), RangeError);
    CHECK_THROWS_AS(refractive_index(5000.0, 25.0, m), RangeError);
}

TEST_CASE("energy match") {
    CHECK(energy_match(925.7, 2272.0, EnergySolve::conv) == doctest::Approx(1562.2004).epsilon(1e-6));
    CHECK(energy_match(925.7, 1560.0, EnergySolve::pump) == doctest::Approx(2276.6703).epsilon(1e-6));
    // closure: 1/ls = 1/lp + 1/lc
    const double lp = energy_match(925.7, 1560.0, EnergySolve::pump);
    CHECK(1.0 / 925.7 - 1.0 / lp - 1.0 / 1560.0 == doctest::Approx(0.0).epsilon(1e-15));

    CHECK_THROWS_AS(energy_match(2272.0, 925.7, EnergySolve::conv), DomainError);
    CHECK_THROWS_AS(energy_match(-1.0, 1560.0, EnergySolve::pump), DomainError);
    CHECK_THROWS_AS(energy_match(1560.0, 925.7, EnergySolve::pump), DomainError);
}

TEST_CASE("delta_k rejects energy-violating specs") {
    PhaseMatchSpec s = reference_spec();
    s.lambda_pump_nm = 2200.0;
    CHECK_THROWS_AS(delta_k(s, DispersionModel{}), DomainError);
}

TEST_CASE("poling period: bulk model lands within 5% of the device") {
    const double lp = energy_match(925.7, 1560.0, EnergySolve::pump);
    const double period = solve_poling_period(925.7, lp, 43.4, DispersionModel{});
    CHECK(period == doctest::Approx(26.634).epsilon(1e-3));
    CHECK(std::abs(period - 25.45) / 25.45 < 0.05);
}

TEST_CASE("calibrated model: solvers recover the device operating point") {
    const DispersionModel m = calibrated();
    const double lp = energy_match(925.0, 1560.0, EnergySolve::pump);
    CHECK(solve_poling_period(925.0, lp, 43.4, m) == doctest::Approx(25.45).epsilon(1e-6));
    CHECK(solve_temperature(925.0, lp, 25.45, m) == doctest::Approx(43.4).epsilon(1e-4));
}

TEST_CASE("solver round trip at a detuned signal wavelength") {
    const DispersionModel m = calibrated();
    const double lp = energy_match(926.0, 1560.0, EnergySolve::pump);
    const double t = solve_temperature(926.0, lp, 25.45, m, 1, 4.0, 20.0, 200.0);
    PhaseMatchSpec s;
    s.lambda_sig_nm = 926.0;
    s.lambda_pump_nm = lp;
    s.lambda_conv_nm = energy_match(926.0, lp, EnergySolve::conv);
    s.poling_period_um = 25.45;
    s.temperature_c = t;
    CHECK(std::abs(delta_k(s, m)) < 1e-3);
}

TEST_CASE("solver failure is reported with the scanned bracket") {
    const double lp = energy_match(925.0, 1560.0, EnergySolve::pump);
    CHECK_THROWS_AS(solve_temperature(925.0, lp, 20.0, DispersionModel{}), SolverError);
}

TEST_CASE("uniform index offset cancels in the wavevector mismatch") {
    // A constant added to n(lambda) drops out of delta_k through energy
    // conservation, which is why the calibration knob is an additive
    // mismatch, not an index shift.
    PhaseMatchSpec s = reference_spec();
    DispersionModel shifted;
    shifted.effective_index_offset = 0.1;
    CHECK(delta_k(s, shifted) == doctest::Approx(delta_k(s, DispersionModel{})).epsilon(1e-9));
}

TEST_CASE("conversion spectrum: signal-wavelength acceptance") {
    const DispersionModel m = calibrated();
    const auto curve =
        conversion_spectrum(reference_spec(), m, TuningAxis::signal_wavelength, 924.0, 926.0, 2001);
    REQUIRE(curve.peak_bracketed);
    REQUIRE(curve.fwhm.has_value());
    CHECK(*curve.fwhm == doctest::Approx(0.371).epsilon(5e-3));
}

TEST_CASE("conversion spectrum: temperature acceptance") {
    const DispersionModel m = calibrated();
    const auto curve =
        conversion_spectrum(reference_spec(), m, TuningAxis::temperature, 33.0, 53.0, 2001);
    REQUIRE(curve.peak_bracketed);
    REQUIRE(curve.fwhm.has_value());
    CHECK(*curve.fwhm == doctest::Approx(4.055).epsilon(5e-3));
    // peak sits at the calibration temperature
    double best_x = 0.0, best_y = -1.0;
    for (const auto& [x, y] : curve.samples)
        if (y > best_y) best_y = y, best_x = x;
    CHECK(best_x == doctest::Approx(43.4).epsilon(1e-3));
}

TEST_CASE("conversion spectrum: range that misses the peak is flagged") {
    const DispersionModel m = calibrated();
    const auto curve =
        conversion_spectrum(reference_spec(), m, TuningAxis::signal_wavelength, 926.0, 928.0, 501);
    CHECK_FALSE(curve.peak_bracketed);
}

TEST_CASE("conversion spectrum: sample count floor") {
    CHECK_THROWS_AS(conversion_spectrum(reference_spec(), calibrated(),
                                        TuningAxis::signal_wavelength, 924.0, 926.0, 3),
                    DomainError);
}

TEST_CASE("acceptance bandwidth scales as 1/L") {
    const DispersionModel m = calibrated();
    double product_ref = 0.0;
    for (double length_cm : {2.0, 4.0, 8.0}) {
        PhaseMatchSpec s = reference_spec();
        s.crystal_length_cm = length_cm;
        const auto curve =
            conversion_spectrum(s, m, TuningAxis::signal_wavelength, 924.0, 926.0, 8001);
        REQUIRE(curve.fwhm.has_value());
        const double product = *curve.fwhm * length_cm;
        if (product_ref == 0.0)
            product_ref = product;
        else
            CHECK(product == doctest::Approx(product_ref).epsilon(0.01));
    }
}
