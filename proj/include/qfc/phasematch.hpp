#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc {

// Extraordinary index of congruent LiNbO3 with temperature dependence
// (Sellmeier form n^2 = a1 + b1 f + (a2 + b2 f)/(l^2-(a3+b3 f)^2)
//  + (a4 + b4 f)/(l^2 - a5^2) - a6 l^2, f = (T-24.5)(T+570.82), l in um).
// Bulk indices stand in for the waveguide's effective indices; a constant
// phase-mismatch offset (rad/m) absorbs the difference at the calibration
// point. Note that an additive index offset applied to all three waves
// cancels exactly in delta_k through energy conservation, which is why the
// calibration knob acts on delta_k and not on n.
struct DispersionModel {
    std::array<double, 6> a{5.35583, 0.100473, 0.20692, 100.0, 11.34927, 1.5334e-2};
    std::array<double, 4> b{4.629e-7, 3.862e-8, -0.89e-8, 2.657e-5};
    double effective_index_offset = 0.0;  // added to every returned index
    double phase_mismatch_offset = 0.0;   // rad/m, added to delta_k

    static constexpr double kLambdaMinNm = 400.0;
    static constexpr double kLambdaMaxNm = 4000.0;
};

struct PhaseMatchSpec {
    double lambda_sig_nm = 0.0;
    double lambda_pump_nm = 0.0;
    double lambda_conv_nm = 0.0;
    double poling_period_um = 25.45;
    double temperature_c = 43.4;
    double crystal_length_cm = 4.0;
    int qpm_order = 1;

    // |1/ls - 1/lp - 1/lc| in 1/nm; must be < 1e-9 for a valid spec.
    double energy_mismatch() const;
    void validate() const;
};

enum class TuningAxis { temperature, signal_wavelength, pump_wavelength };

struct TuningCurve {
    TuningAxis axis = TuningAxis::temperature;
    std::vector<std::pair<double, double>> samples;  // (x, relative efficiency)
    std::optional<double> fwhm;                      // unset if peak not bracketed
    bool peak_bracketed = true;
};

double refractive_index(double lambda_nm, double temperature_c, const DispersionModel& model);

enum class EnergySolve { conv, pump };

// Third wavelength from 1/l_sig - 1/l_pump = 1/l_conv.
double energy_match(double lambda_a_nm, double lambda_b_nm, EnergySolve solve_for);

// delta_k = k_sig - k_pump - k_conv - qpm_order*2*pi/poling_period
// + model.phase_mismatch_offset, in rad/m. Zero at quasi-phase matching.
double delta_k(const PhaseMatchSpec& spec, const DispersionModel& model);

// Poling period (um) giving delta_k = 0, |delta_k| < 1e-3 rad/m,
// bracketed on [5, 50] um.
double solve_poling_period(double lambda_sig_nm, double lambda_pump_nm, double temperature_c,
                           const DispersionModel& model, int qpm_order = 1,
                           double crystal_length_cm = 4.0);

// Temperature (C) giving delta_k = 0, bracketed on [20, 200] C.
// The search window is widened on request for detuned configurations.
double solve_temperature(double lambda_sig_nm, double lambda_pump_nm, double poling_period_um,
                         const DispersionModel& model, int qpm_order = 1,
                         double crystal_length_cm = 4.0, double t_min_c = 20.0,
                         double t_max_c = 200.0);

// sinc^2(delta_k L / 2) swept along one axis. The off-axis quantities follow
// energy conservation: sweeping the signal holds the pump fixed and moves the
// converted wavelength; sweeping the pump holds the signal fixed.
TuningCurve conversion_spectrum(const PhaseMatchSpec& spec, const DispersionModel& model,
                                TuningAxis axis, double range_lo, double range_hi, int n_samples);

// Full width at half maximum of the central lobe (side lobes excluded by
// walking outward from the global peak to the first half-crossings).
double fwhm(const TuningCurve& curve);

// CSV with header "x,relative_efficiency", one row per sample, LF endings.
void write_tuning_curve_csv(const TuningCurve& curve, const std::string& path);

}  // namespace qfc
