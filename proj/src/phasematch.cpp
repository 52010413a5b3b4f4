#include "qfc/phasematch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace qfc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDeltaKTol = 1e-3;  // rad/m

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

double wavevector(double lambda_nm, double temperature_c, const DispersionModel& model) {
    return kTwoPi * refractive_index(lambda_nm, temperature_c, model) / (lambda_nm * 1e-9);
}

// Bisection on a pre-located sign change. f must be continuous on [lo, hi].
double bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
              double ytol) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) < ytol) return mid;
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Scan [lo, hi] in fixed steps, bisect on the first sign change.
double scan_and_bisect(const std::function<double(double)>& f, double lo, double hi, double step,
                       double ytol, const std::string& what) {
    double x0 = lo;
    double f0 = f(x0);
    if (std::abs(f0) < ytol) return x0;
    for (double x1 = lo + step; x1 <= hi + 0.5 * step; x1 += step) {
        const double xc = std::min(x1, hi);
        const double f1 = f(xc);
        if (std::abs(f1) < ytol) return xc;
        if ((f0 < 0.0) != (f1 < 0.0)) return bisect(f, x0, xc, f0, ytol);
        x0 = xc;
        f0 = f1;
        if (xc >= hi) break;
    }
    std::ostringstream oss;
    oss << "no " << what << " root in [" << lo << ", " << hi << "]: delta_k spans " << f(lo)
        << " .. " << f(hi) << " rad/m without sign change";
    throw SolverError(oss.str());
}

}  // namespace

double PhaseMatchSpec::energy_mismatch() const {
    return std::abs(1.0 / lambda_sig_nm - 1.0 / lambda_pump_nm - 1.0 / lambda_conv_nm);
}

void PhaseMatchSpec::validate() const {
    if (lambda_sig_nm <= 0 || lambda_pump_nm <= 0 || lambda_conv_nm <= 0)
        throw DomainError("phasematch: wavelengths must be positive");
    if (crystal_length_cm <= 0) throw DomainError("phasematch: crystal_length must be positive");
    if (poling_period_um <= 0) throw DomainError("phasematch: poling_period must be positive");
    if (energy_mismatch() >= 1e-9)
        throw DomainError("phasematch: wavelengths violate energy conservation (|1/ls-1/lp-1/lc| = " +
                          std::to_string(energy_mismatch()) + " 1/nm)");
}

double refractive_index(double lambda_nm, double temperature_c, const DispersionModel& model) {
    if (!(lambda_nm >= DispersionModel::kLambdaMinNm && lambda_nm <= DispersionModel::kLambdaMaxNm)) {
        std::ostringstream oss;
        oss << "refractive_index: wavelength " << lambda_nm << " nm outside validity window ["
            << DispersionModel::kLambdaMinNm << ", " << DispersionModel::kLambdaMaxNm << "] nm";
        throw RangeError(oss.str());
    }
    const double l = lambda_nm * 1e-3;  // um
    const double l2 = l * l;
    const double f = (temperature_c - 24.5) * (temperature_c + 570.82);
    const auto& a = model.a;
    const auto& b = model.b;
    const double res = a[2] + b[2] * f;
    const double n2 = a[0] + b[0] * f + (a[1] + b[1] * f) / (l2 - res * res) +
                      (a[3] + b[3] * f) / (l2 - a[4] * a[4]) - a[5] * l2;
    if (!(n2 > 0.0)) throw RangeError("refractive_index: Sellmeier form non-physical at this input");
    return std::sqrt(n2) + model.effective_index_offset;
}

double energy_match(double lambda_a_nm, double lambda_b_nm, EnergySolve solve_for) {
    if (lambda_a_nm <= 0 || lambda_b_nm <= 0)
        throw DomainError("energy_match: wavelengths must be positive");
    if (solve_for == EnergySolve::conv && !(lambda_a_nm < lambda_b_nm))
        throw DomainError("energy_match: signal wavelength must lie below the pump");
    // lambda_a is the signal; lambda_b is the pump (solve_for=conv) or the
    // converted wavelength (solve_for=pump).
    const double inv = 1.0 / lambda_a_nm - 1.0 / lambda_b_nm;
    if (inv <= 0.0)
        throw DomainError("energy_match: signal must carry more energy than the longer wave "
                          "(1/l_sig - 1/l_other <= 0)");
    return 1.0 / inv;
}

double delta_k(const PhaseMatchSpec& spec, const DispersionModel& model) {
    spec.validate();
    const double ks = wavevector(spec.lambda_sig_nm, spec.temperature_c, model);
    const double kp = wavevector(spec.lambda_pump_nm, spec.temperature_c, model);
    const double kc = wavevector(spec.lambda_conv_nm, spec.temperature_c, model);
    const double grating = spec.qpm_order * kTwoPi / (spec.poling_period_um * 1e-6);
    return ks - kp - kc - grating + model.phase_mismatch_offset;
}

double solve_poling_period(double lambda_sig_nm, double lambda_pump_nm, double temperature_c,
                           const DispersionModel& model, int qpm_order, double crystal_length_cm) {
    PhaseMatchSpec spec;
    spec.lambda_sig_nm = lambda_sig_nm;
    spec.lambda_pump_nm = lambda_pump_nm;
    spec.lambda_conv_nm = energy_match(lambda_sig_nm, lambda_pump_nm, EnergySolve::conv);
    spec.temperature_c = temperature_c;
    spec.qpm_order = qpm_order;
    spec.crystal_length_cm = crystal_length_cm;
    auto f = [&](double period_um) {
        spec.poling_period_um = period_um;
        return delta_k(spec, model);
    };
    return scan_and_bisect(f, 5.0, 50.0, 0.5, kDeltaKTol, "poling period");
}

double solve_temperature(double lambda_sig_nm, double lambda_pump_nm, double poling_period_um,
                         const DispersionModel& model, int qpm_order, double crystal_length_cm,
                         double t_min_c, double t_max_c) {
    PhaseMatchSpec spec;
    spec.lambda_sig_nm = lambda_sig_nm;
    spec.lambda_pump_nm = lambda_pump_nm;
    spec.lambda_conv_nm = energy_match(lambda_sig_nm, lambda_pump_nm, EnergySolve::conv);
    spec.poling_period_um = poling_period_um;
    spec.qpm_order = qpm_order;
    spec.crystal_length_cm = crystal_length_cm;
    auto f = [&](double t) {
        spec.temperature_c = t;
        return delta_k(spec, model);
    };
    return scan_and_bisect(f, t_min_c, t_max_c, 2.0, kDeltaKTol, "temperature");
}

TuningCurve conversion_spectrum(const PhaseMatchSpec& spec, const DispersionModel& model,
                                TuningAxis axis, double range_lo, double range_hi, int n_samples) {
    if (n_samples < 16) throw DomainError("conversion_spectrum: n_samples must be >= 16");
    if (!(range_hi > range_lo)) throw DomainError("conversion_spectrum: empty range");
    spec.validate();

    const double half_arg = spec.crystal_length_cm * 1e-2 / 2.0;
    auto efficiency = [&](double x) {
        PhaseMatchSpec s = spec;
        switch (axis) {
            case TuningAxis::temperature:
                s.temperature_c = x;
                break;
            case TuningAxis::signal_wavelength:
                s.lambda_sig_nm = x;
                s.lambda_conv_nm = energy_match(x, s.lambda_pump_nm, EnergySolve::conv);
                break;
            case TuningAxis::pump_wavelength:
                s.lambda_pump_nm = x;
                s.lambda_conv_nm = energy_match(s.lambda_sig_nm, x, EnergySolve::conv);
                break;
        }
        const double u = sinc(delta_k(s, model) * half_arg);
        return u * u;
    };

    TuningCurve curve;
    curve.axis = axis;
    curve.samples.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double x = range_lo + (range_hi - range_lo) * i / (n_samples - 1);
        curve.samples.emplace_back(x, efficiency(x));
    }

    // The range brackets the peak when the maximum is strictly interior and
    // the curve falls below half maximum on both sides of it.
    const auto peak = std::max_element(
        curve.samples.begin(), curve.samples.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    const std::size_t pi = static_cast<std::size_t>(peak - curve.samples.begin());
    curve.peak_bracketed = pi > 0 && pi + 1 < curve.samples.size();
    if (curve.peak_bracketed) {
        try {
            curve.fwhm = fwhm(curve);
        } catch (const SolverError&) {
            curve.peak_bracketed = false;
        }
    }
    return curve;
}

double fwhm(const TuningCurve& curve) {
    const auto& s = curve.samples;
    if (s.size() < 3) throw SolverError("fwhm: too few samples");
    std::size_t pi = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].second > s[pi].second) pi = i;
    if (pi == 0 || pi + 1 == s.size())
        throw SolverError("fwhm: peak not strictly inside the sampled range");
    const double half = 0.5 * s[pi].second;

    // Walk outward from the peak to the first half-crossing on each side so
    // that sinc^2 side lobes are not swallowed by a global half-level scan.
    auto cross = [&](int dir) -> double {
        std::size_t i = pi;
        for (;;) {
            const std::size_t j = i + dir;
            if (j >= s.size())  // wraps for dir = -1 at 0 as well
                throw SolverError("fwhm: half level never crossed on one side of the peak");
            if (s[j].second <= half) {
                const double x0 = s[i].first, y0 = s[i].second;
                const double x1 = s[j].first, y1 = s[j].second;
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0);
            }
            i = j;
        }
    };
    const double left = cross(-1);
    const double right = cross(+1);
    return std::abs(right - left);
}

void write_tuning_curve_csv(const TuningCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("tuning curve: cannot open " + path);
    out << "x,relative_efficiency\n";
    out.precision(12);
    for (const auto& [x, y] : curve.samples) out << x << "," << y << "\n";
}

}  // namespace qfc
