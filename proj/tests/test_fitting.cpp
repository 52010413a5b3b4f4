#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "qfc/fitting.hpp"
#include "qfc/rng.hpp"

using namespace qfc;

namespace {

FitProblem power_sweep(double eta_max, double eta_n, double noise_frac, std::uint64_t seed) {
    FitProblem p;
    p.model = FitModel::sin2_sqrt_power;
    p.fixed["L"] = 4.0;
    Rng rng(seed, 0);
    for (int i = 0; i < 20; ++i) {
        const double power = 0.02 + 0.02 * i;  // 20..400 mW
        const double s = std::sin(4.0 * std::sqrt(eta_n * power));
        const double y = eta_max * s * s;
        const double sigma = std::max(noise_frac * eta_max, 1e-6);
        p.x.push_back(power);
        p.y.push_back(y + (noise_frac > 0 ? sigma * rng.normal() : 0.0));
        p.sigma.push_back(sigma);
    }
    p.initial_guess = {0.3, 0.3};
    return p;
}

FitProblem detuning_scan(double amp, double x0, double scale, double noise_frac,
                         std::uint64_t seed) {
    FitProblem p;
    p.model = FitModel::sinc2_detuning;
    Rng rng(seed, 0);
    for (int i = 0; i < 41; ++i) {
        const double x = x0 - 1.0 + 0.05 * i;
        const double z = scale * (x - x0);
        const double s = std::abs(z) < 1e-12 ? 1.0 : std::sin(z) / z;
        const double sigma = std::max(noise_frac * amp, 1e-6);
        p.x.push_back(x);
        p.y.push_back(amp * s * s + (noise_frac > 0 ? sigma * rng.normal() : 0.0));
        p.sigma.push_back(sigma);
    }
    p.initial_guess = {amp * 0.7, x0 + 0.1, scale * 1.3};
    return p;
}

}  // namespace

TEST_CASE("noiseless power sweep recovers the generator exactly") {
    const auto r = fit(power_sweep(0.484, 0.54109674, 0.0, 1));
    REQUIRE(r.converged);
    CHECK_FALSE(r.degenerate);
    CHECK(r.parameters[0] == doctest::Approx(0.484).epsilon(1e-6));
    CHECK(r.parameters[1] == doctest::Approx(0.54109674).epsilon(1e-6));
}

TEST_CASE("3% noise keeps both parameters within a few percent") {
    const auto r = fit(power_sweep(0.484, 0.54109674, 0.03, 42));
    REQUIRE(r.converged);
    CHECK(r.parameters[0] == doctest::Approx(0.484).epsilon(0.03));
    CHECK(r.parameters[1] == doctest::Approx(0.54109674).epsilon(0.05));
    CHECK(r.reduced_chi2 < 3.0);
    CHECK(r.errors[0] > 0.0);
    CHECK(r.errors[0] < 0.05);
}

TEST_CASE("noiseless detuning scan recovers the generator") {
    const auto r = fit(detuning_scan(1.7, 925.0, 8.0, 0.0, 1));
    REQUIRE(r.converged);
    CHECK(r.parameters[0] == doctest::Approx(1.7).epsilon(1e-6));
    CHECK(r.parameters[1] == doctest::Approx(925.0).epsilon(1e-8));
    CHECK(r.parameters[2] == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("noisy detuning scan") {
    const auto r = fit(detuning_scan(1.7, 925.0, 8.0, 0.02, 9));
    REQUIRE(r.converged);
    CHECK(r.parameters[0] == doctest::Approx(1.7).epsilon(0.05));
    CHECK(r.parameters[1] == doctest::Approx(925.0).epsilon(1e-4));
}

TEST_CASE("refitting from the solution terminates immediately") {
    auto p = power_sweep(0.484, 0.54109674, 0.0, 1);
    auto r = fit(p);
    p.initial_guess = r.parameters;
    r = fit(p);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
}

TEST_CASE("all-zero data degenerates instead of inventing parameters") {
    FitProblem p = power_sweep(0.484, 0.54109674, 0.0, 1);
    for (auto& y : p.y) y = 0.0;
    p.initial_guess = {0.0, 0.5};
    const auto r = fit(p);
    // amplitude pinned at zero leaves eta_n unconstrained
    CHECK(r.parameters[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(r.degenerate);
    CHECK(std::isinf(r.errors[1]));
}

TEST_CASE("analytic jacobians agree with finite differences") {
    const auto p1 = power_sweep(0.484, 0.54109674, 0.0, 1);
    CHECK(jacobian_check(p1, {0.4, 0.4}) < 1e-5);
    CHECK(jacobian_check(p1, {0.4, 0.0}) < 1e-5);    // series branch at eta_n = 0
    CHECK(jacobian_check(p1, {0.4, -0.2}) < 1e-5);   // analytic continuation below 0

    // centered near zero so the finite-difference step is not dominated by
    // the magnitude of x0 itself
    const auto p2 = detuning_scan(1.7, 0.25, 8.0, 0.0, 1);
    CHECK(jacobian_check(p2, {1.5, 0.3, 7.0}) < 1e-5);
    CHECK(jacobian_check(p2, {1.5, 0.25, 0.01}) < 1e-5);  // sinc series branch
}

TEST_CASE("problem validation") {
    FitProblem p = power_sweep(0.484, 0.54109674, 0.0, 1);
    p.x.resize(3);
    p.y.resize(3);
    p.sigma.resize(3);
    CHECK_THROWS_AS(fit(p), DomainError);  // too few points

    p = power_sweep(0.484, 0.54109674, 0.0, 1);
    p.sigma[4] = 0.0;
    CHECK_THROWS_AS(fit(p), DomainError);

    p = power_sweep(0.484, 0.54109674, 0.0, 1);
    p.fixed.clear();
    CHECK_THROWS_AS(fit(p), DomainError);  // L not pinned

    p = power_sweep(0.484, 0.54109674, 0.0, 1);
    p.initial_guess = {0.3};
    CHECK_THROWS_AS(fit(p), DomainError);
}
