#pragma once

#include <map>
#include <string>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc {

enum class FitModel { sin2_sqrt_power, sinc2_detuning };

// Weighted nonlinear least squares for the two curve shapes in play:
//   sin2_sqrt_power: f(P) = eta_max sin^2(L sqrt(eta_n P)),  free (eta_max, eta_n), L pinned
//   sinc2_detuning:  f(x) = A sinc^2(s (x - x0)),            free (A, x0, s)
struct FitProblem {
    FitModel model = FitModel::sin2_sqrt_power;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma;
    std::map<std::string, double> fixed;   // e.g. {"L", 4.0} (cm)
    std::vector<double> initial_guess;

    void validate() const;
    std::size_t n_params() const { return model == FitModel::sin2_sqrt_power ? 2 : 3; }
};

struct FitResult {
    std::vector<double> parameters;
    std::vector<double> errors;
    double reduced_chi2 = 0.0;
    bool converged = false;
    bool degenerate = false;  // e.g. amplitude pinned at zero by the data
    int iterations = 0;
};

// Model value and analytic Jacobian row at x for parameters theta.
double fit_model_eval(const FitProblem& problem, const std::vector<double>& theta, double x);
std::vector<double> fit_model_jacobian(const FitProblem& problem, const std::vector<double>& theta,
                                       double x);

// Damped Gauss-Newton with multiplicative damping schedule (x10 on reject,
// /10 on accept). Converges on relative parameter change < 1e-8 or gradient
// norm < 1e-10; iteration cap 200 returns a non-converged result.
FitResult fit(const FitProblem& problem);

// Worst-case deviation between the analytic Jacobian and central finite
// differences over the problem's data points, relative to the largest
// Jacobian component at each point.
double jacobian_check(const FitProblem& problem, const std::vector<double>& theta);

}  // namespace qfc
