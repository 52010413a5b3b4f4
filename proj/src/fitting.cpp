#include "qfc/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qfc {

namespace {

// S(z) = sin^2(sqrt(z)) continued smoothly to z < 0 (-sinh^2(sqrt(-z))),
// so the solver can cross eta_n = 0 without NaNs.
double sin2_of(double z) {
    if (z > 1e-8) {
        const double s = std::sin(std::sqrt(z));
        return s * s;
    }
    if (z < -1e-8) {
        const double s = std::sinh(std::sqrt(-z));
        return -s * s;
    }
    return z - z * z / 3.0;  // series of both branches
}

double sin2_of_deriv(double z) {
    if (z > 1e-8) {
        const double r = std::sqrt(z);
        return std::sin(2.0 * r) / (2.0 * r);
    }
    if (z < -1e-8) {
        const double r = std::sqrt(-z);
        return std::sinh(2.0 * r) / (2.0 * r);
    }
    return 1.0 - 2.0 * z / 3.0;
}

double sinc(double z) {
    if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0 + z * z * z * z / 120.0;
    return std::sin(z) / z;
}

double sinc_deriv(double z) {
    if (std::abs(z) < 1e-4) return -z / 3.0 + z * z * z / 30.0;
    return (std::cos(z) - sinc(z)) / z;
}

double pinned_length(const FitProblem& p) {
    const auto it = p.fixed.find("L");
    if (it == p.fixed.end())
        throw DomainError("fit: sin2_sqrt_power requires the crystal length pinned (fixed[\"L\"])");
    if (!(it->second > 0)) throw DomainError("fit: pinned L must be positive");
    return it->second;
}

// Solves A x = b in place (n <= 3), partial pivoting. Returns false when the
// matrix is numerically singular.
bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const std::size_t n = b.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i][i]));
    if (scale <= 0.0) return false;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
        if (std::abs(a[piv][col]) < 1e-14 * scale) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t row = col + 1; row < n; ++row) {
            const double f = a[row][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[row][k] -= f * a[col][k];
            b[row] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * b[k];
        b[i] = s / a[i][i];
    }
    return true;
}

double chi2_of(const FitProblem& p, const std::vector<double>& theta) {
    double chi2 = 0.0;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        const double r = (p.y[i] - fit_model_eval(p, theta, p.x[i])) / p.sigma[i];
        chi2 += r * r;
    }
    return chi2;
}

}  // namespace

void FitProblem::validate() const {
    if (x.size() != y.size() || x.size() != sigma.size())
        throw DomainError("fit: x, y, sigma must have equal length");
    if (x.size() < n_params() + 2)
        throw DomainError("fit: need at least " + std::to_string(n_params() + 2) + " data points");
    for (double s : sigma)
        if (!(s > 0)) throw DomainError("fit: sigma values must be positive");
    if (initial_guess.size() != n_params())
        throw DomainError("fit: initial guess must have " + std::to_string(n_params()) +
                          " parameters");
    for (double t : initial_guess)
        if (!std::isfinite(t)) throw DomainError("fit: initial guess must be finite");
    if (model == FitModel::sin2_sqrt_power) pinned_length(*this);
}

double fit_model_eval(const FitProblem& problem, const std::vector<double>& theta, double x) {
    if (problem.model == FitModel::sin2_sqrt_power) {
        const double length = pinned_length(problem);
        return theta[0] * sin2_of(length * length * theta[1] * x);
    }
    const double z = theta[2] * (x - theta[1]);
    const double s = sinc(z);
    return theta[0] * s * s;
}

std::vector<double> fit_model_jacobian(const FitProblem& problem, const std::vector<double>& theta,
                                       double x) {
    if (problem.model == FitModel::sin2_sqrt_power) {
        const double length = pinned_length(problem);
        const double l2x = length * length * x;
        const double z = l2x * theta[1];
        return {sin2_of(z), theta[0] * sin2_of_deriv(z) * l2x};
    }
    const double dx = x - theta[1];
    const double z = theta[2] * dx;
    const double s = sinc(z);
    const double cprime = 2.0 * s * sinc_deriv(z);
    return {s * s, -theta[0] * cprime * theta[2], theta[0] * cprime * dx};
}

FitResult fit(const FitProblem& problem) {
    problem.validate();
    const std::size_t np = problem.n_params();
    const std::size_t nd = problem.x.size();

    std::vector<double> theta = problem.initial_guess;
    double chi2 = chi2_of(problem, theta);

    FitResult result;
    double damping = -1.0;  // initialized from the first normal matrix

    for (result.iterations = 0; result.iterations < 200; ++result.iterations) {
        // normal equations J^T W J, J^T W r
        std::vector<std::vector<double>> jtj(np, std::vector<double>(np, 0.0));
        std::vector<double> jtr(np, 0.0);
        double grad_norm2 = 0.0;
        for (std::size_t i = 0; i < nd; ++i) {
            const auto jrow = fit_model_jacobian(problem, theta, problem.x[i]);
            const double w = 1.0 / (problem.sigma[i] * problem.sigma[i]);
            const double r = problem.y[i] - fit_model_eval(problem, theta, problem.x[i]);
            for (std::size_t a = 0; a < np; ++a) {
                jtr[a] += w * jrow[a] * r;
                for (std::size_t b_ = a; b_ < np; ++b_) jtj[a][b_] += w * jrow[a] * jrow[b_];
            }
        }
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b_ = 0; b_ < a; ++b_) jtj[a][b_] = jtj[b_][a];
        for (std::size_t a = 0; a < np; ++a) grad_norm2 += jtr[a] * jtr[a];
        if (std::sqrt(grad_norm2) < 1e-10) {
            result.converged = true;
            break;
        }

        double max_diag = 0.0;
        for (std::size_t a = 0; a < np; ++a) max_diag = std::max(max_diag, jtj[a][a]);
        if (damping < 0.0) damping = 1e-3 * max_diag;

        // try a damped step; inflate damping until the step is accepted
        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            auto a = jtj;
            auto step = jtr;
            for (std::size_t d = 0; d < np; ++d) a[d][d] += damping;
            if (!solve_linear(a, step)) {
                if (damping <= 0.0 || max_diag <= 0.0)
                    throw SolverError("fit: singular normal equations (rank-deficient model)");
                damping = std::max(damping * 10.0, 1e-12 * std::max(max_diag, 1.0));
                continue;
            }
            std::vector<double> trial(np);
            for (std::size_t d = 0; d < np; ++d) trial[d] = theta[d] + step[d];
            const double trial_chi2 = chi2_of(problem, trial);
            if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
                double rel_change = 0.0;
                for (std::size_t d = 0; d < np; ++d)
                    rel_change = std::max(rel_change,
                                          std::abs(step[d]) / std::max(1e-300, std::abs(trial[d])));
                theta = trial;
                chi2 = trial_chi2;
                damping /= 10.0;
                accepted = true;
                if (rel_change < 1e-8) result.converged = true;
            } else {
                damping *= 10.0;
            }
        }
        if (!accepted || result.converged) break;
    }

    result.parameters = theta;
    const double dof = static_cast<double>(nd > np ? nd - np : 1);
    result.reduced_chi2 = chi2 / dof;

    // parameter errors from the inverse undamped normal matrix, scaled by
    // reduced chi^2
    std::vector<std::vector<double>> jtj(np, std::vector<double>(np, 0.0));
    for (std::size_t i = 0; i < nd; ++i) {
        const auto jrow = fit_model_jacobian(problem, theta, problem.x[i]);
        const double w = 1.0 / (problem.sigma[i] * problem.sigma[i]);
        for (std::size_t a = 0; a < np; ++a)
            for (std::size_t b_ = 0; b_ < np; ++b_) jtj[a][b_] += w * jrow[a] * jrow[b_];
    }
    result.errors.assign(np, 0.0);
    for (std::size_t col = 0; col < np; ++col) {
        auto a = jtj;
        std::vector<double> e(np, 0.0);
        e[col] = 1.0;
        if (!solve_linear(a, e)) {
            result.degenerate = true;
            result.errors.assign(np, std::numeric_limits<double>::infinity());
            break;
        }
        result.errors[col] = std::sqrt(std::max(0.0, e[col]) * result.reduced_chi2);
    }
    return result;
}

double jacobian_check(const FitProblem& problem, const std::vector<double>& theta) {
    const std::size_t np = problem.n_params();
    double worst = 0.0;
    for (double x : problem.x) {
        const auto analytic = fit_model_jacobian(problem, theta, x);
        double row_norm = 0.0;
        for (std::size_t p = 0; p < np; ++p) row_norm = std::max(row_norm, std::abs(analytic[p]));
        for (std::size_t p = 0; p < np; ++p) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[p]));
            auto tp = theta;
            tp[p] += h;
            auto tm = theta;
            tm[p] -= h;
            const double fd = (fit_model_eval(problem, tp, x) - fit_model_eval(problem, tm, x)) /
                              (2.0 * h);
            // deviations are measured against the row magnitude: tiny
            // components near peaks or zeros otherwise amplify plain
            // finite-difference rounding noise into spurious alarms
            const double scale = std::max({row_norm, std::abs(fd), 1e-12});
            worst = std::max(worst, std::abs(analytic[p] - fd) / scale);
        }
    }
    return worst;
}

}  // namespace qfc
