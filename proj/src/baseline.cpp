#include "hmmrates/baseline.hpp"

#include <cmath>
#include <limits>

#include "hmmrates/error.hpp"
#include "hmmrates/parallel.hpp"

namespace hmmrates {

namespace {
constexpr double kGradTol = 1e-8;
constexpr int kMaxNewton = 100;
constexpr double kDivergedLogit = 25.0;
constexpr double kJitter = 1e-8;
}  // namespace

bool YearlyFit::all_converged() const {
    for (bool c : converged)
        if (!c) return false;
    return true;
}

NewtonResult maximize_period(const PeriodSlice& slice, int dim) {
    NewtonResult out;
    out.nu = Vector::Zero(dim);
    out.loglik = loglik(out.nu, slice);
    if (slice.num_cells() == 0) return out;  // flat likelihood, no information

    auto escaped = [&](const Vector& nu) {
        return (slice.design * nu).cwiseAbs().maxCoeff() > kDivergedLogit;
    };

    for (int it = 0; it < kMaxNewton; ++it) {
        auto [grad, hess] = loglik_grad_hess(out.nu, slice);
        out.iterations = it;
        if (grad.lpNorm<Eigen::Infinity>() < kGradTol) {
            out.converged = !escaped(out.nu);
            return out;
        }
        Eigen::LDLT<Matrix> ldlt(-hess);
        Vector step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) step = grad;  // fall back to ascent direction

        // near the optimum the gain of a full step drops below the rounding
        // error of l_t itself, so changes within that noise count as ascent
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(out.loglik));
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
            const Vector trial = out.nu + scale * step;
            const double ll = loglik(trial, slice);
            if (std::isfinite(ll) && ll >= out.loglik - noise) {
                out.nu = trial;
                out.loglik = ll;
                improved = true;
                break;
            }
        }
        if (!improved || escaped(out.nu)) break;
    }
    out.iterations = kMaxNewton;
    const auto [grad, hess] = loglik_grad_hess(out.nu, slice);
    out.converged = grad.lpNorm<Eigen::Infinity>() < kGradTol && !escaped(out.nu);
    return out;
}

YearlyFit fit_yearly(const CellPanel& panel, const BasisSet& basis) {
    if (!check_rank(basis, panel.cells()))
        throw UsageError("basis design is rank deficient over the panel cells");
    const DesignPanel design(panel, basis);
    const auto n = static_cast<std::size_t>(panel.periods());
    std::vector<NewtonResult> results(n);
    parallel_for(0, n, [&](std::size_t t) { results[t] = maximize_period(design.slice(static_cast<int>(t)), basis.dim()); });

    YearlyFit fit;
    for (auto& r : results) {
        fit.nu.push_back(r.nu);
        fit.converged.push_back(r.converged);
        fit.loglik.push_back(r.loglik);
        fit.iterations.push_back(r.iterations);
    }
    return fit;
}

LatentParams estimate_theta0(const YearlyFit& fit, bool* jittered) {
    const int n = fit.periods();
    if (n < 3) throw UsageError("two-step fit needs at least 3 periods (2 increments), got " + std::to_string(n));
    for (int t = 0; t < n; ++t)
        if (!fit.converged[static_cast<std::size_t>(t)])
            throw NumericalError("yearly fit did not converge in period " + std::to_string(t + 1));

    const auto p = fit.nu.front().size();
    const int m = n - 1;
    Matrix inc(m, p);
    for (int t = 1; t < n; ++t)
        inc.row(t - 1) = (fit.nu[static_cast<std::size_t>(t)] - fit.nu[static_cast<std::size_t>(t - 1)]).transpose();

    LatentParams theta;
    theta.mu = inc.colwise().mean().transpose();
    const Matrix centered = inc.rowwise() - theta.mu.transpose();
    Matrix cov = centered.transpose() * centered / static_cast<double>(m - 1);

    bool jitter = false;
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success || (llt.matrixL().toDenseMatrix().diagonal().array() <= 0.0).any()) {
        cov.diagonal().array() += kJitter;
        llt.compute(cov);
        jitter = true;
        if (llt.info() != Eigen::Success) throw NumericalError("increment covariance is not positive semidefinite");
    }
    theta.chol = llt.matrixL();
    theta.nu0 = fit.nu.front() - theta.mu;
    if (jittered) *jittered = jitter;
    return theta;
}

TwoStepResult two_step_fit(const CellPanel& panel, const BasisSet& basis) {
    TwoStepResult out;
    out.fit = fit_yearly(panel, basis);
    out.theta0 = estimate_theta0(out.fit, &out.jittered);
    return out;
}

}  // namespace hmmrates
