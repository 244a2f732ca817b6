#pragma once

#include <vector>

#include "hmmrates/basis.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/obs_model.hpp"
#include "hmmrates/panel.hpp"

namespace hmmrates {

// Per-period maximum likelihood estimates of nu_t.
struct YearlyFit {
    std::vector<Vector> nu;       // one per period
    std::vector<bool> converged;
    std::vector<double> loglik;
    std::vector<int> iterations;

    int periods() const { return static_cast<int>(nu.size()); }
    bool all_converged() const;
};

struct NewtonResult {
    Vector nu;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Damped Newton ascent of one period's log-likelihood from nu = 0. Stops when
// the gradient sup-norm drops below 1e-8 or after 100 iterations. A fit whose
// linear predictor escapes past |g| > 25 is reported as not converged: the
// maximiser lies at infinity (e.g. no events at all).
NewtonResult maximize_period(const PeriodSlice& slice, int dim);

// Requires a full-rank design over the panel's cells.
YearlyFit fit_yearly(const CellPanel& panel, const BasisSet& basis);

// Random-walk-with-drift fit to the yearly estimates: drift = mean increment,
// A A^T = increment sample covariance (denominator n - 2), nu0 = nu_1 - drift.
// A singular covariance gets 1e-8 added to its diagonal; `jittered` reports it.
LatentParams estimate_theta0(const YearlyFit& fit, bool* jittered = nullptr);

struct TwoStepResult {
    YearlyFit fit;
    LatentParams theta0;
    bool jittered = false;
};

TwoStepResult two_step_fit(const CellPanel& panel, const BasisSet& basis);

}  // namespace hmmrates
