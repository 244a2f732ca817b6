#pragma once

#include <iosfwd>

#include "hmmrates/smc.hpp"

namespace hmmrates {

// Smoothed sufficient statistics of the random walk:
//   S_ij = sum_{t>=2} E[d_t^i d_t^j | data],  S_i = sum_{t>=2} E[d_t^i | data],
//   E_ij = E[nu_1^i nu_1^j | data],           E_i = E[nu_1^i | data],
// with d_t = nu_t - nu_{t-1}.
struct SmoothedStats {
    Matrix S_ij;
    Vector S_i;
    Matrix E_ij;
    Vector E_i;
    int n = 0;        // periods
    int N = 0;        // particles
    int Ntilde = 0;   // backward draws per particle

    int dim() const { return static_cast<int>(S_i.size()); }
    static SmoothedStats zeros(int p, int n);
};

enum class BackwardSampler {
    direct,       // exact categorical draw, O(N) per particle
    rejection,    // accept-reject against the kernel peak, exact fallback after a trial budget
    expectation,  // no sampling: full expectation under the backward kernel (FFBSm, O(N^2))
};

struct ParisOptions {
    int particles = 1000;
    int backward_draws = 2;
    BackwardSampler sampler = BackwardSampler::direct;
    Resampling resampling = Resampling::multinomial;
    int rejection_trials = 32;  // per draw before falling back to the exact draw
};

struct ParisDiagnostics {
    double loglik_estimate = 0.0;
    std::vector<double> ess;
    long rejection_fallbacks = 0;
};

// Backward kernel probabilities over prev_cloud for one target particle:
// proportional to w_j f(target | z_j), normalized in log space.
Vector backward_categorical(const LatentParams& theta, const ParticleCloud& prev_cloud, const Vector& target);

SmoothedStats paris_smooth(const DesignPanel& design, const LatentParams& theta, const ParisOptions& options,
                           RngKey key, ParisDiagnostics* diagnostics = nullptr);
SmoothedStats paris_smooth(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta,
                           const ParisOptions& options, RngKey key);

void write_stats_json(std::ostream& out, const SmoothedStats& stats);

}  // namespace hmmrates
