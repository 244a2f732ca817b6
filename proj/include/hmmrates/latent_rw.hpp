#pragma once

#include <string>
#include <vector>

#include "hmmrates/linalg.hpp"
#include "hmmrates/rng.hpp"

namespace hmmrates {

// Largest latent dimension the transition kernel supports.
inline constexpr int kMaxLatentDim = 64;

// theta = (mu, A, nu0) of the random walk nu_t = nu_{t-1} + mu + A z_t.
struct LatentParams {
    Vector mu;
    Matrix chol;  // lower-triangular, positive diagonal
    Vector nu0;

    int dim() const { return static_cast<int>(mu.size()); }
    Matrix covariance() const { return chol * chol.transpose(); }
    // sqrt(diag(A A^T))
    Vector volatility() const;

    // p(p+1)/2 + 2p
    static int free_parameter_count(int p) { return p * (p + 1) / 2 + 2 * p; }
};

// Empty iff theta satisfies its invariants.
std::vector<std::string> validate(const LatentParams& theta);
// Throws UsageError listing the violations.
void require_valid(const LatentParams& theta);

double transition_logdensity(const LatentParams& theta, const Vector& prev, const Vector& next);
Vector sample_transition(const LatentParams& theta, const Vector& prev, Stream& rng);

// Precomputed Gaussian kernel for hot loops over raw particle rows. Assumes a
// validated theta and finite inputs.
class TransitionKernel {
public:
    explicit TransitionKernel(const LatentParams& theta);

    int dim() const { return dim_; }
    // log f(next | prev)
    double log_density(const double* prev, const double* next) const;
    // log f(next | prev) minus its maximum over next; always <= 0.
    double log_ratio_to_peak(const double* prev, const double* next) const;
    double log_peak() const { return log_norm_; }
    // out = prev + mu + A z
    void propagate(const double* prev, Stream& rng, double* out) const;

private:
    int dim_;
    std::vector<double> chol_;  // row-major lower triangle, full p x p storage
    std::vector<double> inv_diag_;
    std::vector<double> mu_;
    double log_norm_;  // -sum log A_ii - p/2 log 2 pi
};

}  // namespace hmmrates
