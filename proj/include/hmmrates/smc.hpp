#pragma once

#include <vector>

#include "hmmrates/basis.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/obs_model.hpp"
#include "hmmrates/panel.hpp"
#include "hmmrates/rng.hpp"

namespace hmmrates {

// Weighted particle approximation of one filter distribution.
struct ParticleCloud {
    RowMatrix particles;  // N x p
    Vector weights;       // normalized
    Vector log_weights;   // unnormalized log-likelihood weights
    int period = 0;       // 0-based

    int size() const { return static_cast<int>(particles.rows()); }
    int dim() const { return static_cast<int>(particles.cols()); }
};

enum class Resampling { multinomial, systematic };

struct FilterOptions {
    int particles = 1000;
    Resampling resampling = Resampling::multinomial;
};

struct FilterOutput {
    std::vector<ParticleCloud> clouds;        // post-weighting, pre-resampling
    std::vector<std::vector<int>> ancestors;  // ancestors[t][k] indexes clouds[t-1]; ancestors[0] empty
    double loglik_estimate = 0.0;
    std::vector<double> ess;
};

// Bootstrap filter driven one period at a time. Particle k of period t
// draws from substreams keyed by (key, t, k), so output does not depend on
// the worker count.
class ParticleFilter {
public:
    ParticleFilter(const DesignPanel& design, const LatentParams& theta, FilterOptions options, RngKey key);

    int periods() const { return design_.periods(); }
    int period() const { return period_; }
    bool done() const { return period_ + 1 >= design_.periods(); }

    // Period 0: particles from N(nu0 + mu, A A^T).
    const ParticleCloud& initialize();
    // Resample the current cloud, propagate, reweight.
    const ParticleCloud& advance();

    const ParticleCloud& current() const { return current_; }
    const ParticleCloud& previous() const { return previous_; }
    const std::vector<int>& ancestors() const { return ancestors_; }
    const TransitionKernel& kernel() const { return kernel_; }
    double loglik_estimate() const { return loglik_; }

private:
    void weigh(ParticleCloud& cloud);

    const DesignPanel& design_;
    LatentParams theta_;
    TransitionKernel kernel_;
    FilterOptions options_;
    RngKey key_;
    int period_ = -1;
    ParticleCloud current_;
    ParticleCloud previous_;
    std::vector<int> ancestors_;
    double loglik_ = 0.0;
};

// Ancestor indices for the move into `period`. Multinomial draws use one
// substream per offspring, systematic a single shared uniform.
std::vector<int> resample_indices(const Vector& weights, Resampling scheme, RngKey key, int period);

FilterOutput bootstrap_filter(const DesignPanel& design, const LatentParams& theta, const FilterOptions& options,
                              RngKey key);
// Checks the basis rank over the panel cells first.
FilterOutput bootstrap_filter(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta, int particles,
                              RngKey key, Resampling resampling = Resampling::multinomial);

Vector filter_mean(const ParticleCloud& cloud);
// Rows follow `probs`, columns the latent components. Left-continuous inverse
// of the weighted ECDF: the smallest particle value v with F(v) >= prob.
Matrix filter_quantiles(const ParticleCloud& cloud, const std::vector<double>& probs);
double ess(const ParticleCloud& cloud);

// Shared by the filter and forecast: left-continuous weighted quantile of
// (values, weights); weights need not be normalized.
double weighted_quantile(std::vector<std::pair<double, double>> value_weight, double prob);

// Normalizes log-weights in place into `weights`; returns log(sum exp(logw)).
double normalize_log_weights(const Vector& log_weights, Vector& weights);

}  // namespace hmmrates
