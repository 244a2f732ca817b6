#include "hmmrates/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmmrates/error.hpp"
#include "hmmrates/parallel.hpp"

namespace hmmrates {

double normalize_log_weights(const Vector& log_weights, Vector& weights) {
    const double peak = log_weights.maxCoeff();
    if (!std::isfinite(peak)) return -std::numeric_limits<double>::infinity();
    weights = (log_weights.array() - peak).exp();
    const double total = weights.sum();
    weights /= total;
    return peak + std::log(total);
}

ParticleFilter::ParticleFilter(const DesignPanel& design, const LatentParams& theta, FilterOptions options,
                               RngKey key)
    : design_(design), theta_(theta), kernel_(theta), options_(options), key_(key) {
    if (options_.particles < 1) throw UsageError("particle count must be positive");
    if (theta.dim() != design.dim())
        throw UsageError("latent dimension " + std::to_string(theta.dim()) + " does not match basis dimension " +
                         std::to_string(design.dim()));
    if (design.periods() < 1) throw UsageError("panel has no periods");
}

void ParticleFilter::weigh(ParticleCloud& cloud) {
    const auto n = static_cast<std::size_t>(cloud.size());
    const auto p = static_cast<std::size_t>(cloud.dim());
    const PeriodSlice& slice = design_.slice(cloud.period);
    cloud.log_weights.resize(cloud.size());
    parallel_for(0, n, [&](std::size_t k) {
        cloud.log_weights(static_cast<Eigen::Index>(k)) =
            loglik(std::span<const double>(cloud.particles.data() + k * p, p), slice);
    });
    const double log_total = normalize_log_weights(cloud.log_weights, cloud.weights);
    if (!std::isfinite(log_total))
        throw NumericalError("all particle weights underflow in period " + std::to_string(cloud.period + 1));
    loglik_ += log_total - std::log(static_cast<double>(n));
}

const ParticleCloud& ParticleFilter::initialize() {
    const int n = options_.particles;
    const int p = design_.dim();
    current_ = ParticleCloud{};
    current_.period = 0;
    current_.particles.resize(n, p);
    loglik_ = 0.0;
    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t k) {
        Stream rng(key_, StreamTag::initial, 0, k);
        kernel_.propagate(theta_.nu0.data(), rng, current_.particles.data() + k * static_cast<std::size_t>(p));
    });
    ancestors_.clear();
    weigh(current_);
    period_ = 0;
    return current_;
}

std::vector<int> resample_indices(const Vector& weights, Resampling scheme, RngKey key, int period) {
    const auto n = static_cast<int>(weights.size());
    std::vector<double> cumulative(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        acc += weights(k);
        cumulative[static_cast<std::size_t>(k)] = acc;
    }
    auto locate = [&](double u) {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * acc);
        return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), n - 1));
    };

    std::vector<int> out(static_cast<std::size_t>(n));
    if (scheme == Resampling::systematic) {
        Stream rng(key, StreamTag::resample, static_cast<std::uint64_t>(period), 0);
        const double u = rng.uniform();
        for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = locate((k + u) / n);
        return out;
    }
    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t k) {
        Stream rng(key, StreamTag::resample, static_cast<std::uint64_t>(period), k);
        out[k] = locate(rng.uniform());
    });
    return out;
}

const ParticleCloud& ParticleFilter::advance() {
    if (period_ < 0) return initialize();
    if (done()) throw UsageError("particle filter already reached the last period");
    const int next = period_ + 1;
    ancestors_ = resample_indices(current_.weights, options_.resampling, key_, next);

    ParticleCloud cloud;
    cloud.period = next;
    const int n = current_.size();
    const int p = current_.dim();
    cloud.particles.resize(n, p);
    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t k) {
        Stream rng(key_, StreamTag::propagate, static_cast<std::uint64_t>(next), k);
        const double* parent =
            current_.particles.data() + static_cast<std::size_t>(ancestors_[k]) * static_cast<std::size_t>(p);
        kernel_.propagate(parent, rng, cloud.particles.data() + k * static_cast<std::size_t>(p));
    });
    weigh(cloud);
    previous_ = std::move(current_);
    current_ = std::move(cloud);
    period_ = next;
    return current_;
}

FilterOutput bootstrap_filter(const DesignPanel& design, const LatentParams& theta, const FilterOptions& options,
                              RngKey key) {
    ParticleFilter filter(design, theta, options, key);
    FilterOutput out;
    out.clouds.push_back(filter.initialize());
    out.ancestors.emplace_back();
    out.ess.push_back(ess(filter.current()));
    while (!filter.done()) {
        out.clouds.push_back(filter.advance());
        out.ancestors.push_back(filter.ancestors());
        out.ess.push_back(ess(filter.current()));
    }
    out.loglik_estimate = filter.loglik_estimate();
    return out;
}

FilterOutput bootstrap_filter(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta, int particles,
                              RngKey key, Resampling resampling) {
    if (!check_rank(basis, panel.cells())) throw UsageError("basis design is rank deficient over the panel cells");
    const DesignPanel design(panel, basis);
    return bootstrap_filter(design, theta, FilterOptions{particles, resampling}, key);
}

Vector filter_mean(const ParticleCloud& cloud) { return cloud.particles.transpose() * cloud.weights; }

double weighted_quantile(std::vector<std::pair<double, double>> value_weight, double prob) {
    if (value_weight.empty()) throw UsageError("quantile of an empty sample");
    if (!(prob > 0.0 && prob < 1.0)) throw UsageError("quantile level must lie in (0, 1)");
    std::sort(value_weight.begin(), value_weight.end());
    double total = 0.0;
    for (const auto& vw : value_weight) total += vw.second;
    const double target = prob * total;
    double acc = 0.0;
    for (const auto& [value, weight] : value_weight) {
        acc += weight;
        if (acc >= target) return value;
    }
    return value_weight.back().first;
}

Matrix filter_quantiles(const ParticleCloud& cloud, const std::vector<double>& probs) {
    Matrix out(static_cast<Eigen::Index>(probs.size()), cloud.dim());
    std::vector<std::pair<double, double>> column(static_cast<std::size_t>(cloud.size()));
    for (int i = 0; i < cloud.dim(); ++i) {
        for (int k = 0; k < cloud.size(); ++k)
            column[static_cast<std::size_t>(k)] = {cloud.particles(k, i), cloud.weights(k)};
        std::sort(column.begin(), column.end());
        for (std::size_t q = 0; q < probs.size(); ++q)
            out(static_cast<Eigen::Index>(q), i) = weighted_quantile(column, probs[q]);
    }
    return out;
}

double ess(const ParticleCloud& cloud) { return 1.0 / cloud.weights.squaredNorm(); }

}  // namespace hmmrates
