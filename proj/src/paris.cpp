#include "hmmrates/paris.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "hmmrates/error.hpp"
#include "hmmrates/parallel.hpp"

namespace hmmrates {

SmoothedStats SmoothedStats::zeros(int p, int n) {
    SmoothedStats s;
    s.S_ij = Matrix::Zero(p, p);
    s.S_i = Vector::Zero(p);
    s.E_ij = Matrix::Zero(p, p);
    s.E_i = Vector::Zero(p);
    s.n = n;
    return s;
}

namespace {

// Per-particle statistic tau packed as [S_ij (p*p), S_i (p), E_ij (p*p), E_i (p)].
struct Layout {
    std::size_t p;
    std::size_t s_ij() const { return 0; }
    std::size_t s_i() const { return p * p; }
    std::size_t e_ij() const { return p * p + p; }
    std::size_t e_i() const { return 2 * p * p + p; }
    std::size_t size() const { return 2 * p * p + 2 * p; }
};

// tau += h_t(prev, next) for t >= 2: increments go to the S blocks.
void add_increment_term(const Layout& lay, const double* prev, const double* next, double* tau) {
    std::array<double, kMaxLatentDim> d;
    for (std::size_t i = 0; i < lay.p; ++i) d[i] = next[i] - prev[i];
    for (std::size_t i = 0; i < lay.p; ++i) {
        tau[lay.s_i() + i] += d[i];
        for (std::size_t j = 0; j < lay.p; ++j) tau[lay.s_ij() + i * lay.p + j] += d[i] * d[j];
    }
}

std::vector<double> cumulative_of(const Vector& w) {
    std::vector<double> c(static_cast<std::size_t>(w.size()));
    double acc = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        acc += w(k);
        c[static_cast<std::size_t>(k)] = acc;
    }
    return c;
}

int draw_from(const std::vector<double>& cumulative, double u) {
    const double target = u * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                     static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

// Backward probabilities into `probs` for target row `next`. Returns false if all vanish.
bool backward_probs(const TransitionKernel& kernel, const ParticleCloud& prev, const double* next,
                    std::vector<double>& probs) {
    const auto n = static_cast<std::size_t>(prev.size());
    const auto p = static_cast<std::size_t>(prev.dim());
    probs.resize(n);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        const double w = prev.weights(static_cast<Eigen::Index>(j));
        const double lp = w > 0.0 ? std::log(w) + kernel.log_ratio_to_peak(prev.particles.data() + j * p, next)
                                  : -std::numeric_limits<double>::infinity();
        probs[j] = lp;
        peak = std::max(peak, lp);
    }
    if (!std::isfinite(peak)) return false;
    double total = 0.0;
    for (auto& v : probs) {
        v = std::exp(v - peak);
        total += v;
    }
    for (auto& v : probs) v /= total;
    return true;
}

}  // namespace

Vector backward_categorical(const LatentParams& theta, const ParticleCloud& prev_cloud, const Vector& target) {
    if (target.size() != prev_cloud.dim()) throw UsageError("backward_categorical: dimension mismatch");
    const TransitionKernel kernel(theta);
    std::vector<double> probs;
    if (!backward_probs(kernel, prev_cloud, target.data(), probs))
        throw NumericalError("backward kernel weights underflow for every particle");
    return Eigen::Map<Vector>(probs.data(), static_cast<Eigen::Index>(probs.size()));
}

SmoothedStats paris_smooth(const DesignPanel& design, const LatentParams& theta, const ParisOptions& options,
                           RngKey key, ParisDiagnostics* diagnostics) {
    if (options.backward_draws < 2 && options.sampler != BackwardSampler::expectation)
        throw UsageError("PaRIS needs at least 2 backward draws per particle");
    if (options.particles < options.backward_draws && options.sampler != BackwardSampler::expectation)
        throw UsageError("particle count must be at least the number of backward draws");

    ParticleFilter filter(design, theta, FilterOptions{options.particles, options.resampling}, key);
    const TransitionKernel& kernel = filter.kernel();
    const Layout lay{static_cast<std::size_t>(design.dim())};
    const std::size_t dim_tau = lay.size();
    const auto n_particles = static_cast<std::size_t>(options.particles);
    const std::size_t p = lay.p;

    ParisDiagnostics diag;
    std::vector<double> tau(n_particles * dim_tau, 0.0);
    {
        const ParticleCloud& first = filter.initialize();
        diag.ess.push_back(ess(first));
        for (std::size_t k = 0; k < n_particles; ++k) {
            const double* z = first.particles.data() + k * p;
            double* t = tau.data() + k * dim_tau;
            for (std::size_t i = 0; i < p; ++i) {
                t[lay.e_i() + i] = z[i];
                for (std::size_t j = 0; j < p; ++j) t[lay.e_ij() + i * p + j] = z[i] * z[j];
            }
        }
    }

    std::vector<double> next_tau(n_particles * dim_tau);
    std::vector<long> fallbacks(n_particles, 0);
    const int ntilde = options.backward_draws;
    while (!filter.done()) {
        const ParticleCloud& cur = filter.advance();
        const ParticleCloud& prev = filter.previous();
        const int t = cur.period;
        diag.ess.push_back(ess(cur));
        const std::vector<double> prev_cumulative = cumulative_of(prev.weights);

        parallel_for(0, n_particles, [&](std::size_t i) {
            const double* target = cur.particles.data() + i * p;
            double* out = next_tau.data() + i * dim_tau;
            std::fill(out, out + dim_tau, 0.0);
            std::vector<double> probs;

            if (options.sampler == BackwardSampler::expectation) {
                if (!backward_probs(kernel, prev, target, probs))
                    throw NumericalError("backward weights underflow at period " + std::to_string(t + 1) +
                                         ", particle " + std::to_string(i + 1));
                std::vector<double> term(dim_tau);
                for (std::size_t j = 0; j < probs.size(); ++j) {
                    if (probs[j] == 0.0) continue;
                    const double* src = tau.data() + j * dim_tau;
                    std::copy(src, src + dim_tau, term.begin());
                    add_increment_term(lay, prev.particles.data() + j * p, target, term.data());
                    for (std::size_t d = 0; d < dim_tau; ++d) out[d] += probs[j] * term[d];
                }
                return;
            }

            Stream rng(key, StreamTag::backward, static_cast<std::uint64_t>(t), i);
            bool have_exact = false;
            auto exact_draw = [&]() {
                if (!have_exact) {
                    if (!backward_probs(kernel, prev, target, probs))
                        throw NumericalError("backward weights underflow at period " + std::to_string(t + 1) +
                                             ", particle " + std::to_string(i + 1));
                    double acc = 0.0;
                    for (auto& v : probs) {
                        acc += v;
                        v = acc;
                    }
                    have_exact = true;
                }
                return draw_from(probs, rng.uniform());
            };

            for (int u = 0; u < ntilde; ++u) {
                int j = -1;
                if (options.sampler == BackwardSampler::rejection) {
                    for (int trial = 0; trial < options.rejection_trials; ++trial) {
                        const int cand = draw_from(prev_cumulative, rng.uniform());
                        const double log_accept =
                            kernel.log_ratio_to_peak(prev.particles.data() + static_cast<std::size_t>(cand) * p, target);
                        if (std::log(rng.uniform()) < log_accept) {
                            j = cand;
                            break;
                        }
                    }
                    if (j < 0) ++fallbacks[i];
                }
                if (j < 0) j = exact_draw();
                const double* src = tau.data() + static_cast<std::size_t>(j) * dim_tau;
                for (std::size_t d = 0; d < dim_tau; ++d) out[d] += src[d];
                add_increment_term(lay, prev.particles.data() + static_cast<std::size_t>(j) * p, target, out);
            }
            const double scale = 1.0 / ntilde;
            for (std::size_t d = 0; d < dim_tau; ++d) out[d] *= scale;
        });
        tau.swap(next_tau);
    }

    const ParticleCloud& last = filter.current();
    std::vector<double> total(dim_tau, 0.0);
    for (std::size_t k = 0; k < n_particles; ++k) {
        const double w = last.weights(static_cast<Eigen::Index>(k));
        const double* src = tau.data() + k * dim_tau;
        for (std::size_t d = 0; d < dim_tau; ++d) total[d] += w * src[d];
    }

    SmoothedStats stats = SmoothedStats::zeros(static_cast<int>(p), design.periods());
    stats.N = options.particles;
    stats.Ntilde = options.sampler == BackwardSampler::expectation ? options.particles : ntilde;
    for (std::size_t i = 0; i < p; ++i) {
        const auto ei = static_cast<Eigen::Index>(i);
        stats.S_i(ei) = total[lay.s_i() + i];
        stats.E_i(ei) = total[lay.e_i() + i];
        for (std::size_t j = i; j < p; ++j) {
            const auto ej = static_cast<Eigen::Index>(j);
            stats.S_ij(ei, ej) = stats.S_ij(ej, ei) = total[lay.s_ij() + i * p + j];
            stats.E_ij(ei, ej) = stats.E_ij(ej, ei) = total[lay.e_ij() + i * p + j];
        }
    }

    if (diagnostics) {
        diag.loglik_estimate = filter.loglik_estimate();
        for (long f : fallbacks) diag.rejection_fallbacks += f;
        *diagnostics = std::move(diag);
    }
    return stats;
}

SmoothedStats paris_smooth(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta,
                           const ParisOptions& options, RngKey key) {
    if (!check_rank(basis, panel.cells())) throw UsageError("basis design is rank deficient over the panel cells");
    const DesignPanel design(panel, basis);
    return paris_smooth(design, theta, options, key);
}

}  // namespace hmmrates
