#include "hmmrates/latent_rw.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "hmmrates/error.hpp"

namespace hmmrates {

Vector LatentParams::volatility() const { return covariance().diagonal().cwiseSqrt(); }

std::vector<std::string> validate(const LatentParams& theta) {
    std::vector<std::string> issues;
    const auto p = theta.mu.size();
    if (p < 1) issues.emplace_back("latent dimension must be at least 1");
    if (p > kMaxLatentDim) issues.emplace_back("latent dimension exceeds " + std::to_string(kMaxLatentDim));
    if (theta.nu0.size() != p) issues.emplace_back("nu0 has length " + std::to_string(theta.nu0.size()) +
                                                   ", expected " + std::to_string(p));
    if (theta.chol.rows() != p || theta.chol.cols() != p) {
        issues.emplace_back("chol must be " + std::to_string(p) + "x" + std::to_string(p));
        return issues;
    }
    if (!theta.mu.allFinite()) issues.emplace_back("mu has non-finite entries");
    if (theta.nu0.size() == p && !theta.nu0.allFinite()) issues.emplace_back("nu0 has non-finite entries");
    if (!theta.chol.allFinite()) issues.emplace_back("chol has non-finite entries");
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j)
            if (theta.chol(i, j) != 0.0)
                issues.push_back("chol(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                 ") above the diagonal is nonzero");
        if (!(theta.chol(i, i) > 0.0))
            issues.push_back("chol(" + std::to_string(i + 1) + "," + std::to_string(i + 1) + ") must be positive");
    }
    return issues;
}

void require_valid(const LatentParams& theta) {
    const auto issues = validate(theta);
    if (issues.empty()) return;
    std::string msg = "invalid latent parameters:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw UsageError(msg);
}

double transition_logdensity(const LatentParams& theta, const Vector& prev, const Vector& next) {
    require_valid(theta);
    if (prev.size() != theta.mu.size() || next.size() != theta.mu.size())
        throw UsageError("transition_logdensity: dimension mismatch");
    if (!prev.allFinite() || !next.allFinite()) throw DomainError("transition_logdensity: non-finite state");
    const Vector resid = next - prev - theta.mu;
    const Vector r = theta.chol.triangularView<Eigen::Lower>().solve(resid);
    const double p = static_cast<double>(theta.mu.size());
    return -0.5 * r.squaredNorm() - theta.chol.diagonal().array().log().sum() -
           0.5 * p * std::log(2.0 * std::numbers::pi);
}

Vector sample_transition(const LatentParams& theta, const Vector& prev, Stream& rng) {
    require_valid(theta);
    Vector z(theta.mu.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return prev + theta.mu + theta.chol.triangularView<Eigen::Lower>() * z;
}

TransitionKernel::TransitionKernel(const LatentParams& theta) : dim_(theta.dim()) {
    require_valid(theta);
    const std::size_t p = static_cast<std::size_t>(dim_);
    chol_.assign(p * p, 0.0);
    inv_diag_.resize(p);
    mu_.resize(p);
    double log_det = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j)
            chol_[i * p + j] = theta.chol(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        inv_diag_[i] = 1.0 / chol_[i * p + i];
        mu_[i] = theta.mu(static_cast<Eigen::Index>(i));
        log_det += std::log(chol_[i * p + i]);
    }
    log_norm_ = -log_det - 0.5 * static_cast<double>(p) * std::log(2.0 * std::numbers::pi);
}

double TransitionKernel::log_ratio_to_peak(const double* prev, const double* next) const {
    const std::size_t p = static_cast<std::size_t>(dim_);
    std::array<double, kMaxLatentDim> r;
    double quad = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        double v = next[i] - prev[i] - mu_[i];
        const double* row = chol_.data() + i * p;
        for (std::size_t j = 0; j < i; ++j) v -= row[j] * r[j];
        r[i] = v * inv_diag_[i];
        quad += r[i] * r[i];
    }
    return -0.5 * quad;
}

double TransitionKernel::log_density(const double* prev, const double* next) const {
    return log_ratio_to_peak(prev, next) + log_norm_;
}

void TransitionKernel::propagate(const double* prev, Stream& rng, double* out) const {
    const std::size_t p = static_cast<std::size_t>(dim_);
    std::array<double, kMaxLatentDim> z;
    for (std::size_t i = 0; i < p; ++i) z[i] = rng.normal();
    for (std::size_t i = 0; i < p; ++i) {
        double v = prev[i] + mu_[i];
        const double* row = chol_.data() + i * p;
        for (std::size_t j = 0; j <= i; ++j) v += row[j] * z[j];
        out[i] = v;
    }
}

}  // namespace hmmrates
