#include "hmmrates/em.hpp"

#include <cmath>
#include <optional>

#include "hmmrates/error.hpp"
#include "hmmrates/optim.hpp"

namespace hmmrates {

const char* to_string(RepairKind kind) {
    switch (kind) {
        case RepairKind::none: return "none";
        case RepairKind::resample: return "resample";
        case RepairKind::numeric: return "numeric";
    }
    return "none";
}

void EMConfig::validate() const {
    if (max_iters < 1) throw UsageError("max_iters must be positive");
    if (tail_window < 1 || tail_window > max_iters) throw UsageError("tail_window must lie in [1, max_iters]");
    if (particles < 1) throw UsageError("particle count must be positive");
    if (sampler != BackwardSampler::expectation && (backward_draws < 2 || backward_draws > particles))
        throw UsageError("backward draws must satisfy 2 <= Ntilde <= N");
}

Matrix q_matrix(const Vector& mu, const Vector& nu0, const SmoothedStats& stats) {
    const double n = stats.n;
    const Vector e_minus_nu0 = stats.E_i - nu0;
    Matrix c = stats.S_ij - mu * stats.S_i.transpose() - stats.S_i * mu.transpose() + n * mu * mu.transpose() +
               stats.E_ij - nu0 * stats.E_i.transpose() - stats.E_i * nu0.transpose() + nu0 * nu0.transpose() -
               mu * e_minus_nu0.transpose() - e_minus_nu0 * mu.transpose();
    return c;
}

LatentParams mstep(const SmoothedStats& stats) {
    if (stats.n < 2) throw UsageError("M-step needs at least 2 periods");
    const double n = stats.n;
    LatentParams theta;
    theta.mu = stats.S_i / (n - 1.0);
    theta.nu0 = stats.E_i - theta.mu;
    Matrix c = stats.S_ij + stats.E_ij - stats.S_i * stats.S_i.transpose() / (n - 1.0) -
               stats.E_i * stats.E_i.transpose();
    Matrix cbar = 0.5 * (c + c.transpose()) / n;
    Eigen::LLT<Matrix> llt(cbar);
    if (llt.info() != Eigen::Success || !cbar.allFinite())
        throw PDRepairNeeded(std::move(cbar), theta.mu, theta.nu0);
    theta.chol = llt.matrixL();
    if (!validate(theta).empty()) throw PDRepairNeeded(std::move(cbar), theta.mu, theta.nu0);
    return theta;
}

double q_value(const LatentParams& theta, const SmoothedStats& stats) {
    require_valid(theta);
    const Matrix c = q_matrix(theta.mu, theta.nu0, stats);
    const auto lower = theta.chol.triangularView<Eigen::Lower>();
    // tr(S^{-1} C^T) with S = A A^T: solve A X = C^T, then A^T Y = X.
    const Matrix x = lower.solve(Matrix(c.transpose()));
    const Matrix y = theta.chol.transpose().triangularView<Eigen::Upper>().solve(x);
    const double log_det = 2.0 * theta.chol.diagonal().array().log().sum();
    return -0.5 * stats.n * log_det - 0.5 * y.trace();
}

namespace {

// Packs the lower triangle of A row by row, diagonal entries as logs.
Vector pack_chol(const Matrix& a) {
    const auto p = a.rows();
    Vector x(p * (p + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) x(k++) = i == j ? std::log(a(i, i)) : a(i, j);
    return x;
}

Matrix unpack_chol(const Vector& x, Eigen::Index p) {
    Matrix a = Matrix::Zero(p, p);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = i == j ? std::exp(x(k++)) : x(k++);
    return a;
}

}  // namespace

std::optional<Matrix> maximize_cov_numerically(const Matrix& cbar, const Matrix& start, int n, int max_iters) {
    const auto p = cbar.rows();
    const double scale = 0.5 * n;
    auto objective = [&](const Vector& x, Vector& grad) {
        const Matrix a = unpack_chol(x, p);
        const auto lower = a.triangularView<Eigen::Lower>();
        const Matrix a_inv = lower.solve(Matrix::Identity(p, p));
        const Matrix s_inv = a_inv.transpose() * a_inv;
        const double log_det = 2.0 * a.diagonal().array().log().sum();
        const double value = scale * (log_det + (s_inv * cbar).trace());
        // d/dS = scale (S^-1 - S^-1 C S^-1); d/dA = 2 (d/dS) A
        const Matrix g_s = scale * (s_inv - s_inv * cbar * s_inv);
        const Matrix g_a = 2.0 * g_s * a;
        grad.resize(x.size());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) grad(k++) = i == j ? g_a(i, i) * a(i, i) : g_a(i, j);
        return value;
    };
    const MinimizeResult res = minimize_bfgs(objective, pack_chol(start), max_iters, 1e-10);
    const Matrix a = unpack_chol(res.x, p);
    if (!res.converged || !a.allFinite() || !std::isfinite(res.value)) return std::nullopt;
    const double lo = a.diagonal().minCoeff();
    const double hi = a.diagonal().maxCoeff();
    if (!(lo > 1e-8 * hi)) return std::nullopt;
    return a;
}

LatentParams average_params(const std::vector<LatentParams>& thetas, std::size_t first, std::size_t last) {
    if (first >= last || last > thetas.size()) throw UsageError("empty averaging window");
    LatentParams avg = thetas[first];
    for (std::size_t k = first + 1; k < last; ++k) {
        avg.mu += thetas[k].mu;
        avg.chol += thetas[k].chol;
        avg.nu0 += thetas[k].nu0;
    }
    const double count = static_cast<double>(last - first);
    avg.mu /= count;
    avg.chol /= count;
    avg.nu0 /= count;
    return avg;
}

EMTrace em_iterate(const LatentParams& theta0, const EMConfig& config, const EStep& estep) {
    config.validate();
    require_valid(theta0);
    EMTrace trace;
    LatentParams current = theta0;

    for (int k = 1; k <= config.max_iters; ++k) {
        const RngKey key{config.seed, mix_stream_id(static_cast<std::uint64_t>(k), 0)};
        double loglik = 0.0;
        SmoothedStats stats = estep(current, key, &loglik);
        RepairKind repair = RepairKind::none;
        LatentParams next;
        try {
            next = mstep(stats);
        } catch (const PDRepairNeeded& first_failure) {
            std::optional<LatentParams> repaired;
            if (config.pd_repair == PdRepair::resample) {
                const RngKey retry{config.seed, mix_stream_id(static_cast<std::uint64_t>(k), 1)};
                double ignored = 0.0;
                SmoothedStats redo = estep(current, retry, &ignored);
                try {
                    repaired = mstep(redo);
                    stats = std::move(redo);
                    repair = RepairKind::resample;
                } catch (const PDRepairNeeded&) {
                }
            }
            if (!repaired) {
                const auto chol = maximize_cov_numerically(first_failure.cbar(), current.chol, stats.n);
                if (!chol)
                    throw NumericalError("covariance repair failed at EM iteration " + std::to_string(k));
                repaired = LatentParams{first_failure.mu(), *chol, first_failure.nu0()};
                repair = RepairKind::numeric;
            }
            next = std::move(*repaired);
        }
        trace.q.push_back(q_value(next, stats));
        trace.theta.push_back(next);
        trace.repairs.push_back(repair);
        trace.loglik_estimate.push_back(loglik);
        current = std::move(next);
    }
    const std::size_t total = trace.theta.size();
    trace.final = average_params(trace.theta, total - static_cast<std::size_t>(config.tail_window), total);
    return trace;
}

EMTrace em_fit(const DesignPanel& design, const LatentParams& theta0, const EMConfig& config) {
    ParisOptions options;
    options.particles = config.particles;
    options.backward_draws = config.backward_draws;
    options.sampler = config.sampler;
    options.resampling = config.resampling;
    auto estep = [&](const LatentParams& theta, RngKey key, double* loglik) {
        ParisDiagnostics diag;
        SmoothedStats s = paris_smooth(design, theta, options, key, &diag);
        if (loglik) *loglik = diag.loglik_estimate;
        return s;
    };
    return em_iterate(theta0, config, estep);
}

EMTrace em_fit(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta0, const EMConfig& config) {
    if (!check_rank(basis, panel.cells())) throw UsageError("basis design is rank deficient over the panel cells");
    const DesignPanel design(panel, basis);
    return em_fit(design, theta0, config);
}

}  // namespace hmmrates
