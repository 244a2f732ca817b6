#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmmrates/error.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/paris.hpp"

namespace hmmrates {

enum class PdRepair { resample, numeric };
enum class RepairKind { none, resample, numeric };

const char* to_string(RepairKind kind);

struct EMConfig {
    int max_iters = 200;
    int tail_window = 20;
    int particles = 1000;
    int backward_draws = 2;
    std::uint64_t seed = 1;
    PdRepair pd_repair = PdRepair::resample;
    BackwardSampler sampler = BackwardSampler::direct;
    Resampling resampling = Resampling::multinomial;

    void validate() const;
};

struct EMTrace {
    std::vector<LatentParams> theta;  // theta^k, k = 1..max_iters
    std::vector<double> q;            // Q(theta^k | theta^{k-1})
    std::vector<RepairKind> repairs;
    std::vector<double> loglik_estimate;  // filter estimate at theta^{k-1}
    LatentParams final;                   // tail average
};

// Raised by mstep when the closed-form covariance C/n is not positive definite.
class PDRepairNeeded : public NumericalError {
public:
    PDRepairNeeded(Matrix cbar, Vector mu, Vector nu0)
        : NumericalError("M-step covariance is not positive definite"),
          cbar_(std::move(cbar)), mu_(std::move(mu)), nu0_(std::move(nu0)) {}
    const Matrix& cbar() const { return cbar_; }
    const Vector& mu() const { return mu_; }
    const Vector& nu0() const { return nu0_; }

private:
    Matrix cbar_;
    Vector mu_;
    Vector nu0_;
};

// C(theta) for the given drift and initial state:
// C_ij = S_ij - mu_i S_j - mu_j S_i + n mu_i mu_j + E_ij - nu0_i E_j - nu0_j E_i + nu0_i nu0_j
//        - mu_i (E_j - nu0_j) - mu_j (E_i - nu0_i)
Matrix q_matrix(const Vector& mu, const Vector& nu0, const SmoothedStats& stats);

// Closed-form maximiser of Q given the smoothed statistics. Throws
// PDRepairNeeded when C/n has no Cholesky factor.
LatentParams mstep(const SmoothedStats& stats);

// Q(theta | .) = -(n/2) log det(A A^T) - 1/2 tr((A A^T)^{-1} C(theta)^T)
double q_value(const LatentParams& theta, const SmoothedStats& stats);

// Maximises -(n/2) log det(A A^T) - (n/2) tr((A A^T)^{-1} cbar) over lower
// triangular A by quasi-Newton from `start`. Used when cbar is not positive
// definite, where the supremum is unbounded: the search is capped at
// `max_iters` and the result rejected (nullopt) unless the search converged to
// a well-conditioned A.
std::optional<Matrix> maximize_cov_numerically(const Matrix& cbar, const Matrix& start, int n, int max_iters = 50);

// Average of mu, A, nu0 over thetas [first, last).
LatentParams average_params(const std::vector<LatentParams>& thetas, std::size_t first, std::size_t last);

// E-step callback: smoothed statistics at theta, drawing randomness from key.
using EStep = std::function<SmoothedStats(const LatentParams& theta, RngKey key, double* loglik)>;

EMTrace em_iterate(const LatentParams& theta0, const EMConfig& config, const EStep& estep);

// EM with PaRIS E-steps.
EMTrace em_fit(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta0, const EMConfig& config);
EMTrace em_fit(const DesignPanel& design, const LatentParams& theta0, const EMConfig& config);

}  // namespace hmmrates
