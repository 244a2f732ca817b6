#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hmmrates/basis.hpp"
#include "hmmrates/linalg.hpp"
#include "hmmrates/panel.hpp"

namespace hmmrates {

// One period of a panel joined with a basis: design rows plus the counts.
// Cells with zero exposure are dropped since they contribute nothing.
struct PeriodSlice {
    RowMatrix design;                  // C x p
    std::vector<std::int64_t> exposure;
    std::vector<std::int64_t> events;

    int dim() const { return static_cast<int>(design.cols()); }
    std::size_t num_cells() const { return exposure.size(); }
};

// A panel with every period turned into a slice. Built once per fit.
class DesignPanel {
public:
    DesignPanel(const CellPanel& panel, const BasisSet& basis);

    int periods() const { return static_cast<int>(slices_.size()); }
    int dim() const { return dim_; }
    const PeriodSlice& slice(int t) const { return slices_[static_cast<std::size_t>(t)]; }  // 0-based
    const RowMatrix& full_design() const { return full_design_; }

private:
    int dim_;
    RowMatrix full_design_;
    std::vector<PeriodSlice> slices_;
};

// log(1 + e^g), switching to g above 30 and e^g below -30.
double softplus(double g);
// 1 / (1 + e^-g) without overflow.
double logistic(double g);
double logit_prob(const Vector& nu, const Vector& phi);

// Binomial log-likelihood of one period without the nu-free constant:
// sum_c N_c g_c - E_c softplus(g_c), g_c = <nu, phi_c>.
double loglik(const Vector& nu, const PeriodSlice& slice);
double loglik(std::span<const double> nu, const PeriodSlice& slice);

// Gradient sum_c (N_c - E_c p_c) phi_c and Hessian -sum_c E_c p_c (1 - p_c) phi_c phi_c^T.
std::pair<Vector, Matrix> loglik_grad_hess(const Vector& nu, const PeriodSlice& slice);

}  // namespace hmmrates
