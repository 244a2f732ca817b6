#include "hmmrates/obs_model.hpp"

#include <cmath>

#include "hmmrates/error.hpp"

namespace hmmrates {

DesignPanel::DesignPanel(const CellPanel& panel, const BasisSet& basis)
    : dim_(basis.dim()), full_design_(design_matrix(basis, panel.cells())) {
    slices_.reserve(static_cast<std::size_t>(panel.periods()));
    for (int t = 0; t < panel.periods(); ++t) {
        std::vector<Eigen::Index> rows;
        PeriodSlice slice;
        for (std::size_t c = 0; c < panel.num_cells(); ++c) {
            if (panel.exposure(c, t) == 0) continue;
            rows.push_back(static_cast<Eigen::Index>(c));
            slice.exposure.push_back(panel.exposure(c, t));
            slice.events.push_back(panel.events(c, t));
        }
        slice.design.resize(static_cast<Eigen::Index>(rows.size()), dim_);
        for (std::size_t r = 0; r < rows.size(); ++r)
            slice.design.row(static_cast<Eigen::Index>(r)) = full_design_.row(rows[r]);
        slices_.push_back(std::move(slice));
    }
}

double softplus(double g) {
    if (g > 30.0) return g;
    if (g < -30.0) return std::exp(g);
    return std::log1p(std::exp(g));
}

double logistic(double g) {
    if (g >= 0.0) return 1.0 / (1.0 + std::exp(-g));
    const double e = std::exp(g);
    return e / (1.0 + e);
}

double logit_prob(const Vector& nu, const Vector& phi) {
    if (nu.size() != phi.size()) throw UsageError("logit_prob: dimension mismatch");
    return logistic(nu.dot(phi));
}

double loglik(std::span<const double> nu, const PeriodSlice& slice) {
    const Eigen::Index p = slice.design.cols();
    double total = 0.0;
    for (std::size_t c = 0; c < slice.num_cells(); ++c) {
        const double* row = slice.design.data() + static_cast<Eigen::Index>(c) * p;
        double g = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) g += row[i] * nu[static_cast<std::size_t>(i)];
        total += static_cast<double>(slice.events[c]) * g - static_cast<double>(slice.exposure[c]) * softplus(g);
    }
    return total;
}

double loglik(const Vector& nu, const PeriodSlice& slice) {
    if (nu.size() != slice.design.cols()) throw UsageError("loglik: dimension mismatch");
    return loglik(std::span<const double>(nu.data(), static_cast<std::size_t>(nu.size())), slice);
}

std::pair<Vector, Matrix> loglik_grad_hess(const Vector& nu, const PeriodSlice& slice) {
    const Eigen::Index p = slice.design.cols();
    if (nu.size() != p) throw UsageError("loglik_grad_hess: dimension mismatch");
    Vector grad = Vector::Zero(p);
    Matrix hess = Matrix::Zero(p, p);
    for (std::size_t c = 0; c < slice.num_cells(); ++c) {
        const Vector phi = slice.design.row(static_cast<Eigen::Index>(c)).transpose();
        const double prob = logistic(nu.dot(phi));
        const double e = static_cast<double>(slice.exposure[c]);
        grad += (static_cast<double>(slice.events[c]) - e * prob) * phi;
        hess.noalias() -= e * prob * (1.0 - prob) * phi * phi.transpose();
    }
    return {grad, hess};
}

}  // namespace hmmrates
