#pragma once

#include <iosfwd>
#include <vector>

#include "hmmrates/latent_rw.hpp"
#include "hmmrates/obs_model.hpp"
#include "hmmrates/paris.hpp"

namespace hmmrates {

// Regular tensor grid over the latent space (p <= 2), component 0 outermost.
struct LatentGrid {
    std::vector<double> lo;
    std::vector<double> hi;
    int points = 0;  // per component

    int dim() const { return static_cast<int>(lo.size()); }
    std::size_t size() const;
    double spacing(int component) const { return (hi[component] - lo[component]) / (points - 1); }
    // Coordinate of node `index` along `component`.
    double coord(std::size_t index, int component) const;
    Vector node(std::size_t index) const;

    // Range nu0 + t mu +- sd_multiple sqrt(diag(A A^T)) sqrt(n), over t = 1..n.
    static LatentGrid covering(const LatentParams& theta, int periods, int points, double sd_multiple = 6.0);
    void validate() const;
};

// The discretised model: initial law and transition kernel are the Gaussian
// densities restricted to the nodes and normalized per row, so the grid is an
// exact finite-state HMM of its own.
class GridModel {
public:
    GridModel(const DesignPanel& design, const LatentParams& theta, LatentGrid grid);

    const LatentGrid& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }
    int periods() const { return design_.periods(); }

    double initial(std::size_t j) const { return initial_[j]; }
    double transition(std::size_t i, std::size_t j) const { return offset_value(i, j) / row_norm_[i]; }
    // l_t(node j) (not exponentiated)
    double log_emission(int t, std::size_t j) const { return log_emission_[static_cast<std::size_t>(t)][j]; }

    // Unnormalized kernel value at offset node_j - node_i.
    double offset_value(std::size_t i, std::size_t j) const;
    double row_norm(std::size_t i) const { return row_norm_[i]; }

private:
    const DesignPanel& design_;
    LatentGrid grid_;
    std::vector<double> offsets_;  // (2G-1)^p table
    std::vector<double> row_norm_;
    std::vector<double> initial_;
    std::vector<std::vector<double>> log_emission_;
};

struct GridResult {
    std::vector<Vector> filter;    // per period, probabilities over nodes
    std::vector<Vector> smoothed;
    std::vector<Vector> filter_mean;
    std::vector<Vector> smoothed_mean;
    std::vector<Vector> increment_mean;    // E[nu_t - nu_{t-1} | all data]; entry 0 unused (zero)
    std::vector<Matrix> increment_second;  // E[(nu_t - nu_{t-1})(...)^T | all data]; entry 0 unused
    SmoothedStats stats;
    double loglik = 0.0;  // exact log-likelihood of the discretised model
};

// Dense forward-backward. Throws DomainError when more than 1e-6 of any filter
// or smoothing marginal sits on the grid boundary.
GridResult exact_forward_backward(const DesignPanel& design, const LatentParams& theta, const LatentGrid& grid);
GridResult exact_forward_backward(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta,
                                  const LatentGrid& grid);

// True iff the sequence rises then falls, ignoring moves smaller than
// 1e-12 of its maximum.
bool check_unimodal(const std::vector<double>& density);
// Largest second difference of log(density) over entries above floor * max.
double max_log_second_difference(const std::vector<double>& density, double floor = 1e-12);
// Marginal of a grid density along one component.
std::vector<double> grid_marginal(const LatentGrid& grid, const Vector& density, int component);

void write_grid_csv(std::ostream& out, const LatentGrid& grid, const GridResult& result);

}  // namespace hmmrates
