#pragma once

#include <vector>

#include "hmmrates/basis.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/smc.hpp"

namespace hmmrates {

enum class ForecastSeed {
    cloud,       // each path starts from a particle drawn from the terminal cloud
    point_mass,  // every path starts at the terminal filter mean
};

struct ForecastPaths {
    std::vector<RowMatrix> latent;  // latent[h] is M x p, h = 0 for one period ahead

    int horizon() const { return static_cast<int>(latent.size()); }
    int paths() const { return latent.empty() ? 0 : static_cast<int>(latent.front().rows()); }
};

ForecastPaths simulate_future(const LatentParams& theta, const ParticleCloud& terminal, int horizon, int paths,
                              RngKey key, ForecastSeed seed = ForecastSeed::cloud);

struct RateSurface {
    std::vector<Cell> cells;
    std::vector<double> probs;
    // [h][cell][k]: level probs[k] quantile of the transition probability
    std::vector<std::vector<std::vector<double>>> quantiles;
    // [h][cell]: mean transition probability across paths
    std::vector<std::vector<double>> mean;
};

// Quantiles are taken on the logit scale (left-continuous empirical inverse)
// and mapped through the logistic function.
RateSurface rate_surface(const ForecastPaths& paths, const BasisSet& basis, const std::vector<Cell>& cells,
                         const std::vector<double>& probs);

}  // namespace hmmrates
