#pragma once

#include <cstdint>
#include <vector>

#include "hmmrates/basis.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/panel.hpp"
#include "hmmrates/rng.hpp"

namespace hmmrates {

struct SyntheticPanel {
    CellPanel panel;
    std::vector<Vector> path;  // true nu_1..nu_n
};

// Simulates the latent walk from nu0 and draws N[c,t] ~ Bin(E[c,t], p_c(nu_t)).
// exposure is indexed [cell][period].
SyntheticPanel generate(const LatentParams& theta, const BasisSet& basis, const std::vector<Cell>& cells,
                        const std::vector<std::vector<std::int64_t>>& exposure, int periods, RngKey key);
// Same exposure in every cell and period.
SyntheticPanel generate(const LatentParams& theta, const BasisSet& basis, const std::vector<Cell>& cells,
                        std::int64_t exposure, int periods, RngKey key);

// Key of replication r under `seed`.
RngKey replication_key(std::uint64_t seed, std::uint64_t r);

std::vector<SyntheticPanel> replicate_study(const LatentParams& theta, const BasisSet& basis,
                                            const std::vector<Cell>& cells,
                                            const std::vector<std::vector<std::int64_t>>& exposure, int periods,
                                            int replications, std::uint64_t seed);

}  // namespace hmmrates
