#include "hmmrates/synth.hpp"

#include <algorithm>
#include <optional>
#include <random>

#include "hmmrates/error.hpp"
#include "hmmrates/obs_model.hpp"
#include "hmmrates/parallel.hpp"

namespace hmmrates {

SyntheticPanel generate(const LatentParams& theta, const BasisSet& basis, const std::vector<Cell>& cells,
                        const std::vector<std::vector<std::int64_t>>& exposure, int periods, RngKey key) {
    require_valid(theta);
    if (periods < 1) throw UsageError("synthetic panel needs at least one period");
    if (basis.dim() != theta.dim()) throw UsageError("basis and parameter dimensions differ");
    if (exposure.size() != cells.size()) throw UsageError("exposure table must have one row per cell");
    for (const auto& row : exposure) {
        if (row.size() != static_cast<std::size_t>(periods))
            throw UsageError("exposure table must have one column per period");
        for (auto e : row)
            if (e < 0) throw UsageError("exposures must be nonnegative");
    }

    std::vector<Vector> path;
    Stream path_rng(key, StreamTag::synth_path);
    Vector nu = theta.nu0;
    for (int t = 0; t < periods; ++t) {
        nu = sample_transition(theta, nu, path_rng);
        path.push_back(nu);
    }

    const RowMatrix design = design_matrix(basis, cells);
    std::vector<std::int64_t> events(cells.size() * static_cast<std::size_t>(periods));
    std::vector<std::int64_t> exp_flat(events.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Vector phi = design.row(static_cast<Eigen::Index>(c)).transpose();
        for (int t = 0; t < periods; ++t) {
            const std::size_t idx = c * static_cast<std::size_t>(periods) + static_cast<std::size_t>(t);
            const std::int64_t e = exposure[c][static_cast<std::size_t>(t)];
            exp_flat[idx] = e;
            if (e == 0) continue;
            Stream obs_rng(key, StreamTag::synth_obs, static_cast<std::uint64_t>(t), c);
            std::binomial_distribution<std::int64_t> draw(e, logit_prob(path[static_cast<std::size_t>(t)], phi));
            events[idx] = draw(obs_rng);
        }
    }
    return SyntheticPanel{CellPanel(basis.target(), cells, periods, std::move(exp_flat), std::move(events)),
                          std::move(path)};
}

SyntheticPanel generate(const LatentParams& theta, const BasisSet& basis, const std::vector<Cell>& cells,
                        std::int64_t exposure, int periods, RngKey key) {
    const std::vector<std::vector<std::int64_t>> table(
        cells.size(), std::vector<std::int64_t>(static_cast<std::size_t>(std::max(periods, 0)), exposure));
    return generate(theta, basis, cells, table, periods, key);
}

RngKey replication_key(std::uint64_t seed, std::uint64_t r) {
    return RngKey{seed, mix_stream_id(static_cast<std::uint64_t>(StreamTag::replicate), r)};
}

std::vector<SyntheticPanel> replicate_study(const LatentParams& theta, const BasisSet& basis,
                                            const std::vector<Cell>& cells,
                                            const std::vector<std::vector<std::int64_t>>& exposure, int periods,
                                            int replications, std::uint64_t seed) {
    if (replications < 1) throw UsageError("replication count must be positive");
    std::vector<std::optional<SyntheticPanel>> slots(static_cast<std::size_t>(replications));
    parallel_for(0, static_cast<std::size_t>(replications), [&](std::size_t r) {
        slots[r] =
            generate(theta, basis, cells, exposure, periods, replication_key(seed, r));
    });
    std::vector<SyntheticPanel> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace hmmrates
