#include "hmmrates/forecast.hpp"

#include <algorithm>

#include "hmmrates/error.hpp"
#include "hmmrates/obs_model.hpp"
#include "hmmrates/parallel.hpp"

namespace hmmrates {

ForecastPaths simulate_future(const LatentParams& theta, const ParticleCloud& terminal, int horizon, int paths,
                              RngKey key, ForecastSeed seed) {
    require_valid(theta);
    if (horizon < 1 || paths < 1) throw UsageError("forecast horizon and path count must be positive");
    if (terminal.size() < 1 || terminal.dim() != theta.dim())
        throw UsageError("terminal cloud does not match the parameter dimension");
    const int p = theta.dim();
    const TransitionKernel kernel(theta);

    std::vector<double> cumulative(static_cast<std::size_t>(terminal.size()));
    double acc = 0.0;
    for (int k = 0; k < terminal.size(); ++k) {
        acc += terminal.weights(k);
        cumulative[static_cast<std::size_t>(k)] = acc;
    }
    const Vector centre = filter_mean(terminal);

    ForecastPaths out;
    out.latent.assign(static_cast<std::size_t>(horizon), RowMatrix(paths, p));
    parallel_for(0, static_cast<std::size_t>(paths), [&](std::size_t m) {
        Stream rng(key, StreamTag::forecast, m);
        Vector state(p);
        if (seed == ForecastSeed::cloud) {
            const double u = rng.uniform() * acc;
            auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
            const auto k = std::min<std::ptrdiff_t>(it - cumulative.begin(), terminal.size() - 1);
            state = terminal.particles.row(k).transpose();
        } else {
            state = centre;
        }
        Vector next(p);
        for (int h = 0; h < horizon; ++h) {
            kernel.propagate(state.data(), rng, next.data());
            state = next;
            out.latent[static_cast<std::size_t>(h)].row(static_cast<Eigen::Index>(m)) = state.transpose();
        }
    });
    return out;
}

RateSurface rate_surface(const ForecastPaths& paths, const BasisSet& basis, const std::vector<Cell>& cells,
                         const std::vector<double>& probs) {
    for (double q : probs)
        if (!(q > 0.0 && q < 1.0)) throw UsageError("quantile levels must lie in (0, 1)");
    std::vector<double> levels = probs;
    RateSurface out{cells, levels, {}, {}};
    const RowMatrix design = design_matrix(basis, cells);
    const int m = paths.paths();
    for (const auto& latent : paths.latent) {
        const Eigen::MatrixXd logits = latent * design.transpose();  // M x C
        std::vector<std::vector<double>> per_cell;
        std::vector<double> means;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::vector<std::pair<double, double>> values(static_cast<std::size_t>(m));
            double mean = 0.0;
            for (int k = 0; k < m; ++k) {
                const double g = logits(k, static_cast<Eigen::Index>(c));
                values[static_cast<std::size_t>(k)] = {g, 1.0};
                mean += logistic(g);
            }
            std::vector<double> row;
            for (double q : levels) row.push_back(logistic(weighted_quantile(values, q)));
            per_cell.push_back(std::move(row));
            means.push_back(mean / m);
        }
        out.quantiles.push_back(std::move(per_cell));
        out.mean.push_back(std::move(means));
    }
    return out;
}

}  // namespace hmmrates
