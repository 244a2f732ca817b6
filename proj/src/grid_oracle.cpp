#include "hmmrates/grid_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "hmmrates/error.hpp"
#include "hmmrates/text.hpp"

namespace hmmrates {

namespace {
constexpr double kBoundaryMass = 1e-6;
constexpr std::size_t kMaxNodes = 40000;
}  // namespace

std::size_t LatentGrid::size() const {
    std::size_t n = 1;
    for (int i = 0; i < dim(); ++i) n *= static_cast<std::size_t>(points);
    return n;
}

double LatentGrid::coord(std::size_t index, int component) const {
    std::size_t stride = 1;
    for (int i = dim() - 1; i > component; --i) stride *= static_cast<std::size_t>(points);
    const std::size_t k = (index / stride) % static_cast<std::size_t>(points);
    return lo[component] + static_cast<double>(k) * spacing(component);
}

Vector LatentGrid::node(std::size_t index) const {
    Vector x(dim());
    for (int i = 0; i < dim(); ++i) x(i) = coord(index, i);
    return x;
}

LatentGrid LatentGrid::covering(const LatentParams& theta, int periods, int points, double sd_multiple) {
    LatentGrid g;
    const Vector sd = theta.volatility();
    const double reach = sd_multiple * std::sqrt(static_cast<double>(std::max(periods, 1)));
    for (int i = 0; i < theta.dim(); ++i) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int t = 1; t <= std::max(periods, 1); ++t) {
            const double centre = theta.nu0(i) + t * theta.mu(i);
            lo = std::min(lo, centre - reach * sd(i));
            hi = std::max(hi, centre + reach * sd(i));
        }
        g.lo.push_back(lo);
        g.hi.push_back(hi);
    }
    g.points = points;
    return g;
}

void LatentGrid::validate() const {
    if (dim() < 1 || dim() > 2) throw UsageError("grid oracle supports latent dimension 1 or 2");
    if (hi.size() != lo.size()) throw UsageError("grid bounds differ in length");
    if (points < 16) throw UsageError("grid needs at least 16 points per component");
    if (size() > kMaxNodes) throw UsageError("grid exceeds 40000 nodes");
    for (int i = 0; i < dim(); ++i)
        if (!(hi[i] > lo[i])) throw UsageError("grid range must satisfy lo < hi");
}

GridModel::GridModel(const DesignPanel& design, const LatentParams& theta, LatentGrid grid)
    : design_(design), grid_(std::move(grid)) {
    grid_.validate();
    if (grid_.dim() != theta.dim() || theta.dim() != design.dim())
        throw UsageError("grid, parameters and basis dimensions differ");
    const TransitionKernel kernel(theta);
    const int p = grid_.dim();
    const int g = grid_.points;
    const int span = 2 * g - 1;
    const std::size_t m = grid_.size();

    std::size_t table = 1;
    for (int i = 0; i < p; ++i) table *= static_cast<std::size_t>(span);
    offsets_.resize(table);
    const std::vector<double> zero(static_cast<std::size_t>(p), 0.0);
    for (std::size_t o = 0; o < table; ++o) {
        // next = prev + offset; subtract mu inside the kernel, so evaluate at (0, offset)
        std::array<double, 2> off{};
        std::size_t rest = o;
        for (int i = p - 1; i >= 0; --i) {
            const int k = static_cast<int>(rest % static_cast<std::size_t>(span)) - (g - 1);
            rest /= static_cast<std::size_t>(span);
            off[static_cast<std::size_t>(i)] = k * grid_.spacing(i);
        }
        offsets_[o] = std::exp(kernel.log_ratio_to_peak(zero.data(), off.data()));
    }

    row_norm_.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) z += offset_value(i, j);
        row_norm_[i] = z;
    }

    initial_.resize(m);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const Vector x = grid_.node(j);
        initial_[j] = std::exp(kernel.log_ratio_to_peak(theta.nu0.data(), x.data()));
        total += initial_[j];
    }
    if (!(total > 0.0)) throw DomainError("grid does not cover the initial distribution");
    for (auto& v : initial_) v /= total;

    log_emission_.resize(static_cast<std::size_t>(design.periods()));
    for (int t = 0; t < design.periods(); ++t) {
        auto& row = log_emission_[static_cast<std::size_t>(t)];
        row.resize(m);
        for (std::size_t j = 0; j < m; ++j) row[j] = loglik(grid_.node(j), design.slice(t));
    }
}

double GridModel::offset_value(std::size_t i, std::size_t j) const {
    const int g = grid_.points;
    const int span = 2 * g - 1;
    if (grid_.dim() == 1) return offsets_[static_cast<std::size_t>(static_cast<int>(j) - static_cast<int>(i) + g - 1)];
    const int i0 = static_cast<int>(i) / g, i1 = static_cast<int>(i) % g;
    const int j0 = static_cast<int>(j) / g, j1 = static_cast<int>(j) % g;
    return offsets_[static_cast<std::size_t>((j0 - i0 + g - 1) * span + (j1 - i1 + g - 1))];
}

namespace {

double boundary_mass(const LatentGrid& grid, const Vector& density) {
    double mass = 0.0;
    const auto g = static_cast<std::size_t>(grid.points);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        bool edge = false;
        std::size_t rest = j;
        for (int i = 0; i < grid.dim(); ++i) {
            const std::size_t k = rest % g;
            rest /= g;
            edge = edge || k == 0 || k == g - 1;
        }
        if (edge) mass += density(static_cast<Eigen::Index>(j));
    }
    return mass;
}

Vector weighted_mean(const LatentGrid& grid, const Vector& density) {
    Vector m = Vector::Zero(grid.dim());
    for (std::size_t j = 0; j < grid.size(); ++j) m += density(static_cast<Eigen::Index>(j)) * grid.node(j);
    return m;
}

}  // namespace

GridResult exact_forward_backward(const DesignPanel& design, const LatentParams& theta, const LatentGrid& grid) {
    const GridModel model(design, theta, grid);
    const std::size_t m = model.size();
    const int n = design.periods();
    const int p = grid.dim();
    const auto em = static_cast<Eigen::Index>(m);

    std::vector<Vector> emission(static_cast<std::size_t>(n));
    std::vector<double> log_peak(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) peak = std::max(peak, model.log_emission(t, j));
        log_peak[static_cast<std::size_t>(t)] = peak;
        Vector e(em);
        for (std::size_t j = 0; j < m; ++j) e(static_cast<Eigen::Index>(j)) = std::exp(model.log_emission(t, j) - peak);
        emission[static_cast<std::size_t>(t)] = std::move(e);
    }

    GridResult out;
    std::vector<double> scale(static_cast<std::size_t>(n));
    Vector pred(em);
    for (int t = 0; t < n; ++t) {
        if (t == 0) {
            for (std::size_t j = 0; j < m; ++j) pred(static_cast<Eigen::Index>(j)) = model.initial(j);
        } else {
            const Vector& prev = out.filter.back();
            Vector a(em);
            for (std::size_t i = 0; i < m; ++i)
                a(static_cast<Eigen::Index>(i)) = prev(static_cast<Eigen::Index>(i)) / model.row_norm(i);
            pred.setZero();
            for (std::size_t i = 0; i < m; ++i) {
                const double ai = a(static_cast<Eigen::Index>(i));
                if (ai == 0.0) continue;
                for (std::size_t j = 0; j < m; ++j) pred(static_cast<Eigen::Index>(j)) += ai * model.offset_value(i, j);
            }
        }
        Vector f = pred.cwiseProduct(emission[static_cast<std::size_t>(t)]);
        const double c = f.sum();
        if (!(c > 0.0)) throw NumericalError("grid filter lost all mass in period " + std::to_string(t + 1));
        f /= c;
        scale[static_cast<std::size_t>(t)] = c;
        out.loglik += std::log(c) + log_peak[static_cast<std::size_t>(t)];
        out.filter.push_back(std::move(f));
    }

    std::vector<Vector> beta(static_cast<std::size_t>(n), Vector::Ones(em));
    for (int t = n - 1; t >= 1; --t) {
        const Vector v = emission[static_cast<std::size_t>(t)].cwiseProduct(beta[static_cast<std::size_t>(t)]) /
                         scale[static_cast<std::size_t>(t)];
        Vector b(em);
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += model.offset_value(i, j) * v(static_cast<Eigen::Index>(j));
            b(static_cast<Eigen::Index>(i)) = acc / model.row_norm(i);
        }
        beta[static_cast<std::size_t>(t - 1)] = std::move(b);
    }

    for (int t = 0; t < n; ++t) {
        Vector s = out.filter[static_cast<std::size_t>(t)].cwiseProduct(beta[static_cast<std::size_t>(t)]);
        s /= s.sum();  // equals 1 up to rounding
        out.smoothed.push_back(std::move(s));
    }

    for (int t = 0; t < n; ++t) {
        const double edge = std::max(boundary_mass(grid, out.filter[static_cast<std::size_t>(t)]),
                                     boundary_mass(grid, out.smoothed[static_cast<std::size_t>(t)]));
        if (edge > kBoundaryMass)
            throw DomainError("grid too narrow: boundary mass " + format_real(edge) + " in period " +
                              std::to_string(t + 1) + "; widen the grid");
        out.filter_mean.push_back(weighted_mean(grid, out.filter[static_cast<std::size_t>(t)]));
        out.smoothed_mean.push_back(weighted_mean(grid, out.smoothed[static_cast<std::size_t>(t)]));
    }

    std::vector<Vector> nodes(m);
    for (std::size_t j = 0; j < m; ++j) nodes[j] = grid.node(j);

    out.stats = SmoothedStats::zeros(p, n);
    out.increment_mean.assign(static_cast<std::size_t>(n), Vector::Zero(p));
    out.increment_second.assign(static_cast<std::size_t>(n), Matrix::Zero(p, p));
    for (int t = 1; t < n; ++t) {
        const Vector& prev = out.filter[static_cast<std::size_t>(t - 1)];
        const Vector v = emission[static_cast<std::size_t>(t)].cwiseProduct(beta[static_cast<std::size_t>(t)]) /
                         scale[static_cast<std::size_t>(t)];
        Vector mean = Vector::Zero(p);
        Matrix second = Matrix::Zero(p, p);
        for (std::size_t i = 0; i < m; ++i) {
            const double wi = prev(static_cast<Eigen::Index>(i)) / model.row_norm(i);
            if (wi == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) {
                const double xi = wi * model.offset_value(i, j) * v(static_cast<Eigen::Index>(j));
                if (xi == 0.0) continue;
                const Vector d = nodes[j] - nodes[i];
                mean += xi * d;
                second.noalias() += xi * d * d.transpose();
            }
        }
        out.increment_mean[static_cast<std::size_t>(t)] = mean;
        out.increment_second[static_cast<std::size_t>(t)] = second;
        out.stats.S_i += mean;
        out.stats.S_ij += second;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double w = out.smoothed.front()(static_cast<Eigen::Index>(j));
        out.stats.E_i += w * nodes[j];
        out.stats.E_ij.noalias() += w * nodes[j] * nodes[j].transpose();
    }
    out.stats.S_ij = 0.5 * (out.stats.S_ij + out.stats.S_ij.transpose()).eval();
    out.stats.E_ij = 0.5 * (out.stats.E_ij + out.stats.E_ij.transpose()).eval();
    return out;
}

GridResult exact_forward_backward(const CellPanel& panel, const BasisSet& basis, const LatentParams& theta,
                                  const LatentGrid& grid) {
    const DesignPanel design(panel, basis);
    return exact_forward_backward(design, theta, grid);
}

bool check_unimodal(const std::vector<double>& density) {
    if (density.empty()) return true;
    const double peak = *std::max_element(density.begin(), density.end());
    const double noise = 1e-12 * std::max(peak, 0.0);
    bool falling = false;
    for (std::size_t k = 0; k + 1 < density.size(); ++k) {
        const double diff = density[k + 1] - density[k];
        if (diff < -noise) falling = true;
        else if (diff > noise && falling) return false;
    }
    return true;
}

double max_log_second_difference(const std::vector<double>& density, double floor) {
    const double peak = *std::max_element(density.begin(), density.end());
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < density.size(); ++k) {
        if (density[k - 1] <= floor * peak || density[k] <= floor * peak || density[k + 1] <= floor * peak) continue;
        const double d2 = std::log(density[k + 1]) - 2.0 * std::log(density[k]) + std::log(density[k - 1]);
        worst = std::max(worst, d2);
    }
    return worst;
}

std::vector<double> grid_marginal(const LatentGrid& grid, const Vector& density, int component) {
    std::vector<double> out(static_cast<std::size_t>(grid.points), 0.0);
    const auto g = static_cast<std::size_t>(grid.points);
    std::size_t stride = 1;
    for (int i = grid.dim() - 1; i > component; --i) stride *= g;
    for (std::size_t j = 0; j < grid.size(); ++j) out[(j / stride) % g] += density(static_cast<Eigen::Index>(j));
    return out;
}

void write_grid_csv(std::ostream& out, const LatentGrid& grid, const GridResult& result) {
    out << "period";
    for (int i = 0; i < grid.dim(); ++i) out << ",x" << (i + 1);
    out << ",filter,smoothed\n";
    for (std::size_t t = 0; t < result.filter.size(); ++t)
        for (std::size_t j = 0; j < grid.size(); ++j) {
            out << (t + 1);
            for (int i = 0; i < grid.dim(); ++i) out << ',' << format_real(grid.coord(j, i));
            out << ',' << format_real(result.filter[t](static_cast<Eigen::Index>(j))) << ','
                << format_real(result.smoothed[t](static_cast<Eigen::Index>(j))) << '\n';
        }
}

}  // namespace hmmrates
