#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "hmmrates/basis.hpp"
#include "hmmrates/latent_rw.hpp"
#include "hmmrates/panel.hpp"

namespace testing {

inline hmmrates::LatentParams theta1(double mu, double sigma, double nu0) {
    hmmrates::LatentParams t;
    t.mu = hmmrates::Vector::Constant(1, mu);
    t.chol = hmmrates::Matrix::Constant(1, 1, sigma);
    t.nu0 = hmmrates::Vector::Constant(1, nu0);
    return t;
}

inline hmmrates::LatentParams theta2(double mu1, double mu2, double a11, double a21, double a22, double n1,
                                     double n2) {
    hmmrates::LatentParams t;
    t.mu = hmmrates::Vector(2);
    t.mu << mu1, mu2;
    t.chol = hmmrates::Matrix(2, 2);
    t.chol << a11, 0.0, a21, a22;
    t.nu0 = hmmrates::Vector(2);
    t.nu0 << n1, n2;
    return t;
}

// One-dimensional basis over three ages with slightly different loadings.
inline hmmrates::BasisSet scalar_basis() {
    std::map<std::pair<int, double>, std::vector<double>> table{
        {{30, 0.0}, {0.8}}, {{45, 0.0}, {1.0}}, {{60, 0.0}, {1.2}}};
    return hmmrates::BasisSet::custom(hmmrates::CellKind::inception, table);
}

inline std::vector<hmmrates::Cell> scalar_cells() {
    return {hmmrates::Cell::inception(30), hmmrates::Cell::inception(45), hmmrates::Cell::inception(60)};
}

// Panel from per-period event rows; every cell gets the same exposure.
inline hmmrates::CellPanel inception_panel(const std::vector<hmmrates::Cell>& cells,
                                           const std::vector<std::vector<std::int64_t>>& events_by_period,
                                           std::int64_t exposure) {
    const int n = static_cast<int>(events_by_period.size());
    std::vector<std::int64_t> e(cells.size() * static_cast<std::size_t>(n), exposure), d(e.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int t = 0; t < n; ++t)
            d[c * static_cast<std::size_t>(n) + static_cast<std::size_t>(t)] = events_by_period[static_cast<std::size_t>(t)][c];
    return hmmrates::CellPanel(hmmrates::CellKind::inception, cells, n, e, d);
}

// The p = 1 toy: three cells, four periods, 50 exposed each.
inline hmmrates::CellPanel toy_panel() {
    return inception_panel(scalar_cells(), {{4, 6, 7}, {5, 5, 9}, {3, 7, 8}, {6, 8, 11}}, 50);
}

inline hmmrates::LatentParams toy_theta() { return theta1(0.05, 0.25, -1.8); }

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double std_error(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace testing
