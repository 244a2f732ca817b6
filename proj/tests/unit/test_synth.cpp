#include <sstream>

#include "doctest.h"
#include "hmmrates/obs_model.hpp"
#include "hmmrates/synth.hpp"
#include "support.hpp"

using namespace hmmrates;

namespace {
std::vector<Cell> ages() {
    std::vector<Cell> cells;
    for (int x = 25; x <= 64; x += 13) cells.push_back(Cell::inception(x));
    return cells;
}
const LatentParams kTheta = testing::theta2(0.02, -0.01, 0.1, 0.02, 0.08, -3.0, -2.2);
}  // namespace

TEST_SUITE("synth") {
    TEST_CASE("extreme negative logits give no events") {
        const auto theta = testing::theta2(0.0, 0.0, 0.01, 0.0, 0.01, -60.0, -60.0);
        const auto s = generate(theta, BasisSet::linear2(), ages(), 1'000'000, 5, RngKey{1, 0});
        for (std::size_t c = 0; c < 4; ++c)
            for (int t = 0; t < 5; ++t) CHECK(s.panel.events(c, t) == 0);
    }

    TEST_CASE("fixed key, fixed output") {
        const auto a = generate(kTheta, BasisSet::linear2(), ages(), 500, 6, RngKey{2, 3});
        const auto b = generate(kTheta, BasisSet::linear2(), ages(), 500, 6, RngKey{2, 3});
        const auto c = generate(kTheta, BasisSet::linear2(), ages(), 500, 6, RngKey{2, 4});
        bool differs = false;
        for (std::size_t k = 0; k < 4; ++k)
            for (int t = 0; t < 6; ++t) {
                CHECK(a.panel.events(k, t) == b.panel.events(k, t));
                differs = differs || a.panel.events(k, t) != c.panel.events(k, t);
            }
        CHECK(differs);
        for (int t = 0; t < 6; ++t) CHECK(a.path[static_cast<std::size_t>(t)] == b.path[static_cast<std::size_t>(t)]);
    }

    TEST_CASE("binomial concentration at large exposure") {
        const std::int64_t e = 1'000'000;
        const auto s = generate(kTheta, BasisSet::linear2(), ages(), e, 10, RngKey{3, 0});
        const RowMatrix design = design_matrix(BasisSet::linear2(), ages());
        for (std::size_t c = 0; c < 4; ++c)
            for (int t = 0; t < 10; ++t) {
                const double p = logit_prob(s.path[static_cast<std::size_t>(t)], design.row(static_cast<Eigen::Index>(c)).transpose());
                const double rate = static_cast<double>(s.panel.events(c, t)) / static_cast<double>(e);
                CHECK(std::abs(rate - p) <= 4.0 * std::sqrt(p * (1 - p) / static_cast<double>(e)));
            }
    }

    TEST_CASE("panels round-trip through the loader") {
        const auto s = generate(kTheta, BasisSet::linear2(), ages(), 700, 4, RngKey{4, 0});
        std::stringstream io;
        write_panel(io, s.panel);
        const auto back = load_panel(io, CellKind::inception);
        for (std::size_t c = 0; c < 4; ++c)
            for (int t = 0; t < 4; ++t) {
                CHECK(back.events(c, t) == s.panel.events(c, t));
                CHECK(back.exposure(c, t) == 700);
            }
    }

    TEST_CASE("termination panels") {
        const auto basis = BasisSet::tensor(AgeFamily::linear2, DurationFamily::linear);
        LatentParams t4;
        t4.mu = Vector::Zero(4);
        t4.chol = Matrix::Identity(4, 4) * 0.1;
        t4.nu0 = (Vector(4) << -1.0, -0.1, -1.5, -0.1).finished();
        const std::vector<Cell> cells{Cell::termination(25, 0.0, 0.5), Cell::termination(25, 1.0, 0.5),
                                      Cell::termination(64, 0.0, 0.5), Cell::termination(64, 1.0, 0.5)};
        const auto s = generate(t4, basis, cells, 1000, 3, RngKey{5, 0});
        CHECK(s.panel.kind() == CellKind::termination);
        CHECK(s.panel.num_cells() == 4);
    }

    TEST_CASE("replications are reproducible and distinct") {
        const std::vector<std::vector<std::int64_t>> expo(4, std::vector<std::int64_t>(5, 1000));
        const auto a = replicate_study(kTheta, BasisSet::linear2(), ages(), expo, 5, 3, 77);
        const auto b = replicate_study(kTheta, BasisSet::linear2(), ages(), expo, 5, 3, 77);
        for (std::size_t r = 0; r < 3; ++r) CHECK(a[r].path.back() == b[r].path.back());
        CHECK(a[0].path.back() != a[1].path.back());
        CHECK(a[1].path.back() != a[2].path.back());
    }

    TEST_CASE("increment covariance over replications") {
        const int n = 20, reps = 500;
        const std::vector<std::vector<std::int64_t>> expo(4, std::vector<std::int64_t>(n, 0));
        const auto study = replicate_study(kTheta, BasisSet::linear2(), ages(), expo, n, reps, 5);
        Vector sum = Vector::Zero(2);
        Matrix sq = Matrix::Zero(2, 2);
        int count = 0;
        for (const auto& s : study)
            for (int t = 1; t < n; ++t) {
                const Vector d = s.path[static_cast<std::size_t>(t)] - s.path[static_cast<std::size_t>(t - 1)];
                sum += d;
                sq += d * d.transpose();
                ++count;
            }
        const Vector m = sum / count;
        const Matrix cov = (sq - count * m * m.transpose()) / (count - 1);
        const Matrix target = kTheta.covariance();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs(cov(i, j) - target(i, j)) <= 0.1 * std::abs(target(i, j)));
    }

    TEST_CASE("long path increments average to the drift") {
        const int n = 1000;
        const auto s = generate(kTheta, BasisSet::linear2(), ages(), 0, n, RngKey{6, 0});
        const Vector mean = (s.path.back() - s.path.front()) / (n - 1);
        const Vector sd = kTheta.volatility() / std::sqrt(n - 1.0);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(mean(i) - kTheta.mu(i)) < 4.0 * sd(i));
    }
}
