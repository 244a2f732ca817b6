#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "hmmrates/error.hpp"
#include "hmmrates/grid_oracle.hpp"
#include "hmmrates/parallel.hpp"
#include "hmmrates/paris.hpp"
#include "support.hpp"

using namespace hmmrates;

namespace {
struct Samples {
    std::vector<double> s11, s1, e11, e1;
    void add(const SmoothedStats& s) {
        s11.push_back(s.S_ij(0, 0));
        s1.push_back(s.S_i(0));
        e11.push_back(s.E_ij(0, 0));
        e1.push_back(s.E_i(0));
    }
};

Samples replicate(const ParisOptions& options, int reps, std::uint64_t seed) {
    Samples out;
    const auto panel = testing::toy_panel();
    const DesignPanel design(panel, testing::scalar_basis());
    for (int r = 0; r < reps; ++r)
        out.add(paris_smooth(design, testing::toy_theta(), options, RngKey{seed, static_cast<std::uint64_t>(r)}));
    return out;
}

void check_close(const std::vector<double>& v, double target, double k) {
    CHECK(std::abs(testing::mean(v) - target) <= k * testing::std_error(v));
}
}  // namespace

TEST_SUITE("paris") {
    TEST_CASE("backward kernel examples") {
        const auto theta = testing::theta1(0.0, 1.0, 0.0);
        ParticleCloud one;
        one.particles = RowMatrix::Constant(1, 1, 0.3);
        one.weights = Vector::Ones(1);
        CHECK(backward_categorical(theta, one, Vector::Constant(1, 5.0))(0) == 1.0);

        ParticleCloud two;
        two.particles = RowMatrix(2, 1);
        two.particles << -1.0, 1.0;
        two.weights = Vector::Constant(2, 0.5);
        const Vector probs = backward_categorical(theta, two, Vector::Zero(1));
        CHECK(probs(0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(probs(1) == doctest::Approx(0.5).epsilon(1e-15));
    }

    TEST_CASE("backward kernel matches naive normalization") {
        const auto theta = testing::theta2(0.1, -0.2, 0.4, 0.1, 0.3, 0.0, 0.0);
        Stream rng(4, 4);
        ParticleCloud c;
        c.particles = RowMatrix(30, 2);
        c.weights = Vector(30);
        for (int k = 0; k < 30; ++k) {
            c.particles(k, 0) = rng.normal();
            c.particles(k, 1) = rng.normal();
            c.weights(k) = rng.uniform();
        }
        c.weights /= c.weights.sum();
        const Vector target = (Vector(2) << 0.3, -0.5).finished();
        const Vector probs = backward_categorical(theta, c, target);
        Vector naive(30);
        for (int k = 0; k < 30; ++k)
            naive(k) = c.weights(k) * std::exp(transition_logdensity(theta, c.particles.row(k).transpose(), target));
        naive /= naive.sum();
        CHECK((probs - naive).cwiseAbs().maxCoeff() < 1e-13);
    }

    TEST_CASE("no data: increments follow the prior") {
        const int n = 5;
        const CellPanel empty(CellKind::inception, testing::scalar_cells(), n, std::vector<std::int64_t>(15, 0),
                              std::vector<std::int64_t>(15, 0));
        const DesignPanel design(empty, testing::scalar_basis());
        const auto theta = testing::theta1(0.1, 0.3, -2.0);
        Samples s;
        for (int r = 0; r < 30; ++r) s.add(paris_smooth(design, theta, ParisOptions{500, 2}, RngKey{9, static_cast<std::uint64_t>(r)}));
        check_close(s.s1, (n - 1) * 0.1, 4.0);
        check_close(s.s11, (n - 1) * (0.09 + 0.01), 4.0);
        check_close(s.e1, -1.9, 4.0);
        check_close(s.e11, 0.09 + 1.9 * 1.9, 4.0);
    }

    TEST_CASE("a single period has no increments") {
        const auto panel = testing::inception_panel(testing::scalar_cells(), {{4, 6, 7}}, 50);
        const DesignPanel design(panel, testing::scalar_basis());
        const auto stats = paris_smooth(design, testing::toy_theta(), ParisOptions{1000, 2}, RngKey{1, 1});
        CHECK(stats.S_i(0) == 0.0);
        CHECK(stats.S_ij(0, 0) == 0.0);
        const auto filter = bootstrap_filter(design, testing::toy_theta(), FilterOptions{1000}, RngKey{1, 1});
        CHECK(stats.E_i(0) == doctest::Approx(filter_mean(filter.clouds[0])(0)).epsilon(1e-14));
    }

    TEST_CASE("all samplers agree with the exact smoother") {
        const auto panel = testing::toy_panel();
        const auto exact = exact_forward_backward(panel, testing::scalar_basis(), testing::toy_theta(),
                                                  LatentGrid::covering(testing::toy_theta(), 4, 512));
        for (auto sampler : {BackwardSampler::direct, BackwardSampler::rejection, BackwardSampler::expectation}) {
            CAPTURE(static_cast<int>(sampler));
            ParisOptions o{1000, 2, sampler};
            const Samples s = replicate(o, 30, 300 + static_cast<std::uint64_t>(sampler));
            check_close(s.s11, exact.stats.S_ij(0, 0), 3.5);
            check_close(s.s1, exact.stats.S_i(0), 3.5);
            check_close(s.e11, exact.stats.E_ij(0, 0), 3.5);
            check_close(s.e1, exact.stats.E_i(0), 3.5);
        }
    }

    TEST_CASE("more particles, less variance") {
        const Samples small = replicate(ParisOptions{250, 2}, 40, 11), large = replicate(ParisOptions{1000, 2}, 40, 12);
        const double vs = testing::std_error(small.s1), vl = testing::std_error(large.s1);
        CHECK(vl < 0.8 * vs);
    }

    TEST_CASE("statistics are symmetric and reproducible across worker counts") {
        const auto theta = testing::theta2(0.02, -0.01, 0.1, 0.02, 0.08, -3.0, -2.2);
        std::vector<Cell> cells;
        for (int x = 25; x <= 64; x += 13) cells.push_back(Cell::inception(x));
        std::vector<std::vector<std::int64_t>> events(6, std::vector<std::int64_t>(cells.size(), 30));
        const auto panel = testing::inception_panel(cells, events, 1000);
        const DesignPanel design(panel, BasisSet::linear2());
        set_num_threads(1);
        const auto a = paris_smooth(design, theta, ParisOptions{700, 3}, RngKey{5, 5});
        set_num_threads(4);
        const auto b = paris_smooth(design, theta, ParisOptions{700, 3}, RngKey{5, 5});
        const auto c = paris_smooth(design, theta, ParisOptions{700, 3, BackwardSampler::rejection}, RngKey{5, 5});
        set_num_threads(1);
        const auto d = paris_smooth(design, theta, ParisOptions{700, 3, BackwardSampler::rejection}, RngKey{5, 5});
        CHECK(a.S_ij == b.S_ij);
        CHECK(a.E_ij == b.E_ij);
        CHECK(a.S_i == b.S_i);
        CHECK(c.S_ij == d.S_ij);
        CHECK(a.S_ij == a.S_ij.transpose());
        CHECK(a.E_ij == a.E_ij.transpose());
        const Matrix cov = a.E_ij - a.E_i * a.E_i.transpose();
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues().minCoeff() > -1e-10);
        CHECK(a.N == 700);
        CHECK(a.Ntilde == 3);
    }

    TEST_CASE("argument checks") {
        const DesignPanel design(testing::toy_panel(), testing::scalar_basis());
        CHECK_THROWS_AS(paris_smooth(design, testing::toy_theta(), ParisOptions{100, 1}, RngKey{}), UsageError);
        CHECK_THROWS_AS(paris_smooth(design, testing::toy_theta(), ParisOptions{2, 3}, RngKey{}), UsageError);
    }
}
