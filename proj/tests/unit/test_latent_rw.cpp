#include <numbers>

#include "doctest.h"
#include "hmmrates/error.hpp"
#include "hmmrates/latent_rw.hpp"
#include "support.hpp"

using namespace hmmrates;

TEST_SUITE("latent_rw") {
    const double log2pi = std::log(2.0 * std::numbers::pi);

    TEST_CASE("log-density examples") {
        const auto t1 = testing::theta1(0.0, 1.0, 0.0);
        CHECK(transition_logdensity(t1, Vector::Zero(1), Vector::Zero(1)) == doctest::Approx(-0.5 * log2pi).epsilon(1e-15));

        const auto t2 = testing::theta2(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        CHECK(transition_logdensity(t2, Vector::Zero(2), Vector::Ones(2)) == doctest::Approx(-1.0 - log2pi).epsilon(1e-15));

        const auto t3 = testing::theta2(0.3, -0.1, 0.5, 0.2, 0.4, 0.0, 0.0);
        Vector prev(2), next(2);
        prev << 1.0, 2.0;
        next = prev + t3.mu;
        const double logdet = std::log(t3.covariance().determinant());
        CHECK(transition_logdensity(t3, prev, next) == doctest::Approx(-0.5 * logdet - log2pi).epsilon(1e-14));
    }

    TEST_CASE("shift invariance and kernel agreement") {
        const auto t = testing::theta2(0.3, -0.1, 0.5, 0.2, 0.4, 0.0, 0.0);
        const TransitionKernel k(t);
        Vector a(2), b(2), c = Vector::Constant(2, 3.7);
        a << 0.1, -0.4;
        b << 0.6, 0.1;
        const Vector ac = a + c, bc = b + c;
        CHECK(transition_logdensity(t, a, b) == doctest::Approx(transition_logdensity(t, ac, bc)).epsilon(1e-13));
        CHECK(k.log_density(a.data(), b.data()) == doctest::Approx(transition_logdensity(t, a, b)).epsilon(1e-14));
        CHECK(k.log_ratio_to_peak(a.data(), b.data()) + k.log_peak() ==
              doctest::Approx(transition_logdensity(t, a, b)).epsilon(1e-14));
    }

    TEST_CASE("density integrates to one") {
        const auto t = testing::theta1(0.2, 0.7, 0.0);
        double sum = 0.0;
        const double h = 1e-3;
        for (double x = -8.0; x <= 8.0; x += h) {
            Vector next(1);
            next << x;
            sum += std::exp(transition_logdensity(t, Vector::Zero(1), next)) * h;
        }
        CHECK(std::abs(sum - 1.0) < 1e-3);
    }

    TEST_CASE("log-density is jointly concave") {
        const auto t = testing::theta1(0.2, 0.7, 0.0);
        const double h = 1e-3;
        for (double x : {-1.0, 0.0, 0.5})
            for (double y : {-0.5, 0.3, 1.2}) {
                auto f = [&](double a, double b) {
                    Vector va(1), vb(1);
                    va << a;
                    vb << b;
                    return transition_logdensity(t, va, vb);
                };
                const double fxx = (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h);
                const double fyy = (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h);
                const double fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h);
                CHECK(fxx <= 1e-6);
                CHECK(fyy <= 1e-6);
                CHECK(fxx * fyy - fxy * fxy >= -1e-4);
            }
    }

    TEST_CASE("non-finite input is a domain error") {
        const auto t = testing::theta1(0.0, 1.0, 0.0);
        Vector bad(1);
        bad << std::nan("");
        CHECK_THROWS_AS(transition_logdensity(t, Vector::Zero(1), bad), DomainError);
    }

    TEST_CASE("near-degenerate sampling") {
        auto t = testing::theta2(0.3, -0.2, 1e-12, 0.0, 1e-12, 0.0, 0.0);
        Stream rng(9, 1);
        Vector prev(2);
        prev << 1.0, 2.0;
        const Vector out = sample_transition(t, prev, rng);
        CHECK((out - prev - t.mu).cwiseAbs().maxCoeff() < 1e-8);
    }

    TEST_CASE("sampling is reproducible and has the right moments") {
        const auto t = testing::theta2(0.3, -0.1, 0.5, 0.2, 0.4, 0.0, 0.0);
        Stream r1(3, 4), r2(3, 4);
        const Vector prev = Vector::Zero(2);
        CHECK(sample_transition(t, prev, r1) == sample_transition(t, prev, r2));

        const int n = 100000;
        Vector sum = Vector::Zero(2);
        Matrix sq = Matrix::Zero(2, 2);
        Stream rng(17, 0);
        for (int i = 0; i < n; ++i) {
            const Vector x = sample_transition(t, prev, rng);
            sum += x;
            sq += x * x.transpose();
        }
        const Vector m = sum / n;
        const Matrix cov = sq / n - m * m.transpose();
        const Matrix target = t.covariance();
        for (int i = 0; i < 2; ++i) CHECK(std::abs(m(i) - t.mu(i)) < 4.0 * std::sqrt(target(i, i) / n));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs(cov(i, j) - target(i, j)) <= 0.05 * std::abs(target(i, j)));
    }

    TEST_CASE("validate") {
        auto t = testing::theta2(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        CHECK(validate(t).empty());
        auto upper = t;
        upper.chol(0, 1) = 0.1;
        CHECK_FALSE(validate(upper).empty());
        auto zero = t;
        zero.chol(1, 1) = 0.0;
        CHECK_FALSE(validate(zero).empty());
        auto mismatch = t;
        mismatch.nu0 = Vector::Zero(3);
        CHECK_FALSE(validate(mismatch).empty());
        CHECK_THROWS_AS(require_valid(zero), UsageError);
        CHECK(LatentParams::free_parameter_count(2) == 7);
        CHECK(LatentParams::free_parameter_count(4) == 4 * 4 / 2 + 5 * 4 / 2);
    }
}
