#include <cmath>
#include <stdexcept>
#include <set>
#include <vector>

#include "doctest.h"
#include "hmmrates/parallel.hpp"
#include "hmmrates/rng.hpp"

using namespace hmmrates;

TEST_SUITE("rng") {
    TEST_CASE("philox known answers") {
        // Published Philox4x32-10 test vectors.
        auto a = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
        CHECK(a == Philox4x32::block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
        auto b = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
        CHECK(b == Philox4x32::block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
        auto c = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
        CHECK(c == Philox4x32::block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
    }

    TEST_CASE("streams replay and differ") {
        RngKey key{42, 7};
        Stream a(key, StreamTag::propagate, 3, 9), b(key, StreamTag::propagate, 3, 9), c(key, StreamTag::propagate, 3, 10);
        std::vector<std::uint64_t> va, vb, vc;
        for (int i = 0; i < 100; ++i) {
            va.push_back(a());
            vb.push_back(b());
            vc.push_back(c());
        }
        CHECK(va == vb);
        CHECK(va != vc);
        Stream d(RngKey{43, 7}, StreamTag::propagate, 3, 9);
        CHECK(d() != va.front());
    }

    TEST_CASE("uniform in open interval with sane moments") {
        Stream s(1, 2);
        double sum = 0.0, sq = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double u = s.uniform();
            REQUIRE(u > 0.0);
            REQUIRE(u < 1.0);
            sum += u;
            sq += u * u;
        }
        CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
        CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.01));
    }

    TEST_CASE("normal moments") {
        Stream s(5, 6);
        double sum = 0.0, sq = 0.0, cube = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double z = s.normal();
            sum += z;
            sq += z * z;
            cube += z * z * z;
        }
        CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
        CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
        CHECK(std::abs(cube / n) < 4.0 * std::sqrt(15.0 / n));
    }

    TEST_CASE("child keys are distinct") {
        RngKey k{1, 0};
        std::set<std::uint64_t> epochs;
        for (int i = 0; i < 1000; ++i) epochs.insert(k.child(static_cast<std::uint64_t>(i)).epoch);
        CHECK(epochs.size() == 1000);
    }

    TEST_CASE("parallel_for covers every index once for any worker count") {
        for (int threads : {1, 2, 3, 8}) {
            set_num_threads(threads);
            std::vector<int> hits(1001, 0);
            parallel_for(0, hits.size(), [&](std::size_t i) { hits[i] += 1; });
            for (int h : hits) REQUIRE(h == 1);
        }
        set_num_threads(1);
    }

    TEST_CASE("parallel_for rethrows") {
        set_num_threads(4);
        CHECK_THROWS_AS(parallel_for(0, 100, [](std::size_t i) {
                            if (i == 57) throw std::runtime_error("boom");
                        }),
                        std::runtime_error);
        set_num_threads(1);
    }
}
