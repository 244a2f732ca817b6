#include <random>
#include <sstream>

#include "doctest.h"
#include "hmmrates/basis.hpp"
#include "hmmrates/error.hpp"

using namespace hmmrates;

namespace {
std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace

TEST_SUITE("basis") {
    TEST_CASE("linear2 endpoints") {
        const auto b = BasisSet::linear2();
        CHECK(as_std(eval_design(b, Cell::inception(25))) == std::vector<double>{1.0, 0.0});
        CHECK(as_std(eval_design(b, Cell::inception(64))) == std::vector<double>{0.0, 1.0});
    }

    TEST_CASE("piecewise3 knots") {
        const auto b = BasisSet::piecewise3(40.0);
        CHECK(as_std(eval_design(b, Cell::inception(40))) == std::vector<double>{0.0, 1.0, 0.0});
        CHECK(as_std(eval_design(b, Cell::inception(25))) == std::vector<double>{1.0, 0.0, 0.0});
        CHECK(as_std(eval_design(b, Cell::inception(64))) == std::vector<double>{0.0, 0.0, 1.0});
    }

    TEST_CASE("four-factor tensor flattening") {
        const auto b = BasisSet::tensor(AgeFamily::linear2, DurationFamily::linear);
        CHECK(b.dim() == 4);
        CHECK(as_std(eval_design(b, Cell::termination(25, 2.0, 0.5))) == std::vector<double>{1.0, 2.0, 0.0, 0.0});
        CHECK(b.labels() == std::vector<std::string>{"1:1", "1:2", "2:1", "2:2"});
    }

    TEST_CASE("six-factor duration basis at zero") {
        const auto b = BasisSet::tensor(AgeFamily::linear2, DurationFamily::exponential);
        CHECK(b.dim() == 6);
        CHECK(as_std(b.duration_values(0.0)) == std::vector<double>{1.0, 1.0, 1.0});
        CHECK(as_std(eval_design(b, Cell::termination(25, 0.0, 0.5))) ==
              std::vector<double>{1.0, 1.0, 1.0, 0.0, 0.0, 0.0});
    }

    TEST_CASE("errors") {
        CHECK_THROWS_AS(eval_design(BasisSet::linear2(), Cell::inception(70)), DomainError);
        CHECK_THROWS_AS(eval_design(BasisSet::linear2(), Cell::termination(30, 1.0, 1.0)), UsageError);
        CHECK_THROWS_AS(eval_design(BasisSet::tensor(AgeFamily::linear2, DurationFamily::linear), Cell::inception(30)),
                        UsageError);
        CHECK_THROWS_AS(BasisSet::piecewise3(25.0), UsageError);
        CHECK_THROWS_AS(BasisSet::piecewise3(70.0), UsageError);
        CHECK_THROWS_AS(BasisSet::linear2(64, 25), UsageError);
    }

    TEST_CASE("rank checks") {
        std::vector<Cell> all;
        for (int x = 25; x <= 64; ++x) all.push_back(Cell::inception(x));
        CHECK(check_rank(BasisSet::linear2(), all));
        CHECK(check_rank(BasisSet::piecewise3(), all));
        CHECK_FALSE(check_rank(BasisSet::piecewise3(), {Cell::inception(25), Cell::inception(26)}));
        CHECK_FALSE(check_rank(BasisSet::linear2(), {Cell::inception(30), Cell::inception(30)}));

        std::map<std::pair<int, double>, std::vector<double>> twin;
        for (int x : {30, 40, 50}) twin[{x, 0.0}] = {x / 10.0, x / 10.0};
        const auto dup = BasisSet::custom(CellKind::inception, twin);
        CHECK_FALSE(check_rank(dup, {Cell::inception(30), Cell::inception(40), Cell::inception(50)}));
    }

    TEST_CASE("partition of unity and direct formulas at random cells") {
        std::mt19937 gen(11);
        std::uniform_int_distribution<int> age(25, 64);
        std::uniform_real_distribution<double> dur(0.0, 5.0);
        const auto l2 = BasisSet::linear2();
        const auto p3 = BasisSet::piecewise3(40.0);
        const auto t6 = BasisSet::tensor(AgeFamily::piecewise3, DurationFamily::exponential);
        for (int i = 0; i < 100; ++i) {
            const int x = age(gen);
            const double d = dur(gen);
            const Vector a = eval_design(l2, Cell::inception(x));
            CHECK(a(0) == doctest::Approx((64.0 - x) / 39.0).epsilon(1e-15));
            CHECK(a(1) == doctest::Approx((x - 25.0) / 39.0).epsilon(1e-15));
            CHECK(a.sum() == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(a.minCoeff() >= 0.0);

            const Vector b = eval_design(p3, Cell::inception(x));
            Vector expect(3);
            if (x < 40) expect << (40.0 - x) / 15.0, (x - 25.0) / 15.0, 0.0;
            else expect << 0.0, (64.0 - x) / 24.0, (x - 40.0) / 24.0;
            CHECK((b - expect).cwiseAbs().maxCoeff() < 1e-15);
            CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(b.minCoeff() >= 0.0);
            CHECK(b.maxCoeff() <= 1.0);

            const Vector c = eval_design(t6, Cell::termination(x, d, 0.5));
            const double psi[3] = {1.0, std::exp(-d), std::exp(-2.0 * d)};
            for (int i2 = 0; i2 < 3; ++i2)
                for (int j = 0; j < 3; ++j) CHECK(c(i2 * 3 + j) == doctest::Approx(expect(i2) * psi[j]).epsilon(1e-14));
        }
    }

    TEST_CASE("piecewise3 continuity at the midpoint") {
        const auto b = BasisSet::piecewise3(40.5);
        // ages are integers; evaluate the age family directly just either side
        const Vector lo = b.age_values(40.5 - 1e-9), hi = b.age_values(40.5 + 1e-9);
        CHECK((lo - hi).cwiseAbs().maxCoeff() < 1e-8);
    }

    TEST_CASE("custom basis from a table") {
        std::istringstream in("age,phi_1,phi_2\n30,1,0.5\n40,1,1.5\n");
        const auto b = load_custom_basis(in);
        CHECK(b.dim() == 2);
        CHECK(as_std(eval_design(b, Cell::inception(40))) == std::vector<double>{1.0, 1.5});
        CHECK_THROWS_AS(eval_design(b, Cell::inception(35)), DomainError);

        std::istringstream term("age,duration,phi_1\n30,0.5,2\n");
        const auto t = load_custom_basis(term);
        CHECK(t.target() == CellKind::termination);
        CHECK(eval_design(t, Cell::termination(30, 0.5, 0.5))(0) == 2.0);

        std::istringstream bad("age,phi_1\n30,x\n");
        CHECK_THROWS(load_custom_basis(bad));
    }
}
