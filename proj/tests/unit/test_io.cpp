#include <sstream>

#include "doctest.h"
#include "hmmrates/error.hpp"
#include "hmmrates/io.hpp"
#include "support.hpp"

using namespace hmmrates;
using nlohmann::json;

TEST_SUITE("io") {
    TEST_CASE("theta json round trip") {
        const auto theta = testing::theta2(0.1, -0.25, 0.3, 0.05, 0.2, -3.0, -2.2);
        const json doc = theta_to_json(theta);
        const auto back = theta_from_json(json::parse(doc.dump()));
        CHECK(back.mu == theta.mu);
        CHECK(back.chol == theta.chol);
        CHECK(back.nu0 == theta.nu0);
    }

    TEST_CASE("lower-triangle rows are accepted") {
        const auto t = theta_from_json(json::parse(R"({"mu":[0,0],"chol":[[0.5],[0.1,0.4]],"nu0":[1,2]})"));
        CHECK(t.chol(1, 0) == 0.1);
        CHECK(t.chol(0, 1) == 0.0);
    }

    TEST_CASE("invalid theta documents") {
        CHECK_THROWS_AS(theta_from_json(json::parse(R"({"mu":[0],"chol":[[0]],"nu0":[0]})")), ValidationError);
        CHECK_THROWS_AS(theta_from_json(json::parse(R"({"mu":[0],"chol":[[1]]})")), ValidationError);
        CHECK_THROWS_AS(theta_from_json(json::parse(R"({"mu":[0,0],"chol":[[1,0.5],[0,1]],"nu0":[0,0]})")),
                        ValidationError);
        CHECK_THROWS_AS(theta_from_json(json::parse(R"({"mu":["a"],"chol":[[1]],"nu0":[0]})")), ValidationError);
    }

    TEST_CASE("stats json has named blocks") {
        auto s = SmoothedStats::zeros(2, 7);
        s.S_ij(0, 1) = s.S_ij(1, 0) = 0.5;
        s.N = 100;
        s.Ntilde = 2;
        std::ostringstream out;
        write_stats_json(out, s);
        const json doc = json::parse(out.str());
        for (const char* key : {"S_ij", "S_i", "E_ij", "E_i", "n", "N", "Ntilde"}) CHECK(doc.contains(key));
        CHECK(doc["S_ij"][0][1] == 0.5);
        CHECK(doc["n"] == 7);
    }

    TEST_CASE("tables") {
        YearlyFit fit;
        fit.nu = {(Vector(2) << 0.5, -1.0).finished(), (Vector(2) << 0.25, 2.0).finished()};
        fit.converged = {true, false};
        fit.loglik = {0, 0};
        fit.iterations = {1, 1};
        std::ostringstream yearly;
        write_yearly_csv(yearly, fit);
        CHECK(yearly.str() == "period,component,value,converged\n1,1,0.5,true\n1,2,-1,true\n2,1,0.25,false\n2,2,2,false\n");

        EMTrace trace;
        trace.theta = {testing::theta1(0.1, 0.2, 0.3)};
        trace.q = {-1.5};
        trace.repairs = {RepairKind::resample};
        std::ostringstream tr;
        write_trace_csv(tr, trace);
        CHECK(tr.str() == "iter,q_value,param_name,value,repair\n1,-1.5,mu_1,0.1,resample\n1,-1.5,A_1_1,0.2,resample\n"
                          "1,-1.5,nu0_1,0.3,resample\n");
        CHECK(param_names(2) == std::vector<std::string>{"mu_1", "mu_2", "A_1_1", "A_2_1", "A_2_2", "nu0_1", "nu0_2"});

        RateSurface surface{{Cell::inception(25)}, {0.1, 0.9}, {{{0.01, 0.03}}}, {{0.02}}};
        std::ostringstream fc;
        write_forecast_csv(fc, surface);
        CHECK(fc.str() == "horizon,cell_id,prob,quantile_level,value\n1,25,0.02,0.1,0.01\n1,25,0.02,0.9,0.03\n");

        FilterOutput filter;
        ParticleCloud c;
        c.particles = RowMatrix(2, 1);
        c.particles << 0.0, 1.0;
        c.weights = Vector::Constant(2, 0.5);
        filter.clouds = {c};
        filter.ess = {2.0};
        std::ostringstream ft;
        write_filter_csv(ft, filter);
        CHECK(ft.str() == "period,component,mean,q05,q50,q95,ess\n1,1,0.5,0,0,1,2\n");
    }
}
