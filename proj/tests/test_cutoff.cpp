#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "driftlab/cutoff.hpp"

using namespace driftlab;

TEST_CASE("spatial cutoff plateau and support") {
    auto zeta = build_spatial_cutoff(4.0);
    REQUIRE(zeta.value(0.5) == 1.0);
    REQUIRE(zeta.d1(0.5) == 0.0);
    REQUIRE(zeta.value(3.0) == 0.0);
    REQUIRE(zeta.value(1.5) > 0.0);
    REQUIRE(zeta.value(1.5) < 1.0);
    // scaled access: plateau for r <= R
    REQUIRE(zeta.at_radius(3.9) == 1.0);
    REQUIRE(zeta.at_radius(8.1) == 0.0);
}

TEST_CASE("spatial cutoff certificate") {
    auto zeta = build_spatial_cutoff(1.0);
    auto cert = certify(zeta, 10000);
    for (const auto& clause : cert.clauses) {
        INFO(clause.name << " violation " << clause.max_violation);
        REQUIRE(clause.ok);
    }
    REQUIRE(cert.valid());
    REQUIRE(std::isfinite(zeta.c1));
    REQUIRE(std::isfinite(zeta.c2));
    REQUIRE(zeta.c1 > 0.0);
    REQUIRE(zeta.c2 > 0.0);

    // independent oracle: dense sampling at two densities agrees to 1e-3
    auto sup_ratio = [&](int n) {
        double worst = 0.0;
        for (int i = 0; i <= n; ++i) {
            double s = 2.0 * i / n;
            double v = zeta.value(s);
            if (v > 0) worst = std::max(worst, -zeta.d1(s) / std::sqrt(v));
        }
        return worst;
    };
    double a = sup_ratio(10000), b = sup_ratio(20000);
    REQUIRE(std::fabs(a - b) / b < 1e-3);
    REQUIRE(zeta.c1 == Catch::Approx(1.05 * b).epsilon(1e-3));
}

TEST_CASE("certified constants are independent of R") {
    auto z4 = build_spatial_cutoff(4.0);
    auto z8 = build_spatial_cutoff(8.0);
    REQUIRE(z4.c1 == z8.c1);
    REQUIRE(z4.c2 == z8.c2);
}

TEST_CASE("certified constants stable under density doubling") {
    auto zeta = build_spatial_cutoff(1.0);
    auto coarse = certify(zeta, 10000);
    auto fine = certify(zeta, 20000);
    REQUIRE(coarse.valid());
    REQUIRE(fine.valid());

    auto eta = build_space_time_cutoff(4.0, 1.0, 0.0, -0.5);
    for (double a : {0.5, 0.75}) {
        double c1 = eta.c_a.at(a);
        REQUIRE(std::isfinite(c1));
        REQUIRE(c1 > 0.0);
    }
}

TEST_CASE("broken profile fails certification") {
    auto zeta = build_spatial_cutoff(1.0);
    // make the profile increase on [1, 1.1]
    auto base_v = zeta.value, base_d1 = zeta.d1;
    zeta.value = [base_v](double s) {
        if (s > 1.0 && s < 1.1) return base_v(s) + 0.5 * (s - 1.0);
        return base_v(s);
    };
    zeta.d1 = [base_d1](double s) {
        if (s > 1.0 && s < 1.1) return base_d1(s) + 0.5;
        return base_d1(s);
    };
    auto cert = certify(zeta, 10000);
    REQUIRE_FALSE(cert.valid());
    bool monotone_flag = true;
    for (const auto& clause : cert.clauses)
        if (clause.name == "non_increasing") monotone_flag = clause.ok;
    REQUIRE_FALSE(monotone_flag);
}

TEST_CASE("space-time cutoff clauses") {
    auto eta = build_space_time_cutoff(4.0, 1.0, 0.0, -0.5);
    // plateau value
    REQUIRE(eta.value(1.0, -0.25) == 1.0);
    // vanishes at the bottom of the window
    for (double r : {0.0, 1.0, 3.0, 5.0})
        REQUIRE(eta.value(r, -1.0) == 0.0);
    // support in r
    REQUIRE(eta.value(4.2, -0.1) == 0.0);

    auto cert = certify(eta, 10000, 1000);
    for (const auto& clause : cert.clauses) {
        INFO(clause.name << " violation " << clause.max_violation);
        REQUIRE(clause.ok);
    }

    REQUIRE_THROWS_AS(build_space_time_cutoff(1.5, 1.0, 0.0, -0.5), OutOfDomain);
    REQUIRE_THROWS_AS(build_space_time_cutoff(4.0, 1.0, 0.0, -2.0), BadWindow);
    REQUIRE_THROWS_AS(build_space_time_cutoff(4.0, 1.0, 0.0, 0.5), BadWindow);
}

TEST_CASE("time clause bound has no sampled violations") {
    auto eta = build_space_time_cutoff(6.0, 2.0, 1.0, 0.0);
    double span = eta.tau - (eta.t0 - eta.T);
    double worst = 0.0;
    for (int j = 0; j <= 2000; ++j) {
        double t = (eta.t0 - eta.T) + eta.T * j / 2000;
        for (int i = 0; i <= 300; ++i) {
            double r = 6.0 * i / 300;
            double v = eta.value(r, t);
            if (v > 0)
                worst = std::max(worst,
                                 std::fabs(eta.dt(r, t)) - eta.c * std::sqrt(v) / span);
        }
    }
    REQUIRE(worst <= 0.0);
}
