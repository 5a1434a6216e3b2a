#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "driftlab/liouville.hpp"

using namespace driftlab;

namespace {

Nonlinearity sqrt_w() {
    return Nonlinearity::power_sum({{Coefficient::constant(1.0), 0.5}}, {});
}

Nonlinearity allen_cahn() { // w - w^3
    return Nonlinearity::power_sum({{Coefficient::constant(1.0), 1.0}},
                                   {{Coefficient::constant(-1.0), 3.0}});
}

} // namespace

TEST_CASE("subunit powers: sqrt(w) passes, cube fails") {
    auto rep = liouville_predicate(sqrt_w(), "subunit-powers", 0.1, 10.0);
    REQUIRE(rep.holds);

    auto cube = Nonlinearity::power_sum({{Coefficient::constant(1.0), 3.0}}, {});
    auto rep2 = liouville_predicate(cube, "subunit-powers", 0.1, 10.0);
    REQUIRE_FALSE(rep2.holds);
    REQUIRE(rep2.note.find("p = 3") != std::string::npos);
}

TEST_CASE("power-sum window rejects Allen-Cahn with witness p = 1") {
    PredicateParams params;
    params.alpha = 4.0;
    params.beta = 0.0;
    auto rep = liouville_predicate(allen_cahn(), "power-sum-window", 0.1, 10.0, params);
    REQUIRE_FALSE(rep.holds);
    REQUIRE(rep.note.find("p = 1") != std::string::npos);
    REQUIRE(rep.note.find("impossible for every admissible") != std::string::npos);

    // and the failure is alpha/beta independent
    params.alpha = 100.0;
    auto rep2 = liouville_predicate(allen_cahn(), "power-sum-window", 0.1, 10.0, params);
    REQUIRE_FALSE(rep2.holds);
}

TEST_CASE("scaling gap: sqrt(w) with alpha=4, beta=0") {
    PredicateParams params;
    params.alpha = 4.0;
    params.beta = 0.0;
    // bracket = w^{1/2} (3/4 - 1/2) >= 0
    auto rep = liouville_predicate(sqrt_w(), "scaling-gap", 0.1, 10.0, params);
    REQUIRE(rep.holds);
    REQUIRE(rep.stable);

    // w^3 has bracket (3/4 - 3) w^3 < 0
    auto cube = Nonlinearity::power_sum({{Coefficient::constant(1.0), 3.0}}, {});
    auto rep2 = liouville_predicate(cube, "scaling-gap", 0.1, 10.0, params);
    REQUIRE_FALSE(rep2.holds);
    REQUIRE(rep2.witness_w.has_value());

    params.alpha = 1.0; // not > 1 + beta
    REQUIRE_THROWS_AS(liouville_predicate(sqrt_w(), "scaling-gap", 0.1, 10.0, params),
                      ParameterOrder);
}

TEST_CASE("log-weighted condition for -w log w below D = 1") {
    auto G = Nonlinearity::log_linear(Coefficient::constant(-1.0));
    PredicateParams params;
    params.D = 1.0;
    auto rep = liouville_predicate(G, "log-weighted", 1e-3, 1.0, params);
    REQUIRE(rep.holds);

    // +w log w violates it (condition = +w at every w)
    auto bad = Nonlinearity::log_linear(Coefficient::constant(1.0));
    auto rep2 = liouville_predicate(bad, "log-weighted", 1e-3, 1.0, params);
    REQUIRE_FALSE(rep2.holds);
    REQUIRE(rep2.witness_w.has_value());
}

TEST_CASE("split form with Y = -s^3 on (0, 1]") {
    auto G = Nonlinearity::split_xy(ScalarFn("1/w", "w"), 1.0, ScalarFn("-s^3", "s"));
    auto rep = liouville_predicate(G, "split-xy", 1e-2, 1.0);
    REQUIRE(rep.holds);
    REQUIRE(rep.note.find("gamma") != std::string::npos);

    // same Y on [1, inf): the branch needs Y <= 0, Y' <= 0 for s >= 0
    auto rep2 = liouville_predicate(G, "split-xy", 1.0, 50.0);
    REQUIRE(rep2.holds);

    // Y = +s^3 fails the w >= 1 branch (Y > 0 for s > 0)
    auto bad = Nonlinearity::split_xy(std::nullopt, 1.0, ScalarFn("s^3", "s"));
    auto rep3 = liouville_predicate(bad, "split-xy", 1.0, 50.0);
    REQUIRE_FALSE(rep3.holds);

    // an X part violating X' <= 0 fails the shared condition
    auto badx = Nonlinearity::split_xy(ScalarFn("w^2", "w"), 1.0, ScalarFn("-s^3", "s"));
    auto rep4 = liouville_predicate(badx, "split-xy", 1.0, 50.0);
    REQUIRE_FALSE(rep4.holds);
    REQUIRE(rep4.note.find("X term") != std::string::npos);
}

TEST_CASE("power-log window") {
    // G = A w^p + B w^q + w^r Y(log w) with Y = exp(-s), r = 0.2
    auto G = Nonlinearity::split_xy(std::nullopt, 0.2, ScalarFn("exp(-s)", "s"));
    G.a_terms = {{Coefficient::constant(1.0), 0.25}};
    G.b_terms = {{Coefficient::constant(-2.0), 2.0}};
    PredicateParams params;
    params.alpha = 4.0;
    params.beta = 0.0;
    // condition on Y: Y' + [(1/4) + 0.2 - 1] Y = (-1 - 0.55) e^{-s} <= 0
    auto rep = liouville_predicate(G, "power-log-window", 0.5, 4.0, params);
    REQUIRE(rep.holds);

    // exponent p above the window bound fails
    G.a_terms = {{Coefficient::constant(1.0), 0.9}};
    auto rep2 = liouville_predicate(G, "power-log-window", 0.5, 4.0, params);
    REQUIRE_FALSE(rep2.holds);
}

TEST_CASE("concavity chain") {
    PredicateParams params;
    params.alpha = 2.0;
    auto rep = liouville_predicate(sqrt_w(), "concavity-chain", 0.1, 100.0, params);
    REQUIRE(rep.holds); // (p-1)(alpha p - 1) = 0 at alpha = 2, p = 1/2

    params.alpha = 4.0; // (p-1)(alpha p - 1) = -0.5 < 0
    auto rep2 = liouville_predicate(sqrt_w(), "concavity-chain", 0.1, 100.0, params);
    REQUIRE_FALSE(rep2.holds);

    params.alpha = 0.5;
    REQUIRE_THROWS_AS(
        liouville_predicate(sqrt_w(), "concavity-chain", 0.1, 100.0, params),
        ParameterOrder);
}

TEST_CASE("log-lichnerowicz structure") {
    // G = A w Y(log w) + B w^s with Y = exp(-s)
    auto G = Nonlinearity::gamma_log(Coefficient::constant(1.0), 1.0,
                                     ScalarFn("exp(-s)", "s"),
                                     Coefficient::constant(1.0), 0.5,
                                     Coefficient::constant(0.0));
    PredicateParams params;
    params.alpha = 2.0;
    auto rep = liouville_predicate(G, "log-lichnerowicz", 0.1, 10.0, params);
    REQUIRE(rep.holds);

    // negative B fails the sign condition
    auto bad = Nonlinearity::gamma_log(Coefficient::constant(1.0), 1.0,
                                       ScalarFn("exp(-s)", "s"),
                                       Coefficient::constant(-1.0), 0.5,
                                       Coefficient::constant(0.0));
    REQUIRE_FALSE(liouville_predicate(bad, "log-lichnerowicz", 0.1, 10.0, params).holds);

    // wrong structure is a domain violation
    REQUIRE_THROWS_AS(liouville_predicate(sqrt_w(), "log-lichnerowicz", 0.1, 10.0),
                      DomainViolation);
}

TEST_CASE("ancient floor") {
    // G = 1 + 1/w: G' <= 0, G - w G' = 1 + 2/w >= 0, inf G = 1 > 0
    auto G = Nonlinearity::power_sum(
        {{Coefficient::constant(1.0), 0.0}, {Coefficient::constant(1.0), -1.0}}, {});
    auto rep = liouville_predicate(G, "ancient-floor", 0.5, 100.0);
    REQUIRE(rep.holds);
    REQUIRE(rep.note.find("floor") != std::string::npos);

    // G = w has G' = 1 > 0
    auto grow = Nonlinearity::power_sum({{Coefficient::constant(1.0), 1.0}}, {});
    REQUIRE_FALSE(liouville_predicate(grow, "ancient-floor", 0.5, 100.0).holds);

    // G = 1/w - 1 has no positive floor on (0.5, 100]
    auto nofloor = Nonlinearity::power_sum(
        {{Coefficient::constant(1.0), -1.0}, {Coefficient::constant(-1.0), 0.0}}, {});
    REQUIRE_FALSE(liouville_predicate(nofloor, "ancient-floor", 0.5, 100.0).holds);
}

TEST_CASE("predicate plumbing") {
    REQUIRE_THROWS_AS(liouville_predicate(sqrt_w(), "no-such-predicate", 0.1, 1.0),
                      UnknownPredicate);
    REQUIRE_THROWS_AS(liouville_predicate(sqrt_w(), "subunit-powers", -1.0, 1.0),
                      DomainViolation);
    REQUIRE_THROWS_AS(liouville_predicate(sqrt_w(), "subunit-powers", 1e-9, 1.0),
                      DomainViolation); // below the positivity window
    // spatial coefficients are rejected for constancy predicates
    auto spatial = Nonlinearity::log_linear(Coefficient::profile("1+r^2"));
    REQUIRE_THROWS_AS(liouville_predicate(spatial, "scaling-gap", 0.1, 1.0,
                                          PredicateParams{}),
                      DomainViolation);
}

TEST_CASE("exponent predicates are scale consistent") {
    for (double lambda : {0.001, 1.0, 1000.0}) {
        auto G = Nonlinearity::power_sum({{Coefficient::constant(lambda), 0.5}}, {});
        REQUIRE(liouville_predicate(G, "subunit-powers", 0.1, 10.0).holds);
    }
}

TEST_CASE("iterated-log shapes are flagged and excludable") {
    // Y(s) = |log(abs(s))| style shapes are only piecewise C^1; the
    // exclusion list lets predicates skip the singular neighbourhood
    auto Y = ScalarFn("abs(s)", "s");
    REQUIRE_FALSE(Y.smooth());
    auto G = Nonlinearity::split_xy(std::nullopt, 1.0, ScalarFn("-abs(s)*s^2", "s"));
    REQUIRE_FALSE(G.smooth());
    G.singular_points = {1.0}; // w = 1 <-> s = 0
    G.exclusion_radius = 1e-2;
    auto rep = liouville_predicate(G, "split-xy", 1.0, 20.0);
    REQUIRE(rep.holds);
}
