#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "driftlab/expr.hpp"
#include "driftlab/profile.hpp"

using namespace driftlab;

TEST_CASE("expression evaluation matches libm") {
    auto e = parse_expression("sin(r) + cos(r)*sinh(r) - exp(-r^2)/2", {"r"});
    for (double r : {0.0, 0.3, 1.7, 4.0}) {
        double want = std::sin(r) + std::cos(r) * std::sinh(r) -
                      std::exp(-r * r) / 2;
        REQUIRE(e(r) == Catch::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("operator precedence and associativity") {
    auto e = parse_expression("2+3*4^2", {});
    REQUIRE(e(std::vector<double>{}) == 50.0);
    auto f = parse_expression("2^3^2", {}); // right associative
    REQUIRE(f(std::vector<double>{}) == 512.0);
    auto g = parse_expression("-r^2", {"r"});
    REQUIRE(g(3.0) == -9.0); // unary minus binds weaker than ^
    auto h = parse_expression("r^-1", {"r"});
    REQUIRE(h(4.0) == 0.25);
}

TEST_CASE("symbolic derivatives agree with central finite differences") {
    std::vector<std::string> exprs = {
        "sin(2*r)*exp(r/3)", "sinh(r)/r",        "log(1+r^2)",
        "sqrt(1+r^2)",       "tanh(r)*coth(1+r)", "r^2.5 + 3*r",
        "cos(r)^3",          "exp(-r^2/2)",
    };
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> pick(0.2, 3.0);
    for (const auto& text : exprs) {
        auto f = parse_expression(text, {"r"});
        auto df = f.derivative("r");
        auto ddf = df.derivative("r");
        for (int trial = 0; trial < 125; ++trial) {
            double r = pick(rng);
            double h = 1e-5 * std::max(1.0, std::fabs(r));
            double fd1 = (f(r + h) - f(r - h)) / (2 * h);
            double fd2 = (f(r + h) - 2 * f(r) + f(r - h)) / (h * h);
            REQUIRE(df(r) == Catch::Approx(fd1).epsilon(1e-6).margin(1e-8));
            REQUIRE(ddf(r) == Catch::Approx(fd2).epsilon(1e-4).margin(1e-4));
        }
    }
}

TEST_CASE("two-variable expressions differentiate per variable") {
    auto f = parse_expression("(1+r^2)*exp(-t)", {"r", "t"});
    auto fr = f.derivative("r");
    auto ft = f.derivative("t");
    REQUIRE(fr(2.0, 0.5) == Catch::Approx(4.0 * std::exp(-0.5)));
    REQUIRE(ft(2.0, 0.5) == Catch::Approx(-5.0 * std::exp(-0.5)));
}

TEST_CASE("parse errors carry the offending offset") {
    REQUIRE_THROWS_AS(parse_expression("sinh(", {"r"}), ParseError);
    try {
        parse_expression("2*q + 1", {"r"});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(std::string(e.what()).find("offset 2") != std::string::npos);
        REQUIRE(std::string(e.what()).find("'q'") != std::string::npos);
    }
    REQUIRE_THROWS_AS(parse_expression("(1+2", {}), ParseError);
    REQUIRE_THROWS_AS(parse_expression("1+", {}), ParseError);
    REQUIRE_THROWS_AS(parse_expression("", {}), ParseError);
}

TEST_CASE("abs marks expressions as non-smooth") {
    auto f = parse_expression("abs(s)^3", {"s"});
    REQUIRE_FALSE(f.smooth());
    REQUIRE(f(-2.0) == 8.0);
    auto df = f.derivative("s");
    REQUIRE(df(-2.0) == Catch::Approx(-12.0));
    REQUIRE(parse_expression("s^3", {"s"}).smooth());
}

TEST_CASE("constant detection") {
    REQUIRE(parse_expression("3*pi/2", {"r"}).constant());
    REQUIRE_FALSE(parse_expression("3*r", {"r"}).constant());
}

TEST_CASE("radial profile derivatives and presets") {
    RadialProfile p("r^3");
    REQUIRE(p(2.0) == 8.0);
    REQUIRE(p.d1(2.0) == 12.0);
    REQUIRE(p.d2(2.0) == 12.0);
    REQUIRE(p.deriv(3, 2.0) == 6.0);

    auto hyp = make_warp_profile("hyperbolic[4]"); // sinh(2r)/2
    REQUIRE(hyp(1.0) == Catch::Approx(std::sinh(2.0) / 2.0));
    REQUIRE(hyp.d1(0.0) == Catch::Approx(1.0));
    auto sph = make_warp_profile("sphere[1]");
    REQUIRE(sph(1.0) == Catch::Approx(std::sin(1.0)));
    auto gau = make_potential_profile("gaussian[2]");
    REQUIRE(gau(3.0) == Catch::Approx(9.0));
    REQUIRE(make_potential_profile("zero").is_constant());
}
