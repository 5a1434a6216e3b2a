#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "driftlab/geometry.hpp"
#include "driftlab/grid.hpp"

using namespace driftlab;

namespace {

ModelSpace euclidean3(double R = 10.0) {
    return make_model_space(3, 3.0, "euclidean", "zero", R);
}
ModelSpace hyperbolic3(double R = 10.0) {
    return make_model_space(3, 3.0, "hyperbolic[1]", "zero", R);
}
ModelSpace gaussian3(double R = 10.0) {
    return make_model_space(3, kInfiniteDim, "euclidean", "gaussian[1]", R);
}

} // namespace

TEST_CASE("model space validation") {
    REQUIRE_NOTHROW(euclidean3());
    REQUIRE_NOTHROW(gaussian3());
    // m = n forces a constant potential
    REQUIRE_THROWS_AS(make_model_space(3, 3.0, "euclidean", "gaussian[1]", 10.0),
                      DimensionConvention);
    // psi'(0) != 1
    REQUIRE_THROWS_AS(make_model_space(3, 3.0, "2*r", "zero", 10.0), InvalidWarp);
    // psi <= 0 in the interior (sphere past the conjugate radius)
    REQUIRE_THROWS_AS(make_model_space(3, 3.0, "sphere[1]", "zero", 4.0), InvalidWarp);
    REQUIRE_THROWS_AS(make_model_space(1, 1.0, "euclidean", "zero", 10.0),
                      DimensionConvention);
    REQUIRE_THROWS_AS(make_model_space(3, 2.5, "euclidean", "zero", 10.0),
                      DimensionConvention);
    REQUIRE_THROWS_AS(make_model_space(3, 3.0, "sinh(", "zero", 10.0), ParseError);
}

TEST_CASE("ricci eigenvalues on the three reference spaces") {
    auto flat = ricci_eigenvalues(euclidean3(), 1.0);
    REQUIRE(flat.ric_radial == 0.0);
    REQUIRE(flat.ric_tangential == Catch::Approx(0.0).margin(1e-13));
    REQUIRE(flat.ric_phi_m_radial == 0.0);

    // sinh'' = sinh gives Ric = -(n-1) g on both tracks
    auto hyp = ricci_eigenvalues(hyperbolic3(), 1.0);
    REQUIRE(hyp.ric_radial == Catch::Approx(-2.0).epsilon(1e-12));
    REQUIRE(hyp.ric_tangential == Catch::Approx(-2.0).epsilon(1e-12));

    // Hess(r^2/2) = g on flat space
    auto gau = ricci_eigenvalues(gaussian3(), 1.0);
    REQUIRE(gau.ric_phi_radial == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(gau.ric_phi_tangential == Catch::Approx(1.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(ricci_eigenvalues(euclidean3(), 0.0), OutOfDomain);
    REQUIRE_THROWS_AS(ricci_eigenvalues(euclidean3(), 11.0), OutOfDomain);
}

TEST_CASE("m-Bakry-Emery reduces to Ricci when m = n and phi constant") {
    auto space = make_model_space(4, 4.0, "hyperbolic[2]", "zero", 6.0);
    for (double r : {0.5, 1.0, 3.0}) {
        auto c = ricci_eigenvalues(space, r);
        REQUIRE(c.ric_phi_m_radial == c.ric_radial);
        REQUIRE(c.ric_phi_m_tangential == c.ric_tangential);
    }
}

TEST_CASE("curvature lower bounds") {
    REQUIRE(curvature_lower_bound(euclidean3(), CurvatureFlavor::RicPhi, {0, 10}).k ==
            Catch::Approx(0.0).margin(1e-12));
    // Ric = -2g = -(n-1) * 1 * g
    REQUIRE(curvature_lower_bound(hyperbolic3(), CurvatureFlavor::RicPhi, {0, 10}).k ==
            Catch::Approx(1.0).epsilon(1e-9));
    REQUIRE(curvature_lower_bound(gaussian3(), CurvatureFlavor::RicPhi, {0, 10}).k ==
            Catch::Approx(0.0).margin(1e-12));
    // finite-m flavor on an infinite-m space is rejected
    REQUIRE_THROWS_AS(
        curvature_lower_bound(gaussian3(), CurvatureFlavor::RicPhiM, {0, 10}),
        NeedFiniteM);
}

TEST_CASE("curvature bound is monotone under region growth") {
    auto gm5 = make_model_space(3, 5.0, "euclidean", "gaussian[1]", 10.0);
    double prev = -1.0;
    for (double hi : {1.0, 2.0, 4.0, 8.0}) {
        double k = curvature_lower_bound(gm5, CurvatureFlavor::RicPhiM, {0, hi}).k;
        REQUIRE(k >= prev - 1e-12);
        prev = k;
    }
    // Ric_phi^m radial = 1 - r^2/(m-n): negative for large r, so k grows
    REQUIRE(prev > 0.0);
}

TEST_CASE("discrete weighted Laplacian: reference values") {
    const double dr = 0.01;
    const int nodes = 401; // r in [0, 4]
    auto sample = [&](auto&& f) {
        std::vector<double> u(nodes);
        for (int i = 0; i < nodes; ++i) u[static_cast<size_t>(i)] = f(i * dr);
        return u;
    };

    SECTION("flat: Delta r^2 = 2n") {
        auto out = weighted_laplacian_radial(euclidean3(4.0),
                                             sample([](double r) { return r * r; }), dr);
        for (int i = 0; i + 1 < nodes; ++i)
            REQUIRE(out[static_cast<size_t>(i)] == Catch::Approx(6.0).margin(2e-3));
    }
    SECTION("gaussian: Delta_phi r^2 = 6 - 2 r^2") {
        auto out = weighted_laplacian_radial(gaussian3(4.0),
                                             sample([](double r) { return r * r; }), dr);
        for (int i = 0; i + 1 < nodes; ++i) {
            double r = i * dr;
            REQUIRE(out[static_cast<size_t>(i)] ==
                    Catch::Approx(6.0 - 2 * r * r).margin(2e-3));
        }
    }
    SECTION("constants annihilated exactly") {
        auto out = weighted_laplacian_radial(hyperbolic3(4.0),
                                             sample([](double) { return 3.7; }), dr);
        for (double v : out) REQUIRE(v == 0.0);
    }
    SECTION("fewer than 4 nodes rejected") {
        REQUIRE_THROWS_AS(
            weighted_laplacian_radial(euclidean3(4.0), {1.0, 1.0, 1.0}, dr),
            GridTooCoarse);
    }
}

TEST_CASE("discrete weighted Laplacian converges at second order") {
    // Richardson on three levels against the exact symbolic value
    auto space = make_model_space(3, kInfiniteDim, "euclidean", "gaussian[1]", 2.0);
    auto exact = [&](double r) {
        // u = cos(r): u'' + (2/r - r) u' with u' = -sin r
        return -std::cos(r) - (2.0 / r - r) * std::sin(r);
    };
    std::vector<double> errs;
    for (double dr : {0.04, 0.02, 0.01}) {
        int nodes = static_cast<int>(std::lround(2.0 / dr)) + 1;
        std::vector<double> u(static_cast<size_t>(nodes));
        for (int i = 0; i < nodes; ++i) u[static_cast<size_t>(i)] = std::cos(i * dr);
        auto out = weighted_laplacian_radial(space, u, dr);
        double worst = 0.0;
        for (int i = 1; i + 1 < nodes; ++i)
            worst = std::max(worst,
                             std::fabs(out[static_cast<size_t>(i)] - exact(i * dr)));
        // pole node uses the symmetric limit n u''(0) = -3
        worst = std::max(worst, std::fabs(out[0] + 3.0));
        errs.push_back(worst);
    }
    REQUIRE(errs[0] / errs[1] > 3.0);
    REQUIRE(errs[1] / errs[2] > 3.0);
}

TEST_CASE("gamma_delta_phi reference values") {
    REQUIRE(gamma_delta_phi(euclidean3()) == Catch::Approx(2.0).epsilon(1e-13));
    REQUIRE(gamma_delta_phi(gaussian3()) == Catch::Approx(1.0).epsilon(1e-13));
    double coth1 = std::cosh(1.0) / std::sinh(1.0);
    REQUIRE(gamma_delta_phi(hyperbolic3()) ==
            Catch::Approx(2.0 * coth1).epsilon(1e-13));
    REQUIRE_THROWS_AS(gamma_delta_phi(euclidean3(0.5)), OutOfDomain);
}

TEST_CASE("Laplacian comparison margin") {
    // model-space equality cases
    REQUIRE(laplacian_comparison_margin(hyperbolic3(), 1.0, 3.0, {0.5, 5.0}) ==
            Catch::Approx(0.0).margin(1e-9));
    REQUIRE(laplacian_comparison_margin(euclidean3(), 0.0, 3.0, {0.5, 5.0}) ==
            Catch::Approx(0.0).margin(1e-9));
    // finite-m check with m = n on a non-constant potential is uncertifiable
    REQUIRE_THROWS_AS(laplacian_comparison_margin(gaussian3(), 0.0, 3.0, {0.5, 5.0}),
                      HypothesisUnverified);
    // k below the certified bound is rejected
    REQUIRE_THROWS_AS(laplacian_comparison_margin(hyperbolic3(), 0.1, 3.0, {0.5, 5.0}),
                      HypothesisUnverified);
    // slack bound: k larger than needed gives nonnegative margin
    REQUIRE(laplacian_comparison_margin(euclidean3(), 0.5, 3.0, {0.5, 5.0}) >= 0.0);
}

TEST_CASE("comparison margin nonnegative on shipped spaces with certified k") {
    auto gm5 = make_model_space(3, 5.0, "euclidean", "gaussian[1]", 10.0);
    for (const auto& space : {euclidean3(), hyperbolic3(), gm5}) {
        RadialInterval region{0.25, 8.0};
        double k =
            curvature_lower_bound(space, CurvatureFlavor::RicPhiM, region).k;
        double margin =
            laplacian_comparison_margin(space, k, space.m(), region);
        REQUIRE(margin >= -1e-8);
    }
}
