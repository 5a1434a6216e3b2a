#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <random>

#include "driftlab/estimates.hpp"

using namespace driftlab;

namespace {

std::shared_ptr<const ModelSpace> euclidean3(double R) {
    return std::make_shared<const ModelSpace>(
        make_model_space(3, 3.0, "euclidean", "zero", R));
}
std::shared_ptr<const Nonlinearity> share(Nonlinearity g) {
    return std::make_shared<const Nonlinearity>(std::move(g));
}

// kernel runs with ages in [0.25, 1.25], stored every 0.0625
const std::vector<SolutionField>& kernel_runs() {
    static const std::vector<SolutionField> runs = [] {
        std::vector<SolutionField> out;
        auto space = euclidean3(8.0);
        auto G = share(Nonlinearity::zero());
        for (double dr : {0.04, 0.02}) {
            Grid grid{dr, 8.0, 17, 0.4};
            SolverOptions opts;
            opts.t_offset = 0.25;
            auto sol = solve_parabolic(space, G, heat_kernel_initial(3, 0.25, grid, 1e-6),
                                       grid, 1.0, opts);
            sol.attach_bound();
            out.push_back(std::move(sol));
        }
        return out;
    }();
    return runs;
}

SolutionField constant_run(double value, double D_hint) {
    auto space = euclidean3(6.0);
    Grid grid{0.05, 6.0, 9, 0.4};
    std::vector<double> init(static_cast<size_t>(std::lround(6.0 / 0.05)) + 1, value);
    auto sol = solve_parabolic(space, share(Nonlinearity::zero()), init, grid, 1.0);
    sol.attach_bound(D_hint);
    return sol;
}

} // namespace

TEST_CASE("souplet-zhang check") {
    auto space = euclidean3(6.0);
    SECTION("constant solution: zero gradient, full margin") {
        auto sol = constant_run(0.5, 1.0); // w == D/2
        auto rep = souplet_zhang_check(sol, *space, *sol.G, 1.0, 4.0, 1.0, 1.0, 1.0);
        REQUIRE(rep.lhs_max == 0.0);
        REQUIRE(rep.margin > 0.0);
        REQUIRE(*rep.empirical_C == 0.0);
        for (const auto& [name, value] : rep.rhs_terms) {
            INFO(name);
            REQUIRE(value >= 0.0);
        }
    }
    SECTION("kernel, global variant: empirical constant stable under refinement") {
        const auto& runs = kernel_runs();
        std::vector<EstimateReport> reports;
        for (const auto& sol : runs)
            reports.push_back(souplet_zhang_check(sol, *euclidean3(8.0), *sol.G,
                                                  *sol.bound_D, 4.0, 1.25, 1.0,
                                                  std::nullopt, /*global=*/true));
        REQUIRE(reports[0].empirical_C.has_value());
        double c0 = *reports[0].empirical_C, c1 = *reports[1].empirical_C;
        INFO("empirical C " << c0 << " vs " << c1);
        REQUIRE(std::fabs(c0 - c1) / std::max(c0, c1) < 0.10);
        auto cal = calibrate_constant(reports);
        REQUIRE(cal.stability < 0.10);
        REQUIRE(cal.C_min == Catch::Approx(std::max(c0, c1)));
    }
    SECTION("bound violation") {
        const auto& sol = kernel_runs()[0];
        REQUIRE_THROWS_AS(souplet_zhang_check(sol, *euclidean3(8.0), *sol.G,
                                              0.5 * sol.sup_w(), 4.0, 1.25, 1.0),
                          BoundViolated);
    }
    SECTION("fixed-constant mode yields positive margins for generous C") {
        const auto& sol = kernel_runs()[0];
        auto rep = souplet_zhang_check(sol, *euclidean3(8.0), *sol.G, *sol.bound_D,
                                       4.0, 1.25, 1.0, 10.0, true);
        REQUIRE(rep.margin > 0.0);
    }
}

TEST_CASE("hamilton check") {
    SECTION("constant solution has zero lhs") {
        auto sol = constant_run(1.0, 2.0);
        auto rep = hamilton_check(sol, *euclidean3(6.0), *sol.G, 4.0, 0.0, 4.0, 1.0, 1.0);
        REQUIRE(rep.lhs_max == 0.0);
    }
    SECTION("kernel: empirical constant stable under refinement") {
        const auto& runs = kernel_runs();
        std::vector<EstimateReport> reports;
        for (const auto& sol : runs)
            reports.push_back(hamilton_check(sol, *euclidean3(8.0), *sol.G, 4.0, 0.0,
                                             4.0, 1.25, 1.0, std::nullopt, true));
        double c0 = *reports[0].empirical_C, c1 = *reports[1].empirical_C;
        INFO("empirical C " << c0 << " vs " << c1);
        REQUIRE(std::fabs(c0 - c1) / std::max(c0, c1) < 0.10);
    }
    SECTION("parameter order") {
        const auto& sol = kernel_runs()[0];
        REQUIRE_THROWS_AS(hamilton_check(sol, *euclidean3(8.0), *sol.G, 1.5, 1.0, 4.0,
                                         1.25, 1.0),
                          ParameterOrder);
    }
}

TEST_CASE("li-yau check on the kernel, global variant") {
    const auto& sol = kernel_runs()[1];
    auto space = euclidean3(8.0);
    auto rep = li_yau_check(sol, *space, *sol.G, 2.0, 0.5, 4.0, 1.25, /*global=*/true);

    SECTION("margin stays positive and matches the closed form at the pole") {
        REQUIRE(rep.margin > 0.0);
        // at the pole the bound reads 3/(2t) <= 3/t: check per stored level
        Cylinder pole{0.0, 0.5, 0.3, 1.25, CylinderFlavor::H};
        for (int l : sol.levels_in(pole)) {
            double age = sol.theorem_time(l);
            double g = sol.G->eval(age, 0.0, sol.w[static_cast<size_t>(l)][0]);
            double lhs = -(sol.rhs[static_cast<size_t>(l)][0] - g) /
                         sol.w[static_cast<size_t>(l)][0];
            double rhs = 3.0 * 2.0 / (2.0 * age);
            double margin = rhs - lhs;
            REQUIRE(margin >= (3.0 / (2.0 * age)) * (1 - 1e-3));
        }
    }
    SECTION("margins are positive and ordered in alpha") {
        double prev = -1.0;
        for (double alpha : {1.1, 1.5, 2.0, 4.0}) {
            auto r = li_yau_check(sol, *space, *sol.G, alpha, 0.5, 4.0, 1.25, true);
            REQUIRE(r.margin > 0.0);
            REQUIRE(r.margin >= prev);
            prev = r.margin;
        }
    }
    SECTION("local right-hand side dominates the global one") {
        auto local = li_yau_check(sol, *space, *sol.G, 2.0, 0.5, 3.0, 1.25, false);
        auto global = li_yau_check(sol, *space, *sol.G, 2.0, 0.5, 3.0, 1.25, true);
        REQUIRE(local.margin >= global.margin);
        REQUIRE(local.rhs_terms.at("cutoff_R_block") > 0.0);
        REQUIRE(global.margin > 0.0);
    }
    SECTION("infinite m is rejected") {
        auto gspace = std::make_shared<const ModelSpace>(
            make_model_space(3, kInfiniteDim, "euclidean", "gaussian[1]", 8.0));
        REQUIRE_THROWS_AS(
            li_yau_check(sol, *gspace, *sol.G, 2.0, 0.5, 4.0, 1.25, true),
            NeedFiniteM);
    }
}

TEST_CASE("li-yau local margin on a curved space") {
    // hyperbolic bump flow: k = 1 certified, explicit constants
    auto space = std::make_shared<const ModelSpace>(
        make_model_space(3, 3.0, "hyperbolic[1]", "zero", 6.0));
    Grid grid{0.04, 6.0, 17, 0.4};
    int nodes = static_cast<int>(std::lround(6.0 / 0.04)) + 1;
    std::vector<double> init(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        double r = i * 0.04;
        init[static_cast<size_t>(i)] = 0.4 + std::exp(-2 * r * r);
    }
    auto sol = solve_parabolic(space, share(Nonlinearity::zero()), init, grid, 0.5);
    auto rep = li_yau_check(sol, *space, *sol.G, 2.0, 0.5, 2.0, 0.5, false);
    REQUIRE(rep.params.k == Catch::Approx(1.0).epsilon(1e-6));
    REQUIRE(rep.margin >= 0.0);
}

TEST_CASE("parabolic harnack on the kernel") {
    const auto& sol = kernel_runs()[1];
    auto space = euclidean3(8.0);
    SECTION("pole pair with doubled age") {
        std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs = {
            {{{0.0, 0}, 0.5}, {{0.0, 0}, 1.0}}};
        std::vector<HarnackPairResult> details;
        auto rep = parabolic_harnack_check(sol, *space, *sol.G, 1.1, pairs, 0.5, 4.0,
                                           1.25, true, &details);
        // exact kernel arithmetic: ratio 2^{-3/2} vs bound 2^{-3*1.1/2}
        REQUIRE(details[0].lhs_ratio ==
                Catch::Approx(std::pow(2.0, -1.5)).epsilon(2e-3));
        REQUIRE(details[0].rhs_ratio ==
                Catch::Approx(std::pow(2.0, -1.65)).epsilon(1e-9));
        double ratio_margin = details[0].lhs_ratio - details[0].rhs_ratio;
        REQUIRE(ratio_margin == Catch::Approx(0.035).margin(0.005));
        REQUIRE(rep.margin > 0.0);
    }
    SECTION("random in-cylinder pairs satisfy the bound") {
        std::mt19937 rng(2024);
        std::uniform_int_distribution<int> pick_node(0, static_cast<int>(3.0 / sol.dr));
        std::uniform_int_distribution<int> pick_level(1, sol.levels() - 1);
        std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs;
        while (pairs.size() < 50) {
            int l1 = pick_level(rng), l2 = pick_level(rng);
            if (l1 == l2) continue;
            if (l1 > l2) std::swap(l1, l2);
            SpaceTimePoint p1{{pick_node(rng) * sol.dr, 0}, sol.theorem_time(l1)};
            SpaceTimePoint p2{{pick_node(rng) * sol.dr, 0}, sol.theorem_time(l2)};
            pairs.emplace_back(p1, p2);
        }
        auto rep = parabolic_harnack_check(sol, *space, *sol.G, 1.1, pairs, 0.5, 4.0,
                                           1.25, true);
        REQUIRE(rep.margin >= 0.0);
    }
    SECTION("coincident points with shrinking time gap have vanishing margin") {
        std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs = {
            {{{1.0, 0}, 1.0}, {{1.0, 0}, 1.0 + sol.dt_store()}}};
        auto rep = parabolic_harnack_check(sol, *space, *sol.G, 1.1, pairs, 0.5, 4.0,
                                           1.25, true);
        REQUIRE(rep.margin >= 0.0);
        REQUIRE(rep.margin < 0.05);
    }
    SECTION("time order enforced") {
        std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs = {
            {{{0.0, 0}, 1.0}, {{0.0, 0}, 0.5}}};
        REQUIRE_THROWS_AS(parabolic_harnack_check(sol, *space, *sol.G, 1.1, pairs, 0.5,
                                                  4.0, 1.25, true),
                          TimeOrder);
    }
    SECTION("power-law reduction with vanishing gamma terms") {
        // log w(x,t2) - log w(x,t1) >= -(m alpha/2) log(t2/t1) for G = 0
        double t1 = 0.5, t2 = 1.25;
        int l1 = -1, l2 = -1;
        for (int l = 0; l < sol.levels(); ++l) {
            if (std::fabs(sol.theorem_time(l) - t1) < 1e-9) l1 = l;
            if (std::fabs(sol.theorem_time(l) - t2) < 1e-9) l2 = l;
        }
        REQUIRE(l1 >= 0);
        REQUIRE(l2 >= 0);
        for (int i = 0; i * sol.dr <= 3.0; i += 7) {
            double lhs = std::log(sol.w[static_cast<size_t>(l2)][static_cast<size_t>(i)]) -
                         std::log(sol.w[static_cast<size_t>(l1)][static_cast<size_t>(i)]);
            REQUIRE(lhs >= -(3.0 * 1.1 / 2.0) * std::log(t2 / t1));
        }
    }
}

TEST_CASE("path energy optimization never beats the straight path") {
    for (auto [r1, r2, dt] : {std::tuple{0.0, 1.0, 0.5}, std::tuple{2.0, 0.5, 1.0},
                              std::tuple{1.0, 1.0, 0.25}}) {
        double closed = path_energy_closed_form(r1, r2, dt);
        double discrete = path_energy_discrete(r1, r2, dt, 4.0);
        REQUIRE(discrete <= closed + 1e-8);
        REQUIRE(discrete >= closed - 1e-8);
    }
}

TEST_CASE("elliptic harnack from a calibrated constant") {
    const auto& sol = kernel_runs()[1];
    auto space = euclidean3(8.0);
    auto sz = souplet_zhang_check(sol, *space, *sol.G, *sol.bound_D, 4.0, 1.25, 1.0);
    double C = *sz.empirical_C;
    REQUIRE(C > 0.0);

    SECTION("coincident pair is the equality case") {
        std::vector<std::pair<RayPoint, RayPoint>> pairs = {{{1.0, 0}, {1.0, 0}}};
        auto rep = elliptic_harnack_check(sol, *space, *sol.G, *sol.bound_D, 4.0, 1.25,
                                          1.0, 1.0, pairs, C);
        REQUIRE(rep.margin == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("pole-to-unit-radius pair holds") {
        std::vector<std::pair<RayPoint, RayPoint>> pairs = {{{0.0, 0}, {1.0, 0}},
                                                            {{1.0, 0}, {0.0, 0}}};
        auto rep = elliptic_harnack_check(sol, *space, *sol.G, *sol.bound_D, 4.0, 1.25,
                                          1.0, 1.0, pairs, C);
        REQUIRE(rep.margin >= 0.0);
    }
    SECTION("error paths") {
        std::vector<std::pair<RayPoint, RayPoint>> pairs = {{{0.0, 0}, {1.0, 1}}};
        REQUIRE_THROWS_AS(elliptic_harnack_check(sol, *space, *sol.G, *sol.bound_D, 4.0,
                                                 1.25, 1.0, 1.0, pairs, C),
                          NotSameRay);
        std::vector<std::pair<RayPoint, RayPoint>> ok = {{{0.0, 0}, {1.0, 0}}};
        REQUIRE_THROWS_AS(elliptic_harnack_check(sol, *space, *sol.G,
                                                 0.5 * sol.sup_w(), 4.0, 1.25, 1.0, 1.0,
                                                 ok, C),
                          BoundViolated);
        REQUIRE_THROWS_AS(elliptic_harnack_check(sol, *space, *sol.G, *sol.bound_D, 4.0,
                                                 1.25, 1.0, 1.0, ok, 0.0),
                          MissingCalibration);
    }
}

TEST_CASE("elliptic global bound for stationary states") {
    auto space = euclidean3(6.0);
    SECTION("w = 1 with G = 1 - w sits exactly on the bound") {
        auto G = Nonlinearity::power_sum({{Coefficient::constant(1.0), 0.0}},
                                         {{Coefficient::constant(-1.0), 1.0}});
        std::vector<double> w(121, 1.0);
        auto rep = elliptic_global_check(w, *space, G, 2.0, 0.5, 0.05);
        REQUIRE(rep.lhs_max == Catch::Approx(0.0).margin(1e-14));
        REQUIRE(rep.margin == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("non-stationary field is rejected") {
        auto G = Nonlinearity::zero();
        std::vector<double> w(121);
        for (int i = 0; i < 121; ++i) w[static_cast<size_t>(i)] = 1.0 + 0.5 * std::exp(-i * 0.05);
        REQUIRE_THROWS_AS(elliptic_global_check(w, *space, G, 2.0, 0.5, 0.05),
                          NotStationary);
    }
}

TEST_CASE("constancy demo") {
    auto space = euclidean3(5.0);
    Grid grid{0.1, 5.0, 6, 0.4};
    int nodes = 51;
    std::vector<double> bump(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i) {
        double r = i * 0.1;
        bump[static_cast<size_t>(i)] = 1.0 + 0.5 * std::exp(-r * r);
    }
    SECTION("heat flow from a bump flattens") {
        auto G = share(Nonlinearity::power_sum({}, {}));
        EllipticOptions opts;
        opts.tol = 1e-10;
        opts.max_time = 100.0;
        auto result = liouville_demo(space, G, "subunit-powers", PredicateParams{},
                                     CurvatureFlavor::RicPhi, bump, grid, opts);
        REQUIRE(result.verdict == "consistent");
        REQUIRE(result.final_grad_sup < 1e-4 * result.final_sup_w);
    }
    SECTION("source term with no stationary state reads as nonexistence") {
        auto G = share([] {
            auto g = Nonlinearity::power_sum({{Coefficient::constant(1.0), 0.5}}, {});
            g.w_max = 1e9;
            return g;
        }());
        EllipticOptions opts;
        opts.max_time = 25.0;
        auto result = liouville_demo(space, G, "subunit-powers", PredicateParams{},
                                     CurvatureFlavor::RicPhiM, bump, grid, opts);
        REQUIRE(result.verdict == "nonexistence-consistent");
    }
    SECTION("failing predicate gates the demo") {
        auto G = share(Nonlinearity::power_sum({{Coefficient::constant(1.0), 3.0}}, {}));
        auto result = liouville_demo(space, G, "subunit-powers", PredicateParams{},
                                     CurvatureFlavor::RicPhi, bump, grid);
        REQUIRE(result.verdict == "not-applicable");
    }
}

TEST_CASE("constant calibration plumbing") {
    const auto& runs = kernel_runs();
    auto space = euclidean3(8.0);
    auto r1 = souplet_zhang_check(runs[0], *space, *runs[0].G, *runs[0].bound_D, 4.0,
                                  1.25, 1.0);
    auto r2 = hamilton_check(runs[0], *space, *runs[0].G, 4.0, 0.0, 4.0, 1.25, 1.0);
    REQUIRE_THROWS_AS(calibrate_constant({r1}), InsufficientData);
    REQUIRE_THROWS_AS(calibrate_constant({r1, r2}), MixedKinds);
}
