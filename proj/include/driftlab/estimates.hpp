#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/cutoff.hpp"
#include "driftlab/geometry.hpp"
#include "driftlab/liouville.hpp"
#include "driftlab/nonlinearity.hpp"
#include "driftlab/solver.hpp"

namespace driftlab {

// Margin reports for the gradient estimates and Harnack inequalities. Each
// check certifies its curvature hypothesis, assembles the right-hand side
// term by term, and reports the worst point of the verification set. Where
// the estimate's constant is left unspecified, the check records the minimal
// empirical constant instead.

enum class EstimateKind {
    SoupletZhang,
    SoupletZhangGlobal,
    Hamilton,
    HamiltonGlobal,
    LiYau,
    LiYauGlobal,
    EllipticHarnack,
    ParabolicHarnack,
    EllipticGlobal,
};

inline const char* estimate_kind_name(EstimateKind k) {
    switch (k) {
        case EstimateKind::SoupletZhang: return "souplet_zhang";
        case EstimateKind::SoupletZhangGlobal: return "souplet_zhang_global";
        case EstimateKind::Hamilton: return "hamilton";
        case EstimateKind::HamiltonGlobal: return "hamilton_global";
        case EstimateKind::LiYau: return "li_yau";
        case EstimateKind::LiYauGlobal: return "li_yau_global";
        case EstimateKind::EllipticHarnack: return "elliptic_harnack";
        case EstimateKind::ParabolicHarnack: return "parabolic_harnack";
        case EstimateKind::EllipticGlobal: return "elliptic_global";
    }
    return "?";
}

struct EstimateParams {
    double alpha = 2.0;
    double beta = 0.0;
    double eps = 0.5;
    double k = 0.0; // certified curvature scale (filled by the check)
    double m = 3.0;
    double D = 0.0;
    double R = 4.0;
    double T = 1.0;  // window height
    double t0 = 0.0; // top of the Q window, theorem time
    std::optional<double> C; // fixed-constant mode when present
};

struct EstimateReport {
    EstimateKind kind = EstimateKind::SoupletZhang;
    EstimateParams params;
    double lhs_max = 0.0;
    std::map<std::string, double> rhs_terms;
    double margin = 0.0;
    std::optional<double> empirical_C;
    double argmin_r = 0.0;
    double argmin_t = 0.0;
    Cylinder verification;
};

/// One verification-set entry for CSV tables and figures.
struct EstimatePoint {
    double r = 0.0;
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

namespace detail {

inline const std::vector<double>& level_w(const SolutionField& sol, int l) {
    return sol.w[static_cast<size_t>(l)];
}

inline double grad_w(const SolutionField& sol, int l, int i) {
    return stencil::d1(level_w(sol, l), i, sol.dr, 4);
}

/// Delta_phi w / w recovered from the stored semi-discrete right-hand side.
inline double lap_w_over_w(const SolutionField& sol, int l, int i) {
    double w = level_w(sol, l)[static_cast<size_t>(i)];
    double g = sol.G->eval(sol.theorem_time(l), sol.radius(i), w);
    return (sol.rhs[static_cast<size_t>(l)][static_cast<size_t>(i)] - g) / w;
}

inline double sup_w_over(const SolutionField& sol, const Cylinder& cyl) {
    double m = 0.0;
    for (const auto& s : sol.samples_in(cyl, /*exclude_initial=*/false))
        m = std::max(m, s.w);
    return m;
}

inline void require_inside_grid(const SolutionField& sol, double r_hi) {
    if (r_hi > (sol.nodes - 1) * sol.dr + 1e-9)
        throw OutOfDomain("cylinder radius " + std::to_string(r_hi) +
                          " exceeds the solved domain");
}

} // namespace detail

/// Local / global Souplet-Zhang gradient bound. The curvature scale k is
/// certified on B_R, the bracket suprema run over Q_{R,T} and the estimate
/// is verified on Q_{R/2,T} with t > t0 - T.
inline EstimateReport souplet_zhang_check(const SolutionField& sol,
                                          const ModelSpace& space,
                                          const Nonlinearity& G, double D, double R,
                                          double t0, double T,
                                          std::optional<double> C = std::nullopt,
                                          bool global = false,
                                          std::vector<EstimatePoint>* points = nullptr) {
    detail::require_inside_grid(sol, global ? R : R);
    EstimateReport rep;
    rep.kind = global ? EstimateKind::SoupletZhangGlobal : EstimateKind::SoupletZhang;
    rep.params.R = R;
    rep.params.t0 = t0;
    rep.params.T = T;
    rep.params.D = D;
    rep.params.C = C;

    double k = curvature_lower_bound(space, CurvatureFlavor::RicPhi,
                                     {0.0, global ? space.r_max() : R})
                   .k;
    rep.params.k = k;

    Cylinder sup_cyl{0.0, global ? (sol.nodes - 1) * sol.dr : R, t0 - T, t0,
                     CylinderFlavor::Q};
    auto sup_samples = sol.samples_in(sup_cyl, /*exclude_initial=*/false);
    for (const auto& s : sup_samples)
        if (s.w > D)
            throw BoundViolated("w = " + std::to_string(s.w) + " exceeds D = " +
                                std::to_string(D) + " on the sup cylinder");
    SupTerms terms = souplet_zhang_sup_terms(G, sup_samples, D);

    double gamma_dphi = global ? 0.0 : positive_part(gamma_delta_phi(space));
    double term_k = std::sqrt(k);
    double term_R = global ? 0.0 : 1.0 / R;
    double term_gamma = global ? 0.0 : std::sqrt(gamma_dphi / R);

    rep.verification = Cylinder{0.0, R / 2, t0 - T, t0, CylinderFlavor::Q};
    double worst_ratio = 0.0, min_margin = std::numeric_limits<double>::infinity();
    for (int l : sol.levels_in(rep.verification, false)) {
        double t = sol.theorem_time(l);
        if (t <= t0 - T + 1e-12) continue; // strict bottom exclusion
        double bracket_t = term_k + 1.0 / std::sqrt(t - t0 + T) + term_R +
                           term_gamma + terms.term_x + terms.term_w;
        for (int i : sol.nodes_in(rep.verification)) {
            double w = detail::level_w(sol, l)[static_cast<size_t>(i)];
            double lhs = std::fabs(detail::grad_w(sol, l, i)) / w;
            double omh = 1.0 - std::log(w / D);
            double rhs_over_C = omh * bracket_t;
            double ratio = lhs / rhs_over_C;
            if (ratio > worst_ratio) worst_ratio = ratio;
            double margin = C ? (*C * rhs_over_C - lhs) : -ratio;
            if (margin < min_margin) {
                min_margin = margin;
                rep.argmin_r = sol.radius(i);
                rep.argmin_t = t;
            }
            rep.lhs_max = std::max(rep.lhs_max, lhs);
            if (points) points->push_back({sol.radius(i), t, lhs, rhs_over_C});
        }
    }
    rep.empirical_C = worst_ratio;
    if (points) {
        double scale = C ? *C : worst_ratio;
        for (auto& pt : *points) pt.rhs *= scale;
    }
    // structural mode reports the slack of the estimate normalised by the
    // empirical constant (zero at the argmin by construction)
    rep.margin = C ? min_margin : 0.0;

    rep.rhs_terms = {{"sqrt_k", term_k},
                     {"inv_sqrt_t", 1.0 / std::sqrt(std::max(rep.argmin_t - t0 + T, 1e-300))},
                     {"inv_R", term_R},
                     {"sqrt_gamma_delta_phi_over_R", term_gamma},
                     {"sup_x_term", terms.term_x},
                     {"sup_w_term", terms.term_w}};
    return rep;
}

/// Local / global Hamilton gradient bound with parameters beta >= 0 and
/// alpha > 1 + beta.
inline EstimateReport hamilton_check(const SolutionField& sol, const ModelSpace& space,
                                     const Nonlinearity& G, double alpha, double beta,
                                     double R, double t0, double T,
                                     std::optional<double> C = std::nullopt,
                                     bool global = false,
                                     std::vector<EstimatePoint>* points = nullptr) {
    if (!(beta >= 0) || !(alpha > 1 + beta))
        throw ParameterOrder("hamilton check needs beta >= 0 and alpha > 1 + beta");
    detail::require_inside_grid(sol, R);
    EstimateReport rep;
    rep.kind = global ? EstimateKind::HamiltonGlobal : EstimateKind::Hamilton;
    rep.params.alpha = alpha;
    rep.params.beta = beta;
    rep.params.R = R;
    rep.params.t0 = t0;
    rep.params.T = T;
    rep.params.C = C;

    double k = curvature_lower_bound(space, CurvatureFlavor::RicPhi,
                                     {0.0, global ? space.r_max() : R})
                   .k;
    rep.params.k = k;

    Cylinder sup_cyl{0.0, global ? (sol.nodes - 1) * sol.dr : R, t0 - T, t0,
                     CylinderFlavor::Q};
    auto sup_samples = sol.samples_in(sup_cyl, false);
    SupTerms terms = hamilton_sup_terms(G, sup_samples, alpha, beta);
    double sup_w = detail::sup_w_over(sol, sup_cyl);
    double expo = (beta + 2.0) / (2.0 * alpha);
    double prefactor = std::pow(sup_w, expo);

    double gamma_dphi = global ? 0.0 : positive_part(gamma_delta_phi(space));
    double term_k = std::sqrt(k);
    double term_R = global ? 0.0 : 1.0 / R;
    double term_gamma = global ? 0.0 : std::sqrt(gamma_dphi / R);

    rep.verification = Cylinder{0.0, R / 2, t0 - T, t0, CylinderFlavor::Q};
    double worst_ratio = 0.0, min_margin = std::numeric_limits<double>::infinity();
    for (int l : sol.levels_in(rep.verification, false)) {
        double t = sol.theorem_time(l);
        if (t <= t0 - T + 1e-12) continue;
        double bracket_t = term_k + 1.0 / std::sqrt(t - t0 + T) + term_R + term_gamma +
                           terms.term_x + terms.term_w;
        double rhs_over_C = prefactor * bracket_t;
        for (int i : sol.nodes_in(rep.verification)) {
            double w = detail::level_w(sol, l)[static_cast<size_t>(i)];
            double lhs = std::fabs(detail::grad_w(sol, l, i)) / std::pow(w, 1.0 - expo);
            rep.lhs_max = std::max(rep.lhs_max, lhs);
            double ratio = lhs / rhs_over_C;
            worst_ratio = std::max(worst_ratio, ratio);
            double margin = (C ? *C : 1.0) * rhs_over_C - lhs;
            if (margin < min_margin) {
                min_margin = margin;
                rep.argmin_r = sol.radius(i);
                rep.argmin_t = t;
            }
            if (points) points->push_back({sol.radius(i), t, lhs, rhs_over_C});
        }
    }
    rep.empirical_C = worst_ratio;
    rep.margin = C ? min_margin : 0.0;
    if (points) {
        double scale = C ? *C : worst_ratio;
        for (auto& pt : *points) pt.rhs *= scale;
    }
    rep.rhs_terms = {{"prefactor_sup_w", prefactor},
                     {"sqrt_k", term_k},
                     {"inv_R", term_R},
                     {"sqrt_gamma_delta_phi_over_R", term_gamma},
                     {"sup_x_term", terms.term_x},
                     {"sup_w_term", terms.term_w}};
    return rep;
}

/// Li-Yau differential Harnack bound: all constants explicit through the
/// certified spatial-cutoff constants c1, c2. Requires finite m >= n and a
/// certified bound Ric_phi^m >= -(m-1) k on B_{2R}; the gamma-quantities run
/// over H_{2R,T}.
inline EstimateReport li_yau_check(const SolutionField& sol, const ModelSpace& space,
                                   const Nonlinearity& G, double alpha, double eps,
                                   double R, double T_hi, bool global = false,
                                   std::vector<EstimatePoint>* points = nullptr) {
    if (std::isinf(space.m()))
        throw NeedFiniteM("the differential Harnack bound needs finite m");
    double m = space.m();
    if (!(alpha > 1)) throw ParameterOrder("li-yau check needs alpha > 1");
    if (!(eps > 0) || !(eps < 1)) throw ParameterOrder("eps must lie in (0,1)");
    detail::require_inside_grid(sol, global ? R : 2 * R);

    EstimateReport rep;
    rep.kind = global ? EstimateKind::LiYauGlobal : EstimateKind::LiYau;
    rep.params.alpha = alpha;
    rep.params.eps = eps;
    rep.params.m = m;
    rep.params.R = R;
    rep.params.T = T_hi;

    double k = curvature_lower_bound(space, CurvatureFlavor::RicPhiM,
                                     {0.0, global ? space.r_max() : 2 * R})
                   .k;
    rep.params.k = k;

    Cylinder gamma_cyl{0.0, global ? (sol.nodes - 1) * sol.dr : 2 * R, 0.0, T_hi,
                       CylinderFlavor::H};
    GammaQuantities gam =
        gamma_from_samples(G, space, alpha, sol.samples_in(gamma_cyl, false));

    double cutoff_block = 0.0, c1 = 0.0, c2 = 0.0;
    if (!global) {
        auto zeta = build_spatial_cutoff(R);
        c1 = zeta.c1;
        c2 = zeta.c2;
        cutoff_block = (m * c1 * c1 * alpha * alpha / (4 * (alpha - 1)) + c2 +
                        (m - 1) * c1 * (1 + R * std::sqrt(k)) + 2 * c1 * c1) /
                       (R * R);
    }
    double sqrt_block =
        std::sqrt(m * alpha / 2.0) *
        std::sqrt(m * alpha * std::pow((m - 1) * k + gam.gamma_A / 2.0, 2) /
                      (2 * (1 - eps) * (alpha - 1) * (alpha - 1)) +
                  std::cbrt(27.0 * m * std::pow(gam.gamma_B, 4) /
                            (32.0 * eps * alpha * (alpha - 1) * (alpha - 1))) +
                  gam.gamma_D);

    rep.verification = Cylinder{0.0, R, 0.0, T_hi, CylinderFlavor::H};
    double min_margin = std::numeric_limits<double>::infinity();
    for (int l : sol.levels_in(rep.verification)) {
        double t = sol.theorem_time(l);
        if (!(t > 0)) continue;
        double rhs = (m * alpha / 2.0) * (cutoff_block + 1.0 / t + gam.gamma_C) +
                     sqrt_block;
        for (int i : sol.nodes_in(rep.verification)) {
            double w = detail::level_w(sol, l)[static_cast<size_t>(i)];
            double g1 = detail::grad_w(sol, l, i);
            double gval = G.eval(t, sol.radius(i), w);
            double lhs = g1 * g1 / (alpha * w * w) -
                         (sol.rhs[static_cast<size_t>(l)][static_cast<size_t>(i)] -
                          gval) /
                             w;
            rep.lhs_max = std::max(rep.lhs_max, lhs);
            double margin = rhs - lhs;
            if (margin < min_margin) {
                min_margin = margin;
                rep.argmin_r = sol.radius(i);
                rep.argmin_t = t;
            }
            if (points) points->push_back({sol.radius(i), t, lhs, rhs});
        }
    }
    rep.margin = min_margin;
    rep.rhs_terms = {{"cutoff_R_block", (m * alpha / 2.0) * cutoff_block},
                     {"inv_t_at_argmin", (m * alpha / 2.0) / rep.argmin_t},
                     {"gamma_C_block", (m * alpha / 2.0) * gam.gamma_C},
                     {"sqrt_block", sqrt_block},
                     {"c1", c1},
                     {"c2", c2},
                     {"gamma_A", gam.gamma_A},
                     {"gamma_B", gam.gamma_B},
                     {"gamma_D", gam.gamma_D}};
    return rep;
}

// ---------------------------------------------------------------------------
// Harnack inequalities.

struct RayPoint {
    double r = 0.0;
    int ray = 0; // points with different ray ids are not comparable
};

struct SpaceTimePoint {
    RayPoint x;
    double t = 0.0; // theorem time
};

struct HarnackConstants {
    double H = 0.0;
    double L = 0.0;
    double alpha = 0.0;
    GammaQuantities gammas;
    double c1 = 0.0, c2 = 0.0;
};

/// Path energy L(x1, x2, dt) = inf over paths in B_R of
/// int |zeta'|^2 / (4 dt): evaluated in closed form for radial pairs and
/// cross-checked by discrete optimization over piecewise-linear radial paths.
inline double path_energy_closed_form(double r1, double r2, double dt) {
    double d = std::fabs(r1 - r2);
    return d * d / (4.0 * dt);
}

inline double path_energy_discrete(double r1, double r2, double dt, double R,
                                   int segments = 16, int sweeps = 1200) {
    std::vector<double> node(static_cast<size_t>(segments) + 1);
    for (int j = 0; j <= segments; ++j) {
        double s = static_cast<double>(j) / segments;
        node[static_cast<size_t>(j)] = r1 + (r2 - r1) * s;
        // deliberately bent initial guess so the optimization does real work
        node[static_cast<size_t>(j)] =
            std::min(R, node[static_cast<size_t>(j)] + 0.3 * R * s * (1 - s));
    }
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int j = 1; j < segments; ++j) {
            double target = 0.5 * (node[static_cast<size_t>(j) - 1] +
                                   node[static_cast<size_t>(j) + 1]);
            node[static_cast<size_t>(j)] = std::clamp(target, 0.0, R);
        }
    }
    double energy = 0.0;
    for (int j = 0; j < segments; ++j) {
        double step = node[static_cast<size_t>(j) + 1] - node[static_cast<size_t>(j)];
        energy += static_cast<double>(segments) * step * step;
    }
    return energy / (4.0 * dt);
}

/// Drift constant of the parabolic Harnack inequality, assembled from the
/// same blocks as the Li-Yau right-hand side; gamma_E(R) enters positively.
inline HarnackConstants harnack_constants(const SolutionField& sol,
                                          const ModelSpace& space,
                                          const Nonlinearity& G, double alpha,
                                          double eps, double R, double T_hi,
                                          bool global, bool gamma_E_at_2R = false) {
    double m = space.m();
    if (std::isinf(m)) throw NeedFiniteM("harnack constants need finite m");
    HarnackConstants hc;
    hc.alpha = alpha;

    double k = curvature_lower_bound(space, CurvatureFlavor::RicPhiM,
                                     {0.0, global ? space.r_max() : 2 * R})
                   .k;
    double grid_r = (sol.nodes - 1) * sol.dr;
    Cylinder big{0.0, global ? grid_r : 2 * R, 0.0, T_hi, CylinderFlavor::H};
    hc.gammas = gamma_from_samples(G, space, alpha, sol.samples_in(big, false));
    Cylinder small{0.0, global ? grid_r : (gamma_E_at_2R ? 2 * R : R), 0.0, T_hi,
                   CylinderFlavor::H};
    double gamma_E =
        gamma_from_samples(G, space, alpha, sol.samples_in(small, false)).gamma_E;

    double cutoff_block = 0.0;
    if (!global) {
        auto zeta = build_spatial_cutoff(R);
        hc.c1 = zeta.c1;
        hc.c2 = zeta.c2;
        cutoff_block = (m * hc.c1 * hc.c1 * alpha * alpha / (4 * (alpha - 1)) + hc.c2 +
                        (m - 1) * hc.c1 * (1 + R * std::sqrt(k)) + 2 * hc.c1 * hc.c1) /
                       (R * R);
    }
    double sqrt_block =
        std::sqrt(m * alpha / 2.0) *
        std::sqrt(m * alpha * std::pow((m - 1) * k + hc.gammas.gamma_A / 2.0, 2) /
                      (2 * (1 - eps) * (alpha - 1) * (alpha - 1)) +
                  std::cbrt(27.0 * m * std::pow(hc.gammas.gamma_B, 4) /
                            (32.0 * eps * alpha * (alpha - 1) * (alpha - 1))) +
                  hc.gammas.gamma_D);
    hc.H = gamma_E - (m * alpha / 2.0) * cutoff_block -
           (m * alpha / 2.0) * hc.gammas.gamma_C - sqrt_block;
    return hc;
}

struct HarnackPairResult {
    SpaceTimePoint p1, p2;
    double lhs_ratio = 0.0; // w(x2,t2) / w(x1,t1)
    double rhs_ratio = 0.0; // exp[(t2-t1) H - alpha L] (t2/t1)^{-m alpha/2}
    double log_margin = 0.0;
    double L = 0.0;
};

/// Parabolic Harnack inequality along stored space-time pairs (t2 > t1 > 0).
inline EstimateReport parabolic_harnack_check(
    const SolutionField& sol, const ModelSpace& space, const Nonlinearity& G,
    double alpha, const std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>>& pairs,
    double eps, double R, double T_hi, bool global,
    std::vector<HarnackPairResult>* details = nullptr) {
    EstimateReport rep;
    rep.kind = EstimateKind::ParabolicHarnack;
    rep.params.alpha = alpha;
    rep.params.eps = eps;
    rep.params.m = space.m();
    rep.params.R = R;
    rep.params.T = T_hi;
    auto hc = harnack_constants(sol, space, G, alpha, eps, R, T_hi, global);
    rep.params.k = 0.0;
    double m = space.m();

    auto value_at = [&](const SpaceTimePoint& p) {
        int node = static_cast<int>(std::lround(p.x.r / sol.dr));
        if (node < 0 || node >= sol.nodes)
            throw OutOfDomain("pair radius outside the grid");
        int level = -1;
        for (int l = 0; l < sol.levels(); ++l)
            if (std::fabs(sol.theorem_time(l) - p.t) < 1e-9) level = l;
        if (level < 0)
            throw OutOfDomain("pair time " + std::to_string(p.t) +
                              " not among the stored levels");
        return detail::level_w(sol, level)[static_cast<size_t>(node)];
    };

    double min_margin = std::numeric_limits<double>::infinity();
    for (const auto& [p1, p2] : pairs) {
        if (!(p2.t > p1.t) || !(p1.t > 0))
            throw TimeOrder("harnack pairs need t2 > t1 > 0");
        if (p1.x.ray != p2.x.ray)
            throw NotSameRay("harnack pair points lie on different rays");
        double dt = p2.t - p1.t;
        double L = std::min(path_energy_closed_form(p1.x.r, p2.x.r, dt),
                            path_energy_discrete(p1.x.r, p2.x.r, dt, R));
        double w1 = value_at(p1), w2 = value_at(p2);
        double log_rhs = dt * hc.H - alpha * L - (m * alpha / 2.0) * std::log(p2.t / p1.t);
        double log_margin = std::log(w2 / w1) - log_rhs;
        if (details)
            details->push_back(
                {p1, p2, w2 / w1, std::exp(log_rhs), log_margin, L});
        if (log_margin < min_margin) {
            min_margin = log_margin;
            rep.argmin_r = p2.x.r;
            rep.argmin_t = p2.t;
        }
        rep.lhs_max = std::max(rep.lhs_max, w2 / w1);
    }
    rep.margin = min_margin;
    rep.rhs_terms = {{"H", hc.H},
                     {"gamma_E", hc.gammas.gamma_E},
                     {"c1", hc.c1},
                     {"c2", hc.c2}};
    return rep;
}

/// Elliptic Harnack inequality along a common ray at one time slice, with
/// the exponent alpha(R) built from a calibrated Souplet-Zhang constant.
inline EstimateReport elliptic_harnack_check(
    const SolutionField& sol, const ModelSpace& space, const Nonlinearity& G, double D,
    double R, double t0, double T, double t,
    const std::vector<std::pair<RayPoint, RayPoint>>& pairs, double calibrated_C) {
    if (!(calibrated_C > 0))
        throw MissingCalibration("elliptic harnack needs a calibrated constant");
    EstimateReport rep;
    rep.kind = EstimateKind::EllipticHarnack;
    rep.params.D = D;
    rep.params.R = R;
    rep.params.t0 = t0;
    rep.params.T = T;
    rep.params.C = calibrated_C;

    double k = curvature_lower_bound(space, CurvatureFlavor::RicPhi, {0.0, R}).k;
    rep.params.k = k;
    Cylinder sup_cyl{0.0, R, t0 - T, t0, CylinderFlavor::Q};
    auto sup_samples = sol.samples_in(sup_cyl, false);
    for (const auto& s : sup_samples)
        if (s.w > D) throw BoundViolated("w exceeds D on the sup cylinder");
    SupTerms terms = souplet_zhang_sup_terms(G, sup_samples, D);
    double gamma_dphi = positive_part(gamma_delta_phi(space));
    double bracket = std::sqrt(k) + 1.0 / std::sqrt(t - t0 + T) + 1.0 / R +
                     std::sqrt(gamma_dphi / R) + terms.term_x + terms.term_w;

    int level = -1;
    for (int l = 0; l < sol.levels(); ++l)
        if (std::fabs(sol.theorem_time(l) - t) < 1e-9) level = l;
    if (level < 0) throw OutOfDomain("time slice not stored");

    double min_margin = std::numeric_limits<double>::infinity();
    for (const auto& [x1, x2] : pairs) {
        if (x1.ray != x2.ray)
            throw NotSameRay("elliptic harnack pair on different rays");
        double d = std::fabs(x1.r - x2.r);
        double alpha_R = std::exp(-d * calibrated_C * bracket);
        auto node = [&](double r) {
            int i = static_cast<int>(std::lround(r / sol.dr));
            if (i < 0 || i >= sol.nodes) throw OutOfDomain("pair radius outside grid");
            return i;
        };
        double w1 = detail::level_w(sol, level)[static_cast<size_t>(node(x1.r))];
        double w2 = detail::level_w(sol, level)[static_cast<size_t>(node(x2.r))];
        // w1/(eD) <= [w2/(eD)]^alpha  <=>  u1 <= alpha u2 in log scale
        double u1 = std::log(w1 / (M_E * D));
        double u2 = std::log(w2 / (M_E * D));
        double margin = alpha_R * u2 - u1;
        if (margin < min_margin) {
            min_margin = margin;
            rep.argmin_r = x2.r;
            rep.argmin_t = t;
        }
        rep.lhs_max = std::max(rep.lhs_max, u1);
    }
    rep.margin = min_margin;
    rep.rhs_terms = {{"bracket", bracket},
                     {"sqrt_k", std::sqrt(k)},
                     {"sup_x_term", terms.term_x},
                     {"sup_w_term", terms.term_w}};
    return rep;
}

/// Global elliptic gradient bound for stationary solutions.
inline EstimateReport elliptic_global_check(const std::vector<double>& w_stationary,
                                            const ModelSpace& space,
                                            const Nonlinearity& G, double alpha,
                                            double eps, double dr,
                                            double stationarity_tol = 1e-6) {
    if (std::isinf(space.m()))
        throw NeedFiniteM("the global elliptic bound needs finite m");
    double m = space.m();
    if (!(alpha > 1) || !(eps > 0) || !(eps < 1))
        throw ParameterOrder("elliptic global check needs alpha > 1, eps in (0,1)");
    int nodes = static_cast<int>(w_stationary.size());
    auto lap = weighted_laplacian_radial(space, w_stationary, dr);
    double residual = 0.0;
    for (int i = 0; i < nodes; ++i)
        residual = std::max(
            residual, std::fabs(lap[static_cast<size_t>(i)] +
                                G.eval(0.0, i * dr, w_stationary[static_cast<size_t>(i)])));
    if (residual >= stationarity_tol)
        throw NotStationary("||Delta_phi w + G(w)||_inf = " + std::to_string(residual));

    EstimateReport rep;
    rep.kind = EstimateKind::EllipticGlobal;
    rep.params.alpha = alpha;
    rep.params.eps = eps;
    rep.params.m = m;
    double k = curvature_lower_bound(space, CurvatureFlavor::RicPhiM,
                                     {0.0, (nodes - 1) * dr})
                   .k;
    rep.params.k = k;

    std::vector<CylinderSample> samples;
    for (int i = 0; i < nodes; ++i)
        samples.push_back({0.0, i * dr, w_stationary[static_cast<size_t>(i)]});
    auto gam = gamma_from_samples(G, space, alpha, samples);
    double rhs = (m * alpha / 2.0) *
                 (((m - 1) * k + gam.gamma_A / 2.0) / ((alpha - 1) * std::sqrt(1 - eps)) +
                  gam.gamma_C);

    double min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nodes; ++i) {
        double w = w_stationary[static_cast<size_t>(i)];
        double g1 = stencil::d1(w_stationary, i, dr, 4);
        double lhs = g1 * g1 / (alpha * w * w) + G.eval(0.0, i * dr, w) / w;
        rep.lhs_max = std::max(rep.lhs_max, lhs);
        if (rhs - lhs < min_margin) {
            min_margin = rhs - lhs;
            rep.argmin_r = i * dr;
        }
    }
    rep.margin = min_margin;
    rep.rhs_terms = {{"gamma_A", gam.gamma_A}, {"gamma_C", gam.gamma_C}, {"rhs", rhs}};
    return rep;
}

// ---------------------------------------------------------------------------
// Constancy demo and constant calibration.

struct LiouvilleDemoResult {
    std::string verdict; // consistent | nonexistence-consistent | inconsistent |
                         // not-applicable
    double final_grad_sup = 0.0;
    double final_sup_w = 0.0;
    std::string note;
};

/// Numerical witness of a constancy statement: under a passing hypothesis
/// predicate and certified nonnegative curvature, stationary relaxation from
/// non-constant data must flatten out (or admit no bounded positive limit).
inline LiouvilleDemoResult liouville_demo(std::shared_ptr<const ModelSpace> space,
                                          std::shared_ptr<const Nonlinearity> G,
                                          const std::string& predicate_id,
                                          const PredicateParams& pparams,
                                          CurvatureFlavor flavor,
                                          const std::vector<double>& initial,
                                          const Grid& grid,
                                          const EllipticOptions& opts = {}) {
    LiouvilleDemoResult out;
    auto rep = liouville_predicate(*G, predicate_id, G->w_min * (1 + 1e-9),
                                   G->w_max * (1 - 1e-9), pparams);
    if (!rep.holds) {
        out.verdict = "not-applicable";
        out.note = "hypothesis predicate fails: " + rep.note;
        return out;
    }
    double k = curvature_lower_bound(*space, flavor, {0.0, space->r_max()}).k;
    if (k > 1e-12)
        throw HypothesisUnverified("constancy demo needs certified k = 0, got " +
                                   std::to_string(k));
    try {
        auto w = solve_elliptic(space, G, initial, grid, opts);
        double sup_w = 0.0, sup_grad = 0.0;
        for (int i = 0; i < static_cast<int>(w.size()); ++i) {
            sup_w = std::max(sup_w, w[static_cast<size_t>(i)]);
            sup_grad = std::max(sup_grad, std::fabs(stencil::d1(w, i, grid.dr, 4)));
        }
        out.final_grad_sup = sup_grad;
        out.final_sup_w = sup_w;
        if (sup_grad < 1e-4 * sup_w) {
            out.verdict = "consistent";
            out.note = "relaxation reached a constant state";
        } else {
            out.verdict = "inconsistent";
            out.note = "stationary state retains gradient " + std::to_string(sup_grad);
        }
    } catch (const NoConvergence& e) {
        out.verdict = "nonexistence-consistent";
        out.note = std::string("no positive bounded stationary state reached: ") +
                   e.what();
    }
    return out;
}

struct CalibrationResult {
    double C_min = 0.0;
    double stability = 0.0; // max pairwise relative deviation
};

/// Aggregates the empirical constants of reports of one kind.
inline CalibrationResult calibrate_constant(const std::vector<EstimateReport>& reports) {
    if (reports.size() < 2)
        throw InsufficientData("calibration needs at least two reports");
    for (const auto& r : reports) {
        if (r.kind != reports.front().kind)
            throw MixedKinds("calibration reports must share one estimate kind");
        if (!r.empirical_C)
            throw MixedKinds("calibration reports must carry empirical constants");
    }
    CalibrationResult out;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : reports) {
        lo = std::min(lo, *r.empirical_C);
        hi = std::max(hi, *r.empirical_C);
    }
    out.C_min = hi;
    out.stability = (hi - lo) / hi;
    return out;
}

} // namespace driftlab
