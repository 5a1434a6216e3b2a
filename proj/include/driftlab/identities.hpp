#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "driftlab/geometry.hpp"
#include "driftlab/grid.hpp"
#include "driftlab/nonlinearity.hpp"
#include "driftlab/profile.hpp"
#include "driftlab/solver.hpp"

namespace driftlab {

// Mechanical residual checks of the pointwise identities behind the
// estimates. Analytic test fields use exact symbolic derivatives (residuals
// at roundoff); solver fields use nodal stencils and stored-level time
// differences (residuals decay at the scheme order).

struct ResidualLevel {
    double dr = 0.0;
    double max_residual = 0.0;
};

struct ResidualReport {
    std::string identity;
    std::vector<ResidualLevel> levels;
    double order = 0.0;       // mean log2 ratio of successive levels
    std::string deriv_path;   // "analytic" or "discrete"
    std::map<std::string, double> term_sup; // per-term audit, when emitted

    bool order_applicable() const { return levels.size() >= 2; }
    bool order_in_range() const {
        return !order_applicable() || (order >= 1.5 && order <= 4.5);
    }
};

inline ResidualReport make_residual_report(std::string identity,
                                           std::vector<ResidualLevel> levels,
                                           std::string path) {
    ResidualReport rep;
    rep.identity = std::move(identity);
    rep.levels = std::move(levels);
    rep.deriv_path = std::move(path);
    if (rep.levels.size() >= 2) {
        double acc = 0.0;
        for (size_t i = 0; i + 1 < rep.levels.size(); ++i)
            acc += std::log2(rep.levels[i].max_residual /
                             rep.levels[i + 1].max_residual);
        rep.order = acc / static_cast<double>(rep.levels.size() - 1);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Bochner identity on radial fields:
//   1/2 Delta_phi |grad u|^2
//     = |Hess u|^2 + <grad u, grad Delta_phi u> + Ric_phi(grad u, grad u)
// Radial Hessian eigenvalues: u'' and u' psi'/psi (multiplicity n-1).

enum class DerivPath { Analytic, Discrete };

/// Pointwise Bochner residual from exact symbolic derivatives of u.
inline double bochner_residual_analytic(const ModelSpace& space,
                                        const RadialProfile& u, double r) {
    const int n = space.n();
    double psi = space.psi(r), dpsi = space.psi1(r), ddpsi = space.psi2(r);
    double b = space.drift(r);
    double db = (n - 1) * (ddpsi * psi - dpsi * dpsi) / (psi * psi) - space.phi2(r);
    double u1 = u.d1(r), u2 = u.d2(r), u3 = u.deriv(3, r);
    double lhs = 0.5 * (2 * (u2 * u2 + u1 * u3) + b * 2 * u1 * u2);
    double hess2 = u2 * u2 + (n - 1) * std::pow(u1 * dpsi / psi, 2);
    double grad_lap = u1 * (u3 + db * u1 + b * u2);
    double ric_phi_rad = -(n - 1) * ddpsi / psi + space.phi2(r);
    double rhs = hess2 + grad_lap + ric_phi_rad * u1 * u1;
    return lhs - rhs;
}

/// Max |Bochner residual| for the chosen derivative path. The discrete path
/// samples the profile on grids of spacing `drs` and differentiates with
/// nodal stencils; interior nodes only.
inline ResidualReport bochner_residual(const ModelSpace& space, const RadialProfile& u,
                                       DerivPath path, double r_hi,
                                       const std::vector<double>& drs = {0.04, 0.02,
                                                                         0.01}) {
    std::vector<ResidualLevel> levels;
    if (path == DerivPath::Analytic) {
        double worst = 0.0;
        const int samples = 4096;
        for (int i = 1; i < samples; ++i) {
            double r = 0.05 + (r_hi - 0.05) * i / samples;
            worst = std::max(worst, std::fabs(bochner_residual_analytic(space, u, r)));
        }
        levels.push_back({0.0, worst});
        return make_residual_report("bochner", std::move(levels), "analytic");
    }
    for (double dr : drs) {
        int nodes = static_cast<int>(std::lround(space.r_max() / dr)) + 1;
        if (nodes < 8) throw GridTooCoarse("bochner grid too coarse");
        std::vector<double> uu(static_cast<size_t>(nodes)), g2(static_cast<size_t>(nodes)),
            lap(static_cast<size_t>(nodes));
        for (int i = 0; i < nodes; ++i) uu[static_cast<size_t>(i)] = u(i * dr);
        for (int i = 0; i < nodes; ++i) {
            g2[static_cast<size_t>(i)] = std::pow(stencil::d1(uu, i, dr, 4), 2);
            lap[static_cast<size_t>(i)] = laplacian_nodal(space, uu, i, dr, 4);
        }
        double worst = 0.0;
        const int n = space.n();
        for (int i = 2; i < nodes - 2 && i * dr <= r_hi; ++i) {
            double r = i * dr;
            double psi = space.psi(r), dpsi = space.psi1(r), ddpsi = space.psi2(r);
            double u1 = stencil::d1(uu, i, dr, 4), u2 = stencil::d2(uu, i, dr, 4);
            double lhs = 0.5 * laplacian_nodal(space, g2, i, dr, 2);
            double hess2 = u2 * u2 + (n - 1) * std::pow(u1 * dpsi / psi, 2);
            double grad_lap = u1 * stencil::d1(lap, i, dr, 2);
            double ric_phi_rad = -(n - 1) * ddpsi / psi + space.phi2(r);
            double rhs = hess2 + grad_lap + ric_phi_rad * u1 * u1;
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
        levels.push_back({dr, worst});
    }
    return make_residual_report("bochner", std::move(levels), "discrete");
}

// ---------------------------------------------------------------------------
// Curvature-dimension condition CD(k, m) for L = Delta_phi:
//   Gamma_2(u,u) >= (L u)^2 / m + k Gamma(u,u)
// under the signed lower bound Ric_phi^m >= k g (Ric_phi for m = inf, with
// the (Lu)^2/m term absent).

inline double cd_condition_check(const ModelSpace& space, const RadialProfile& u,
                                 double k, double m, RadialInterval region) {
    bool infinite = std::isinf(m);
    CurvatureFlavor flavor = infinite ? CurvatureFlavor::RicPhi : CurvatureFlavor::RicPhiM;
    if (!infinite && std::fabs(m - space.n()) < 1e-12 &&
        !space.potential().is_constant())
        throw HypothesisUnverified("m = n needs a constant potential");
    ModelSpace probe(space.n(), m, space.warp(), space.potential(), space.r_max());
    double certified = min_ricci_eigenvalue(probe, flavor, region);
    if (certified < k - 1e-9)
        throw HypothesisUnverified("curvature bound Ric >= k g not certified: min "
                                   "eigenvalue " +
                                   std::to_string(certified));
    const int n = space.n();
    auto margin = [&](double r) {
        double psi = space.psi(r), dpsi = space.psi1(r);
        double u1 = u.d1(r), u2 = u.d2(r);
        double hess2 = u2 * u2 + (n - 1) * std::pow(u1 * dpsi / psi, 2);
        double ric_phi_rad = -(n - 1) * space.psi2(r) / psi + space.phi2(r);
        double gamma2 = hess2 + ric_phi_rad * u1 * u1;
        double lap = u2 + space.drift(r) * u1;
        double value = gamma2 - k * u1 * u1;
        if (!infinite) value -= lap * lap / m;
        return value;
    };
    double lo = std::max(region.lo, std::min(1e-3, region.hi / 1024.0));
    return detail::sampled_extremum(margin, lo, region.hi, /*want_min=*/true);
}

// ---------------------------------------------------------------------------
// Evolution identities on solver fields.

namespace detail {

struct EvolutionGrid {
    const SolutionField& sol;
    std::vector<int> nodes;   // interior nodes inside the cylinder
    std::vector<int> levels;  // interior stored levels inside the window

    EvolutionGrid(const SolutionField& s, const Cylinder& cyl, int time_margin)
        : sol(s) {
        if (s.levels() < 2 * time_margin + 3)
            throw GridTooCoarse("need more stored levels for time differences");
        for (int i : s.nodes_in(cyl))
            if (i >= 2 && i <= s.nodes - 3) nodes.push_back(i);
        if (nodes.empty()) throw GridTooCoarse("no interior nodes in cylinder");
        for (int l : s.levels_in(cyl, /*exclude_initial=*/false))
            if (l >= time_margin && l <= s.levels() - 1 - time_margin)
                levels.push_back(l);
        if (levels.empty()) throw GridTooCoarse("no interior stored levels in window");
    }
};

/// Centered time difference of a per-level nodal field.
inline double time_fd(const std::vector<std::vector<double>>& field, int level,
                      int node, double dt) {
    return (field[static_cast<size_t>(level) + 1][static_cast<size_t>(node)] -
            field[static_cast<size_t>(level) - 1][static_cast<size_t>(node)]) /
           (2 * dt);
}

} // namespace detail

/// Residual of the logarithmic evolution equation
///   d_t h = Delta_phi h + |grad h|^2 + G / w,     h = log(w/D).
inline double h_evolution_max_residual(const SolutionField& sol, const Cylinder& cyl) {
    if (!sol.bound_D) throw BoundViolated("attach a bound D first");
    detail::EvolutionGrid eg(sol, cyl, 1);
    std::vector<std::vector<double>> h(static_cast<size_t>(sol.levels()));
    for (int l = 0; l < sol.levels(); ++l) h[static_cast<size_t>(l)] = sol.log_w_over_D(l);
    double worst = 0.0;
    for (int l : eg.levels) {
        double tt = sol.theorem_time(l);
        const auto& hl = h[static_cast<size_t>(l)];
        for (int i : eg.nodes) {
            double w = sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)];
            double lhs = detail::time_fd(h, l, i, sol.dt_store());
            double h1 = stencil::d1(hl, i, sol.dr, 4);
            double rhs = laplacian_nodal(*sol.space, hl, i, sol.dr, 4) + h1 * h1 +
                         sol.G->eval(tt, sol.radius(i), w) / w;
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
    }
    return worst;
}

/// Residual of the evolution identity for H = |grad h|^2 / (1-h)^2. Per-term
/// suprema are recorded in `term_sup` when a pointer is supplied.
inline double H_evolution_max_residual(const SolutionField& sol, const Cylinder& cyl,
                                       std::map<std::string, double>* term_sup = nullptr) {
    if (!sol.bound_D) throw BoundViolated("attach a bound D first");
    detail::EvolutionGrid eg(sol, cyl, 1);
    const ModelSpace& space = *sol.space;
    const int n = space.n();

    std::vector<std::vector<double>> h(static_cast<size_t>(sol.levels())),
        H(static_cast<size_t>(sol.levels()));
    for (int l = 0; l < sol.levels(); ++l) {
        h[static_cast<size_t>(l)] = sol.log_w_over_D(l);
        auto& Hl = H[static_cast<size_t>(l)];
        Hl.resize(static_cast<size_t>(sol.nodes));
        for (int i = 0; i < sol.nodes; ++i) {
            double h1 = stencil::d1(h[static_cast<size_t>(l)], i, sol.dr, 4);
            double om = 1.0 - h[static_cast<size_t>(l)][static_cast<size_t>(i)];
            Hl[static_cast<size_t>(i)] = h1 * h1 / (om * om);
        }
    }

    auto note = [&](const std::string& key, double v) {
        if (term_sup) {
            auto& slot = (*term_sup)[key];
            slot = std::max(slot, std::fabs(v));
        }
    };

    double worst = 0.0;
    for (int l : eg.levels) {
        double tt = sol.theorem_time(l);
        const auto& hl = h[static_cast<size_t>(l)];
        const auto& Hl = H[static_cast<size_t>(l)];
        for (int i : eg.nodes) {
            double r = sol.radius(i);
            double w = sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)];
            double hv = hl[static_cast<size_t>(i)], om = 1.0 - hv;
            double h1 = stencil::d1(hl, i, sol.dr, 4);
            double h2 = stencil::d2(hl, i, sol.dr, 4);
            double Hv = Hl[static_cast<size_t>(i)];
            double H1 = stencil::d1(Hl, i, sol.dr, 4);

            double lhs = laplacian_nodal(space, Hl, i, sol.dr, 4) -
                         detail::time_fd(H, l, i, sol.dt_store());

            auto curv = ricci_eigenvalues(space, r);
            double t_ric = 2 * curv.ric_phi_radial * h1 * h1 / (om * om);
            double t_transport = 2 * hv * h1 * H1 / om;
            double t_square = 2 * om * Hv * Hv;
            double a_rad = h2 / om + h1 * h1 / (om * om);
            double a_tan = (space.psi1(r) / space.psi(r)) * h1 / om;
            double t_hess = 2 * (a_rad * a_rad + (n - 1) * a_tan * a_tan);
            auto gp = sol.G->eval_with_partials(tt, r, w);
            double t_gx = -2 * h1 * gp.g_x / (w * om * om);
            double t_gw = -2 * Hv * (gp.g_w + hv * gp.g / (w * om));
            double rhs = t_ric + t_transport + t_square + t_hess + t_gx + t_gw;

            note("ric", t_ric);
            note("transport", t_transport);
            note("square", t_square);
            note("hessian", t_hess);
            note("g_x", t_gx);
            note("g_w", t_gw);
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
    }
    return worst;
}

/// Residual of the evolution identity for F = f^beta |grad f|^2 with
/// f = w^(1/alpha).
inline double F_beta_evolution_max_residual(const SolutionField& sol, double alpha,
                                            double beta, const Cylinder& cyl) {
    if (!(alpha > 1) || beta < 0)
        throw ParameterOrder("F_beta identity needs alpha > 1 and beta >= 0");
    detail::EvolutionGrid eg(sol, cyl, 1);
    const ModelSpace& space = *sol.space;
    const int n = space.n();

    std::vector<std::vector<double>> f(static_cast<size_t>(sol.levels())),
        g2(static_cast<size_t>(sol.levels())), F(static_cast<size_t>(sol.levels()));
    for (int l = 0; l < sol.levels(); ++l) {
        auto& fl = f[static_cast<size_t>(l)];
        fl.resize(static_cast<size_t>(sol.nodes));
        for (int i = 0; i < sol.nodes; ++i)
            fl[static_cast<size_t>(i)] =
                std::pow(sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)], 1.0 / alpha);
        auto& g2l = g2[static_cast<size_t>(l)];
        auto& Fl = F[static_cast<size_t>(l)];
        g2l.resize(static_cast<size_t>(sol.nodes));
        Fl.resize(static_cast<size_t>(sol.nodes));
        for (int i = 0; i < sol.nodes; ++i) {
            double f1 = stencil::d1(fl, i, sol.dr, 4);
            g2l[static_cast<size_t>(i)] = f1 * f1;
            Fl[static_cast<size_t>(i)] =
                std::pow(fl[static_cast<size_t>(i)], beta) * f1 * f1;
        }
    }

    double worst = 0.0;
    for (int l : eg.levels) {
        double tt = sol.theorem_time(l);
        const auto& fl = f[static_cast<size_t>(l)];
        const auto& g2l = g2[static_cast<size_t>(l)];
        const auto& Fl = F[static_cast<size_t>(l)];
        for (int i : eg.nodes) {
            double r = sol.radius(i);
            double fv = fl[static_cast<size_t>(i)];
            double f1 = stencil::d1(fl, i, sol.dr, 4);
            double f2 = stencil::d2(fl, i, sol.dr, 4);
            double Fv = Fl[static_cast<size_t>(i)];
            double w = sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)];

            double lhs = laplacian_nodal(space, Fl, i, sol.dr, 4) -
                         detail::time_fd(F, l, i, sol.dt_store());

            auto curv = ricci_eigenvalues(space, r);
            double fb = std::pow(fv, beta);
            double hess2 =
                f2 * f2 + (n - 1) * std::pow(f1 * space.psi1(r) / space.psi(r), 2);
            auto gp = sol.G->eval_with_partials(tt, r, w);
            double rhs = 2 * fb * curv.ric_phi_radial * f1 * f1 +
                         2 * (1 - alpha + beta) * std::pow(fv, beta - 1) * f1 *
                             stencil::d1(g2l, i, sol.dr, 4) +
                         2 * fb * hess2 -
                         (2 - beta * beta - alpha * (2 - beta)) * Fv * Fv /
                             std::pow(fv, beta + 2) -
                         (2 * w * gp.g_w - (2 - (2 + beta) / alpha) * gp.g) * Fv / w -
                         (2 / alpha) * std::pow(fv, beta + 1 - alpha) * f1 * gp.g_x;
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
    }
    return worst;
}

struct LiYauEvolutionResult {
    double max_residual = 0.0;   // equality form
    double min_slack = 0.0;      // inequality form, under the certified k
};

/// Residual of the evolution identity for the Harnack quantity
///   F = t [ |grad f|^2 - alpha d_t f + alpha e^{-f} G ],  f = log w,
/// evaluated through its spatial form t [ (1-alpha) |grad f|^2
/// - alpha Delta_phi f ]. Also reports the minimum slack of the inequality
/// form under the certified curvature bound.
inline LiYauEvolutionResult liyau_F_evolution_residual(const SolutionField& sol,
                                                       double alpha, double m,
                                                       const Cylinder& cyl) {
    const ModelSpace& space = *sol.space;
    bool infinite = std::isinf(m);
    if (!infinite && m - space.n() < 1e-12) {
        if (!space.potential().is_constant())
            throw NeedFiniteM("m = n with non-constant potential: the "
                              "(m-n)-denominator term is undefined");
    }
    detail::EvolutionGrid eg(sol, cyl, 1);
    const int n = space.n();

    // certified signed bound for the inequality form
    double k_cert = 0.0;
    if (!infinite) {
        ModelSpace probe(space.n(), m, space.warp(), space.potential(), space.r_max());
        double min_eig = min_ricci_eigenvalue(probe, CurvatureFlavor::RicPhiM,
                                              {0.0, cyl.r_hi});
        k_cert = std::max(0.0, -min_eig / (m - 1));
    }

    std::vector<std::vector<double>> f(static_cast<size_t>(sol.levels())),
        F(static_cast<size_t>(sol.levels())), q(static_cast<size_t>(sol.levels()));
    for (int l = 0; l < sol.levels(); ++l) {
        double tt = sol.theorem_time(l);
        auto& fl = f[static_cast<size_t>(l)];
        fl = sol.log_w(l);
        auto& Fl = F[static_cast<size_t>(l)];
        auto& ql = q[static_cast<size_t>(l)];
        Fl.resize(static_cast<size_t>(sol.nodes));
        ql.resize(static_cast<size_t>(sol.nodes));
        for (int i = 0; i < sol.nodes; ++i) {
            double f1 = stencil::d1(fl, i, sol.dr, 4);
            double lap_f = laplacian_nodal(space, fl, i, sol.dr, 4);
            Fl[static_cast<size_t>(i)] = tt * ((1 - alpha) * f1 * f1 - alpha * lap_f);
            double w = sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)];
            ql[static_cast<size_t>(i)] = sol.G->eval(tt, sol.radius(i), w) / w;
        }
    }

    LiYauEvolutionResult out;
    out.min_slack = std::numeric_limits<double>::infinity();
    for (int l : eg.levels) {
        double tt = sol.theorem_time(l);
        if (!(tt > 0)) continue;
        const auto& fl = f[static_cast<size_t>(l)];
        const auto& Fl = F[static_cast<size_t>(l)];
        const auto& ql = q[static_cast<size_t>(l)];
        for (int i : eg.nodes) {
            double r = sol.radius(i);
            double f1 = stencil::d1(fl, i, sol.dr, 4);
            double f2 = stencil::d2(fl, i, sol.dr, 4);
            double Fv = Fl[static_cast<size_t>(i)];
            double F1 = stencil::d1(Fl, i, sol.dr, 4);
            double lap_f = laplacian_nodal(space, fl, i, sol.dr, 4);

            double lhs = laplacian_nodal(space, Fl, i, sol.dr, 4) -
                         detail::time_fd(F, l, i, sol.dt_store());

            auto curv = ricci_eigenvalues(space, r);
            double hess2 =
                f2 * f2 + (n - 1) * std::pow(f1 * space.psi1(r) / space.psi(r), 2);
            double ric_term = infinite ? curv.ric_phi_radial : curv.ric_phi_m_radial;
            double dphi_f = space.phi1(r) * f1;
            double mixing =
                (infinite || m - n < 1e-12) ? 0.0 : 2 * tt * dphi_f * dphi_f / (m - n);
            double grad_q = stencil::d1(ql, i, sol.dr, 4);
            double lap_q = laplacian_nodal(space, ql, i, sol.dr, 4);
            double rhs = 2 * tt * hess2 - 2 * f1 * F1 + 2 * tt * ric_term * f1 * f1 +
                         mixing - Fv / tt + 2 * tt * (alpha - 1) * f1 * grad_q +
                         alpha * tt * lap_q;
            out.max_residual = std::max(out.max_residual, std::fabs(lhs - rhs));

            if (!infinite) {
                double rhs_ineq = 2 * tt * lap_f * lap_f / m - 2 * f1 * F1 -
                                  2 * tt * (m - 1) * k_cert * f1 * f1 - Fv / tt +
                                  2 * tt * (alpha - 1) * f1 * grad_q +
                                  alpha * tt * lap_q;
                out.min_slack = std::min(out.min_slack, lhs - rhs_ineq);
            }
        }
    }
    return out;
}

/// Residual of the chain-rule identity for the drifted Laplacian of the
/// composite map x -> G(t, x, w(x, t)) with f = log w:
///   Delta_phi G = Delta_phi G^x + 2 e^f <G_xw, grad f>
///                 + e^f |grad f|^2 (G_w + e^f G_ww) + e^f G_w Delta_phi f.
inline double delta_phi_G_identity_max_residual(const SolutionField& sol,
                                                const Nonlinearity& G,
                                                const Cylinder& cyl) {
    detail::EvolutionGrid eg(sol, cyl, 1);
    const ModelSpace& space = *sol.space;
    double worst = 0.0;
    std::vector<double> composite(static_cast<size_t>(sol.nodes));
    for (int l : eg.levels) {
        double tt = sol.theorem_time(l);
        auto fl = sol.log_w(l);
        for (int i = 0; i < sol.nodes; ++i)
            composite[static_cast<size_t>(i)] = G.eval(
                tt, sol.radius(i), sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)]);
        for (int i : eg.nodes) {
            double r = sol.radius(i);
            double w = sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)];
            auto gp = G.eval_with_partials(tt, r, w);
            double f1 = stencil::d1(fl, i, sol.dr, 2);
            double lap_f = laplacian_nodal(space, fl, i, sol.dr, 2);
            double lhs = laplacian_nodal(space, composite, i, sol.dr, 2);
            double rhs = G.delta_phi_gx(space, tt, r, w) + 2 * w * gp.g_xw * f1 +
                         w * f1 * f1 * (gp.g_w + w * gp.g_ww) + w * gp.g_w * lap_f;
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
    }
    return worst;
}

/// Residual of Delta_phi e^{-f} = -e^{-f} (Delta_phi f - |grad f|^2) for an
/// analytic radial profile sampled on refining grids.
inline ResidualReport exp_laplacian_identity(const ModelSpace& space,
                                             const RadialProfile& f, double r_hi,
                                             const std::vector<double>& drs = {
                                                 0.04, 0.02, 0.01}) {
    std::vector<ResidualLevel> levels;
    for (double dr : drs) {
        int nodes = static_cast<int>(std::lround(space.r_max() / dr)) + 1;
        if (nodes < 8) throw GridTooCoarse("exp-laplacian grid too coarse");
        std::vector<double> ff(static_cast<size_t>(nodes)), ee(static_cast<size_t>(nodes));
        for (int i = 0; i < nodes; ++i) {
            ff[static_cast<size_t>(i)] = f(i * dr);
            ee[static_cast<size_t>(i)] = std::exp(-ff[static_cast<size_t>(i)]);
        }
        double worst = 0.0;
        for (int i = 2; i < nodes - 2 && i * dr <= r_hi; ++i) {
            double f1 = stencil::d1(ff, i, dr, 2);
            double lhs = laplacian_nodal(space, ee, i, dr, 2);
            double rhs = -ee[static_cast<size_t>(i)] *
                         (laplacian_nodal(space, ff, i, dr, 2) - f1 * f1);
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
        levels.push_back({dr, worst});
    }
    return make_residual_report("exp_laplacian", std::move(levels), "discrete");
}

// ---------------------------------------------------------------------------
// Product rule of the weighted heat operator on localised functions:
//   [Delta_phi - d_t](eta H) = eta [Delta_phi - d_t] H
//     + 2 [<grad eta, grad(eta H)> - |grad eta|^2 H] / eta
//     + H [Delta_phi - d_t] eta
// checked for generic smooth space-time factors via exact derivatives.

inline double product_rule_identity_max_residual(const ModelSpace& space,
                                                 const std::string& eta_expr,
                                                 const std::string& H_expr,
                                                 double r_hi, double t_hi) {
    auto eta = parse_expression(eta_expr, {"r", "t"});
    auto H = parse_expression(H_expr, {"r", "t"});
    auto heat = [&space](const Expression& u) {
        // (r, t) -> Delta_phi u - d_t u using exact derivatives
        auto ur = u.derivative("r");
        auto urr = ur.derivative("r");
        auto ut = u.derivative("t");
        return [&space, ur, urr, ut](double r, double t) {
            return urr(r, t) + space.drift(r) * ur(r, t) - ut(r, t);
        };
    };
    auto eta_r = eta.derivative("r");
    auto H_r = H.derivative("r");
    auto heat_eta = heat(eta);
    auto heat_H = heat(H);

    Expression product(ExprNode::binary(BinaryOp::Mul, eta.root(), H.root()),
                       {"r", "t"});
    auto heat_product = heat(product);
    auto product_r = product.derivative("r");

    double worst = 0.0;
    const int nr = 160, nt = 40;
    for (int j = 0; j <= nt; ++j) {
        double t = t_hi * j / nt;
        for (int i = 1; i <= nr; ++i) {
            double r = 0.05 + (r_hi - 0.05) * i / nr;
            double e = eta(r, t);
            if (std::fabs(e) < 1e-8) continue; // the identity divides by eta
            double lhs = heat_product(r, t);
            double cross = eta_r(r, t) * product_r(r, t) -
                           eta_r(r, t) * eta_r(r, t) * H(r, t);
            double rhs = e * heat_H(r, t) + 2.0 * cross / e + H(r, t) * heat_eta(r, t);
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Scalar quadratic lemma behind the Li-Yau localisation: for y > 0,
// alpha > 1, eps in (0,1), y - alpha z > 0 and nonnegative a, b, c1, R:
//   (y-z)^2 - (m c1/R) sqrt(y) (y - alpha z) - m a y - m b sqrt(y)
//     >= (y-alpha z)^2/alpha^2 - (m c1/R)^2 alpha^2 (y-alpha z)/(8(alpha-1))
//        - alpha^2 m^2 a^2/(4(1-eps)(alpha-1)^2)
//        - (3/4) [m^4 b^4 alpha^2/(4 eps (alpha-1)^2)]^(1/3)

struct QuadraticLemmaSample {
    double y = 1, z = 0, alpha = 2, eps = 0.5, m = 3, c1 = 0, R = 1, a = 0, b = 0;
};

inline double quadratic_lemma_gap(const QuadraticLemmaSample& s) {
    double root_y = std::sqrt(s.y);
    double u = s.y - s.alpha * s.z;
    double cr = s.m * s.c1 / s.R;
    double lhs = (s.y - s.z) * (s.y - s.z) - cr * root_y * u - s.m * s.a * s.y -
                 s.m * s.b * root_y;
    double rhs = u * u / (s.alpha * s.alpha) -
                 cr * cr * s.alpha * s.alpha * u / (8 * (s.alpha - 1)) -
                 s.alpha * s.alpha * s.m * s.m * s.a * s.a /
                     (4 * (1 - s.eps) * (s.alpha - 1) * (s.alpha - 1)) -
                 0.75 * std::cbrt(std::pow(s.m, 4) * std::pow(s.b, 4) * s.alpha *
                                  s.alpha / (4 * s.eps * (s.alpha - 1) * (s.alpha - 1)));
    return lhs - rhs;
}

struct QuadraticLemmaSweep {
    long violations = 0;
    double worst_gap = std::numeric_limits<double>::infinity();
    long samples = 0;
};

inline QuadraticLemmaSweep quadratic_lemma_check(long count, unsigned seed = 20240601) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    QuadraticLemmaSweep sweep;
    while (sweep.samples < count) {
        QuadraticLemmaSample s;
        s.y = std::pow(10.0, -3 + 6 * uni(rng));
        s.alpha = 1.0 + std::pow(10.0, -2 + 3 * uni(rng));
        double u = std::pow(10.0, -3 + 6 * uni(rng)); // y - alpha z > 0
        s.z = (s.y - u) / s.alpha;
        s.eps = 0.01 + 0.98 * uni(rng);
        s.m = 2.0 + 8.0 * uni(rng);
        s.c1 = 4.0 * uni(rng);
        s.R = 0.5 + 9.5 * uni(rng);
        s.a = std::pow(10.0, -3 + 4 * uni(rng)) * (uni(rng) < 0.2 ? 0.0 : 1.0);
        s.b = std::pow(10.0, -3 + 4 * uni(rng)) * (uni(rng) < 0.2 ? 0.0 : 1.0);
        ++sweep.samples;
        double gap = quadratic_lemma_gap(s);
        sweep.worst_gap = std::min(sweep.worst_gap, gap);
        if (gap < -1e-12) ++sweep.violations;
    }
    return sweep;
}

} // namespace driftlab
