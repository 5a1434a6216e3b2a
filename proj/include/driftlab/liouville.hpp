#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "driftlab/nonlinearity.hpp"

namespace driftlab {

// Constancy-hypothesis predicates for the stationary and ancient problems.
// Each predicate mechanises one hypothesis set by dense sampling over the w
// window (with a refinement pass), except the exponent-only ones which are
// pure arithmetic. Reports are labelled with the sampled window: this is a
// sampling check, not a proof.

struct PredicateParams {
    double alpha = 2.0;
    double beta = 0.0;
    std::optional<double> gamma; // (Y2) auxiliary exponent; searched if absent
    std::optional<double> D;     // upper bound for the log-weighted condition
    double m = 3.0;
};

struct PredicateReport {
    std::string id;
    bool holds = false;
    std::optional<double> witness_w; // first violating w, when sampled
    std::string note;                // human-readable witness / branch info
    double window_lo = 0.0, window_hi = 0.0;
    int samples = 0;
    bool stable = false; // refinement pass agreed
};

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(count) + 1);
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= count; ++i)
        out.push_back(std::exp(llo + (lhi - llo) * i / count));
    return out;
}

struct SampledCheck {
    bool ok = true;
    std::optional<double> witness;
    double worst = 0.0;
};

/// max over samples of violation(w); ok if <= tol everywhere on both passes.
inline SampledCheck sampled_condition(const std::function<double(double)>& violation,
                                      double lo, double hi,
                                      const std::vector<double>& excluded,
                                      double excl_radius, int count) {
    SampledCheck out;
    for (double w : log_spaced(lo, hi, count)) {
        bool skip = false;
        for (double s : excluded)
            if (std::fabs(w - s) < excl_radius) skip = true;
        if (skip) continue;
        double v = violation(w);
        bool violated = !std::isfinite(v) || v > 1e-12;
        if (std::isfinite(v) && v > out.worst) out.worst = v;
        if (violated && !out.witness) {
            out.witness = w;
            out.ok = false;
        }
    }
    return out;
}

} // namespace detail

/// Evaluates a pointwise hypothesis `violation(w) <= 0` over the window with
/// a x2 refinement pass; fills the sampling metadata of the report.
inline bool run_sampled_predicate(PredicateReport& rep,
                                  const std::function<double(double)>& violation,
                                  const Nonlinearity& G, double lo, double hi,
                                  int base_samples = 2048) {
    auto coarse = detail::sampled_condition(violation, lo, hi, G.singular_points,
                                            G.exclusion_radius, base_samples);
    auto fine = detail::sampled_condition(violation, lo, hi, G.singular_points,
                                          G.exclusion_radius, 2 * base_samples);
    rep.samples = 3 * base_samples + 2;
    rep.stable = coarse.ok == fine.ok;
    if (!fine.ok) {
        rep.witness_w = fine.witness;
        return false;
    }
    return coarse.ok;
}

namespace detail {

inline GPartials partials_of_w(const Nonlinearity& G, double w) {
    return G.eval_with_partials(0.0, 0.0, w);
}

inline void require_x_independent(const Nonlinearity& G) {
    if (!G.x_independent() && G.family != Family::Custom)
        throw DomainViolation(
            "constancy predicates require a space-time independent nonlinearity");
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace detail

/// Predicate ids (named by the shape of the hypothesis they check):
///   log-weighted      (1-log(w/D)) w G' + log(w/D) G <= 0 on (0, D]
///   scaling-gap       [1-(beta/2+1)/alpha] G - w G' >= 0,  alpha > 1+beta
///   split-xy          X' <= 0, X - w X' >= 0 plus sign/growth branch on Y
///   power-sum-window  A_j >= 0, B_j <= 0, p_j <= 1-(beta/2+1)/alpha <= q_j
///   subunit-powers    pure power sum with A_j >= 0 and p_j <= 1
///   power-log-window  A,B,p,q window plus Y' + [(beta/2+1)/alpha + r - 1] Y <= 0
///   concavity-chain   G >= 0, G - w G_w >= 0, G - w G_w + alpha w^2 G_ww >= 0
///   log-lichnerowicz  A w Y(log w) + B w^s: Y >= 0, Y' <= 0,
///                     alpha Y'' + (alpha-1) Y' >= 0, A,B >= 0, s <= 1
///   ancient-floor     G' <= 0, G - w G' >= 0, inf G > 0
inline PredicateReport liouville_predicate(const Nonlinearity& G,
                                           const std::string& id, double window_lo,
                                           double window_hi,
                                           const PredicateParams& params = {}) {
    if (!(window_lo > 0) || !(window_hi > window_lo))
        throw DomainViolation("predicate window must satisfy 0 < lo < hi");
    if (window_lo < G.w_min || window_hi > G.w_max)
        throw DomainViolation("predicate window outside the positivity window");

    PredicateReport rep;
    rep.id = id;
    rep.window_lo = window_lo;
    rep.window_hi = window_hi;

    if (id == "log-weighted") {
        detail::require_x_independent(G);
        double D = params.D.value_or(window_hi);
        double hi = std::min(window_hi, D);
        auto violation = [&](double w) {
            GPartials v = detail::partials_of_w(G, w);
            double h = std::log(w / D);
            return (1 - h) * w * v.g_w + h * v.g;
        };
        rep.holds = run_sampled_predicate(rep, violation, G, window_lo, hi);
        if (!rep.holds && rep.witness_w)
            rep.note = "condition positive at w = " + detail::fmt(*rep.witness_w);
        return rep;
    }

    if (id == "scaling-gap") {
        detail::require_x_independent(G);
        if (!(params.alpha > 1 + params.beta) || params.beta < 0)
            throw ParameterOrder("scaling-gap needs beta >= 0 and alpha > 1 + beta");
        double factor = 1.0 - (params.beta / 2 + 1) / params.alpha;
        auto violation = [&](double w) {
            GPartials v = detail::partials_of_w(G, w);
            return -(factor * v.g - w * v.g_w);
        };
        rep.holds = run_sampled_predicate(rep, violation, G, window_lo, window_hi);
        if (!rep.holds && rep.witness_w)
            rep.note = "bracket negative at w = " + detail::fmt(*rep.witness_w);
        return rep;
    }

    if (id == "split-xy") {
        if (G.family != Family::SplitXY || !G.Y)
            throw DomainViolation("split-xy predicate needs the split family");
        // shared conditions on the X part (tree plus any power terms)
        if (G.X || !G.a_terms.empty() || !G.b_terms.empty()) {
            auto x_part = [&](double w, double& x0, double& x1) {
                x0 = x1 = 0.0;
                if (G.X) {
                    x0 = (*G.X)(w);
                    x1 = G.X->d1(w);
                }
                for (const auto& lst : {&G.a_terms, &G.b_terms})
                    for (const auto& term : *lst) {
                        double c = term.coeff(0, 0), e = term.exponent;
                        double we = std::pow(w, e);
                        x0 += c * we;
                        x1 += c * e * we / w;
                    }
            };
            auto vio_x = [&](double w) {
                double x0, x1;
                x_part(w, x0, x1);
                return std::max(x1, -(x0 - w * x1));
            };
            if (!run_sampled_predicate(rep, vio_x, G, window_lo, window_hi)) {
                rep.holds = false;
                rep.note = "X term fails X' <= 0 or X - w X' >= 0";
                return rep;
            }
        }
        double r = G.r_exp;
        // branch (w >= 1): r >= 1, Y <= 0 and Y' <= 0 on s >= 0
        if (window_lo >= 1.0 && r >= 1.0) {
            auto vio = [&](double w) {
                double s = std::log(w);
                return std::max((*G.Y)(s), G.Y->d1(s));
            };
            rep.holds = run_sampled_predicate(rep, vio, G, window_lo, window_hi);
            rep.note = rep.holds ? "branch: w >= 1" : "Y sign/monotonicity fails on s >= 0";
            return rep;
        }
        // branch (0 < w <= 1): r <= min(gamma, 1), Y >= 0, Y' <= 0,
        // s Y'(s) >= gamma Y(s) on s <= 0 for some gamma >= 0
        if (window_hi <= 1.0) {
            std::vector<double> gammas;
            if (params.gamma)
                gammas.push_back(*params.gamma);
            else {
                gammas.push_back(0.0);
                for (double g = 1e-4; g <= 1e4; g *= 4) gammas.push_back(g);
            }
            for (double gamma : gammas) {
                if (!(r <= std::min(gamma, 1.0))) continue;
                auto vio = [&](double w) {
                    double s = std::log(w);
                    double y = (*G.Y)(s), y1 = G.Y->d1(s);
                    return std::max({-y, y1, gamma * y - s * y1});
                };
                PredicateReport probe = rep;
                if (run_sampled_predicate(probe, vio, G, window_lo, window_hi)) {
                    rep = probe;
                    rep.holds = true;
                    rep.note = "branch: w <= 1, gamma = " + detail::fmt(gamma);
                    return rep;
                }
            }
            rep.holds = false;
            rep.note = "no admissible gamma found on the w <= 1 branch";
            return rep;
        }
        rep.holds = false;
        rep.note = "window must lie in [1, inf) (r >= 1) or (0, 1]";
        return rep;
    }

    if (id == "power-sum-window" || id == "subunit-powers") {
        if (G.family != Family::PowerSum)
            throw DomainViolation(id + " needs the power-sum family");
        detail::require_x_independent(G);
        bool window_form = (id == "power-sum-window");
        double bound = 1.0;
        if (window_form) {
            if (!(params.alpha > 1 + params.beta) || params.beta < 0)
                throw ParameterOrder(id + " needs beta >= 0 and alpha > 1 + beta");
            bound = 1.0 - (params.beta / 2 + 1) / params.alpha;
        }
        rep.stable = true;
        rep.samples = 0;
        for (const auto& term : G.a_terms) {
            double a = term.coeff(0, 0), p = term.exponent;
            if (a < 0) {
                rep.note = "A = " + detail::fmt(a) + " violates A >= 0";
                return rep;
            }
            if (a > 0 && p > bound) {
                rep.note = "p = " + detail::fmt(p) + " violates p <= " +
                           detail::fmt(bound) +
                           (window_form && p >= 1.0
                                ? " (impossible for every admissible alpha, beta)"
                                : "");
                return rep;
            }
        }
        for (const auto& term : G.b_terms) {
            double b = term.coeff(0, 0), q = term.exponent;
            if (!window_form) {
                if (b != 0.0) {
                    rep.note = "subunit-powers requires no B terms";
                    return rep;
                }
                continue;
            }
            if (b > 0) {
                rep.note = "B = " + detail::fmt(b) + " violates B <= 0";
                return rep;
            }
            if (b < 0 && q < bound) {
                rep.note = "q = " + detail::fmt(q) + " violates q >= " + detail::fmt(bound);
                return rep;
            }
        }
        rep.holds = true;
        return rep;
    }

    if (id == "power-log-window") {
        // structure A w^p + B w^q + w^r Y(log w): split family with the
        // power part in the a/b term lists
        if (G.family != Family::SplitXY || !G.Y)
            throw DomainViolation(
                "power-log-window needs the split family with power terms and Y");
        detail::require_x_independent(G);
        if (!(params.alpha > 1 + params.beta) || params.beta < 0)
            throw ParameterOrder("power-log-window needs beta >= 0, alpha > 1 + beta");
        double bound = 1.0 - (params.beta / 2 + 1) / params.alpha;
        for (const auto& term : G.a_terms) {
            double a = term.coeff(0, 0);
            if (a < 0 || (a > 0 && term.exponent > bound)) {
                rep.note = "power term A w^p outside the admissible window";
                return rep;
            }
        }
        for (const auto& term : G.b_terms) {
            double b = term.coeff(0, 0);
            if (b > 0 || (b < 0 && term.exponent < bound)) {
                rep.note = "power term B w^q outside the admissible window";
                return rep;
            }
        }
        double c = (params.beta / 2 + 1) / params.alpha + G.r_exp - 1.0;
        auto vio = [&](double w) {
            double s = std::log(w);
            return G.Y->d1(s) + c * (*G.Y)(s);
        };
        rep.holds = run_sampled_predicate(rep, vio, G, window_lo, window_hi);
        if (!rep.holds)
            rep.note = "Y' + [(beta/2+1)/alpha + r - 1] Y positive somewhere";
        return rep;
    }

    if (id == "concavity-chain") {
        detail::require_x_independent(G);
        if (!(params.alpha > 1)) throw ParameterOrder("concavity-chain needs alpha > 1");
        auto vio = [&](double w) {
            GPartials v = detail::partials_of_w(G, w);
            double first = v.g;
            double second = v.g - w * v.g_w;
            double third = v.g - w * v.g_w + params.alpha * w * w * v.g_ww;
            return std::max({-first, -second, -third});
        };
        rep.holds = run_sampled_predicate(rep, vio, G, window_lo, window_hi);
        if (!rep.holds && rep.witness_w)
            rep.note = "chain condition fails at w = " + detail::fmt(*rep.witness_w);
        return rep;
    }

    if (id == "log-lichnerowicz") {
        // structure A w Y(log w) + B w^s, hosted by the gamma_log family
        // with p = 1, Gamma = Y, q = s and C = 0
        if (G.family != Family::GammaLog || !G.Gamma || G.p != 1.0 || G.C(0, 0) != 0.0)
            throw DomainViolation(
                "log-lichnerowicz needs G = A w Y(log w) + B w^s "
                "(gamma_log family with p = 1, C = 0)");
        detail::require_x_independent(G);
        if (!(params.alpha > 1))
            throw ParameterOrder("log-lichnerowicz needs alpha > 1");
        double a = G.A(0, 0), b = G.B(0, 0);
        if (a < 0 || b < 0 || G.q > 1.0) {
            rep.note = "needs A >= 0, B >= 0 and s <= 1";
            return rep;
        }
        auto vio = [&](double w) {
            double s = std::log(w);
            double y = (*G.Gamma)(s), y1 = G.Gamma->d1(s), y2 = G.Gamma->d2(s);
            return std::max({-y, y1, -(params.alpha * y2 + (params.alpha - 1) * y1)});
        };
        rep.holds = run_sampled_predicate(rep, vio, G, window_lo, window_hi);
        if (!rep.holds)
            rep.note = "Y sign/convexity conditions fail";
        return rep;
    }

    if (id == "ancient-floor") {
        detail::require_x_independent(G);
        double floor = std::numeric_limits<double>::infinity();
        auto vio = [&](double w) {
            GPartials v = detail::partials_of_w(G, w);
            floor = std::min(floor, v.g);
            return std::max(v.g_w, -(v.g - w * v.g_w));
        };
        bool mono = run_sampled_predicate(rep, vio, G, window_lo, window_hi);
        rep.holds = mono && floor > 1e-12;
        if (!mono)
            rep.note = "G' <= 0 or G - w G' >= 0 fails";
        else if (floor <= 1e-12)
            rep.note = "no positive floor: inf G = " + detail::fmt(floor);
        else
            rep.note = "sampled floor a = " + detail::fmt(floor);
        return rep;
    }

    throw UnknownPredicate("no predicate named '" + id + "'");
}

} // namespace driftlab
