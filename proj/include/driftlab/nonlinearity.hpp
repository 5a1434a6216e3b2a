#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/expr.hpp"
#include "driftlab/geometry.hpp"
#include "driftlab/grid.hpp"

namespace driftlab {

/// A reaction-term coefficient: either a constant or a radial-time profile
/// with exact first and second radial derivatives.
class Coefficient {
public:
    Coefficient() : constant_(true), value_c_(0.0) {}

    static Coefficient constant(double v) {
        Coefficient c;
        c.constant_ = true;
        c.value_c_ = v;
        return c;
    }

    static Coefficient profile(const std::string& expr_text) {
        Coefficient c;
        c.constant_ = false;
        c.source_ = expr_text;
        c.value_ = parse_expression(expr_text, {"r", "t"});
        c.dr_ = c.value_.derivative("r");
        c.drr_ = c.dr_.derivative("r");
        if (c.value_.constant()) {
            c.constant_ = true;
            c.value_c_ = c.value_(0.0, 0.0);
        }
        return c;
    }

    double operator()(double r, double t) const {
        return constant_ ? value_c_ : value_(r, t);
    }
    double dr(double r, double t) const { return constant_ ? 0.0 : dr_(r, t); }
    double drr(double r, double t) const { return constant_ ? 0.0 : drr_(r, t); }
    bool is_constant() const { return constant_; }
    const std::string& source() const { return source_; }

    /// Drifted Laplacian of the coefficient as a function of x (radial model);
    /// at the pole the even-symmetry limit n * A_rr applies.
    double delta_phi(const ModelSpace& space, double r, double t) const {
        if (constant_) return 0.0;
        if (r <= 0.0) return space.n() * drr_(0.0, t);
        return drr_(r, t) + space.drift(r) * dr_(r, t);
    }

private:
    bool constant_;
    double value_c_ = 0.0;
    std::string source_;
    Expression value_, dr_, drr_;
};

/// Scalar C^2 function of one variable given as an expression tree
/// (the X, Y and Gamma shapes of the structured families).
class ScalarFn {
public:
    ScalarFn() = default;
    ScalarFn(const std::string& expr_text, const std::string& var)
        : source_(expr_text), value_(parse_expression(expr_text, {var})) {
        d1_ = value_.derivative(var);
        d2_ = d1_.derivative(var);
        smooth_ = value_.smooth();
    }
    double operator()(double x) const { return value_(x); }
    double d1(double x) const { return d1_(x); }
    double d2(double x) const { return d2_(x); }
    bool smooth() const { return smooth_; }
    const std::string& source() const { return source_; }

private:
    std::string source_;
    Expression value_, d1_, d2_;
    bool smooth_ = true;
};

enum class Family { Zero, LogLinear, PowerSum, GammaLog, Lichnerowicz, SplitXY, Custom };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Zero: return "zero";
        case Family::LogLinear: return "log_linear";
        case Family::PowerSum: return "power_sum";
        case Family::GammaLog: return "gamma_log";
        case Family::Lichnerowicz: return "lichnerowicz";
        case Family::SplitXY: return "split_xy";
        case Family::Custom: return "custom";
    }
    return "?";
}

/// Values of the reaction term and the exact partials the estimates consume.
/// g_x / g_xw are the signed radial components of the spatial derivatives.
struct GPartials {
    double g = 0.0;
    double g_w = 0.0;
    double g_x = 0.0;
    double g_ww = 0.0;
    double g_xw = 0.0;
};

struct PowerTerm {
    Coefficient coeff;
    double exponent = 0.0;
};

/// The nonlinearity G(t, x, w). Families cover the zero term, the
/// logarithmic term A w log w, superpositions of powers, the
/// Gamma(log w)-weighted power, the Lichnerowicz combination, the split form
/// X(w) + w^r Y(log w), and a free-form expression in (t, r, w).
class Nonlinearity {
public:
    Family family = Family::Zero;

    std::vector<PowerTerm> a_terms; // A_j w^{p_j}
    std::vector<PowerTerm> b_terms; // B_j w^{q_j}
    Coefficient A, B, C;
    double p = 0.0, q = 0.0, r_exp = 0.0, s_exp = 0.0;
    std::optional<ScalarFn> X;     // of w
    std::optional<ScalarFn> Y;     // of s = log w
    std::optional<ScalarFn> Gamma; // of s = log w

    Expression custom;      // over (t, r, w)
    Expression custom_w, custom_r, custom_ww, custom_rw, custom_rr;

    double w_min = 1e-6;
    double w_max = 1e6;
    std::vector<double> singular_points; // excluded w values for predicates
    double exclusion_radius = 1e-3;

    // -- builders ---------------------------------------------------------

    static Nonlinearity zero() { return Nonlinearity{}; }

    static Nonlinearity log_linear(Coefficient A) {
        Nonlinearity g;
        g.family = Family::LogLinear;
        g.A = std::move(A);
        return g;
    }

    static Nonlinearity power_sum(std::vector<PowerTerm> a, std::vector<PowerTerm> b) {
        Nonlinearity g;
        g.family = Family::PowerSum;
        g.a_terms = std::move(a);
        g.b_terms = std::move(b);
        return g;
    }

    static Nonlinearity gamma_log(Coefficient A, double p, ScalarFn gamma,
                                  Coefficient B, double q, Coefficient C) {
        Nonlinearity g;
        g.family = Family::GammaLog;
        g.A = std::move(A);
        g.p = p;
        g.Gamma = std::move(gamma);
        g.B = std::move(B);
        g.q = q;
        g.C = std::move(C);
        return g;
    }

    static Nonlinearity lichnerowicz(Coefficient A, double p, Coefficient B, double q,
                                     Coefficient C) {
        Nonlinearity g;
        g.family = Family::Lichnerowicz;
        g.A = std::move(A);
        g.p = p;
        g.B = std::move(B);
        g.q = q;
        g.C = std::move(C);
        return g;
    }

    static Nonlinearity split_xy(std::optional<ScalarFn> X, double r_exp, ScalarFn Y) {
        Nonlinearity g;
        g.family = Family::SplitXY;
        g.X = std::move(X);
        g.r_exp = r_exp;
        g.Y = std::move(Y);
        return g;
    }

    static Nonlinearity make_custom(const std::string& expr_text) {
        Nonlinearity g;
        g.family = Family::Custom;
        g.custom = parse_expression(expr_text, {"t", "r", "w"});
        g.custom_w = g.custom.derivative("w");
        g.custom_r = g.custom.derivative("r");
        g.custom_ww = g.custom_w.derivative("w");
        g.custom_rw = g.custom_r.derivative("w");
        g.custom_rr = g.custom_r.derivative("r");
        return g;
    }

    // -- evaluation -------------------------------------------------------

    bool x_independent() const {
        switch (family) {
            case Family::Zero:
                return true;
            case Family::SplitXY: {
                for (const auto& term : a_terms)
                    if (!term.coeff.is_constant()) return false;
                for (const auto& term : b_terms)
                    if (!term.coeff.is_constant()) return false;
                return true;
            }
            case Family::LogLinear:
                return A.is_constant();
            case Family::PowerSum: {
                for (const auto& term : a_terms)
                    if (!term.coeff.is_constant()) return false;
                for (const auto& term : b_terms)
                    if (!term.coeff.is_constant()) return false;
                return true;
            }
            case Family::GammaLog:
            case Family::Lichnerowicz:
                return A.is_constant() && B.is_constant() && C.is_constant();
            case Family::Custom:
                // conservative: constant first derivative tree not analysed
                return false;
        }
        return false;
    }

    GPartials eval_with_partials(double t, double r, double w) const {
        if (!(w >= w_min && w <= w_max))
            throw DomainViolation("w=" + std::to_string(w) +
                                  " outside positivity window [" +
                                  std::to_string(w_min) + ", " + std::to_string(w_max) +
                                  "]");
        return partials_raw(t, r, w);
    }

    double eval(double t, double r, double w) const {
        return eval_with_partials(t, r, w).g;
    }

    /// Window-free variants for the solver, which enforces its own
    /// positivity floor and blow-up ceiling.
    GPartials partials_raw(double t, double r, double w) const {
        GPartials out = eval_impl(t, r, w);
        if (!std::isfinite(out.g) || !std::isfinite(out.g_w) ||
            !std::isfinite(out.g_x) || !std::isfinite(out.g_ww) ||
            !std::isfinite(out.g_xw))
            throw DomainViolation("nonlinearity not finite at w=" + std::to_string(w));
        return out;
    }

    double eval_raw(double t, double r, double w) const {
        double g = eval_impl(t, r, w).g;
        if (!std::isfinite(g))
            throw DomainViolation("nonlinearity not finite at w=" + std::to_string(w));
        return g;
    }

    /// Delta_phi of the frozen map x -> G(t, x, w), via the exact profile
    /// derivatives of the coefficients.
    double delta_phi_gx(const ModelSpace& space, double t, double r, double w) const {
        switch (family) {
            case Family::Zero:
                return 0.0;
            case Family::LogLinear:
                return A.delta_phi(space, r, t) * w * std::log(w);
            case Family::SplitXY:
            case Family::PowerSum: {
                double acc = 0.0;
                for (const auto& term : a_terms)
                    acc += term.coeff.delta_phi(space, r, t) * std::pow(w, term.exponent);
                for (const auto& term : b_terms)
                    acc += term.coeff.delta_phi(space, r, t) * std::pow(w, term.exponent);
                return acc;
            }
            case Family::GammaLog:
                return A.delta_phi(space, r, t) * (*Gamma)(std::log(w)) * std::pow(w, p) +
                       B.delta_phi(space, r, t) * std::pow(w, q) +
                       C.delta_phi(space, r, t) * w;
            case Family::Lichnerowicz:
                return A.delta_phi(space, r, t) * std::pow(w, p) +
                       B.delta_phi(space, r, t) * std::pow(w, q) +
                       C.delta_phi(space, r, t) * w * std::log(w);
            case Family::Custom: {
                double drr = custom_rr({t, r, w});
                double dr = custom_r({t, r, w});
                if (r <= 0.0) return space.n() * drr;
                return drr + space.drift(r) * dr;
            }
        }
        return 0.0;
    }

    bool smooth() const {
        if (Y && !Y->smooth()) return false;
        if (X && !X->smooth()) return false;
        if (Gamma && !Gamma->smooth()) return false;
        if (family == Family::Custom) return custom.smooth();
        return true;
    }

private:
    GPartials eval_impl(double t, double r, double w) const {
        GPartials o;
        switch (family) {
            case Family::Zero:
                return o;
            case Family::LogLinear: {
                double a = A(r, t), ar = A.dr(r, t), lw = std::log(w);
                o.g = a * w * lw;
                o.g_w = a * (lw + 1);
                o.g_ww = a / w;
                o.g_x = ar * w * lw;
                o.g_xw = ar * (lw + 1);
                return o;
            }
            case Family::PowerSum: {
                auto add = [&](const PowerTerm& term) {
                    double c = term.coeff(r, t), cr = term.coeff.dr(r, t);
                    double e = term.exponent;
                    double we = std::pow(w, e);
                    o.g += c * we;
                    o.g_w += c * e * we / w;
                    o.g_ww += c * e * (e - 1) * we / (w * w);
                    o.g_x += cr * we;
                    o.g_xw += cr * e * we / w;
                };
                for (const auto& term : a_terms) add(term);
                for (const auto& term : b_terms) add(term);
                return o;
            }
            case Family::GammaLog: {
                double s = std::log(w);
                double G0 = (*Gamma)(s), G1 = Gamma->d1(s), G2 = Gamma->d2(s);
                double a = A(r, t), b = B(r, t), c = C(r, t);
                double wp = std::pow(w, p), wq = std::pow(w, q);
                o.g = a * G0 * wp + b * wq + c * w;
                o.g_w = a * wp / w * (p * G0 + G1) + b * q * wq / w + c;
                o.g_ww = a * wp / (w * w) * (p * (p - 1) * G0 + (2 * p - 1) * G1 + G2) +
                         b * q * (q - 1) * wq / (w * w);
                o.g_x = A.dr(r, t) * G0 * wp + B.dr(r, t) * wq + C.dr(r, t) * w;
                o.g_xw = A.dr(r, t) * wp / w * (p * G0 + G1) +
                         B.dr(r, t) * q * wq / w + C.dr(r, t);
                return o;
            }
            case Family::Lichnerowicz: {
                double a = A(r, t), b = B(r, t), c = C(r, t), lw = std::log(w);
                double wp = std::pow(w, p), wq = std::pow(w, q);
                o.g = a * wp + b * wq + c * w * lw;
                o.g_w = a * p * wp / w + b * q * wq / w + c * (lw + 1);
                o.g_ww = a * p * (p - 1) * wp / (w * w) +
                         b * q * (q - 1) * wq / (w * w) + c / w;
                o.g_x = A.dr(r, t) * wp + B.dr(r, t) * wq + C.dr(r, t) * w * lw;
                o.g_xw = A.dr(r, t) * p * wp / w + B.dr(r, t) * q * wq / w +
                         C.dr(r, t) * (lw + 1);
                return o;
            }
            case Family::SplitXY: {
                double s = std::log(w);
                double wr = std::pow(w, r_exp);
                double y0 = (*Y)(s), y1 = Y->d1(s), y2 = Y->d2(s);
                o.g = wr * y0;
                o.g_w = wr / w * (r_exp * y0 + y1);
                o.g_ww = wr / (w * w) *
                         (r_exp * (r_exp - 1) * y0 + (2 * r_exp - 1) * y1 + y2);
                if (X) {
                    o.g += (*X)(w);
                    o.g_w += X->d1(w);
                    o.g_ww += X->d2(w);
                }
                // optional power-sum part of the X component
                auto add = [&](const PowerTerm& term) {
                    double c = term.coeff(r, t), e = term.exponent;
                    double we = std::pow(w, e);
                    o.g += c * we;
                    o.g_w += c * e * we / w;
                    o.g_ww += c * e * (e - 1) * we / (w * w);
                };
                for (const auto& term : a_terms) add(term);
                for (const auto& term : b_terms) add(term);
                return o;
            }
            case Family::Custom: {
                std::vector<double> at{t, r, w};
                o.g = custom(at);
                o.g_w = custom_w(at);
                o.g_x = custom_r(at);
                o.g_ww = custom_ww(at);
                o.g_xw = custom_rw(at);
                return o;
            }
        }
        return o;
    }
};

/// Discrete route for Delta_phi G^x: freeze (t, w), tabulate the radial map
/// and apply the finite-volume Laplacian.
inline std::vector<double> delta_phi_G_frozen(const Nonlinearity& G,
                                              const ModelSpace& space, double t,
                                              double w, double dr, int nodes) {
    if (nodes < 4) throw GridTooCoarse("frozen-field Laplacian needs >= 4 nodes");
    std::vector<double> field(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
        field[static_cast<size_t>(i)] = G.eval(t, i * dr, w);
    return weighted_laplacian_radial(space, field, dr);
}

// ---------------------------------------------------------------------------
// The pointwise brackets whose cylinder suprema/infima form the estimate
// right-hand sides.

inline double positive_part(double x) { return x > 0 ? x : 0.0; }

/// [-alpha w G_ww + G_w - G/w]_+
inline double bracket_A(const GPartials& v, double alpha, double w) {
    return positive_part(-alpha * w * v.g_ww + v.g_w - v.g / w);
}
/// |alpha G_xw - G_x / w|
inline double bracket_B(const GPartials& v, double alpha, double w) {
    return std::fabs(alpha * v.g_xw - v.g_x / w);
}
/// [G_w - G/w]_+
inline double bracket_C(const GPartials& v, double w) {
    return positive_part(v.g_w - v.g / w);
}
/// G / w  (whose infimum enters the Harnack drift constant)
inline double ratio_E(const GPartials& v, double w) { return v.g / w; }

/// Souplet-Zhang bracket pair at one point; h = log(w/D) <= 0.
inline double sz_bracket_x(const GPartials& v, double w, double D) {
    double h = std::log(w / D);
    double om = 1.0 - h;
    return std::fabs(v.g_x) / (w * om * om);
}
inline double sz_bracket_w(const GPartials& v, double w, double D) {
    double h = std::log(w / D);
    double om = 1.0 - h;
    return (w * om * v.g_w + h * v.g) / (w * om * om);
}

/// Hamilton bracket pair at one point.
inline double hamilton_bracket_x(const GPartials& v, double w) {
    return std::fabs(v.g_x) / w;
}
inline double hamilton_bracket_w(const GPartials& v, double w, double alpha,
                                 double beta) {
    return (2 * w * v.g_w - (2.0 - (beta + 2.0) / alpha) * v.g) / w;
}

/// The five gamma-quantities over a sampled cylinder.
struct GammaQuantities {
    double gamma_A = 0.0;
    double gamma_B = 0.0;
    double gamma_C = 0.0;
    double gamma_D = 0.0;
    double gamma_E = 0.0;
    double alpha = 0.0;
};

struct CylinderSample {
    double t = 0.0; // theorem time
    double r = 0.0;
    double w = 0.0;
};

/// Souplet-Zhang sup pair over a sampled cylinder, each already raised to
/// its fractional power.
struct SupTerms {
    double term_x = 0.0;
    double term_w = 0.0;
};

inline SupTerms souplet_zhang_sup_terms(const Nonlinearity& G,
                                        const std::vector<CylinderSample>& samples,
                                        double D) {
    SupTerms out;
    double sup_x = 0.0, sup_w = 0.0;
    for (const auto& s : samples) {
        if (!(s.w > 0))
            throw NonPositiveSolution("solution not positive at r=" + std::to_string(s.r));
        if (s.w > D)
            throw BoundViolated("w = " + std::to_string(s.w) + " exceeds D = " +
                                std::to_string(D));
        GPartials v = G.eval_with_partials(s.t, s.r, s.w);
        sup_x = std::max(sup_x, sz_bracket_x(v, s.w, D));
        sup_w = std::max(sup_w, positive_part(sz_bracket_w(v, s.w, D)));
    }
    out.term_x = std::cbrt(sup_x);
    out.term_w = std::sqrt(sup_w);
    return out;
}

inline SupTerms hamilton_sup_terms(const Nonlinearity& G,
                                   const std::vector<CylinderSample>& samples,
                                   double alpha, double beta) {
    if (!(beta >= 0) || !(alpha > 1 + beta))
        throw ParameterOrder("hamilton terms need beta >= 0 and alpha > 1 + beta");
    SupTerms out;
    double sup_x = 0.0, sup_w = 0.0;
    for (const auto& s : samples) {
        if (!(s.w > 0))
            throw NonPositiveSolution("solution not positive at r=" + std::to_string(s.r));
        GPartials v = G.eval_with_partials(s.t, s.r, s.w);
        sup_x = std::max(sup_x, hamilton_bracket_x(v, s.w));
        sup_w = std::max(sup_w, positive_part(hamilton_bracket_w(v, s.w, alpha, beta)));
    }
    out.term_x = std::cbrt(sup_x);
    out.term_w = std::sqrt(sup_w);
    return out;
}

inline GammaQuantities gamma_from_samples(const Nonlinearity& G,
                                          const ModelSpace& space, double alpha,
                                          const std::vector<CylinderSample>& samples) {
    if (samples.empty())
        throw NonPositiveSolution("gamma quantities need a nonempty sample set");
    GammaQuantities q;
    q.alpha = alpha;
    q.gamma_E = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (!(s.w > 0))
            throw NonPositiveSolution("solution not positive at r=" +
                                      std::to_string(s.r));
        GPartials v = G.eval_with_partials(s.t, s.r, s.w);
        q.gamma_A = std::max(q.gamma_A, bracket_A(v, alpha, s.w));
        q.gamma_B = std::max(q.gamma_B, bracket_B(v, alpha, s.w));
        q.gamma_C = std::max(q.gamma_C, bracket_C(v, s.w));
        q.gamma_D = std::max(
            q.gamma_D, positive_part(-G.delta_phi_gx(space, s.t, s.r, s.w) / s.w));
        q.gamma_E = std::min(q.gamma_E, ratio_E(v, s.w));
    }
    return q;
}

} // namespace driftlab
