#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// Localisation profiles used by the estimates: a spatial bump with certified
// derivative bounds (constants c1, c2) and a tensor-product space-time bump
// with certified time-derivative constant c and radial constants c_a.

namespace smoothstep {

/// C^2 monotone quintic step: s(0)=0, s(1)=1, s'(0)=s'(1)=s''(0)=s''(1)=0.
inline double value(double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
inline double d1(double x) {
    if (x <= 0 || x >= 1) return 0.0;
    double y = x * (1 - x);
    return 30.0 * y * y;
}
inline double d2(double x) {
    if (x <= 0 || x >= 1) return 0.0;
    return 60.0 * x * (1 - x) * (1 - 2 * x);
}

} // namespace smoothstep

/// Non-increasing C^2 bump in the scaled variable s = r/R: identically 1 on
/// [0,1], identically 0 on [2,inf). The certified constants bound
/// -zeta'/sqrt(zeta) <= c1 and zeta'' >= -c2 on the support.
struct SpatialCutoff {
    double R = 1.0;
    double c1 = 0.0;
    double c2 = 0.0;
    std::function<double(double)> value; // of s
    std::function<double(double)> d1;
    std::function<double(double)> d2;

    double at_radius(double r) const { return value(r / R); }
    double dr(double r) const { return d1(r / R) / R; }
    double drr(double r) const { return d2(r / R) / (R * R); }
};

/// Tensor-product space-time bump eta(r,t) = sigma(2r/R) theta(t) with
/// plateau [0,R/2] x [tau,t0], support [0,R] x [t0-T,t0] and
/// eta(.,t0-T) = 0. sigma is the cubed step profile, which keeps
/// |d_r eta| <~ eta^a/R and |d_rr eta| <~ eta^a/R^2 bounded for a up to 7/9.
struct SpaceTimeCutoff {
    double R = 2.0;
    double T = 1.0;
    double t0 = 0.0;
    double tau = 0.0;
    double c = 0.0;                 // time clause constant
    std::map<double, double> c_a;   // radial clause constants per exponent a

    double sigma(double u) const { // u = 2r/R
        double b = smoothstep::value(2.0 - u);
        return b * b * b;
    }
    double sigma_d1(double u) const {
        double b = smoothstep::value(2.0 - u);
        return -3.0 * b * b * smoothstep::d1(2.0 - u);
    }
    double sigma_d2(double u) const {
        double b = smoothstep::value(2.0 - u);
        double db = -smoothstep::d1(2.0 - u);
        double ddb = smoothstep::d2(2.0 - u);
        return 6.0 * b * db * db + 3.0 * b * b * ddb;
    }
    double theta(double t) const {
        if (t >= tau) return t <= t0 ? 1.0 : 0.0;
        return smoothstep::value((t - (t0 - T)) / (tau - (t0 - T)));
    }
    double theta_d1(double t) const {
        if (t >= tau) return 0.0;
        double span = tau - (t0 - T);
        return smoothstep::d1((t - (t0 - T)) / span) / span;
    }

    double value(double r, double t) const { return sigma(2 * r / R) * theta(t); }
    double dr(double r, double t) const {
        return sigma_d1(2 * r / R) * (2.0 / R) * theta(t);
    }
    double drr(double r, double t) const {
        return sigma_d2(2 * r / R) * (4.0 / (R * R)) * theta(t);
    }
    double dt(double r, double t) const { return sigma(2 * r / R) * theta_d1(t); }
};

struct ClauseCheck {
    std::string name;
    bool ok = false;
    double max_violation = 0.0;
};

struct CutoffCertificate {
    std::vector<ClauseCheck> clauses;
    std::map<std::string, double> constants;
    int density = 0;

    bool valid() const {
        for (const auto& c : clauses)
            if (!c.ok) return false;
        return true;
    }
    double max_violation() const {
        double v = 0.0;
        for (const auto& c : clauses) v = std::max(v, c.max_violation);
        return v;
    }
};

namespace detail {

constexpr double kClauseTol = 1e-9;
constexpr double kConstantInflation = 1.05;

inline ClauseCheck clause(const std::string& name, double violation) {
    return {name, violation <= kClauseTol, violation};
}

} // namespace detail

inline SpatialCutoff build_spatial_cutoff(double R) {
    if (!(R > 0)) throw OutOfDomain("spatial cutoff needs R > 0");
    SpatialCutoff zeta;
    zeta.R = R;
    zeta.value = [](double s) { return smoothstep::value(2.0 - s); };
    zeta.d1 = [](double s) { return -smoothstep::d1(2.0 - s); };
    zeta.d2 = [](double s) { return smoothstep::d2(2.0 - s); };

    const int density = 20000;
    double worst_ratio = 0.0, worst_curv = 0.0;
    for (int i = 0; i <= density; ++i) {
        double s = 2.5 * i / density;
        double v = zeta.value(s);
        if (v > 0.0)
            worst_ratio = std::max(worst_ratio, -zeta.d1(s) / std::sqrt(v));
        worst_curv = std::max(worst_curv, -zeta.d2(s));
    }
    zeta.c1 = detail::kConstantInflation * worst_ratio;
    zeta.c2 = detail::kConstantInflation * worst_curv;
    return zeta;
}

inline SpaceTimeCutoff build_space_time_cutoff(double R, double T, double t0,
                                               double tau) {
    if (!(R >= 2.0)) throw OutOfDomain("space-time cutoff needs R >= 2");
    if (!(T > 0)) throw BadWindow("cutoff window height T must be positive");
    if (!(tau > t0 - T) || !(tau <= t0))
        throw BadWindow("tau must lie in (t0-T, t0]");
    SpaceTimeCutoff eta;
    eta.R = R;
    eta.T = T;
    eta.t0 = t0;
    eta.tau = tau;

    const int density = 20000;
    double worst_time = 0.0;
    double span = tau - (t0 - T);
    for (int i = 0; i <= density; ++i) {
        // worst-case over t at the radial plateau (sigma = 1); sigma < 1 only
        // shrinks |d_t eta|/sqrt(eta)
        double t = (t0 - T) + span * i / density;
        double th = eta.theta(t);
        if (th > 0.0)
            worst_time = std::max(worst_time,
                                  std::fabs(eta.theta_d1(t)) * span / std::sqrt(th));
    }
    eta.c = detail::kConstantInflation * worst_time;

    for (double a : {0.5, 0.75}) {
        double worst = 0.0;
        for (int i = 0; i <= density; ++i) {
            double u = 2.0 * i / density; // scaled radius in [0, 2]
            double s = eta.sigma(u);
            if (s <= 0.0) continue;
            double sa = std::pow(s, a);
            worst = std::max(worst, -eta.sigma_d1(u) * 2.0 / sa);
            worst = std::max(worst, std::fabs(eta.sigma_d2(u)) * 4.0 / sa);
        }
        eta.c_a[a] = detail::kConstantInflation * worst;
    }
    return eta;
}

inline CutoffCertificate certify(const SpatialCutoff& zeta, int density = 10000) {
    if (density < 1000) throw OutOfDomain("certification density must be >= 1e3");
    CutoffCertificate cert;
    cert.density = density;
    cert.constants = {{"c1", zeta.c1}, {"c2", zeta.c2}};

    double plateau = 0, support = 0, range = 0, monotone = 0, ratio = 0, curv = 0;
    for (int i = 0; i <= density; ++i) {
        double s = 3.0 * i / density;
        double v = zeta.value(s);
        if (s <= 1.0) plateau = std::max(plateau, std::fabs(v - 1.0));
        if (s >= 2.0) support = std::max(support, std::fabs(v));
        range = std::max({range, -v, v - 1.0});
        monotone = std::max(monotone, zeta.d1(s));
        if (v > 0.0)
            ratio = std::max(ratio, -zeta.d1(s) / std::sqrt(v) - zeta.c1);
        curv = std::max(curv, -zeta.d2(s) - zeta.c2);
    }
    cert.clauses = {
        detail::clause("plateau_le_1", plateau),
        detail::clause("support_ge_2", support),
        detail::clause("range_0_1", range),
        detail::clause("non_increasing", monotone),
        detail::clause("slope_ratio_c1", ratio),
        detail::clause("second_derivative_c2", curv),
    };
    return cert;
}

inline CutoffCertificate certify(const SpaceTimeCutoff& eta, int density_r = 10000,
                                 int density_t = 1000) {
    if (density_r < 1000) throw OutOfDomain("certification density must be >= 1e3");
    CutoffCertificate cert;
    cert.density = density_r;
    cert.constants["c"] = eta.c;
    for (const auto& [a, ca] : eta.c_a)
        cert.constants["c_a[" + std::to_string(a) + "]"] = ca;

    double support = 0, range = 0, plateau = 0, plateau_slope = 0;
    double time_bound = 0, bottom = 0, radial_sign = 0;
    std::map<double, double> radial_bound;
    for (const auto& [a, ca] : eta.c_a) radial_bound[a] = 0.0;
    double span = eta.tau - (eta.t0 - eta.T);

    for (int j = 0; j <= density_t; ++j) {
        double t = (eta.t0 - eta.T) + eta.T * j / density_t;
        for (int i = 0; i <= density_r; ++i) {
            double r = 1.5 * eta.R * i / density_r;
            double v = eta.value(r, t);
            range = std::max({range, -v, v - 1.0});
            if (r >= eta.R) support = std::max(support, std::fabs(v));
            if (r <= eta.R / 2) {
                if (t >= eta.tau) plateau = std::max(plateau, std::fabs(v - 1.0));
                plateau_slope = std::max(plateau_slope, std::fabs(eta.dr(r, t)));
            }
            if (v > 0.0)
                time_bound = std::max(
                    time_bound, std::fabs(eta.dt(r, t)) * span / std::sqrt(v) - eta.c);
            radial_sign = std::max(radial_sign, eta.dr(r, t));
            if (v > 0.0) {
                for (const auto& [a, ca] : eta.c_a) {
                    double va = std::pow(v, a);
                    double lower = -eta.dr(r, t) * eta.R / va - ca;
                    double second =
                        std::fabs(eta.drr(r, t)) * eta.R * eta.R / va - ca;
                    radial_bound[a] = std::max({radial_bound[a], lower, second});
                }
            }
        }
    }
    for (int i = 0; i <= density_r; ++i) {
        double r = 1.5 * eta.R * i / density_r;
        bottom = std::max(bottom, std::fabs(eta.value(r, eta.t0 - eta.T)));
    }

    cert.clauses = {
        detail::clause("support_and_range", std::max(support, range)),
        detail::clause("plateau", std::max(plateau, plateau_slope)),
        detail::clause("time_derivative", std::max(time_bound, bottom)),
    };
    for (const auto& [a, viol] : radial_bound)
        cert.clauses.push_back(detail::clause(
            "radial_derivatives_a=" + std::to_string(a), std::max(viol, radial_sign)));
    return cert;
}

} // namespace driftlab
