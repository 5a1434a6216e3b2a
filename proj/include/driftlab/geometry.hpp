#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/profile.hpp"

namespace driftlab {

constexpr double kInfiniteDim = std::numeric_limits<double>::infinity();

struct RadialInterval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Rotationally symmetric smooth metric measure space: the metric is
/// dr^2 + psi(r)^2 g_{S^{n-1}} on [0, R_max] with radial potential phi, so
/// every curvature quantity reduces to a radial and a tangential track.
class ModelSpace {
public:
    ModelSpace(int n, double m, RadialProfile warp, RadialProfile potential,
               double r_max)
        : n_(n), m_(m), warp_(std::move(warp)), potential_(std::move(potential)),
          r_max_(r_max) {}

    int n() const { return n_; }
    double m() const { return m_; }
    bool infinite_m() const { return std::isinf(m_); }
    double r_max() const { return r_max_; }
    const RadialProfile& warp() const { return warp_; }
    const RadialProfile& potential() const { return potential_; }

    double psi(double r) const { return warp_(r); }
    double psi1(double r) const { return warp_.d1(r); }
    double psi2(double r) const { return warp_.d2(r); }
    double phi(double r) const { return potential_(r); }
    double phi1(double r) const { return potential_.d1(r); }
    double phi2(double r) const { return potential_.d2(r); }

    /// Weighted measure density  e^{-phi} psi^{n-1}.
    double measure_density(double r) const {
        return std::exp(-phi(r)) * std::pow(psi(r), n_ - 1);
    }

    /// Drift coefficient of the radial Witten Laplacian, equal to
    /// Delta_phi r = (n-1) psi'/psi - phi'  for r > 0.
    double drift(double r) const {
        return (n_ - 1) * psi1(r) / psi(r) - phi1(r);
    }

private:
    int n_;
    double m_;
    RadialProfile warp_;
    RadialProfile potential_;
    double r_max_;
};

struct CurvatureSample {
    double r = 0.0;
    double ric_radial = 0.0;
    double ric_tangential = 0.0;
    double ric_phi_radial = 0.0;
    double ric_phi_tangential = 0.0;
    double ric_phi_m_radial = 0.0;
    double ric_phi_m_tangential = 0.0;
};

enum class CurvatureFlavor { RicPhi, RicPhiM };

inline ModelSpace make_model_space(int n, double m, const RadialProfile& warp,
                                   const RadialProfile& potential, double r_max) {
    if (n < 2)
        throw DimensionConvention("dimension n must be >= 2, got " + std::to_string(n));
    if (r_max <= 0)
        throw OutOfDomain("domain radius must be positive");
    if (!(std::isinf(m) || m >= n - 1e-12))
        throw DimensionConvention("synthetic dimension m must satisfy m >= n or m = inf");

    const double tol = 1e-10;
    if (std::fabs(warp(0.0)) > tol || std::fabs(warp.d1(0.0) - 1.0) > tol)
        throw InvalidWarp("warp must satisfy psi(0)=0 and psi'(0)=1");
    const int samples = 4096;
    for (int i = 1; i <= samples; ++i) {
        double r = r_max * i / samples;
        if (!(warp(r) > 0.0))
            throw InvalidWarp("psi(r) <= 0 at r = " + std::to_string(r));
    }

    bool m_equals_n = !std::isinf(m) && std::fabs(m - n) < 1e-12;
    if (m_equals_n && !potential.is_constant()) {
        for (int i = 0; i <= samples; ++i) {
            double r = r_max * i / samples;
            if (std::fabs(potential.d1(r)) > 1e-12)
                throw DimensionConvention(
                    "m = n requires a constant potential (phi' != 0 at r = " +
                    std::to_string(r) + ")");
        }
    }
    return ModelSpace(n, m, warp, potential, r_max);
}

inline ModelSpace make_model_space(int n, double m, const std::string& warp_spec,
                                   const std::string& potential_spec, double r_max) {
    return make_model_space(n, m, make_warp_profile(warp_spec),
                            make_potential_profile(potential_spec), r_max);
}

/// Ricci curvature eigenvalues of the warped product at radius r, together
/// with their Bakry-Emery and m-Bakry-Emery counterparts:
///   Ric(d_r, d_r)      = -(n-1) psi''/psi
///   Ric(e, e)          = -psi''/psi + (n-2)(1 - psi'^2)/psi^2
///   Hess(phi)          = diag(phi'', phi' psi'/psi, ...)
///   grad phi ⊗ grad phi has only the radial entry phi'^2.
inline CurvatureSample ricci_eigenvalues(const ModelSpace& space, double r) {
    if (!(r > 0.0) || r > space.r_max())
        throw OutOfDomain("curvature sample radius outside (0, R_max]");
    CurvatureSample s;
    s.r = r;
    const int n = space.n();
    const double psi = space.psi(r), dpsi = space.psi1(r), ddpsi = space.psi2(r);
    s.ric_radial = -(n - 1) * ddpsi / psi;
    s.ric_tangential = -ddpsi / psi + (n - 2) * (1.0 - dpsi * dpsi) / (psi * psi);
    const double dphi = space.phi1(r), ddphi = space.phi2(r);
    s.ric_phi_radial = s.ric_radial + ddphi;
    s.ric_phi_tangential = s.ric_tangential + dphi * dpsi / psi;
    double correction = 0.0;
    if (!space.infinite_m() && space.m() - n > 1e-12)
        correction = dphi * dphi / (space.m() - n);
    s.ric_phi_m_radial = s.ric_phi_radial - correction;
    s.ric_phi_m_tangential = s.ric_phi_tangential;
    return s;
}

namespace detail {

/// Extremum of f over [lo, hi] by uniform sampling with a refinement check:
/// the sample count doubles until the extremum moves by less than rel_tol.
template <class F>
double sampled_extremum(F&& f, double lo, double hi, bool want_min,
                        int initial = 512, double rel_tol = 1e-6,
                        int* resolution_out = nullptr) {
    auto scan = [&](int count) {
        double best = f(lo);
        for (int i = 1; i <= count; ++i) {
            double v = f(lo + (hi - lo) * i / count);
            best = want_min ? std::min(best, v) : std::max(best, v);
        }
        return best;
    };
    int count = initial;
    double value = scan(count);
    for (int round = 0; round < 12; ++round) {
        count *= 2;
        double refined = scan(count);
        double change = std::fabs(refined - value) / std::max(1.0, std::fabs(refined));
        value = refined;
        if (change < rel_tol) break;
    }
    if (resolution_out) *resolution_out = count;
    return value;
}

} // namespace detail

/// Signed pointwise minimum over the region of the smallest eigenvalue of
/// the requested curvature tensor. RicPhiM needs finite m.
inline double min_ricci_eigenvalue(const ModelSpace& space, CurvatureFlavor flavor,
                                   RadialInterval region, int* resolution = nullptr) {
    if (region.lo < 0 || region.hi > space.r_max() + 1e-12 || region.hi <= region.lo)
        throw OutOfDomain("curvature region outside [0, R_max]");
    if (flavor == CurvatureFlavor::RicPhiM && space.infinite_m())
        throw NeedFiniteM("m-Bakry-Emery bound requires finite m");
    double lo = std::max(region.lo, std::min(1e-4, region.hi / 1024.0));
    auto min_eig = [&](double r) {
        CurvatureSample c = ricci_eigenvalues(space, r);
        if (flavor == CurvatureFlavor::RicPhi)
            return std::min(c.ric_phi_radial, c.ric_phi_tangential);
        return std::min(c.ric_phi_m_radial, c.ric_phi_m_tangential);
    };
    return detail::sampled_extremum(min_eig, lo, region.hi, /*want_min=*/true, 512,
                                    1e-6, resolution);
}

struct CurvatureBound {
    double k = 0.0;     // smallest k >= 0 with the normalized lower bound
    int resolution = 0; // samples used by the refinement scan
};

/// Smallest k >= 0 such that the tensor of the requested flavor satisfies
///   Ric_phi   >= -(n-1) k g    or    Ric_phi^m >= -(m-1) k g
/// over the region.
inline CurvatureBound curvature_lower_bound(const ModelSpace& space,
                                            CurvatureFlavor flavor,
                                            RadialInterval region) {
    CurvatureBound out;
    double min_eig = min_ricci_eigenvalue(space, flavor, region, &out.resolution);
    double denom = (flavor == CurvatureFlavor::RicPhi) ? (space.n() - 1)
                                                       : (space.m() - 1);
    out.k = std::max(0.0, -min_eig / denom);
    return out;
}

/// gamma_{Delta_phi}: the drifted Laplacian of the radial coordinate on the
/// unit sphere around the pole. Radial symmetry collapses the max to the
/// single value (n-1) psi'(1)/psi(1) - phi'(1).
inline double gamma_delta_phi(const ModelSpace& space) {
    if (space.r_max() < 1.0)
        throw OutOfDomain("gamma_{Delta_phi} needs R_max >= 1");
    return space.drift(1.0);
}

/// Minimum over the region of  (m-1) sqrt(k) coth(sqrt(k) r) - Delta_phi r,
/// the slack in the generalized Laplacian comparison bound; k = 0 uses the
/// degenerate bound (m-1)/r. Certifies the curvature hypothesis first.
inline double laplacian_comparison_margin(const ModelSpace& space, double k, double m,
                                          RadialInterval region) {
    if (!(m >= space.n()) || std::isinf(m))
        throw HypothesisUnverified("comparison check needs finite m >= n");
    if (std::fabs(m - space.n()) < 1e-12 && !space.potential().is_constant())
        throw HypothesisUnverified(
            "m = n comparison requires a constant potential");
    double certified;
    try {
        ModelSpace probe(space.n(), m, space.warp(), space.potential(), space.r_max());
        certified = curvature_lower_bound(probe, CurvatureFlavor::RicPhiM, region).k;
    } catch (const Error& e) {
        throw HypothesisUnverified(std::string("curvature bound not certifiable: ") +
                                   e.what());
    }
    if (certified > k + 1e-9)
        throw HypothesisUnverified("requested k=" + std::to_string(k) +
                                   " below certified bound k=" +
                                   std::to_string(certified));
    double lo = std::max(region.lo, std::min(1e-4, region.hi / 1024.0));
    double sk = std::sqrt(std::max(k, 0.0));
    auto margin = [&](double r) {
        double bound = (k <= 0.0) ? (m - 1) / r
                                  : (m - 1) * sk * std::cosh(sk * r) / std::sinh(sk * r);
        return bound - space.drift(r);
    };
    return detail::sampled_extremum(margin, lo, region.hi, /*want_min=*/true);
}

} // namespace driftlab
