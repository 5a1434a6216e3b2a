#pragma once

#include <cmath>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/geometry.hpp"

namespace driftlab {

namespace detail {

// 5-point Gauss-Legendre on [a, b].
template <class F>
double gauss5(F&& f, double a, double b) {
    static const double xs[5] = {0.0, 0.5384693101056831, -0.5384693101056831,
                                 0.9061798459386640, -0.9061798459386640};
    static const double ws[5] = {0.5688888888888889, 0.4786286704993665,
                                 0.4786286704993665, 0.2369268850561891,
                                 0.2369268850561891};
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 5; ++i)
        acc += ws[i] * f(mid + half * xs[i]);
    return acc * half;
}

} // namespace detail

/// Uniform radial grid r_i = i dr, i = 0..N, with the finite-volume
/// discretization of the Witten Laplacian in divergence form
///   Delta_phi u = e^{phi} psi^{1-n} d/dr ( e^{-phi} psi^{n-1} du/dr ).
/// Fluxes use midpoint densities, cells use exact (quadrature) volumes; the
/// pole cell [0, dr/2] encodes the symmetric limit and the outer edge is a
/// zero-flux wall, so the discrete operator conserves the weighted mass
/// sum(V_i u_i) identically.
class RadialOperator {
public:
    RadialOperator(const ModelSpace& space, double dr, int nodes)
        : dr_(dr), n_nodes_(nodes) {
        if (nodes < 4)
            throw GridTooCoarse("radial grid needs at least 4 nodes");
        auto J = [&space](double r) { return space.measure_density(r); };
        j_half_.resize(static_cast<size_t>(nodes) - 1);
        for (int i = 0; i + 1 < nodes; ++i)
            j_half_[static_cast<size_t>(i)] = J((i + 0.5) * dr);
        volume_.resize(static_cast<size_t>(nodes));
        volume_[0] = detail::gauss5(J, 0.0, 0.5 * dr);
        for (int i = 1; i + 1 < nodes; ++i)
            volume_[static_cast<size_t>(i)] =
                detail::gauss5(J, (i - 0.5) * dr, (i + 0.5) * dr);
        volume_[static_cast<size_t>(nodes) - 1] =
            detail::gauss5(J, (nodes - 1.5) * dr, (nodes - 1) * dr);
    }

    int nodes() const { return n_nodes_; }
    double dr() const { return dr_; }
    double radius(int i) const { return i * dr_; }
    const std::vector<double>& volumes() const { return volume_; }

    void apply(const std::vector<double>& u, std::vector<double>& out) const {
        const int N = n_nodes_ - 1;
        out.resize(u.size());
        double flux_prev = 0.0; // zero flux through the pole
        for (int i = 0; i <= N; ++i) {
            double flux_next =
                (i < N) ? j_half_[static_cast<size_t>(i)] *
                              (u[static_cast<size_t>(i) + 1] - u[static_cast<size_t>(i)]) / dr_
                        : 0.0; // zero-flux outer wall
            out[static_cast<size_t>(i)] =
                (flux_next - flux_prev) / volume_[static_cast<size_t>(i)];
            flux_prev = flux_next;
        }
    }

    std::vector<double> apply(const std::vector<double>& u) const {
        std::vector<double> out;
        apply(u, out);
        return out;
    }

    /// Weighted mass sum(V_i u_i), conserved by `apply` up to roundoff.
    double mass(const std::vector<double>& u) const {
        double acc = 0.0;
        for (size_t i = 0; i < u.size(); ++i)
            acc += volume_[i] * u[i];
        return acc;
    }

    /// Gershgorin bound on the spectral radius of the (negated) operator.
    double gershgorin() const {
        const int N = n_nodes_ - 1;
        double worst = 0.0;
        for (int i = 0; i <= N; ++i) {
            double a = (i < N) ? j_half_[static_cast<size_t>(i)] / (dr_ * volume_[static_cast<size_t>(i)]) : 0.0;
            double b = (i > 0) ? j_half_[static_cast<size_t>(i) - 1] / (dr_ * volume_[static_cast<size_t>(i)]) : 0.0;
            worst = std::max(worst, 2.0 * (a + b));
        }
        return worst;
    }

private:
    double dr_;
    int n_nodes_;
    std::vector<double> j_half_;
    std::vector<double> volume_;
};

/// Second-order discrete Delta_phi of nodal values (geometry operation).
inline std::vector<double> weighted_laplacian_radial(const ModelSpace& space,
                                                     const std::vector<double>& u,
                                                     double dr) {
    RadialOperator op(space, dr, static_cast<int>(u.size()));
    return op.apply(u);
}

// ---------------------------------------------------------------------------
// Nodal finite differences for fields even in r (ghost values across the
// pole come from reflection). `order` is 2 or 4; the outermost nodes fall
// back to one-sided second order and are excluded from residual reports.

namespace stencil {

inline double at(const std::vector<double>& u, int i) {
    // even reflection across r = 0
    if (i < 0) i = -i;
    int N = static_cast<int>(u.size()) - 1;
    if (i > N) i = 2 * N - i; // reflection at the outer wall (rarely used)
    return u[static_cast<size_t>(i)];
}

inline double d1(const std::vector<double>& u, int i, double dr, int order = 2) {
    int N = static_cast<int>(u.size()) - 1;
    if (i == 0) return 0.0;
    // pole reflection keeps the 4th-order stencil valid down to i = 1
    if (order >= 4 && i + 2 <= N)
        return (-at(u, i + 2) + 8 * at(u, i + 1) - 8 * at(u, i - 1) + at(u, i - 2)) /
               (12 * dr);
    if (i == N)
        return (3 * u[static_cast<size_t>(N)] - 4 * u[static_cast<size_t>(N) - 1] +
                u[static_cast<size_t>(N) - 2]) /
               (2 * dr);
    return (at(u, i + 1) - at(u, i - 1)) / (2 * dr);
}

inline double d2(const std::vector<double>& u, int i, double dr, int order = 2) {
    int N = static_cast<int>(u.size()) - 1;
    if (order >= 4 && i + 2 <= N)
        return (-at(u, i + 2) + 16 * at(u, i + 1) - 30 * at(u, i) + 16 * at(u, i - 1) -
                at(u, i - 2)) /
               (12 * dr * dr);
    if (i == N)
        return (2 * u[static_cast<size_t>(N)] - 5 * u[static_cast<size_t>(N) - 1] +
                4 * u[static_cast<size_t>(N) - 2] - u[static_cast<size_t>(N) - 3]) /
               (dr * dr);
    return (at(u, i + 1) - 2 * at(u, i) + at(u, i - 1)) / (dr * dr);
}

} // namespace stencil

/// Non-divergence evaluation Delta_phi u = u'' + drift(r) u' on nodal data,
/// used by the residual checks (the drift uses exact profile derivatives).
/// At the pole the symmetric limit Delta_phi u(0) = n u''(0) applies.
inline double laplacian_nodal(const ModelSpace& space, const std::vector<double>& u,
                              int i, double dr, int order = 2) {
    if (i == 0)
        return space.n() * stencil::d2(u, 0, dr, order);
    double r = i * dr;
    return stencil::d2(u, i, dr, order) + space.drift(r) * stencil::d1(u, i, dr, order);
}

} // namespace driftlab
