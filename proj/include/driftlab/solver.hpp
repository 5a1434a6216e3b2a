#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/geometry.hpp"
#include "driftlab/grid.hpp"
#include "driftlab/nonlinearity.hpp"

namespace driftlab {

struct Grid {
    double dr = 0.02;
    double r_max = 8.0;      // solve-domain radius (verification + pad)
    int stored_levels = 21;  // snapshots kept, including the initial slice
    double cfl = 0.4;        // safety factor sigma in (0, 0.5]
};

enum class CylinderFlavor { Q, H };

/// Space-time verification window in theorem time.
struct Cylinder {
    double r_lo = 0.0;
    double r_hi = 1.0;
    double t_lo = 0.0;
    double t_hi = 1.0;
    CylinderFlavor flavor = CylinderFlavor::H;
};

/// A positive solution of  dw/dt = Delta_phi w + G(t, x, w)  on the radial
/// grid: stored snapshots of w and of the semi-discrete right-hand side
/// (which equals dw/dt exactly along the method-of-lines trajectory).
/// Theorem time = simulation time + t_offset.
class SolutionField {
public:
    std::shared_ptr<const ModelSpace> space;
    std::shared_ptr<const Nonlinearity> G;
    std::shared_ptr<const RadialOperator> op;
    double dr = 0.0;
    int nodes = 0;
    double t_offset = 0.0;
    std::vector<double> times; // simulation times of the stored levels
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> rhs;
    std::optional<double> bound_D;
    double floor_observed = 0.0;

    int levels() const { return static_cast<int>(times.size()); }
    double radius(int i) const { return i * dr; }
    double theorem_time(int level) const { return times[static_cast<size_t>(level)] + t_offset; }
    double dt_store() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }

    double sup_w() const {
        double m = 0.0;
        for (const auto& level : w)
            for (double v : level) m = std::max(m, v);
        return m;
    }

    /// Attaches the upper bound D (or the default slightly-inflated sup) and
    /// validates 0 < w <= D so that h = log(w/D) <= 0.
    void attach_bound(std::optional<double> D = std::nullopt) {
        double value = D.value_or((1.0 + 1e-9) * sup_w());
        for (int l = 0; l < levels(); ++l)
            for (int i = 0; i < nodes; ++i)
                if (w[static_cast<size_t>(l)][static_cast<size_t>(i)] > value)
                    throw BoundViolated(
                        "w exceeds D at r=" + std::to_string(radius(i)) +
                        ", t=" + std::to_string(theorem_time(l)));
        bound_D = value;
    }

    std::vector<double> log_w(int level) const {
        std::vector<double> out(w[static_cast<size_t>(level)].size());
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = std::log(w[static_cast<size_t>(level)][i]);
        return out;
    }

    std::vector<double> log_w_over_D(int level) const {
        if (!bound_D) throw BoundViolated("no bound D attached");
        std::vector<double> out(w[static_cast<size_t>(level)].size());
        for (size_t i = 0; i < out.size(); ++i)
            out[i] = std::log(w[static_cast<size_t>(level)][i] / *bound_D);
        return out;
    }

    /// dw/dt via centered differences of the stored levels (one-sided at the
    /// window ends); independent of the stored right-hand side.
    double dt_w_fd(int level, int node) const {
        int L = levels() - 1;
        double dt = dt_store();
        auto value = [&](int l) { return w[static_cast<size_t>(l)][static_cast<size_t>(node)]; };
        if (level == 0) return (value(1) - value(0)) / dt;
        if (level == L) return (value(L) - value(L - 1)) / dt;
        return (value(level + 1) - value(level - 1)) / (2 * dt);
    }

    std::vector<double> grad_w(int level, int order = 4) const {
        const auto& wl = w[static_cast<size_t>(level)];
        std::vector<double> out(wl.size());
        for (int i = 0; i < nodes; ++i)
            out[static_cast<size_t>(i)] = stencil::d1(wl, i, dr, order);
        return out;
    }

    std::vector<double> delphi_w(int level) const {
        return op->apply(w[static_cast<size_t>(level)]);
    }

    /// H = |grad h|^2 / (1-h)^2 with h = log(w/D); needs an attached bound.
    std::vector<double> harnack_H_field(int level) const {
        auto h = log_w_over_D(level);
        std::vector<double> out(h.size());
        for (int i = 0; i < nodes; ++i) {
            double h1 = stencil::d1(h, i, dr, 4);
            double om = 1.0 - h[static_cast<size_t>(i)];
            out[static_cast<size_t>(i)] = h1 * h1 / (om * om);
        }
        return out;
    }

    /// F = f^beta |grad f|^2 with f = w^(1/alpha).
    std::vector<double> harnack_F_beta_field(int level, double alpha,
                                             double beta) const {
        std::vector<double> f(static_cast<size_t>(nodes));
        for (int i = 0; i < nodes; ++i)
            f[static_cast<size_t>(i)] =
                std::pow(w[static_cast<size_t>(level)][static_cast<size_t>(i)],
                         1.0 / alpha);
        std::vector<double> out(f.size());
        for (int i = 0; i < nodes; ++i) {
            double f1 = stencil::d1(f, i, dr, 4);
            out[static_cast<size_t>(i)] =
                std::pow(f[static_cast<size_t>(i)], beta) * f1 * f1;
        }
        return out;
    }

    /// F = t [ |grad f|^2 - alpha d_t f + alpha e^{-f} G ] with f = log w,
    /// evaluated through the spatial form t [ (1-alpha)|grad f|^2
    /// - alpha Delta_phi w / w + alpha |grad f|^2 ] ... collapsed to
    /// t [ |grad w|^2/w^2 - alpha Delta_phi w / w ].
    std::vector<double> harnack_liyau_field(int level, double alpha) const {
        double t = theorem_time(level);
        const auto& wl = w[static_cast<size_t>(level)];
        auto lap = delphi_w(level);
        std::vector<double> out(wl.size());
        for (int i = 0; i < nodes; ++i) {
            double wv = wl[static_cast<size_t>(i)];
            double g1 = stencil::d1(wl, i, dr, 4);
            out[static_cast<size_t>(i)] =
                t * (g1 * g1 / (wv * wv) - alpha * lap[static_cast<size_t>(i)] / wv);
        }
        return out;
    }

    /// Grid indices of the stored levels whose theorem time lies in
    /// [t_lo, t_hi]; optionally excluding the initial slice.
    std::vector<int> levels_in(const Cylinder& cyl, bool exclude_initial = true) const {
        std::vector<int> out;
        for (int l = 0; l < levels(); ++l) {
            double t = theorem_time(l);
            if (t < cyl.t_lo - 1e-12 || t > cyl.t_hi + 1e-12) continue;
            if (exclude_initial && l == 0 && t_offset == 0.0) continue;
            out.push_back(l);
        }
        return out;
    }

    std::vector<int> nodes_in(const Cylinder& cyl) const {
        std::vector<int> out;
        for (int i = 0; i < nodes; ++i) {
            double r = radius(i);
            if (r >= cyl.r_lo - 1e-12 && r <= cyl.r_hi + 1e-12) out.push_back(i);
        }
        if (static_cast<int>(out.size()) < 8)
            throw GridTooCoarse("fewer than 8 radial nodes in the verification ball");
        return out;
    }

    std::vector<CylinderSample> samples_in(const Cylinder& cyl,
                                           bool exclude_initial = true) const {
        std::vector<CylinderSample> out;
        for (int l : levels_in(cyl, exclude_initial))
            for (int i : nodes_in(cyl))
                out.push_back({theorem_time(l), radius(i),
                               w[static_cast<size_t>(l)][static_cast<size_t>(i)]});
        return out;
    }
};

struct SolverOptions {
    double t_offset = 0.0;
    double positivity_floor = 1e-12;
    double blowup_ceiling = 1e12;
    long max_steps = 20'000'000;
};

namespace detail {

constexpr double kRK4RealAxisLimit = 2.785;

class MethodOfLines {
public:
    MethodOfLines(std::shared_ptr<const ModelSpace> space,
                  std::shared_ptr<const Nonlinearity> G, const Grid& grid,
                  const SolverOptions& opts)
        : space_(std::move(space)), G_(std::move(G)), grid_(grid), opts_(opts) {
        nodes_ = static_cast<int>(std::lround(grid.r_max / grid.dr)) + 1;
        op_ = std::make_shared<RadialOperator>(*space_, grid.dr, nodes_);
        op_bound_ = op_->gershgorin();
        zero_G_ = (G_->family == Family::Zero);
        if (!(grid.cfl > 0) || grid.cfl > 0.5)
            throw CFLFailure("cfl safety factor must lie in (0, 0.5]");
    }

    int nodes() const { return nodes_; }
    const std::shared_ptr<const RadialOperator>& op() const { return op_; }

    void rhs(double t, const std::vector<double>& u, std::vector<double>& out) const {
        op_->apply(u, out);
        if (zero_G_) return;
        double tt = t + opts_.t_offset;
        for (int i = 0; i < nodes_; ++i) {
            double w = u[static_cast<size_t>(i)];
            // classify bad stage states before the reaction term sees them
            if (!(w > opts_.positivity_floor))
                throw PositivityLost("w <= positivity floor at r=" +
                                     std::to_string(i * grid_.dr) + ", t=" +
                                     std::to_string(t));
            if (w > opts_.blowup_ceiling)
                throw BlowUp("w > blow-up ceiling at r=" + std::to_string(i * grid_.dr) +
                             ", t=" + std::to_string(t));
            out[static_cast<size_t>(i)] += G_->eval_raw(tt, i * grid_.dr, w);
        }
    }

    /// Stability-bounded step size: RK4 real-axis limit over the Gershgorin
    /// bound of the diffusion matrix plus the current reaction Lipschitz
    /// estimate, scaled by the safety factor (sigma = 0.5 sits at 90% of
    /// the theoretical limit).
    double stable_dt(double t, const std::vector<double>& u) const {
        double reaction = 0.0;
        if (!zero_G_) {
            double tt = t + opts_.t_offset;
            for (int i = 0; i < nodes_; ++i) {
                auto v = G_->partials_raw(tt, i * grid_.dr, u[static_cast<size_t>(i)]);
                reaction = std::max(reaction, std::fabs(v.g_w));
            }
        }
        double limit = kRK4RealAxisLimit / (op_bound_ + reaction);
        return 1.8 * grid_.cfl * limit;
    }

    void check_bounds(const std::vector<double>& u, double t) const {
        for (int i = 0; i < nodes_; ++i) {
            double v = u[static_cast<size_t>(i)];
            if (!(v > opts_.positivity_floor))
                throw PositivityLost("w <= " + std::to_string(opts_.positivity_floor) +
                                     " at r=" + std::to_string(i * grid_.dr) +
                                     ", t=" + std::to_string(t));
            if (v > opts_.blowup_ceiling)
                throw BlowUp("w > " + std::to_string(opts_.blowup_ceiling) + " at r=" +
                             std::to_string(i * grid_.dr) + ", t=" + std::to_string(t));
        }
    }

    /// One RK4 step of size dt from (t, u) in place.
    void step(double t, double dt, std::vector<double>& u) {
        k1_.resize(u.size());
        k2_.resize(u.size());
        k3_.resize(u.size());
        k4_.resize(u.size());
        tmp_.resize(u.size());
        rhs(t, u, k1_);
        for (size_t i = 0; i < u.size(); ++i) tmp_[i] = u[i] + 0.5 * dt * k1_[i];
        rhs(t + 0.5 * dt, tmp_, k2_);
        for (size_t i = 0; i < u.size(); ++i) tmp_[i] = u[i] + 0.5 * dt * k2_[i];
        rhs(t + 0.5 * dt, tmp_, k3_);
        for (size_t i = 0; i < u.size(); ++i) tmp_[i] = u[i] + dt * k3_[i];
        rhs(t + dt, tmp_, k4_);
        for (size_t i = 0; i < u.size(); ++i)
            u[i] += dt / 6.0 * (k1_[i] + 2 * k2_[i] + 2 * k3_[i] + k4_[i]);
    }

private:
    std::shared_ptr<const ModelSpace> space_;
    std::shared_ptr<const Nonlinearity> G_;
    Grid grid_;
    SolverOptions opts_;
    int nodes_ = 0;
    std::shared_ptr<const RadialOperator> op_;
    double op_bound_ = 0.0;
    bool zero_G_ = false;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

} // namespace detail

/// Method-of-lines solve of the drifting reaction-diffusion equation up to
/// horizon T, storing `grid.stored_levels` uniformly spaced snapshots.
/// Positivity is enforced by abort, never by clamping.
inline SolutionField solve_parabolic(std::shared_ptr<const ModelSpace> space,
                                     std::shared_ptr<const Nonlinearity> G,
                                     const std::vector<double>& initial,
                                     const Grid& grid, double T,
                                     const SolverOptions& opts = {}) {
    detail::MethodOfLines mol(space, G, grid, opts);
    if (static_cast<int>(initial.size()) != mol.nodes())
        throw GridTooCoarse("initial data has " + std::to_string(initial.size()) +
                            " nodes, grid expects " + std::to_string(mol.nodes()));
    if (grid.stored_levels < 2) throw GridTooCoarse("need at least 2 stored levels");

    SolutionField sol;
    sol.space = space;
    sol.G = G;
    sol.op = mol.op();
    sol.dr = grid.dr;
    sol.nodes = mol.nodes();
    sol.t_offset = opts.t_offset;

    std::vector<double> u = initial;
    mol.check_bounds(u, 0.0);

    const int L = grid.stored_levels;
    const double dt_store = T / (L - 1);
    std::vector<double> rhs_buf;
    double floor_seen = std::numeric_limits<double>::infinity();

    auto store = [&](double t) {
        mol.rhs(t, u, rhs_buf);
        sol.times.push_back(t);
        sol.w.push_back(u);
        sol.rhs.push_back(rhs_buf);
        for (double v : u) floor_seen = std::min(floor_seen, v);
    };
    store(0.0);

    double t = 0.0;
    long steps = 0;
    int stagnant = 0;
    for (int level = 1; level < L; ++level) {
        double target = level * dt_store;
        while (t < target - 1e-13 * T) {
            double dt = std::min(mol.stable_dt(t, u), target - t);
            // dt below time resolution: keep stepping briefly (a blowing-up
            // state still reaches the ceiling), then report collapse
            if (!(t + dt > t) && ++stagnant > 1000)
                throw CFLFailure("step size collapsed at t=" + std::to_string(t));
            if (t + dt > t) stagnant = 0;
            if (++steps > opts.max_steps)
                throw CFLFailure("step budget exhausted at t=" + std::to_string(t));
            mol.step(t, dt, u);
            t += dt;
            mol.check_bounds(u, t);
        }
        t = target;
        store(t);
    }
    sol.floor_observed = floor_seen;
    return sol;
}

struct EllipticOptions {
    double tol = 1e-8;          // stationarity tolerance on ||dw/dt||_inf
    double max_time = 200.0;    // relaxation horizon
    SolverOptions solver = {};
};

/// Stationary solve by parabolic relaxation: marches the evolution until
/// ||Delta_phi w + G(w)||_inf < tol. Unbounded growth (no positive bounded
/// stationary state) is reported as NoConvergence.
inline std::vector<double> solve_elliptic(std::shared_ptr<const ModelSpace> space,
                                          std::shared_ptr<const Nonlinearity> G,
                                          const std::vector<double>& guess,
                                          const Grid& grid,
                                          const EllipticOptions& opts = {}) {
    detail::MethodOfLines mol(space, G, grid, opts.solver);
    if (static_cast<int>(guess.size()) != mol.nodes())
        throw GridTooCoarse("guess has wrong node count");
    std::vector<double> u = guess, residual;
    mol.check_bounds(u, 0.0);
    double t = 0.0;
    long steps = 0;
    int since_check = 0;
    try {
        while (t < opts.max_time) {
            double dt = mol.stable_dt(t, u);
            if (!(t + dt > t) || ++steps > opts.solver.max_steps)
                throw NoConvergence("relaxation step budget exhausted at t=" +
                                    std::to_string(t));
            mol.step(t, dt, u);
            t += dt;
            mol.check_bounds(u, t);
            if (++since_check >= 16) {
                since_check = 0;
                mol.rhs(t, u, residual);
                double worst = 0.0;
                for (double v : residual) worst = std::max(worst, std::fabs(v));
                if (worst < opts.tol) return u;
            }
        }
    } catch (const BlowUp& e) {
        throw NoConvergence(std::string("relaxation blew up (no bounded positive "
                                        "stationary state reached): ") +
                            e.what());
    }
    mol.rhs(t, u, residual);
    double worst = 0.0;
    for (double v : residual) worst = std::max(worst, std::fabs(v));
    throw NoConvergence("relaxation budget exhausted; ||residual||_inf = " +
                        std::to_string(worst));
}

/// Closed-form Euclidean heat kernel (4 pi t)^{-n/2} exp(-r^2/(4t)).
inline double euclidean_heat_kernel(int n, double r, double t) {
    return std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(-r * r / (4.0 * t));
}

/// Nodal initial data for the kernel-at-age-t0 scenario, optionally lifted
/// by an additive floor (also an exact solution, by linearity).
inline std::vector<double> heat_kernel_initial(int n, double t0, const Grid& grid,
                                               double floor = 0.0) {
    int nodes = static_cast<int>(std::lround(grid.r_max / grid.dr)) + 1;
    std::vector<double> u(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
        u[static_cast<size_t>(i)] = euclidean_heat_kernel(n, i * grid.dr, t0) + floor;
    return u;
}

/// gamma-quantities over a stored cylinder of the solution.
inline GammaQuantities gamma_quantities(const Nonlinearity& G, const SolutionField& sol,
                                        const ModelSpace& space, const Cylinder& cyl,
                                        double alpha) {
    return gamma_from_samples(G, space, alpha, sol.samples_in(cyl));
}

} // namespace driftlab
