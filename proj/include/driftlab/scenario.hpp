#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "driftlab/cutoff.hpp"
#include "driftlab/estimates.hpp"
#include "driftlab/identities.hpp"
#include "driftlab/liouville.hpp"
#include "driftlab/report.hpp"
#include "driftlab/solver.hpp"
#include "driftlab/version.hpp"

namespace driftlab {

// Batch scenario runner: one JSON config describes the model space, the
// reaction term, the solve, and a list of verification jobs. Jobs never
// abort the batch; failures are recorded per job and surfaced through the
// exit code. Reruns of an unchanged scenario are byte-identical except for
// the wall-time field.

using json = nlohmann::json;

// -- JSON -> domain objects -------------------------------------------------

inline ModelSpace space_from_json(const json& j) {
    int n = j.at("n").get<int>();
    double m = kInfiniteDim;
    if (j.contains("m")) {
        if (j["m"].is_string()) {
            std::string s = j["m"].get<std::string>();
            if (s != "inf" && s != "infinity")
                throw ConfigError("space.m must be a number or \"inf\"");
        } else {
            m = j["m"].get<double>();
        }
    }
    return make_model_space(n, m, j.at("warp").get<std::string>(),
                            j.at("potential").get<std::string>(),
                            j.at("R_max").get<double>());
}

namespace detail {

inline Coefficient coefficient_from_json(const json& spec) {
    if (spec.contains("value")) return Coefficient::constant(spec["value"].get<double>());
    if (spec.contains("profile"))
        return Coefficient::profile(spec["profile"].get<std::string>());
    throw ConfigError("coefficient needs a \"value\" or a \"profile\"");
}

inline Coefficient find_coefficient(const json& j, const std::string& name,
                                    double fallback) {
    if (j.contains("coefficients"))
        for (const auto& entry : j["coefficients"])
            if (entry.at("name").get<std::string>() == name)
                return coefficient_from_json(entry);
    return Coefficient::constant(fallback);
}

inline std::vector<PowerTerm> power_terms(const json& j, const std::string& prefix,
                                          const std::string& exponent_key) {
    std::vector<PowerTerm> terms;
    if (!j.contains("exponents") || !j["exponents"].contains(exponent_key))
        return terms;
    const auto& exps = j["exponents"][exponent_key];
    for (size_t i = 0; i < exps.size(); ++i) {
        std::string name = prefix + std::to_string(i + 1);
        terms.push_back({find_coefficient(j, name, 0.0), exps[i].get<double>()});
    }
    return terms;
}

inline double expo(const json& j, const std::string& key, double fallback) {
    if (j.contains("exponents") && j["exponents"].contains(key))
        return j["exponents"][key].get<double>();
    return fallback;
}

} // namespace detail

/// Schema: {"family", "coefficients": [{name, value|profile}], "exponents":
/// {p: [...], q: [...], r, s}, "Y", "X", "Gamma", "w_window": [lo, hi]}.
inline Nonlinearity nonlinearity_from_json(const json& j) {
    std::string family = j.value("family", "zero");
    Nonlinearity g;
    if (family == "zero") {
        g = Nonlinearity::zero();
    } else if (family == "log_linear") {
        g = Nonlinearity::log_linear(detail::find_coefficient(j, "A", 1.0));
    } else if (family == "power_sum") {
        g = Nonlinearity::power_sum(detail::power_terms(j, "A", "p"),
                                    detail::power_terms(j, "B", "q"));
    } else if (family == "gamma_log") {
        g = Nonlinearity::gamma_log(
            detail::find_coefficient(j, "A", 1.0), detail::expo(j, "p", 1.0),
            ScalarFn(j.at("Gamma").get<std::string>(), "s"),
            detail::find_coefficient(j, "B", 0.0), detail::expo(j, "q", 0.0),
            detail::find_coefficient(j, "C", 0.0));
    } else if (family == "lichnerowicz") {
        g = Nonlinearity::lichnerowicz(
            detail::find_coefficient(j, "A", 0.0), detail::expo(j, "p", 1.0),
            detail::find_coefficient(j, "B", 0.0), detail::expo(j, "q", 0.0),
            detail::find_coefficient(j, "C", 0.0));
    } else if (family == "split_xy") {
        std::optional<ScalarFn> X;
        if (j.contains("X")) X = ScalarFn(j["X"].get<std::string>(), "w");
        g = Nonlinearity::split_xy(X, detail::expo(j, "r", 0.0),
                                   ScalarFn(j.at("Y").get<std::string>(), "s"));
        g.a_terms = detail::power_terms(j, "A", "p");
        g.b_terms = detail::power_terms(j, "B", "q");
    } else if (family == "custom") {
        g = Nonlinearity::make_custom(j.at("expression").get<std::string>());
    } else {
        throw ConfigError("unknown nonlinearity family \"" + family + "\"");
    }
    if (j.contains("w_window")) {
        g.w_min = j["w_window"][0].get<double>();
        g.w_max = j["w_window"][1].get<double>();
    }
    if (j.contains("singular_points"))
        for (const auto& v : j["singular_points"]) g.singular_points.push_back(v.get<double>());
    g.exclusion_radius = j.value("exclusion_radius", 1e-3);
    return g;
}

/// Initial data: an expression in r, or "heat_kernel(t0)" /
/// "heat_kernel(t0, floor)" for the Euclidean kernel at age t0.
inline std::vector<double> initial_from_spec(const std::string& spec, int n,
                                             const Grid& grid) {
    const std::string kKernel = "heat_kernel(";
    if (spec.rfind(kKernel, 0) == 0 && spec.back() == ')') {
        std::string inner = spec.substr(kKernel.size(), spec.size() - kKernel.size() - 1);
        double t0 = 0.25, floor = 0.0;
        auto comma = inner.find(',');
        try {
            if (comma == std::string::npos) {
                t0 = std::stod(inner);
            } else {
                t0 = std::stod(inner.substr(0, comma));
                floor = std::stod(inner.substr(comma + 1));
            }
        } catch (const std::exception&) {
            throw ConfigError("bad heat_kernel(...) arguments: " + spec);
        }
        return heat_kernel_initial(n, t0, grid, floor);
    }
    auto expr = parse_expression(spec, {"r"});
    int nodes = static_cast<int>(std::lround(grid.r_max / grid.dr)) + 1;
    std::vector<double> u(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i) u[static_cast<size_t>(i)] = expr(i * grid.dr);
    return u;
}

// -- scenario model ----------------------------------------------------------

struct VerificationJob {
    std::string id;
    std::string check;
    json spec;
    bool allow_skip = false;
};

struct Scenario {
    json raw;
    std::shared_ptr<const ModelSpace> space;
    std::shared_ptr<const Nonlinearity> G;
    Grid grid;          // solve grid: r_max includes the pad
    double verify_radius = 0.0;
    double T = 1.0;
    SolverOptions solver;
    std::string initial_spec;
    bool auto_D = true;
    double D_value = 0.0;
    std::vector<VerificationJob> jobs;
};

inline Scenario scenario_from_json(const json& j) {
    Scenario sc;
    sc.raw = j;
    try {
        sc.space = std::make_shared<const ModelSpace>(space_from_json(j.at("space")));
        sc.G = std::make_shared<const Nonlinearity>(
            j.contains("nonlinearity") ? nonlinearity_from_json(j["nonlinearity"])
                                       : Nonlinearity::zero());
        const auto& gj = j.at("grid");
        sc.grid.dr = gj.at("dr").get<double>();
        sc.verify_radius = gj.at("R_max").get<double>();
        double pad = gj.value("pad", 0.0);
        sc.grid.r_max = sc.verify_radius + pad;
        const auto& tj = j.at("time");
        sc.T = tj.at("T").get<double>();
        sc.grid.cfl = tj.value("cfl", 0.4);
        sc.grid.stored_levels = tj.value("stored_levels", 33);
        sc.solver.t_offset = tj.value("t_offset", 0.0);
        sc.solver.positivity_floor = j.value("w_floor", 1e-12);
        if (pad < 4.0 * std::sqrt(sc.T) && !j.value("allow_thin_pad", false))
            throw ConfigError("grid.pad must be at least 4 sqrt(T) = " +
                              std::to_string(4.0 * std::sqrt(sc.T)));
        if (sc.grid.r_max > sc.space->r_max() + 1e-12)
            throw ConfigError("solve radius exceeds the model-space domain");
        sc.initial_spec = j.value("initial", "1");
        if (j.contains("D") && !j["D"].is_string()) {
            sc.auto_D = false;
            sc.D_value = j["D"].get<double>();
        }
        if (j.contains("verifications"))
            for (const auto& vj : j["verifications"]) {
                VerificationJob job;
                job.id = vj.at("id").get<std::string>();
                job.check = vj.at("check").get<std::string>();
                job.spec = vj;
                job.allow_skip = vj.value("allow_skip", false);
                sc.jobs.push_back(job);
            }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        // expression/validation problems surface as configuration errors,
        // keeping the original code and offset in the message
        throw ConfigError(e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario JSON: ") + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

// -- job execution -----------------------------------------------------------

struct JobResult {
    std::string id;
    std::string check;
    std::string status = "error"; // pass | fail | skipped | error
    std::string message;
    json values = json::object();
    std::vector<std::string> artifacts;
};

struct RunManifest {
    std::string tool_version = kVersion;
    std::string scenario_hash;
    std::vector<JobResult> jobs;
    std::vector<std::string> artifacts;
    long wall_ms = 0;

    bool all_passed() const {
        for (const auto& r : jobs)
            if (r.status == "fail" || r.status == "error") return false;
        return true;
    }

    json to_json() const {
        json out;
        out["tool_version"] = tool_version;
        out["scenario_hash"] = scenario_hash;
        out["wall_ms"] = wall_ms;
        out["jobs"] = json::array();
        for (const auto& r : jobs) {
            json rj;
            rj["id"] = r.id;
            rj["check"] = r.check;
            rj["status"] = r.status;
            if (!r.message.empty()) rj["message"] = r.message;
            rj["values"] = r.values;
            rj["artifacts"] = r.artifacts;
            out["jobs"].push_back(rj);
        }
        out["artifacts"] = artifacts;
        return out;
    }
};

struct RunOptions {
    std::string out_dir = "out";
    int workers = 2;
    bool strict = false; // strict tolerance profile: margins must be >= 0 exactly
};

namespace detail {

inline Cylinder cylinder_from_json(const json& j, double r_hi_default,
                                   double t_lo_default, double t_hi_default) {
    Cylinder cyl{0.0, r_hi_default, t_lo_default, t_hi_default, CylinderFlavor::H};
    if (j.contains("cylinder")) {
        const auto& c = j["cylinder"];
        cyl.r_lo = c.value("r_lo", cyl.r_lo);
        cyl.r_hi = c.value("r_hi", cyl.r_hi);
        cyl.t_lo = c.value("t_lo", cyl.t_lo);
        cyl.t_hi = c.value("t_hi", cyl.t_hi);
    }
    return cyl;
}

inline json estimate_report_to_json(const EstimateReport& rep) {
    json out;
    out["kind"] = estimate_kind_name(rep.kind);
    out["params"] = {{"alpha", rep.params.alpha}, {"beta", rep.params.beta},
                     {"eps", rep.params.eps},     {"k", rep.params.k},
                     {"m", rep.params.m},         {"D", rep.params.D},
                     {"R", rep.params.R},         {"T", rep.params.T},
                     {"t0", rep.params.t0}};
    if (rep.params.C) out["params"]["C"] = *rep.params.C;
    out["lhs_max"] = rep.lhs_max;
    out["rhs_terms"] = rep.rhs_terms;
    out["margin"] = rep.margin;
    if (rep.empirical_C) out["empirical_C"] = *rep.empirical_C;
    out["argmin"] = {{"r", rep.argmin_r}, {"t", rep.argmin_t}};
    return out;
}

struct JobContext {
    const Scenario& sc;
    const SolutionField& sol;
    double D;
    double margin_tol; // pass when margin >= min_margin - margin_tol
    std::string out_dir;
};

inline void write_points_artifact(JobResult& res, const std::string& out_dir,
                                  const std::vector<EstimatePoint>& points) {
    if (points.empty()) return;
    CsvTable table;
    table.header = {"r", "t", "lhs", "rhs"};
    for (const auto& p : points) table.rows.push_back({p.r, p.t, p.lhs, p.rhs});
    std::string name = res.id + "_points.csv";
    write_file(out_dir + "/" + name, table.to_string());
    res.artifacts.push_back(name);
}

inline void finish_margin_job(JobResult& res, const json& spec, double margin,
                              double tol) {
    double min_margin = spec.value("min_margin", 0.0);
    res.values["margin"] = margin;
    res.status = margin >= min_margin - tol ? "pass" : "fail";
    if (res.status == "fail")
        res.message = "margin " + format_number(margin) + " below " +
                      format_number(min_margin);
}

inline void finish_residual_job(JobResult& res, const json& spec, double residual) {
    double bound = spec.value("max_residual", std::numeric_limits<double>::infinity());
    res.values["max_residual"] = residual;
    res.status = residual <= bound ? "pass" : "fail";
    if (res.status == "fail")
        res.message = "residual " + format_number(residual) + " above " +
                      format_number(bound);
}

inline JobResult run_single_job(const JobContext& ctx, const VerificationJob& job) {
    JobResult res;
    res.id = job.id;
    res.check = job.check;
    const json& spec = job.spec;
    const Scenario& sc = ctx.sc;
    const SolutionField& sol = ctx.sol;
    const ModelSpace& space = *sc.space;
    const Nonlinearity& G = *sc.G;
    double t_end = sol.theorem_time(sol.levels() - 1);
    double t_begin = sol.theorem_time(0);

    if (job.check == "souplet_zhang" || job.check == "hamilton") {
        double R = spec.value("R", sc.verify_radius / 2);
        double t0 = spec.value("t0", t_end);
        double T = spec.value("T", t_end - t_begin);
        bool global = spec.value("global", false);
        std::optional<double> C;
        if (spec.contains("C")) C = spec["C"].get<double>();
        EstimateReport rep;
        std::vector<EstimatePoint> points;
        if (job.check == "souplet_zhang") {
            double D = spec.value("D", ctx.D);
            rep = souplet_zhang_check(sol, space, G, D, R, t0, T, C, global, &points);
        } else {
            rep = hamilton_check(sol, space, G, spec.value("alpha", 2.0),
                                 spec.value("beta", 0.0), R, t0, T, C, global, &points);
        }
        res.values = estimate_report_to_json(rep);
        write_points_artifact(res, ctx.out_dir, points);
        if (C)
            finish_margin_job(res, spec, rep.margin, ctx.margin_tol);
        else {
            res.status = "pass";
            if (spec.contains("max_empirical_C") &&
                *rep.empirical_C > spec["max_empirical_C"].get<double>()) {
                res.status = "fail";
                res.message = "empirical constant above the pinned bound";
            }
        }
        return res;
    }

    if (job.check == "li_yau") {
        std::vector<EstimatePoint> points;
        auto rep = li_yau_check(sol, space, G, spec.value("alpha", 2.0),
                                spec.value("eps", 0.5),
                                spec.value("R", sc.verify_radius / 2),
                                spec.value("T", t_end), spec.value("global", false),
                                &points);
        res.values = estimate_report_to_json(rep);
        write_points_artifact(res, ctx.out_dir, points);
        finish_margin_job(res, spec, rep.margin, ctx.margin_tol);
        return res;
    }

    if (job.check == "parabolic_harnack") {
        std::vector<std::pair<SpaceTimePoint, SpaceTimePoint>> pairs;
        if (spec.contains("pairs")) {
            for (const auto& p : spec["pairs"])
                pairs.push_back({{{p[0].get<double>(), 0}, p[1].get<double>()},
                                 {{p[2].get<double>(), 0}, p[3].get<double>()}});
        }
        if (spec.contains("random_pairs")) {
            const auto& rp = spec["random_pairs"];
            std::mt19937 rng(rp.value("seed", 7u));
            double r_hi = rp.value("r_hi", sc.verify_radius / 2);
            int count = rp.value("count", 50);
            std::uniform_int_distribution<int> node(
                0, static_cast<int>(r_hi / sol.dr));
            std::uniform_int_distribution<int> level(1, sol.levels() - 1);
            while (static_cast<int>(pairs.size()) < count) {
                int l1 = level(rng), l2 = level(rng);
                if (l1 == l2 || sol.theorem_time(std::min(l1, l2)) <= 0) continue;
                if (l1 > l2) std::swap(l1, l2);
                pairs.push_back({{{node(rng) * sol.dr, 0}, sol.theorem_time(l1)},
                                 {{node(rng) * sol.dr, 0}, sol.theorem_time(l2)}});
            }
        }
        auto rep = parabolic_harnack_check(
            sol, space, G, spec.value("alpha", 1.1), pairs, spec.value("eps", 0.5),
            spec.value("R", sc.verify_radius / 2), spec.value("T", t_end),
            spec.value("global", false));
        res.values = estimate_report_to_json(rep);
        res.values["pair_count"] = pairs.size();
        finish_margin_job(res, spec, rep.margin, ctx.margin_tol);
        return res;
    }

    if (job.check == "elliptic_harnack") {
        std::vector<std::pair<RayPoint, RayPoint>> pairs;
        for (const auto& p : spec.at("pairs"))
            pairs.push_back({{p[0].get<double>(), 0}, {p[1].get<double>(), 0}});
        double C = spec.value("C", 0.0);
        auto rep = elliptic_harnack_check(
            sol, space, G, spec.value("D", ctx.D),
            spec.value("R", sc.verify_radius / 2), spec.value("t0", t_end),
            spec.value("T", t_end - t_begin), spec.value("t", t_end), pairs, C);
        res.values = estimate_report_to_json(rep);
        finish_margin_job(res, spec, rep.margin, ctx.margin_tol);
        return res;
    }

    if (job.check == "elliptic_global") {
        EllipticOptions opts;
        opts.tol = spec.value("relax_tol", 1e-9);
        opts.max_time = spec.value("max_time", 100.0);
        auto w = solve_elliptic(sc.space, sc.G,
                                initial_from_spec(spec.value("initial", sc.initial_spec),
                                                  space.n(), sc.grid),
                                sc.grid, opts);
        auto rep = elliptic_global_check(w, space, G, spec.value("alpha", 2.0),
                                         spec.value("eps", 0.5), sc.grid.dr,
                                         spec.value("stationarity_tol", 1e-6));
        res.values = estimate_report_to_json(rep);
        finish_margin_job(res, spec, rep.margin, ctx.margin_tol);
        return res;
    }

    if (job.check == "h_evolution" || job.check == "H_evolution" ||
        job.check == "F_beta" || job.check == "liyau_evolution" ||
        job.check == "chain_rule") {
        Cylinder cyl = cylinder_from_json(spec, sc.verify_radius / 2,
                                          t_begin, t_end);
        double residual = 0.0;
        if (job.check == "h_evolution") residual = h_evolution_max_residual(sol, cyl);
        if (job.check == "H_evolution") residual = H_evolution_max_residual(sol, cyl);
        if (job.check == "F_beta")
            residual = F_beta_evolution_max_residual(sol, spec.value("alpha", 2.0),
                                                     spec.value("beta", 0.0), cyl);
        if (job.check == "liyau_evolution") {
            auto out = liyau_F_evolution_residual(
                sol, spec.value("alpha", 2.0), spec.value("m", space.m()), cyl);
            residual = out.max_residual;
            res.values["min_slack"] = out.min_slack;
        }
        if (job.check == "chain_rule")
            residual = delta_phi_G_identity_max_residual(sol, G, cyl);
        finish_residual_job(res, spec, residual);
        return res;
    }

    if (job.check == "bochner") {
        auto path = spec.value("path", "analytic") == std::string("analytic")
                        ? DerivPath::Analytic
                        : DerivPath::Discrete;
        auto rep = bochner_residual(space, RadialProfile(spec.at("u").get<std::string>()),
                                    path, spec.value("r_hi", sc.verify_radius));
        res.values["levels"] = json::array();
        for (const auto& lvl : rep.levels)
            res.values["levels"].push_back(
                {{"dr", lvl.dr}, {"max_residual", lvl.max_residual}});
        res.values["order"] = rep.order;
        res.values["path"] = rep.deriv_path;
        double worst = 0.0;
        for (const auto& lvl : rep.levels) worst = std::max(worst, lvl.max_residual);
        if (spec.contains("min_order") && rep.order < spec["min_order"].get<double>()) {
            res.status = "fail";
            res.message = "convergence order " + format_number(rep.order);
            return res;
        }
        finish_residual_job(res, spec, path == DerivPath::Analytic
                                           ? worst
                                           : rep.levels.back().max_residual);
        return res;
    }

    if (job.check == "cd_condition") {
        RadialInterval region{spec.value("r_lo", 0.0),
                              spec.value("r_hi", sc.verify_radius)};
        double m = spec.contains("m") && spec["m"].is_string() ? kInfiniteDim
                                                               : spec.value("m", space.m());
        double k = spec.value("k", 0.0);
        double margin = cd_condition_check(
            space, RadialProfile(spec.at("u").get<std::string>()), k, m, region);
        finish_margin_job(res, spec, margin, spec.value("tol", 1e-8));
        return res;
    }

    if (job.check == "exp_laplacian") {
        auto rep = exp_laplacian_identity(
            space, RadialProfile(spec.at("f").get<std::string>()),
            spec.value("r_hi", sc.verify_radius));
        res.values["order"] = rep.order;
        if (rep.order < spec.value("min_order", 1.8)) {
            res.status = "fail";
            res.message = "convergence order " + format_number(rep.order);
        } else {
            res.status = "pass";
        }
        return res;
    }

    if (job.check == "quadratic_lemma") {
        auto sweep = quadratic_lemma_check(spec.value("samples", 100000),
                                           spec.value("seed", 20240601u));
        res.values["samples"] = sweep.samples;
        res.values["violations"] = sweep.violations;
        res.values["worst_gap"] = sweep.worst_gap;
        res.status = sweep.violations == 0 ? "pass" : "fail";
        return res;
    }

    if (job.check == "cutoff_spatial" || job.check == "cutoff_space_time") {
        int density = spec.value("density", 10000);
        CutoffCertificate cert;
        if (job.check == "cutoff_spatial") {
            auto zeta = build_spatial_cutoff(spec.value("R", 1.0));
            cert = certify(zeta, density);
        } else {
            auto eta = build_space_time_cutoff(
                spec.value("R", 4.0), spec.value("T", 1.0), spec.value("t0", 0.0),
                spec.value("tau", -0.5));
            cert = certify(eta, density, spec.value("density_t", 1000));
        }
        res.values["constants"] = cert.constants;
        res.values["max_violation"] = cert.max_violation();
        res.values["density"] = cert.density;
        json flags = json::object();
        for (const auto& clause : cert.clauses) flags[clause.name] = clause.ok;
        res.values["flags"] = flags;
        res.status = cert.valid() ? "pass" : "fail";
        return res;
    }

    if (job.check == "gamma_quantities") {
        Nonlinearity local = spec.contains("nonlinearity")
                                 ? nonlinearity_from_json(spec["nonlinearity"])
                                 : G;
        Cylinder cyl = cylinder_from_json(spec, sc.verify_radius, t_begin, t_end);
        auto gam = gamma_quantities(local, sol, space, cyl, spec.value("alpha", 2.0));
        res.values = {{"gamma_A", gam.gamma_A}, {"gamma_B", gam.gamma_B},
                      {"gamma_C", gam.gamma_C}, {"gamma_D", gam.gamma_D},
                      {"gamma_E", gam.gamma_E}, {"alpha", gam.alpha}};
        res.status = "pass";
        if (spec.contains("expect")) {
            double tol = spec.value("expect_tol", 0.0);
            for (const auto& [key, want] : spec["expect"].items()) {
                double got = res.values.at(key).get<double>();
                if (std::fabs(got - want.get<double>()) > tol) {
                    res.status = "fail";
                    res.message = key + " = " + format_number(got) + ", expected " +
                                  format_number(want.get<double>());
                }
            }
        }
        return res;
    }

    if (job.check == "predicate") {
        PredicateParams params;
        params.alpha = spec.value("alpha", 2.0);
        params.beta = spec.value("beta", 0.0);
        if (spec.contains("gamma")) params.gamma = spec["gamma"].get<double>();
        if (spec.contains("D")) params.D = spec["D"].get<double>();
        // predicates may probe a different reaction term than the solve
        Nonlinearity local = spec.contains("nonlinearity")
                                 ? nonlinearity_from_json(spec["nonlinearity"])
                                 : G;
        double lo = spec.contains("window") ? spec["window"][0].get<double>()
                                            : local.w_min;
        double hi = spec.contains("window") ? spec["window"][1].get<double>()
                                            : local.w_max;
        auto rep = liouville_predicate(local, spec.at("predicate").get<std::string>(),
                                       lo, hi, params);
        res.values["holds"] = rep.holds;
        res.values["stable"] = rep.stable;
        res.values["note"] = rep.note;
        res.values["samples"] = rep.samples;
        res.values["window"] = {rep.window_lo, rep.window_hi};
        if (rep.witness_w) res.values["witness_w"] = *rep.witness_w;
        bool expect = spec.value("expect", true);
        res.status = rep.holds == expect ? "pass" : "fail";
        if (res.status == "fail")
            res.message = "predicate " + std::string(rep.holds ? "holds" : "fails") +
                          ", expected the opposite";
        return res;
    }

    if (job.check == "constancy_demo") {
        PredicateParams params;
        params.alpha = spec.value("alpha", 2.0);
        params.beta = spec.value("beta", 0.0);
        EllipticOptions opts;
        opts.tol = spec.value("relax_tol", 1e-10);
        opts.max_time = spec.value("max_time", 100.0);
        CurvatureFlavor flavor = spec.value("flavor", "ric_phi") == std::string("ric_phi")
                                     ? CurvatureFlavor::RicPhi
                                     : CurvatureFlavor::RicPhiM;
        auto initial = initial_from_spec(spec.value("initial", sc.initial_spec),
                                         space.n(), sc.grid);
        auto local_G = spec.contains("nonlinearity")
                           ? std::make_shared<const Nonlinearity>(
                                 nonlinearity_from_json(spec["nonlinearity"]))
                           : sc.G;
        auto demo = liouville_demo(sc.space, local_G,
                                   spec.at("predicate").get<std::string>(), params,
                                   flavor, initial, sc.grid, opts);
        res.values["verdict"] = demo.verdict;
        res.values["final_grad_sup"] = demo.final_grad_sup;
        res.values["final_sup_w"] = demo.final_sup_w;
        res.values["note"] = demo.note;
        std::string expect = spec.value("expect_verdict", "consistent");
        res.status = demo.verdict == expect ? "pass" : "fail";
        return res;
    }

    throw ConfigError("unknown check \"" + job.check + "\" in job " + job.id);
}

} // namespace detail

/// Executes a scenario: solve, then all verification jobs (parallel up to
/// `workers`, deterministic output order), then the dependent calibration
/// jobs. Returns the manifest; artifacts land in opts.out_dir.
inline RunManifest run_scenario_json(const json& config, const RunOptions& opts) {
    auto t_start = std::chrono::steady_clock::now();
    Scenario sc = scenario_from_json(config);
    RunManifest manifest;
    manifest.scenario_hash = "fnv1a:" + std::to_string(fnv1a_hash(config.dump()));

    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);

    // a failed main solve aborts the whole scenario (exit code 3 at the CLI)
    SolutionField sol = solve_parabolic(
        sc.space, sc.G, initial_from_spec(sc.initial_spec, sc.space->n(), sc.grid),
        sc.grid, sc.T, sc.solver);
    double D = sc.auto_D ? (1.0 + 1e-9) * sol.sup_w() : sc.D_value;
    try {
        sol.attach_bound(D);
    } catch (const BoundViolated&) {
        // leave the bound unattached; jobs depending on it will error
    }

    // solver artifacts: solution table + metadata
    {
        CsvTable table;
        table.header = {"r", "t", "w"};
        for (int l = 0; l < sol.levels(); ++l)
            for (int i = 0; i < sol.nodes; ++i)
                table.rows.push_back({sol.radius(i), sol.theorem_time(l),
                                      sol.w[static_cast<size_t>(l)][static_cast<size_t>(i)]});
        write_file(opts.out_dir + "/solution.csv", table.to_string());
        manifest.artifacts.push_back("solution.csv");
        json meta;
        meta["space"] = sc.raw.value("space", json::object());
        meta["nonlinearity"] = sc.raw.value("nonlinearity", json::object());
        meta["grid"] = {{"dr", sol.dr}, {"nodes", sol.nodes}};
        meta["time"] = {{"T", sc.T},
                        {"t_offset", sc.solver.t_offset},
                        {"stored_levels", sol.levels()}};
        meta["D"] = D;
        meta["floor_observed"] = sol.floor_observed;
        write_file(opts.out_dir + "/metadata.json", meta.dump(2) + "\n");
        manifest.artifacts.push_back("metadata.json");
    }

    detail::JobContext ctx{sc, sol, D, opts.strict ? 0.0 : 1e-9, opts.out_dir};

    // phase 1: independent jobs; phase 2: calibration-dependent jobs
    std::vector<const VerificationJob*> phase1, phase2;
    for (const auto& job : sc.jobs)
        (job.check == "calibrate" || job.spec.contains("calibrate_from") ? phase2
                                                                         : phase1)
            .push_back(&job);

    std::vector<JobResult> results1(phase1.size());
    {
        std::atomic<size_t> next{0};
        auto work = [&] {
            for (;;) {
                size_t idx = next.fetch_add(1);
                if (idx >= phase1.size()) return;
                const VerificationJob& job = *phase1[idx];
                try {
                    results1[idx] = detail::run_single_job(ctx, job);
                } catch (const Error& e) {
                    JobResult res;
                    res.id = job.id;
                    res.check = job.check;
                    res.status = job.allow_skip ? "skipped" : "error";
                    res.message = e.what();
                    results1[idx] = res;
                }
            }
        };
        int workers = std::max(1, std::min<int>(opts.workers,
                                                static_cast<int>(phase1.size())));
        std::vector<std::thread> pool;
        for (int i = 1; i < workers; ++i) pool.emplace_back(work);
        work();
        for (auto& th : pool) th.join();
    }
    for (auto& res : results1) manifest.jobs.push_back(std::move(res));

    auto find_result = [&](const std::string& id) -> const JobResult* {
        for (const auto& r : manifest.jobs)
            if (r.id == id) return &r;
        return nullptr;
    };

    for (const VerificationJob* jobp : phase2) {
        const VerificationJob& job = *jobp;
        JobResult res;
        res.id = job.id;
        res.check = job.check;
        try {
            if (job.check == "calibrate") {
                std::vector<double> constants;
                for (const auto& ref : job.spec.at("from")) {
                    const JobResult* dep = find_result(ref.get<std::string>());
                    if (!dep || !dep->values.contains("empirical_C"))
                        throw MissingJob("calibration source " +
                                         ref.get<std::string>() + " missing");
                    constants.push_back(dep->values["empirical_C"].get<double>());
                }
                if (constants.size() < 2)
                    throw InsufficientData("calibration needs two sources");
                double lo = constants[0], hi = constants[0];
                for (double c : constants) {
                    lo = std::min(lo, c);
                    hi = std::max(hi, c);
                }
                res.values["C_min"] = hi;
                res.values["stability"] = (hi - lo) / hi;
                double max_stability = job.spec.value("max_stability", 0.2);
                res.status = (hi - lo) / hi <= max_stability ? "pass" : "fail";
            } else {
                // resolve the calibrated constant, then run as usual
                VerificationJob resolved = job;
                const auto& ref = job.spec.at("calibrate_from");
                const JobResult* dep = find_result(ref.get<std::string>());
                if (!dep || !dep->values.contains("empirical_C"))
                    throw MissingJob("calibration source missing for job " + job.id);
                resolved.spec["C"] = dep->values["empirical_C"].get<double>();
                res = detail::run_single_job(ctx, resolved);
            }
        } catch (const Error& e) {
            res.status = job.allow_skip ? "skipped" : "error";
            res.message = e.what();
        }
        manifest.jobs.push_back(std::move(res));
    }

    auto t_stop = std::chrono::steady_clock::now();
    manifest.wall_ms = static_cast<long>(
        std::chrono::duration_cast<std::chrono::milliseconds>(t_stop - t_start).count());
    write_file(opts.out_dir + "/manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

inline RunManifest run_scenario(const std::string& path, const RunOptions& opts) {
    json config;
    try {
        config = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario JSON: ") + e.what());
    }
    return run_scenario_json(config, opts);
}

/// Renders SVG figures from a finished run: per selected job a margin curve
/// over time and an LHS/RHS radial profile, read back from the solution
/// table. Selection entries must name jobs present in the manifest.
inline std::vector<std::string> emit_plots(const std::string& out_dir,
                                           const std::vector<std::string>& selection) {
    json manifest;
    try {
        manifest = json::parse(read_file(out_dir + "/manifest.json"));
    } catch (const json::exception& e) {
        throw MissingJob(std::string("manifest unreadable: ") + e.what());
    }
    std::vector<std::string> written;
    for (const std::string& id : selection) {
        const json* found = nullptr;
        for (const auto& rj : manifest["jobs"])
            if (rj["id"] == id) found = &rj;
        if (!found) throw MissingJob("no job named \"" + id + "\" in the manifest");
        bool has_points = false;
        for (const auto& art : (*found)["artifacts"])
            if (art.get<std::string>() == id + "_points.csv") has_points = true;
        if (!has_points)
            throw MissingJob("job \"" + id + "\" produced no point table to plot");

        // read the (r, t, lhs, rhs) table back
        std::string bytes = read_file(out_dir + "/" + id + "_points.csv");
        std::vector<std::array<double, 4>> rows;
        size_t pos = bytes.find('\n'); // skip header
        while (pos != std::string::npos && pos + 1 < bytes.size()) {
            size_t end = bytes.find('\n', pos + 1);
            std::string line = bytes.substr(pos + 1, end - pos - 1);
            pos = end;
            if (line.empty()) continue;
            std::array<double, 4> row{};
            size_t field = 0, start = 0;
            for (size_t c = 0; c <= line.size() && field < 4; ++c) {
                if (c == line.size() || line[c] == ',') {
                    row[field++] = std::strtod(line.c_str() + start, nullptr);
                    start = c + 1;
                }
            }
            rows.push_back(row);
        }

        // margin vs time: min over r of rhs - lhs per stored time
        std::map<double, double> margin_by_t;
        for (const auto& row : rows) {
            double margin = row[3] - row[2];
            auto it = margin_by_t.find(row[1]);
            if (it == margin_by_t.end() || margin < it->second)
                margin_by_t[row[1]] = margin;
        }
        LineChart margin_chart;
        margin_chart.title = id + ": worst margin per time slice";
        margin_chart.x_label = "t";
        margin_chart.y_label = "min_r (rhs - lhs)";
        for (const auto& [t, margin] : margin_by_t) {
            margin_chart.x.push_back(t);
            margin_chart.y1.push_back(margin);
        }
        std::string margin_path = out_dir + "/" + id + "_margin.svg";
        write_file(margin_path, margin_chart.to_svg());
        written.push_back(margin_path);

        // lhs/rhs profile at the worst time slice
        double worst_t = margin_by_t.begin()->first;
        for (const auto& [t, margin] : margin_by_t)
            if (margin < margin_by_t[worst_t]) worst_t = t;
        LineChart profile;
        profile.title = id + ": lhs vs rhs at t = " + format_number(worst_t);
        profile.x_label = "r";
        profile.y_label = "value";
        for (const auto& row : rows)
            if (row[1] == worst_t) {
                profile.x.push_back(row[0]);
                profile.y1.push_back(row[2]);
                profile.y2.push_back(row[3]);
            }
        std::string profile_path = out_dir + "/" + id + "_profile.svg";
        write_file(profile_path, profile.to_svg());
        written.push_back(profile_path);
    }
    return written;
}

} // namespace driftlab
