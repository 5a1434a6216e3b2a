// driftlab: numerical laboratory for the radial drifting heat equation.
// Solves dw/dt = Delta_phi w + G(t,x,w) on rotationally symmetric weighted
// model spaces and mechanically verifies gradient estimates, Harnack
// inequalities, evolution identities, cutoff certificates and constancy
// predicates against the solved fields.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftlab/scenario.hpp"
#include "driftlab/version.hpp"

using namespace driftlab;

namespace {

enum ExitCode : int {
    kPass = 0,
    kMarginFailure = 1,
    kConfigError = 2,
    kSolverAbort = 3,
};

int manifest_exit_code(const RunManifest& manifest) {
    return manifest.all_passed() ? kPass : kMarginFailure;
}

void print_job_lines(const RunManifest& manifest) {
    for (const auto& job : manifest.jobs) {
        std::printf("%-28s %-18s %s", job.id.c_str(), job.check.c_str(),
                    job.status.c_str());
        if (job.values.contains("margin"))
            std::printf("  margin=%s",
                        format_number(job.values["margin"].get<double>()).c_str());
        if (job.values.contains("max_residual"))
            std::printf("  residual=%s",
                        format_number(job.values["max_residual"].get<double>()).c_str());
        if (!job.message.empty()) std::printf("  (%s)", job.message.c_str());
        std::printf("\n");
    }
}

/// Runs the scenario restricted to jobs whose check matches the filter
/// (empty filter = everything).
int run_filtered(const std::string& path, RunOptions opts,
                 const std::vector<std::string>& keep_checks) {
    json config;
    try {
        config = json::parse(read_file(path));
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    }
    if (!keep_checks.empty() && config.contains("verifications")) {
        json kept = json::array();
        for (const auto& vj : config["verifications"]) {
            std::string check = vj.value("check", "");
            for (const auto& want : keep_checks)
                if (check == want) kept.push_back(vj);
        }
        config["verifications"] = kept;
    }
    try {
        auto manifest = run_scenario_json(config, opts);
        print_job_lines(manifest);
        std::printf("out: %s/manifest.json\n", opts.out_dir.c_str());
        return manifest_exit_code(manifest);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const Error& e) {
        std::fprintf(stderr, "solver abort: %s\n", e.what());
        return kSolverAbort;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftlab: verification laboratory for the radial drifting "
                 "heat equation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunOptions opts;
    std::string tolerance_profile = "default";
    app.add_option("--out", opts.out_dir, "output directory")
        ->capture_default_str();
    app.add_option("--workers", opts.workers, "parallel job workers")
        ->capture_default_str();
    app.add_option("--tolerance-profile", tolerance_profile,
                   "margin tolerance profile: strict|default")
        ->check(CLI::IsMember({"strict", "default"}));

    std::string scenario_path;
    auto add_scenario_arg = [&](CLI::App* cmd) {
        cmd->add_option("scenario", scenario_path, "scenario JSON file")
            ->required()
            ->check(CLI::ExistingFile);
    };

    auto* cmd_run = app.add_subcommand("run", "solve and run every verification job");
    add_scenario_arg(cmd_run);
    auto* cmd_solve =
        app.add_subcommand("solve", "solve only; write solution.csv and metadata");
    add_scenario_arg(cmd_solve);
    auto* cmd_estimate =
        app.add_subcommand("estimate", "run the gradient-estimate jobs");
    add_scenario_arg(cmd_estimate);
    auto* cmd_harnack = app.add_subcommand("harnack", "run the Harnack jobs");
    add_scenario_arg(cmd_harnack);
    auto* cmd_identities =
        app.add_subcommand("identities", "run the identity-residual jobs");
    add_scenario_arg(cmd_identities);
    auto* cmd_liouville =
        app.add_subcommand("liouville", "run predicate and constancy-demo jobs");
    add_scenario_arg(cmd_liouville);

    auto* cmd_cutoff = app.add_subcommand("cutoff", "emit a cutoff certificate");
    double cut_R = 4.0, cut_T = 1.0, cut_t0 = 0.0, cut_tau = -0.5;
    int cut_density = 10000;
    bool cut_spatial = false;
    cmd_cutoff->add_option("--R", cut_R, "localization radius")->capture_default_str();
    cmd_cutoff->add_option("--T", cut_T, "window height")->capture_default_str();
    cmd_cutoff->add_option("--t0", cut_t0, "window top")->capture_default_str();
    cmd_cutoff->add_option("--tau", cut_tau, "plateau start")->capture_default_str();
    cmd_cutoff->add_option("--density", cut_density, "samples per axis")
        ->capture_default_str();
    cmd_cutoff->add_flag("--spatial", cut_spatial,
                         "certify the spatial profile instead of the space-time one");

    auto* cmd_plots = app.add_subcommand("plots", "render SVG figures from a run");
    std::vector<std::string> plot_jobs;
    cmd_plots->add_option("jobs", plot_jobs, "job ids to plot")->required();

    CLI11_PARSE(app, argc, argv);
    opts.strict = tolerance_profile == "strict";

    try {
        if (cmd_run->parsed()) return run_filtered(scenario_path, opts, {});
        if (cmd_solve->parsed()) return run_filtered(scenario_path, opts, {"-none-"});
        if (cmd_estimate->parsed())
            return run_filtered(scenario_path, opts,
                                {"souplet_zhang", "hamilton", "li_yau",
                                 "elliptic_global", "calibrate"});
        if (cmd_harnack->parsed())
            return run_filtered(scenario_path, opts,
                                {"parabolic_harnack", "elliptic_harnack"});
        if (cmd_identities->parsed())
            return run_filtered(scenario_path, opts,
                                {"h_evolution", "H_evolution", "F_beta",
                                 "liyau_evolution", "chain_rule", "bochner",
                                 "cd_condition", "exp_laplacian", "quadratic_lemma"});
        if (cmd_liouville->parsed())
            return run_filtered(scenario_path, opts, {"predicate", "constancy_demo"});

        if (cmd_cutoff->parsed()) {
            json out;
            CutoffCertificate cert;
            if (cut_spatial) {
                auto zeta = build_spatial_cutoff(cut_R);
                cert = certify(zeta, cut_density);
            } else {
                auto eta = build_space_time_cutoff(cut_R, cut_T, cut_t0, cut_tau);
                cert = certify(eta, cut_density, std::max(1000, cut_density / 10));
            }
            out["constants"] = cert.constants;
            json flags = json::object();
            for (const auto& clause : cert.clauses) flags[clause.name] = clause.ok;
            out["flags"] = flags;
            out["max_violation"] = cert.max_violation();
            out["density"] = cert.density;
            std::filesystem::create_directories(opts.out_dir);
            std::string path = opts.out_dir + "/cutoff_certificate.json";
            write_file(path, out.dump(2) + "\n");
            std::printf("%s\n", out.dump(2).c_str());
            return cert.valid() ? kPass : kMarginFailure;
        }

        if (cmd_plots->parsed()) {
            auto written = emit_plots(opts.out_dir, plot_jobs);
            for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
            return kPass;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const MissingJob& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kMarginFailure;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolverAbort;
    }
    return kPass;
}
