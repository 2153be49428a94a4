// Command-line front end. Talks to the solver only through grf/grf.h.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "grf/grf.h"

namespace {

int report_error(const char* context, grf_status s) {
    std::fprintf(stderr, "grf: %s failed (%s): %s\n", context, grf_status_name(s), grf_last_error());
    return GRF_EXIT_ABORT;
}

bool is_preset(const std::string& name) {
    for (size_t i = 0; i < grf_preset_count(); ++i)
        if (name == grf_preset_name(i)) return true;
    return false;
}

int cmd_run(const std::string& config, std::string output_root, bool quiet) {
    if (output_root.empty()) {
        const char* env = std::getenv("GRF_OUTPUT_ROOT");
        output_root = env && *env ? env : "runs";
    }
    grf_config* cfg = nullptr;
    grf_status s = !std::filesystem::exists(config) && is_preset(config) ? grf_config_preset(config.c_str(), &cfg)
                                                                          : grf_config_load(config.c_str(), &cfg);
    if (s != GRF_OK) return report_error("loading configuration", s);

    grf_run* run = nullptr;
    s = grf_run_pipeline(cfg, output_root.c_str(), &run);
    grf_config_free(cfg);
    if (s != GRF_OK) return report_error("pipeline", s);

    if (!quiet) std::fputs(grf_run_summary(run), stdout);
    if (*grf_run_output_dir(run)) std::printf("outputs in %s\n", grf_run_output_dir(run));
    const int code = grf_run_exit_code(run);
    if (code != GRF_EXIT_CLEAN) std::fprintf(stderr, "grf: %s: %s\n", grf_run_status(run), grf_run_message(run));
    grf_run_free(run);
    return code;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int mesh) {
    grf_verify* v = nullptr;
    grf_status s = grf_verify_run(suite.c_str(), seed, mesh, &v);
    if (s != GRF_OK) return report_error("verification", s);
    std::fputs(grf_verify_table(v), stdout);
    const bool ok = grf_verify_all_pass(v);
    std::printf("%s\n", ok ? "all checks passed" : "some checks FAILED");
    grf_verify_free(v);
    return ok ? GRF_EXIT_CLEAN : GRF_EXIT_IDENTITY;
}

int cmd_report(const std::string& dir) {
    char* text = nullptr;
    int recorded = 0;
    grf_status s = grf_report_dir(dir.c_str(), &text, &recorded);
    if (s != GRF_OK) return report_error("reading run directory", s);
    std::fputs(text, stdout);
    grf_string_free(text);
    return GRF_EXIT_CLEAN;
}

int cmd_presets(const std::string& name) {
    if (name.empty()) {
        for (size_t i = 0; i < grf_preset_count(); ++i) std::printf("%s\n", grf_preset_name(i));
        return 0;
    }
    char* text = nullptr;
    grf_status s = grf_preset_json(name.c_str(), &text);
    if (s != GRF_OK) return report_error("preset lookup", s);
    std::printf("%s\n", text);
    grf_string_free(text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invariant generalized Ricci flow on nilpotent principal bundles"};
    app.require_subcommand(1);
    app.set_version_flag("--version", grf_version());

    std::string config, output_root;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario: forward flow, conjugate heat solve, functional reports");
    run->add_option("config", config, "Scenario JSON file or preset name")->required();
    run->add_option("-o,--output-root", output_root, "Output root (default: $GRF_OUTPUT_ROOT or ./runs)");
    run->add_flag("-q,--quiet", quiet, "Do not print the summary");

    std::string suite = "all";
    std::uint64_t seed = 1;
    int mesh = 64;
    auto* verify = app.add_subcommand("verify", "Randomized oracle checks with a pass/fail table");
    verify->add_option("--seed", seed, "Random seed");
    verify->add_option("--mesh", mesh, "Finest mesh size (even, >= 16)");
    verify->add_option("--suite", suite, "Suite to run")
        ->check(CLI::IsMember({"curvature", "torsion", "algebra", "variation", "all"}));

    std::string dir;
    auto* report = app.add_subcommand("report", "Summarize an existing run directory");
    report->add_option("run-dir", dir, "Run directory")->required();

    std::string preset;
    auto* presets = app.add_subcommand("presets", "List presets, or print one as JSON");
    presets->add_option("name", preset, "Preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : GRF_EXIT_ABORT;
    }

    if (*run) return cmd_run(config, output_root, quiet);
    if (*verify) return cmd_verify(suite, seed, mesh);
    if (*report) return cmd_report(dir);
    if (*presets) return cmd_presets(preset);
    return GRF_EXIT_ABORT;
}
