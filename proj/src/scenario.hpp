#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "conjugate.hpp"
#include "functionals.hpp"
#include "verify.hpp"

namespace grf {

struct InitialSpec {
    std::string source = "preset";  // "preset" builds from the parameters below, "file" loads a state
    std::string path;
    std::uint64_t seed = 1;
    double metric_amplitude = 0;      // smooth perturbation of G and g
    double connection_amplitude = 0;  // smooth random A
    double b_amplitude = 0;           // H += d(B) for a smooth random two-form B
    std::vector<std::array<double, 4>> H_components;  // constant entries (P, Q, R, value), antisymmetrized
};

struct ScenarioConfig {
    std::string name;
    std::string preset;
    std::string algebra_label;
    LieAlgebra alg;
    int d = 1;
    std::array<int, 2> n{32, 1};
    std::array<double, 2> L{1.0, 1.0};
    InitialSpec initial;
    Gauge variant = Gauge::Ungauged;
    double f_amplitude = 0;  // static f for the general variant
    IntegratorConfig integrator;
    PotentialMode mode = PotentialMode::Steady;
    double entropy_n = 0;  // 0 selects n = d
    double q_coefficient = -1.0;
    double gap_tolerance = 0.01;
    double closedness_tolerance = 1e-8;
    SolitonThresholds soliton;
    std::string output_dir;  // empty: <output root>/<name>
    bool snapshots = true;
    std::vector<std::string> verify_suites;
    VerifyOptions verify;
    nlohmann::json resolved;  // the merged document the config was read from
};

const std::vector<std::string>& preset_names();
nlohmann::json preset_json(const std::string& name);

// All problems (unknown keys, type errors, failed invariants) are collected and
// reported together, each prefixed with its JSON pointer.
ScenarioConfig config_from_json(const nlohmann::json& j, const std::string& origin = "config");
ScenarioConfig load_config(const std::string& path);

GeometryState build_initial_state(const ScenarioConfig& cfg);

enum ExitCode { kExitClean = 0, kExitAbort = 1, kExitIdentity = 2 };

struct PipelineResult {
    int exit_code = kExitClean;
    std::string status;  // clean | aborted | identity-failure
    std::string message;
    std::string output_dir;
    std::vector<FunctionalReport> series;
    SolitonFlags flags;
    FlowRun forward;
    ConjugateTrajectory conjugate;
    double max_gap_F = 0, max_gap_W = 0;
    bool F_nondecreasing = true, W_nondecreasing = true;
    double max_closedness = 0;
    double runtime_s = 0;
    std::vector<CheckResult> verification;
};

// Forward ungauged run, backward conjugate solve, functional reports, rigidity
// flags, outputs. output_root is used when the config has no explicit directory;
// an empty output_root disables file output.
PipelineResult run_pipeline(const ScenarioConfig& cfg, const std::string& output_root);

// Human-readable summary: final values, monotonicity verdicts, flags.
std::string summarize(const ScenarioConfig& cfg, const PipelineResult& r);

// Reads a run directory and renders the summary again.
std::string report_run_dir(const std::string& dir, int* exit_code = nullptr);

extern const char* const kReportColumns;

}  // namespace grf
