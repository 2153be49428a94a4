#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "helpers.hpp"
#include "scenario.hpp"
#include "snapshot.hpp"

using namespace grf;
using namespace grf::test;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("grf_unit_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const nlohmann::json& j) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        return e.what();
    }
    FAIL("configuration was accepted");
    return {};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GRF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

nlohmann::json small_heisenberg() {
    return nlohmann::json::parse(R"({"preset": "heisenberg-s1", "mesh": {"n": [16]},
                                     "integrator": {"t_end": 0.004, "report_dt": 0.001}})");
}
}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("minimal preset config is valid") {
        ScenarioConfig c = config_from_json(nlohmann::json::parse(R"({"preset": "flat-abelian"})"));
        CHECK(c.name == "flat-abelian");
        CHECK(c.alg.k == 2);
        CHECK(c.d == 1);
        for (const auto& name : preset_names()) CHECK_NOTHROW(config_from_json(preset_json(name)));
    }

    TEST_CASE("non-nilpotent constants are rejected") {
        std::vector<double> c(27, 0.0);
        auto set = [&](int m, int i, int j) {
            c[(m * 3 + i) * 3 + j] = 1;
            c[(m * 3 + j) * 3 + i] = -1;
        };
        set(0, 1, 2);
        set(1, 2, 0);
        set(2, 0, 1);
        nlohmann::json j = {{"algebra", {{"k", 3}, {"constants", c}}}, {"mesh", {{"n", {16}}}}};
        const std::string msg = config_error(j);
        CHECK(msg.find("/algebra") != std::string::npos);
        CHECK(msg.find("nilpoten") != std::string::npos);
    }

    TEST_CASE("non-closed torsion is rejected with its defect") {
        fs::path dir = scratch_dir("open_h");
        auto m = line(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(3), m);
        for (int p = 0; p < m->npts(); ++p) s.H.at(s.H.comp({0, 1, 2}), p) = 6.0 * (1.0 + 0.5 * std::sin(kTwoPi * m->x(0, p)));
        s.H.enforce_symmetry();
        write_state(s, (dir / "state.json").string());
        std::ofstream(dir / "config.json") << R"({"algebra": "abelian:3", "mesh": {"n": [16]},
                                                 "initial": {"source": "file", "path": "state.json"}})";
        try {
            load_config((dir / "config.json").string());
            FAIL("accepted");
        } catch (const Error& e) {
            const std::string msg = e.what();
            CHECK(msg.find("dH") != std::string::npos);
            CHECK(msg.find("/initial") != std::string::npos);
        }
        fs::remove_all(dir);
    }

    TEST_CASE("every problem is reported with its JSON pointer") {
        nlohmann::json j = nlohmann::json::parse(R"({"preset": "flat-abelian", "colour": 1,
            "integrator": {"sigma": 2.0, "step": 1}, "mesh": {"n": [4]}, "conjugate": {"mode": "shrinker"}})");
        const std::string msg = config_error(j);
        for (const char* p : {"/colour", "/integrator/step", "/integrator/sigma", "/mesh/n/0", "/conjugate/mode"})
            CHECK_MESSAGE(msg.find(p) != std::string::npos, p);
        CHECK(config_error(nlohmann::json::parse(R"({"preset": "nope"})")).find("/preset") != std::string::npos);
        CHECK(config_error(nlohmann::json::parse(R"({"mesh": {"n": [16]}})")).find("/algebra") != std::string::npos);
    }

    TEST_CASE("malformed JSON file is a config error") {
        fs::path dir = scratch_dir("bad_json");
        std::ofstream(dir / "c.json") << "{\"preset\": ";
        CHECK_THROWS_AS(load_config((dir / "c.json").string()), Error);
        CHECK_THROWS_AS(load_config((dir / "missing.json").string()), Error);
        fs::remove_all(dir);
    }

    TEST_CASE("flat-abelian pipeline finishes clean with zero reports") {
        fs::path root = scratch_dir("flat");
        PipelineResult r = run_pipeline(config_from_json(preset_json("flat-abelian")), root.string());
        CHECK(r.exit_code == kExitClean);
        CHECK(r.status == "clean");
        REQUIRE(r.series.size() > 2);
        for (const auto& x : r.series) {
            CHECK(x.F == 0.0);
            CHECK(x.RF.sum() == 0.0);
        }
        CHECK(r.flags.steady);
        for (const char* f : {"report.csv", "manifest.json", "summary.txt", "u_trajectory.csv", "snapshots/state_0000.json"})
            CHECK_MESSAGE(fs::exists(root / "flat-abelian" / f), f);
        nlohmann::json man = read_json_file((root / "flat-abelian" / "manifest.json").string());
        CHECK(man["status"] == "clean");
        CHECK(man["exit_code"] == 0);

        // snapshots round trip
        GeometryState s = read_state((root / "flat-abelian" / "snapshots" / "state_0001.json").string());
        CHECK(s.t == doctest::Approx(r.forward.reports[1].t));
        CHECK(max_diff(s.G, r.forward.reports[1].G) == 0.0);

        int code = -1;
        const std::string text = report_run_dir((root / "flat-abelian").string(), &code);
        CHECK(code == 0);
        CHECK(text.find("flat-abelian") != std::string::npos);
        fs::remove_all(root);
    }

    TEST_CASE("report CSV schema") {
        fs::path root = scratch_dir("schema");
        run_pipeline(config_from_json(small_heisenberg()), root.string());
        std::ifstream in(root / "heisenberg-s1" / "report.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "t,F,W,R1,R2,R3,R4,W_extra,dF_dt_fd,identity_gap_F,identity_gap_W,min_eig_G,min_eig_g,mass_u");
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) {
            ++rows;
            CHECK(std::count(line.begin(), line.end(), ',') == 13);
        }
        CHECK(rows == 5);
        fs::remove_all(root);
    }

    TEST_CASE("identical configs give bit-identical CSV") {
        fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
        nlohmann::json j = nlohmann::json::parse(R"({"preset": "torus-bundle-t2", "mesh": {"n": [16, 16]},
                                                     "integrator": {"t_end": 0.002, "report_dt": 0.001}})");
        run_pipeline(config_from_json(j), a.string());
        run_pipeline(config_from_json(j), b.string());
        const std::string ca = slurp(a / "torus-bundle-t2" / "report.csv");
        CHECK(!ca.empty());
        CHECK(ca == slurp(b / "torus-bundle-t2" / "report.csv"));
        fs::remove_all(a);
        fs::remove_all(b);
    }

    TEST_CASE("abort leaves a valid manifest") {
        fs::path root = scratch_dir("abort");
        nlohmann::json j = small_heisenberg();
        j["integrator"]["blowup"] = 1e-3;
        PipelineResult r = run_pipeline(config_from_json(j), root.string());
        CHECK(r.exit_code == kExitAbort);
        CHECK(r.status == "aborted");
        CHECK(r.message.find("forward") != std::string::npos);
        nlohmann::json man = read_json_file((root / "heisenberg-s1" / "manifest.json").string());
        CHECK(man["status"] == "aborted");
        CHECK(man["exit_code"] == 1);
        CHECK(man["stages"].size() >= 2);
        CHECK(fs::exists(root / "heisenberg-s1" / "summary.txt"));
        fs::remove_all(root);
    }

    TEST_CASE("identity tolerance violation gives exit 2") {
        nlohmann::json j = small_heisenberg();
        j["checks"] = {{"identity_gap_F", 1e-14}};
        PipelineResult r = run_pipeline(config_from_json(j), "");
        CHECK(r.exit_code == kExitIdentity);
        CHECK(r.status == "identity-failure");
        CHECK(r.max_gap_F > 1e-14);
        CHECK(r.output_dir.empty());
    }

    TEST_CASE("variant runs and verification suites") {
        fs::path root = scratch_dir("variant");
        nlohmann::json j = small_heisenberg();
        j["flow"] = {{"variant", "general"}, {"f_amplitude", 0.05}};
        j["verify"] = {{"suites", {"algebra"}}, {"mesh", 16}};
        PipelineResult r = run_pipeline(config_from_json(j), root.string());
        CHECK(r.exit_code == kExitClean);
        CHECK(!r.verification.empty());
        CHECK(fs::exists(root / "heisenberg-s1" / "snapshots" / "general_0000.json"));
        fs::remove_all(root);
    }

    TEST_CASE("command-line front end") {
        fs::path root = scratch_dir("cli");
        CHECK(run_cli("presets") == 0);
        CHECK(run_cli("presets heisenberg-s1") == 0);
        CHECK(run_cli("run flat-abelian -q -o " + root.string()) == 0);
        CHECK(run_cli("report " + (root / "flat-abelian").string()) == 0);
        CHECK(run_cli("report " + (root / "missing").string()) == 1);
        std::ofstream(root / "bad.json") << R"({"preset": "flat-abelian", "extra": true})";
        CHECK(run_cli("run " + (root / "bad.json").string()) == 1);
        CHECK(run_cli("verify --suite algebra --mesh 16 --seed 3") == 0);
        CHECK(run_cli("verify --mesh 15") == 1);
        CHECK(run_cli("frobnicate") == 1);
        const std::string env = "GRF_OUTPUT_ROOT=" + (root / "env").string() + " ";
        CHECK(std::system((env + GRF_CLI_PATH + " run flat-abelian -q > /dev/null 2>&1").c_str()) == 0);
        CHECK(fs::exists(root / "env" / "flat-abelian" / "manifest.json"));
        fs::remove_all(root);
    }

    TEST_CASE("shipped preset files load") {
        for (const auto& name : preset_names()) {
            const fs::path p = fs::path(GRF_SOURCE_DIR) / "presets" / (name + ".json");
            REQUIRE_MESSAGE(fs::exists(p), p.string());
            ScenarioConfig c = load_config(p.string());
            CHECK(c.name == name);
        }
    }
}
