#include "scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "random_fields.hpp"
#include "snapshot.hpp"

namespace grf {

using nlohmann::json;
namespace fs = std::filesystem;

const char* const kReportColumns =
    "t,F,W,R1,R2,R3,R4,W_extra,dF_dt_fd,identity_gap_F,identity_gap_W,min_eig_G,min_eig_g,mass_u";

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- presets

const std::map<std::string, json>& presets() {
    static const std::map<std::string, json> p = {
        {"flat-abelian", json::parse(R"({
            "algebra": "abelian:2",
            "mesh": {"n": [32], "L": [1.0]},
            "integrator": {"t_end": 0.05}
        })")},
        {"heisenberg-s1", json::parse(R"({
            "algebra": "heisenberg3",
            "mesh": {"n": [64], "L": [1.0]},
            "integrator": {"t_end": 0.2, "report_dt": 0.005}
        })")},
        {"torus-bundle-t2", json::parse(R"({
            "algebra": "abelian:2",
            "mesh": {"n": [32, 32], "L": [1.0, 1.0]},
            "initial": {"seed": 1, "metric_amplitude": 0.05, "connection_amplitude": 0.1, "b_amplitude": 0.05},
            "integrator": {"t_end": 0.05, "report_dt": 0.000625}
        })")},
        {"inoue-like", json::parse(R"({
            "algebra": "abelian:3",
            "mesh": {"n": [64], "L": [1.0]},
            "initial": {"seed": 1, "metric_amplitude": 0.05, "H_components": [[0, 1, 2, 0.5]]},
            "integrator": {"t_end": 0.05, "report_dt": 0.0005}
        })")},
    };
    return p;
}

// ---------------------------------------------------------------- parsing

struct Parser {
    std::vector<std::string> errors;

    void keys(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            errors.push_back((ptr.empty() ? "/" : ptr) + ": expected an object");
            return;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!ok.count(it.key())) errors.push_back(ptr + "/" + it.key() + ": unknown key");
    }

    bool has(const json& j, const char* key) const { return j.is_object() && j.contains(key); }

    void num(const json& j, const char* key, const std::string& ptr, double& out) {
        if (!has(j, key)) return;
        const json& v = j.at(key);
        if (!v.is_number()) {
            errors.push_back(ptr + "/" + key + ": expected a number");
            return;
        }
        out = v.get<double>();
    }
    template <class Int>
    void integer(const json& j, const char* key, const std::string& ptr, Int& out) {
        if (!has(j, key)) return;
        const json& v = j.at(key);
        if (!v.is_number_integer()) {
            errors.push_back(ptr + "/" + key + ": expected an integer");
            return;
        }
        out = v.get<Int>();
    }
    void str(const json& j, const char* key, const std::string& ptr, std::string& out) {
        if (!has(j, key)) return;
        const json& v = j.at(key);
        if (!v.is_string()) {
            errors.push_back(ptr + "/" + key + ": expected a string");
            return;
        }
        out = v.get<std::string>();
    }
    void boolean(const json& j, const char* key, const std::string& ptr, bool& out) {
        if (!has(j, key)) return;
        const json& v = j.at(key);
        if (!v.is_boolean()) {
            errors.push_back(ptr + "/" + key + ": expected true or false");
            return;
        }
        out = v.get<bool>();
    }
    void check(bool cond, const std::string& ptr, const std::string& msg) {
        if (!cond) errors.push_back(ptr + ": " + msg);
    }
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

void parse_algebra(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "algebra")) {
        P.errors.push_back("/algebra: required (preset name or {\"k\": k, \"constants\": [...]})");
        return;
    }
    const json& a = j.at("algebra");
    try {
        if (a.is_string()) {
            c.algebra_label = a.get<std::string>();
            c.alg = LieAlgebra::preset(c.algebra_label);
        } else if (a.is_object()) {
            P.keys(a, "/algebra", {"k", "constants"});
            int k = -1;
            P.integer(a, "k", "/algebra", k);
            if (!a.contains("constants") || !a.at("constants").is_array()) {
                P.errors.push_back("/algebra/constants: expected an array of k*k*k numbers");
                return;
            }
            std::vector<double> cs;
            for (size_t i = 0; i < a.at("constants").size(); ++i) {
                const json& v = a.at("constants")[i];
                if (!v.is_number()) {
                    P.errors.push_back("/algebra/constants/" + std::to_string(i) + ": expected a number");
                    return;
                }
                cs.push_back(v.get<double>());
            }
            if (k < 1 || cs.size() != static_cast<size_t>(k) * k * k) {
                P.errors.push_back("/algebra: k must be positive and constants must hold k*k*k entries");
                return;
            }
            c.alg = LieAlgebra::from_constants(k, cs);
            c.algebra_label = "custom:" + std::to_string(k);
        } else {
            P.errors.push_back("/algebra: expected a preset name or an object");
            return;
        }
    } catch (const Error& e) {
        P.errors.push_back(std::string("/algebra: ") + e.what());
        return;
    }
    AlgebraReport rep = validate_algebra(c.alg);
    P.check(rep.ok(), "/algebra", "rejected: " + rep.describe());
}

void parse_mesh(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "mesh")) {
        P.errors.push_back("/mesh: required");
        return;
    }
    const json& m = j.at("mesh");
    P.keys(m, "/mesh", {"n", "L"});
    if (!m.is_object()) return;
    if (!m.contains("n") || !m.at("n").is_array() || m.at("n").empty() || m.at("n").size() > 2) {
        P.errors.push_back("/mesh/n: expected an array of 1 or 2 integers");
        return;
    }
    c.d = static_cast<int>(m.at("n").size());
    for (int a = 0; a < c.d; ++a) {
        const json& v = m.at("n")[a];
        if (!v.is_number_integer()) {
            P.errors.push_back("/mesh/n/" + std::to_string(a) + ": expected an integer");
            continue;
        }
        c.n[a] = v.get<int>();
        P.check(c.n[a] >= 8, "/mesh/n/" + std::to_string(a), "at least 8 points required by the stencil");
    }
    if (c.d == 1) c.n[1] = 1;
    if (m.contains("L")) {
        if (!m.at("L").is_array() || static_cast<int>(m.at("L").size()) != c.d) {
            P.errors.push_back("/mesh/L: expected an array with one length per axis");
        } else {
            for (int a = 0; a < c.d; ++a) {
                const json& v = m.at("L")[a];
                if (!v.is_number()) {
                    P.errors.push_back("/mesh/L/" + std::to_string(a) + ": expected a number");
                    continue;
                }
                c.L[a] = v.get<double>();
                P.check(c.L[a] > 0, "/mesh/L/" + std::to_string(a), "box length must be positive");
            }
        }
    }
}

void parse_initial(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "initial")) return;
    const json& i = j.at("initial");
    const std::string p = "/initial";
    P.keys(i, p, {"source", "path", "seed", "metric_amplitude", "connection_amplitude", "b_amplitude", "H_components"});
    InitialSpec& s = c.initial;
    P.str(i, "source", p, s.source);
    P.check(s.source == "preset" || s.source == "file", p + "/source", "expected \"preset\" or \"file\"");
    P.str(i, "path", p, s.path);
    if (s.source == "file") P.check(!s.path.empty(), p + "/path", "required when source is \"file\"");
    P.integer(i, "seed", p, s.seed);
    P.num(i, "metric_amplitude", p, s.metric_amplitude);
    P.num(i, "connection_amplitude", p, s.connection_amplitude);
    P.num(i, "b_amplitude", p, s.b_amplitude);
    if (P.has(i, "H_components")) {
        const json& h = i.at("H_components");
        if (!h.is_array()) {
            P.errors.push_back(p + "/H_components: expected an array of [P, Q, R, value]");
        } else {
            for (size_t e = 0; e < h.size(); ++e) {
                const std::string ep = p + "/H_components/" + std::to_string(e);
                if (!h[e].is_array() || h[e].size() != 4 ||
                    !std::all_of(h[e].begin(), h[e].end(), [](const json& x) { return x.is_number(); })) {
                    P.errors.push_back(ep + ": expected [P, Q, R, value]");
                    continue;
                }
                s.H_components.push_back({h[e][0].get<double>(), h[e][1].get<double>(), h[e][2].get<double>(),
                                          h[e][3].get<double>()});
            }
        }
    }
}

void parse_flow(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "flow")) return;
    const json& f = j.at("flow");
    P.keys(f, "/flow", {"variant", "f_amplitude"});
    std::string v = gauge_name(c.variant);
    P.str(f, "variant", "/flow", v);
    try {
        c.variant = parse_gauge(v);
    } catch (const Error& e) {
        P.errors.push_back(std::string("/flow/variant: ") + e.what());
    }
    P.num(f, "f_amplitude", "/flow", c.f_amplitude);
}

void parse_integrator(Parser& P, const json& j, ScenarioConfig& c) {
    IntegratorConfig& ic = c.integrator;
    if (P.has(j, "integrator")) {
        const json& i = j.at("integrator");
        const std::string p = "/integrator";
        P.keys(i, p, {"sigma", "t_end", "report_dt", "fixed_steps", "spd_floor", "blowup", "max_steps"});
        P.num(i, "sigma", p, ic.sigma);
        P.num(i, "t_end", p, ic.t_end);
        P.num(i, "report_dt", p, ic.report_dt);
        P.integer(i, "fixed_steps", p, ic.fixed_steps);
        P.num(i, "spd_floor", p, ic.spd_floor);
        P.num(i, "blowup", p, ic.blowup);
        P.integer(i, "max_steps", p, ic.max_steps);
    }
    P.check(ic.sigma > 0 && ic.sigma < 1, "/integrator/sigma", "must lie in (0, 1)");
    P.check(ic.t_end > 0 || ic.fixed_steps > 0, "/integrator/t_end", "must be positive");
    P.check(ic.spd_floor > 0, "/integrator/spd_floor", "must be positive");
    P.check(ic.fixed_steps >= 0, "/integrator/fixed_steps", "must be nonnegative");
}

void parse_conjugate(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "conjugate")) return;
    const json& cj = j.at("conjugate");
    P.keys(cj, "/conjugate", {"mode", "n", "q_coefficient"});
    std::string mode = "steady";
    P.str(cj, "mode", "/conjugate", mode);
    if (mode == "steady")
        c.mode = PotentialMode::Steady;
    else if (mode == "expander")
        c.mode = PotentialMode::Expander;
    else
        P.errors.push_back("/conjugate/mode: expected \"steady\" or \"expander\"");
    P.num(cj, "n", "/conjugate", c.entropy_n);
    P.check(c.entropy_n >= 0, "/conjugate/n", "must be positive (0 selects the base dimension)");
    P.num(cj, "q_coefficient", "/conjugate", c.q_coefficient);
}

void parse_checks(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "checks")) return;
    const json& k = j.at("checks");
    P.keys(k, "/checks", {"identity_gap_F", "closedness", "soliton_residual", "soliton_field"});
    P.num(k, "identity_gap_F", "/checks", c.gap_tolerance);
    P.num(k, "closedness", "/checks", c.closedness_tolerance);
    P.num(k, "soliton_residual", "/checks", c.soliton.residual);
    P.num(k, "soliton_field", "/checks", c.soliton.field);
}

void parse_output(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "output")) return;
    const json& o = j.at("output");
    P.keys(o, "/output", {"dir", "snapshots"});
    P.str(o, "dir", "/output", c.output_dir);
    P.boolean(o, "snapshots", "/output", c.snapshots);
}

void parse_verify(Parser& P, const json& j, ScenarioConfig& c) {
    if (!P.has(j, "verify")) return;
    const json& v = j.at("verify");
    P.keys(v, "/verify", {"suites", "seed", "mesh"});
    if (P.has(v, "suites")) {
        const json& s = v.at("suites");
        if (!s.is_array()) {
            P.errors.push_back("/verify/suites: expected an array of suite names");
        } else {
            for (size_t i = 0; i < s.size(); ++i) {
                const std::string ptr = "/verify/suites/" + std::to_string(i);
                if (!s[i].is_string()) {
                    P.errors.push_back(ptr + ": expected a string");
                    continue;
                }
                std::string name = s[i].get<std::string>();
                const auto& known = suite_names();
                P.check(name == "all" || std::find(known.begin(), known.end(), name) != known.end(), ptr,
                        "unknown suite '" + name + "'");
                c.verify_suites.push_back(name);
            }
        }
    }
    P.integer(v, "seed", "/verify", c.verify.seed);
    P.integer(v, "mesh", "/verify", c.verify.mesh);
    P.check(c.verify.mesh >= 16 && c.verify.mesh % 2 == 0, "/verify/mesh", "must be even and at least 16");
}

Field constant_three_form(const GeometryState& s, const std::vector<std::array<double, 4>>& entries,
                          std::vector<std::string>& errors) {
    Field H = s.H.zeros_like();
    const int n = s.n();
    for (size_t e = 0; e < entries.size(); ++e) {
        int idx[3];
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            const double v = entries[e][i];
            idx[i] = static_cast<int>(v);
            ok = ok && v == idx[i] && idx[i] >= 0 && idx[i] < n;
        }
        ok = ok && idx[0] != idx[1] && idx[1] != idx[2] && idx[0] != idx[2];
        if (!ok) {
            errors.push_back("/initial/H_components/" + std::to_string(e) +
                             ": indices must be distinct integers in [0, " + std::to_string(n) + ")");
            continue;
        }
        // write all six orderings with signs
        const int perm[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
        for (int p = 0; p < 6; ++p) {
            const double sign = p < 3 ? 1.0 : -1.0;
            double* v = H.data(H.comp({idx[perm[p][0]], idx[perm[p][1]], idx[perm[p][2]]}));
            for (int q = 0; q < H.npts(); ++q) v[q] += sign * entries[e][3];
        }
    }
    return H;
}

GeometryState build_state(const ScenarioConfig& c, std::vector<std::string>& errors) {
    const InitialSpec& in = c.initial;
    if (in.source == "file") {
        GeometryState s = read_state(in.path);
        s.t = 0;
        if (s.k() != c.alg.k || s.alg.c != c.alg.c)
            errors.push_back("/initial/path: structure constants in the state file differ from /algebra");
        if (s.d() != c.d || s.mesh->n != c.n || s.mesh->L != c.L)
            errors.push_back("/initial/path: mesh in the state file differs from /mesh");
        return s;
    }
    auto mesh = Mesh::make(c.d, c.n, c.L);
    GeometryState s = GeometryState::trivial(c.alg, mesh);
    Rng rng(in.seed);
    const int k = c.alg.k;
    if (in.metric_amplitude != 0) {
        s.G += smooth_field(mesh, {Slot::Fiber, Slot::Fiber}, k, in.metric_amplitude, rng, {{0, 1, false}});
        s.g += smooth_field(mesh, {Slot::Base, Slot::Base}, k, in.metric_amplitude, rng, {{0, 1, false}});
    }
    if (in.connection_amplitude != 0) s.A = smooth_field(mesh, {Slot::Base, Slot::Fiber}, k, in.connection_amplitude, rng);
    if (in.b_amplitude != 0) s.H += algebroid_d(random_two_form(mesh, k, in.b_amplitude, rng), s);
    if (!in.H_components.empty()) s.H += constant_three_form(s, in.H_components, errors);
    s.H.enforce_symmetry();
    return s;
}

void validate_initial(const ScenarioConfig& c, const GeometryState& s, std::vector<std::string>& errors) {
    const double mG = min_eigenvalue(s.G), mg = min_eigenvalue(s.g);
    if (!(mG > c.integrator.spd_floor)) errors.push_back("/initial: fiber metric G not SPD (min eigenvalue " +
                                                          std::to_string(mG) + ")");
    if (!(mg > c.integrator.spd_floor)) errors.push_back("/initial: base metric g not SPD (min eigenvalue " +
                                                          std::to_string(mg) + ")");
    if (mG > 0 && mg > 0) {
        const double dH = closedness_defect(s);
        if (!(dH <= c.closedness_tolerance)) {
            std::ostringstream o;
            o << "/initial: torsion is not closed, ||dH||_inf = " << dH << " exceeds " << c.closedness_tolerance;
            errors.push_back(o.str());
        }
    }
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> n = {"flat-abelian", "heisenberg-s1", "torus-bundle-t2", "inoue-like"};
    return n;
}

json preset_json(const std::string& name) {
    auto it = presets().find(name);
    require(it != presets().end(), ErrorKind::Config, "unknown preset '" + name + "'");
    json j = it->second;
    j["name"] = name;
    return j;
}

ScenarioConfig config_from_json(const json& user, const std::string& origin) {
    Parser P;
    json j = user;
    if (!user.is_object()) fail(ErrorKind::Config, origin + ": top level must be a JSON object");
    P.keys(user, "", {"name", "preset", "algebra", "mesh", "initial", "flow", "integrator", "conjugate", "checks",
                      "output", "verify"});
    ScenarioConfig c;
    if (user.contains("preset")) {
        if (!user.at("preset").is_string() || !presets().count(user.at("preset").get<std::string>())) {
            P.errors.push_back("/preset: unknown preset (expected " + join(preset_names(), ", ") + ")");
        } else {
            c.preset = user.at("preset").get<std::string>();
            j = preset_json(c.preset);
            j.merge_patch(user);
        }
    }
    P.str(j, "name", "", c.name);
    if (c.name.empty()) c.name = c.preset.empty() ? "scenario" : c.preset;
    parse_algebra(P, j, c);
    parse_mesh(P, j, c);
    parse_initial(P, j, c);
    parse_flow(P, j, c);
    parse_integrator(P, j, c);
    parse_conjugate(P, j, c);
    parse_checks(P, j, c);
    parse_output(P, j, c);
    parse_verify(P, j, c);
    c.resolved = j;

    if (P.errors.empty()) {
        try {
            GeometryState s = build_state(c, P.errors);
            if (P.errors.empty()) validate_initial(c, s, P.errors);
        } catch (const Error& e) {
            P.errors.push_back(std::string("/initial: ") + e.what());
        }
    }
    if (!P.errors.empty())
        fail(ErrorKind::Config, origin + ": invalid configuration:\n  " + join(P.errors, "\n  "));
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    json j = read_json_file(path);
    // relative state-file paths are resolved against the config's directory
    if (j.is_object() && j.contains("initial") && j["initial"].is_object() && j["initial"].contains("path") &&
        j["initial"]["path"].is_string()) {
        fs::path p = j["initial"]["path"].get<std::string>();
        if (p.is_relative()) j["initial"]["path"] = (fs::path(path).parent_path() / p).string();
    }
    return config_from_json(j, path);
}

GeometryState build_initial_state(const ScenarioConfig& cfg) {
    std::vector<std::string> errors;
    GeometryState s = build_state(cfg, errors);
    if (!errors.empty()) fail(ErrorKind::Config, join(errors, "; "));
    return s;
}

// ---------------------------------------------------------------- pipeline

namespace {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

std::string hex64(std::uint64_t h) {
    char b[20];
    std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(h));
    return b;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Outputs {
    bool enabled = false;
    fs::path dir;
    json manifest;

    void write_manifest() const {
        if (enabled) write_text_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    }
};

std::string report_csv(const std::vector<FunctionalReport>& series) {
    std::ostringstream o;
    o << kReportColumns << "\n";
    for (const auto& r : series) {
        const double v[] = {r.t,        r.F,        r.W,          r.RF.R1,         r.RF.R2,         r.RF.R3,
                            r.RF.R4,    r.RW.W_extra, r.dF_dt_fd, r.identity_gap_F, r.identity_gap_W, r.min_eig_G,
                            r.min_eig_g, r.mass_u};
        for (size_t i = 0; i < std::size(v); ++i) o << (i ? "," : "") << fmt(v[i]);
        o << "\n";
    }
    return o.str();
}

std::string entropy_csv(const std::vector<FunctionalReport>& series) {
    std::ostringstream o;
    o << "t,W,RW1,RW2,RW3,RW4,W_extra,dW_dt_fd,identity_gap_W\n";
    for (const auto& r : series) {
        const double v[] = {r.t,       r.W,       r.RW.R1,      r.RW.R2,        r.RW.R3,
                            r.RW.R4,   r.RW.W_extra, r.dW_dt_fd, r.identity_gap_W};
        for (size_t i = 0; i < std::size(v); ++i) o << (i ? "," : "") << fmt(v[i]);
        o << "\n";
    }
    return o.str();
}

std::string rigidity_csv(const std::vector<FunctionalReport>& series) {
    std::ostringstream o;
    o << "t,H_sup,F_sup,logdetG_rate,Ric_sup,expander_fiber,expander_base\n";
    for (const auto& r : series) {
        const RigidityMetrics& m = r.rigidity;
        const double v[] = {r.t, m.H_sup, m.F_sup, m.logdetG_rate, m.Ric_sup, m.expander_fiber, m.expander_base};
        for (size_t i = 0; i < std::size(v); ++i) o << (i ? "," : "") << fmt(v[i]);
        o << "\n";
    }
    return o.str();
}

std::string u_csv(const ConjugateTrajectory& tr, const std::vector<FunctionalReport>& series) {
    std::ostringstream o;
    o << "t,mass";
    if (!tr.u.empty())
        for (int p = 0; p < tr.u.front().npts(); ++p) o << ",u" << p;
    o << "\n";
    size_t j = 0;
    for (const auto& r : series) {
        while (j < tr.t.size() && tr.t[j] < r.t) ++j;
        if (j >= tr.t.size()) break;
        o << fmt(tr.t[j]) << "," << fmt(tr.mass[j]);
        for (double x : tr.u[j].values()) o << "," << fmt(x);
        o << "\n";
    }
    return o.str();
}

}  // namespace

std::string summarize(const ScenarioConfig& c, const PipelineResult& r) {
    std::ostringstream o;
    o << "scenario        " << c.name << "\n";
    o << "status          " << r.status << " (exit " << r.exit_code << ")\n";
    if (!r.message.empty()) o << "message         " << r.message << "\n";
    o << "algebra         " << c.algebra_label << ", k=" << c.alg.k << ", d=" << c.d << ", N=" << c.n[0];
    if (c.d == 2) o << "x" << c.n[1];
    o << "\n";
    o << "forward steps   " << r.forward.steps << (r.forward.aborted ? " (aborted)" : "") << "\n";
    if (!r.series.empty()) {
        const FunctionalReport& a = r.series.front();
        const FunctionalReport& b = r.series.back();
        char buf[256];
        std::snprintf(buf, sizeof buf, "F               %.10g -> %.10g (%s)\n", a.F, b.F,
                      r.F_nondecreasing ? "nondecreasing" : "NOT monotone");
        o << buf;
        std::snprintf(buf, sizeof buf, "W+              %.10g at t=%g (%s)\n", b.W, b.t,
                      r.W_nondecreasing ? "nondecreasing" : "NOT monotone");
        o << buf;
        std::snprintf(buf, sizeof buf, "identity gap F  %.3e (tolerance %.3g)\n", r.max_gap_F, c.gap_tolerance);
        o << buf;
        std::snprintf(buf, sizeof buf, "identity gap W  %.3e (reported only)\n", r.max_gap_W);
        o << buf;
        double wmin = std::numeric_limits<double>::infinity();
        for (const auto& x : r.series)
            if (x.t > 0) wmin = std::min(wmin, x.RW.W_extra);
        std::snprintf(buf, sizeof buf, "min W_extra     %.6e\n", wmin);
        o << buf;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "mass drift      %.3e\n", r.conjugate.max_mass_drift);
    o << buf;
    std::snprintf(buf, sizeof buf, "max ||dH||      %.3e\n", r.max_closedness);
    o << buf;
    o << "steady rigidity   " << (r.flags.steady ? "yes" : "no") << " (max residual " << r.flags.max_residual_F
      << ", max field " << r.flags.max_field << ")\n";
    o << "expander rigidity " << (r.flags.expander ? "yes" : "no") << " (final residual " << r.flags.final_expander
      << ")\n";
    if (!r.verification.empty()) o << "\nverification\n" << format_table(r.verification);
    return o.str();
}

PipelineResult run_pipeline(const ScenarioConfig& c, const std::string& output_root) {
    const auto t_start = std::chrono::steady_clock::now();
    PipelineResult res;
    Outputs out;
    if (!c.output_dir.empty()) {
        fs::path p = c.output_dir;
        out.dir = p.is_relative() && !output_root.empty() ? fs::path(output_root) / p : p;
        out.enabled = true;
    } else if (!output_root.empty()) {
        out.dir = fs::path(output_root) / c.name;
        out.enabled = true;
    }
    if (out.enabled) {
        std::error_code ec;
        fs::create_directories(out.dir, ec);
        require(!ec, ErrorKind::Io, "cannot create output directory '" + out.dir.string() + "': " + ec.message());
        if (c.snapshots) fs::create_directories(out.dir / "snapshots", ec);
        res.output_dir = out.dir.string();
    }
    const std::string cfg_text = c.resolved.dump();
    out.manifest = {{"format", "grf-run-1"},
                    {"scenario", c.name},
                    {"config", c.resolved},
                    {"config_hash", hex64(fnv1a(cfg_text))},
                    {"stages", json::array()},
                    {"status", "running"}};
    auto stage = [&](const std::string& name, const std::string& status, json extra = json::object()) {
        extra["stage"] = name;
        extra["status"] = status;
        out.manifest["stages"].push_back(extra);
        out.write_manifest();
    };
    stage("config", "done");

    std::string failed_stage;
    const double n_ent = c.entropy_n > 0 ? c.entropy_n : static_cast<double>(c.d);
    try {
        // forward: the monotonicity pipeline always evolves the ungauged system
        failed_stage = "forward";
        GeometryState s0 = build_initial_state(c);
        std::vector<ConjugateBackground> backgrounds;
        res.forward = integrate(s0, rhs_ungauged, c.integrator, [&](const GeometryState& s) {
            backgrounds.push_back(conjugate_background(s));
        });
        res.max_closedness = res.forward.max_dH;
        json snaps = json::array();
        if (out.enabled && c.snapshots) {
            for (size_t i = 0; i < res.forward.reports.size(); ++i) {
                char name[64];
                std::snprintf(name, sizeof name, "snapshots/state_%04zu.json", i);
                write_state(res.forward.reports[i], (out.dir / name).string());
                snaps.push_back({{"t", res.forward.reports[i].t}, {"file", name}});
            }
        }
        out.manifest["snapshots"] = snaps;
        out.manifest["node_times"] = {{"count", res.forward.node_times.size()},
                                      {"first", res.forward.node_times.empty() ? 0.0 : res.forward.node_times.front()},
                                      {"last", res.forward.node_times.empty() ? 0.0 : res.forward.node_times.back()}};
        stage("forward", res.forward.aborted ? "aborted" : "done",
              {{"steps", res.forward.steps}, {"reports", res.forward.reports.size()},
               {"abort_reason", res.forward.abort_reason}, {"max_dH", res.max_closedness}});

        if (c.variant != Gauge::Ungauged) {
            failed_stage = "variant";
            Field fstatic = Field::scalar(s0.mesh, s0.k());
            if (c.f_amplitude != 0) {
                Rng rng(c.initial.seed + 101);
                fstatic = smooth_field(s0.mesh, {}, s0.k(), c.f_amplitude, rng);
            }
            const Gauge gv = c.variant;
            FlowRun vr = integrate(s0, [&](const GeometryState& s) { return flow_rhs(s, gv, &fstatic); }, c.integrator);
            json vs = json::array();
            if (out.enabled && c.snapshots) {
                for (size_t i = 0; i < vr.reports.size(); ++i) {
                    char name[64];
                    std::snprintf(name, sizeof name, "snapshots/%s_%04zu.json", gauge_name(gv), i);
                    write_state(vr.reports[i], (out.dir / name).string());
                    vs.push_back({{"t", vr.reports[i].t}, {"file", name}});
                }
            }
            out.manifest["variant_snapshots"] = vs;
            res.max_closedness = std::max(res.max_closedness, vr.max_dH);
            stage("variant:" + std::string(gauge_name(gv)), vr.aborted ? "aborted" : "done",
                  {{"steps", vr.steps}, {"abort_reason", vr.abort_reason}, {"max_dH", vr.max_dH}});
        }

        failed_stage = "conjugate";
        ConjugateOptions co;
        co.q_coefficient = c.q_coefficient;
        res.conjugate = solve_backward(backgrounds, co);
        backgrounds.clear();
        stage("conjugate", res.conjugate.aborted ? "aborted" : "done",
              {{"mass_drift", res.conjugate.max_mass_drift}, {"abort_reason", res.conjugate.abort_reason}});

        failed_stage = "functionals";
        const ConjugateTrajectory& tr = res.conjugate;
        size_t j = 0;
        for (const GeometryState& st : res.forward.reports) {
            while (j < tr.t.size() && tr.t[j] < st.t - 1e-12 * std::max(1.0, std::abs(st.t))) ++j;
            if (j >= tr.t.size() || std::abs(tr.t[j] - st.t) > 1e-12 * std::max(1.0, std::abs(st.t))) continue;
            FunctionalReport r;
            r.t = st.t;
            Field f = potential(tr.u[j], st.t, PotentialMode::Steady, n_ent);
            r.F = eval_F(st, f);
            r.RF = residuals_F(st, f);
            if (st.t > 0) {
                Field fe = potential(tr.u[j], st.t, PotentialMode::Expander, n_ent);
                r.W = eval_Wplus(st, fe, st.t, n_ent);
                r.RW = residuals_W(st, fe, st.t, n_ent);
            } else {
                r.W = kNaN;
                r.RW.R1 = r.RW.R2 = r.RW.R3 = r.RW.R4 = r.RW.W_extra = kNaN;
            }
            r.min_eig_G = min_eigenvalue(st.G);
            r.min_eig_g = min_eigenvalue(st.g);
            r.mass_u = tr.mass[j];
            r.rigidity = rigidity_metrics(st, st.t);
            res.series.push_back(r);
        }
        fill_time_derivatives(res.series, 1e-9);
        for (size_t i = 0; i < res.series.size(); ++i) {
            const FunctionalReport& r = res.series[i];
            if (std::isfinite(r.identity_gap_F)) res.max_gap_F = std::max(res.max_gap_F, r.identity_gap_F);
            if (std::isfinite(r.identity_gap_W)) res.max_gap_W = std::max(res.max_gap_W, r.identity_gap_W);
            if (i > 0 && r.F < res.series[i - 1].F - 1e-8) res.F_nondecreasing = false;
            if (i > 0 && std::isfinite(res.series[i - 1].W) && r.W < res.series[i - 1].W - 1e-8)
                res.W_nondecreasing = false;
        }
        if (!res.series.empty()) res.flags = soliton_detect(res.series, c.soliton);
        stage("functionals", "done",
              {{"reports", res.series.size()}, {"max_identity_gap_F", res.max_gap_F},
               {"max_identity_gap_W", res.max_gap_W}, {"F_nondecreasing", res.F_nondecreasing},
               {"W_nondecreasing", res.W_nondecreasing}});

        if (!c.verify_suites.empty()) {
            failed_stage = "verify";
            for (const auto& s : c.verify_suites) {
                auto rows = run_suite(s, c.verify);
                res.verification.insert(res.verification.end(), rows.begin(), rows.end());
            }
            stage("verify", all_pass(res.verification) ? "done" : "failed", {{"checks", res.verification.size()}});
        }
        failed_stage.clear();
    } catch (const Error& e) {
        res.message = "stage " + failed_stage + ": " + e.what();
        stage(failed_stage, "error", {{"error", e.what()}});
    }

    if (!failed_stage.empty() || res.forward.aborted || res.conjugate.aborted) {
        res.exit_code = kExitAbort;
        res.status = "aborted";
        if (res.message.empty())
            res.message = res.forward.aborted ? "forward: " + res.forward.abort_reason
                                              : "conjugate: " + res.conjugate.abort_reason;
    } else if (res.max_gap_F > c.gap_tolerance || !all_pass(res.verification)) {
        res.exit_code = kExitIdentity;
        res.status = "identity-failure";
        std::ostringstream m;
        if (res.max_gap_F > c.gap_tolerance) m << "identity gap F " << res.max_gap_F << " exceeds " << c.gap_tolerance;
        if (!all_pass(res.verification)) m << (m.tellp() > 0 ? "; " : "") << "verification checks failed";
        res.message = m.str();
    } else {
        res.exit_code = kExitClean;
        res.status = "clean";
    }
    res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    if (out.enabled) {
        try {
            if (!res.series.empty()) {
                write_text_file((out.dir / "report.csv").string(), report_csv(res.series));
                write_text_file((out.dir / "entropy.csv").string(), entropy_csv(res.series));
                write_text_file((out.dir / "rigidity.csv").string(), rigidity_csv(res.series));
                write_text_file((out.dir / "u_trajectory.csv").string(), u_csv(res.conjugate, res.series));
            }
            write_text_file((out.dir / "summary.txt").string(), summarize(c, res));
            json files = json::array();
            for (const char* f : {"report.csv", "entropy.csv", "rigidity.csv", "u_trajectory.csv", "summary.txt"})
                if (fs::exists(out.dir / f)) files.push_back(f);
            out.manifest["files"] = files;
        } catch (const Error& e) {
            res.exit_code = kExitAbort;
            res.status = "aborted";
            res.message = std::string("stage outputs: ") + e.what();
        }
        out.manifest["status"] = res.status;
        out.manifest["exit_code"] = res.exit_code;
        out.manifest["message"] = res.message;
        out.manifest["summary"] = {{"max_identity_gap_F", num_or_null(res.max_gap_F)},
                                   {"max_identity_gap_W", num_or_null(res.max_gap_W)},
                                   {"F_nondecreasing", res.F_nondecreasing},
                                   {"W_nondecreasing", res.W_nondecreasing},
                                   {"mass_drift", num_or_null(res.conjugate.max_mass_drift)},
                                   {"max_dH", num_or_null(res.max_closedness)},
                                   {"steady_rigidity", res.flags.steady},
                                   {"expander_rigidity", res.flags.expander},
                                   {"entropy_n", n_ent}};
        out.write_manifest();
    }
    return res;
}

std::string report_run_dir(const std::string& dir, int* exit_code) {
    const fs::path d = dir;
    json m = read_json_file((d / "manifest.json").string());
    std::ostringstream o;
    o << "run directory   " << d.string() << "\n";
    o << "scenario        " << m.value("scenario", std::string("?")) << "\n";
    o << "status          " << m.value("status", std::string("?"));
    if (m.contains("exit_code")) o << " (exit " << m["exit_code"].get<int>() << ")";
    o << "\n";
    if (m.contains("message") && !m["message"].get<std::string>().empty())
        o << "message         " << m["message"].get<std::string>() << "\n";
    o << "stages         ";
    for (const auto& s : m["stages"]) o << " " << s.value("stage", std::string("?")) << "=" << s.value("status", "?");
    o << "\n";

    const fs::path csv = d / "report.csv";
    if (fs::exists(csv)) {
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line);
        require(line == kReportColumns, ErrorKind::Io, csv.string() + ": unexpected header");
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) row.push_back(cell == "nan" ? kNaN : std::stod(cell));
            rows.push_back(row);
        }
        if (!rows.empty()) {
            bool mono = true;
            double gap = 0;
            for (size_t i = 0; i < rows.size(); ++i) {
                if (i > 0 && rows[i][1] < rows[i - 1][1] - 1e-8) mono = false;
                if (std::isfinite(rows[i][9])) gap = std::max(gap, rows[i][9]);
            }
            char buf[256];
            std::snprintf(buf, sizeof buf, "reports         %zu, t in [%g, %g]\n", rows.size(), rows.front()[0],
                          rows.back()[0]);
            o << buf;
            std::snprintf(buf, sizeof buf, "F               %.10g -> %.10g (%s)\n", rows.front()[1], rows.back()[1],
                          mono ? "nondecreasing" : "NOT monotone");
            o << buf;
            std::snprintf(buf, sizeof buf, "W+ (final)      %.10g\n", rows.back()[2]);
            o << buf;
            std::snprintf(buf, sizeof buf, "identity gap F  %.3e\n", gap);
            o << buf;
            std::snprintf(buf, sizeof buf, "mass_u          %.12g -> %.12g\n", rows.front()[13], rows.back()[13]);
            o << buf;
        }
    } else {
        o << "no report.csv (no functional reports were produced)\n";
    }
    if (exit_code) *exit_code = m.value("exit_code", 1);
    return o.str();
}

}  // namespace grf
