#include "grf/grf.h"

#include <cstring>
#include <string>

#include "scenario.hpp"
#include "snapshot.hpp"

struct grf_config {
    grf::ScenarioConfig cfg;
    std::string json;
};

struct grf_run {
    grf::ScenarioConfig cfg;
    grf::PipelineResult res;
    std::string summary;
};

struct grf_verify {
    std::vector<grf::CheckResult> rows;
    std::string table;
};

namespace {

thread_local std::string g_last_error;

grf_status to_status(grf::ErrorKind k) {
    switch (k) {
        case grf::ErrorKind::Structural: return GRF_ERR_STRUCTURAL;
        case grf::ErrorKind::Domain: return GRF_ERR_DOMAIN;
        case grf::ErrorKind::Validation: return GRF_ERR_VALIDATION;
        case grf::ErrorKind::Config: return GRF_ERR_CONFIG;
        case grf::ErrorKind::Io: return GRF_ERR_IO;
        case grf::ErrorKind::Abort: return GRF_ERR_ABORT;
    }
    return GRF_ERR_INTERNAL;
}

grf_status set_error(grf_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <class F>
grf_status guarded(F&& body) {
    try {
        body();
        return GRF_OK;
    } catch (const grf::Error& e) {
        return set_error(to_status(e.kind()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return set_error(GRF_ERR_CONFIG, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(GRF_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(GRF_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(GRF_ERR_INTERNAL, "unknown exception");
    }
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

grf_status null_arg(const char* what) { return set_error(GRF_ERR_ARGUMENT, std::string(what) + " is null"); }

grf_config* wrap(grf::ScenarioConfig c) {
    auto* h = new grf_config{std::move(c), {}};
    h->json = h->cfg.resolved.dump(2);
    return h;
}

}  // namespace

extern "C" {

const char* grf_last_error(void) { return g_last_error.c_str(); }
const char* grf_version(void) { return "0.1.0"; }

const char* grf_status_name(grf_status s) {
    switch (s) {
        case GRF_OK: return "ok";
        case GRF_ERR_STRUCTURAL: return "structural";
        case GRF_ERR_DOMAIN: return "domain";
        case GRF_ERR_VALIDATION: return "validation";
        case GRF_ERR_CONFIG: return "config";
        case GRF_ERR_IO: return "io";
        case GRF_ERR_ABORT: return "abort";
        case GRF_ERR_ARGUMENT: return "argument";
        case GRF_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

size_t grf_preset_count(void) { return grf::preset_names().size(); }

const char* grf_preset_name(size_t i) {
    const auto& n = grf::preset_names();
    return i < n.size() ? n[i].c_str() : nullptr;
}

grf_status grf_preset_json(const char* name, char** json_out) {
    if (!name) return null_arg("name");
    if (!json_out) return null_arg("json_out");
    return guarded([&] { *json_out = dup_string(grf::preset_json(name).dump(2)); });
}

grf_status grf_config_load(const char* path, grf_config** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] { *out = wrap(grf::load_config(path)); });
}

grf_status grf_config_parse(const char* json_text, grf_config** out) {
    if (!json_text) return null_arg("json_text");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::parse_error& e) {
            grf::fail(grf::ErrorKind::Config, std::string("config: JSON parse error: ") + e.what());
        }
        *out = wrap(grf::config_from_json(j));
    });
}

grf_status grf_config_preset(const char* name, grf_config** out) {
    if (!name) return null_arg("name");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] { *out = wrap(grf::config_from_json(grf::preset_json(name), name)); });
}

const char* grf_config_name(const grf_config* c) { return c ? c->cfg.name.c_str() : nullptr; }
const char* grf_config_json(const grf_config* c) { return c ? c->json.c_str() : nullptr; }
void grf_config_free(grf_config* c) { delete c; }

grf_status grf_run_pipeline(const grf_config* c, const char* output_root, grf_run** out) {
    if (!c) return null_arg("config");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        auto* r = new grf_run{c->cfg, {}, {}};
        try {
            r->res = grf::run_pipeline(c->cfg, output_root ? output_root : "");
            r->summary = grf::summarize(r->cfg, r->res);
        } catch (...) {
            delete r;
            throw;
        }
        *out = r;
    });
}

int grf_run_exit_code(const grf_run* r) { return r ? r->res.exit_code : GRF_EXIT_ABORT; }
const char* grf_run_status(const grf_run* r) { return r ? r->res.status.c_str() : nullptr; }
const char* grf_run_message(const grf_run* r) { return r ? r->res.message.c_str() : nullptr; }
const char* grf_run_output_dir(const grf_run* r) { return r ? r->res.output_dir.c_str() : nullptr; }
const char* grf_run_summary(const grf_run* r) { return r ? r->summary.c_str() : nullptr; }

grf_status grf_run_stats_get(const grf_run* r, grf_run_stats* out) {
    if (!r) return null_arg("run");
    if (!out) return null_arg("out");
    const grf::PipelineResult& p = r->res;
    out->max_gap_F = p.max_gap_F;
    out->max_gap_W = p.max_gap_W;
    out->mass_drift = p.conjugate.max_mass_drift;
    out->max_dH = p.max_closedness;
    out->runtime_s = p.runtime_s;
    out->forward_steps = p.forward.steps;
    out->F_nondecreasing = p.F_nondecreasing;
    out->W_nondecreasing = p.W_nondecreasing;
    out->steady_rigidity = p.flags.steady;
    out->expander_rigidity = p.flags.expander;
    return GRF_OK;
}

size_t grf_run_report_count(const grf_run* r) { return r ? r->res.series.size() : 0; }

grf_status grf_run_report(const grf_run* r, size_t i, grf_report_row* out) {
    if (!r) return null_arg("run");
    if (!out) return null_arg("out");
    if (i >= r->res.series.size()) return set_error(GRF_ERR_ARGUMENT, "report index out of range");
    const grf::FunctionalReport& x = r->res.series[i];
    *out = {x.t,        x.F,           x.W,           x.RF.R1,     x.RF.R2,     x.RF.R3, x.RF.R4, x.RW.W_extra,
            x.dF_dt_fd, x.identity_gap_F, x.identity_gap_W, x.min_eig_G, x.min_eig_g, x.mass_u};
    return GRF_OK;
}

void grf_run_free(grf_run* r) { delete r; }

const char* grf_report_columns(void) { return grf::kReportColumns; }

grf_status grf_report_dir(const char* dir, char** text, int* recorded_exit_code) {
    if (!dir) return null_arg("dir");
    if (!text) return null_arg("text");
    *text = nullptr;
    return guarded([&] {
        int code = GRF_EXIT_ABORT;
        std::string s = grf::report_run_dir(dir, &code);
        *text = dup_string(s);
        if (recorded_exit_code) *recorded_exit_code = code;
    });
}

grf_status grf_verify_run(const char* suite, uint64_t seed, int mesh, grf_verify** out) {
    if (!suite) return null_arg("suite");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        grf::VerifyOptions opt;
        opt.seed = seed;
        opt.mesh = mesh;
        auto* v = new grf_verify{grf::run_suite(suite, opt), {}};
        v->table = grf::format_table(v->rows);
        *out = v;
    });
}

size_t grf_verify_count(const grf_verify* v) { return v ? v->rows.size() : 0; }

grf_status grf_verify_check(const grf_verify* v, size_t i, grf_check* out) {
    if (!v) return null_arg("verify");
    if (!out) return null_arg("out");
    if (i >= v->rows.size()) return set_error(GRF_ERR_ARGUMENT, "check index out of range");
    const grf::CheckResult& c = v->rows[i];
    *out = {c.suite.c_str(), c.name.c_str(), c.value, c.threshold, c.pass ? 1 : 0, c.detail.c_str()};
    return GRF_OK;
}

int grf_verify_all_pass(const grf_verify* v) { return v && grf::all_pass(v->rows) ? 1 : 0; }
const char* grf_verify_table(const grf_verify* v) { return v ? v->table.c_str() : nullptr; }
void grf_verify_free(grf_verify* v) { delete v; }

void grf_string_free(char* s) { std::free(s); }

}  // extern "C"
