#include "snapshot.hpp"

#include <fstream>
#include <sstream>

namespace grf {

using nlohmann::json;

namespace {
json field_json(const Field& f) { return f.values(); }

void load_values(Field& f, const json& j, const std::string& what) {
    require(j.is_array(), ErrorKind::Io, what + ": expected an array of numbers");
    require(j.size() == f.values().size(), ErrorKind::Io,
            what + ": expected " + std::to_string(f.values().size()) + " values, found " + std::to_string(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_number(), ErrorKind::Io, what + ": non-numeric entry at index " + std::to_string(i));
        f.values()[i] = j[i].get<double>();
    }
    f.enforce_symmetry();
}
}  // namespace

json state_to_json(const GeometryState& s) {
    const Mesh& m = *s.mesh;
    json j;
    j["format"] = "grf-state-1";
    j["t"] = s.t;
    j["k"] = s.k();
    j["mesh"] = {{"n", std::vector<int>(m.n.begin(), m.n.begin() + m.d)},
                 {"L", std::vector<double>(m.L.begin(), m.L.begin() + m.d)}};
    j["structure_constants"] = s.alg.c;
    j["fields"] = {{"G", field_json(s.G)}, {"g", field_json(s.g)}, {"A", field_json(s.A)}, {"H", field_json(s.H)}};
    return j;
}

GeometryState state_from_json(const json& j, const std::string& origin) {
    try {
        const int k = j.at("k").get<int>();
        auto n = j.at("mesh").at("n").get<std::vector<int>>();
        auto L = j.at("mesh").at("L").get<std::vector<double>>();
        require(n.size() == L.size() && (n.size() == 1 || n.size() == 2), ErrorKind::Io,
                origin + ": mesh.n and mesh.L must both have 1 or 2 entries");
        auto mesh = Mesh::make(static_cast<int>(n.size()), {n[0], n.size() > 1 ? n[1] : 1},
                               {L[0], L.size() > 1 ? L[1] : 1.0});
        LieAlgebra alg = LieAlgebra::from_constants(k, j.at("structure_constants").get<std::vector<double>>());
        GeometryState s = GeometryState::trivial(alg, mesh);
        s.t = j.value("t", 0.0);
        const json& f = j.at("fields");
        load_values(s.G, f.at("G"), origin + ": fields.G");
        load_values(s.g, f.at("g"), origin + ": fields.g");
        load_values(s.A, f.at("A"), origin + ": fields.A");
        load_values(s.H, f.at("H"), origin + ": fields.H");
        return s;
    } catch (const json::exception& e) {
        fail(ErrorKind::Io, origin + ": malformed state file (" + e.what() + ")");
    }
}

void write_state(const GeometryState& s, const std::string& path) { write_text_file(path, state_to_json(s).dump()); }

GeometryState read_state(const std::string& path) { return state_from_json(read_json_file(path), path); }

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Io, "cannot open '" + path + "' for reading");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, path + ": JSON parse error: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::Io, "cannot open '" + path + "' for writing");
    out << text;
    out.close();
    require(!out.fail(), ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace grf
