#include "rms/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rms {

using nlohmann::json;

namespace {

json matrix_to_json(const BoolMatrix& m) {
    json rows = json::array();
    for (const auto& row : m) {
        json r = json::array();
        for (bool b : row) r.push_back(b ? 1 : 0);
        rows.push_back(std::move(r));
    }
    return rows;
}

BoolMatrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw InputError(what + " must be a nested array");
    BoolMatrix m;
    for (const auto& row : j) {
        if (!row.is_array()) throw InputError(what + " rows must be arrays");
        std::vector<bool> r;
        for (const auto& x : row) {
            if (x.is_boolean())
                r.push_back(x.get<bool>());
            else if (x.is_number_integer())
                r.push_back(x.get<int>() != 0);
            else
                throw InputError(what + " entries must be 0/1");
        }
        m.push_back(std::move(r));
    }
    return m;
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? field<T>(j, key) : fallback;
}

}  // namespace

json to_json(const ProblemInstance& inst) {
    json variants = json::array();
    for (const auto& v : inst.variants) {
        json tasks = json::array();
        for (const auto& t : v.tasks) tasks.push_back({{"id", t.id}, {"time", t.nominal_time}});
        variants.push_back({{"id", v.id},
                            {"tasks", std::move(tasks)},
                            {"precedence", matrix_to_json(v.precedence)},
                            {"tech_req", matrix_to_json(v.tech_req)}});
    }
    const auto& s = inst.stochastic;
    return {{"schema", kSchemaVersion},
            {"kind", "rms-scenario"},
            {"name", inst.name},
            {"num_stations", inst.num_stations},
            {"total_resources", inst.total_resources},
            {"min_resources_per_ws", inst.min_resources_per_ws},
            {"max_resources_per_ws", inst.max_resources_per_ws},
            {"buffer_min", inst.buffer_min},
            {"buffer_max", inst.buffer_max},
            {"buffer_unit", inst.buffer_unit},
            {"stochastic",
             {{"availability", s.availability},
              {"mttr", s.mttr},
              {"task_time_cv", s.task_time_cv},
              {"setup_time", s.setup_time},
              {"handling_time", s.handling_time}}},
            {"mix", inst.mix.proportions},
            {"variants", std::move(variants)}};
}

ProblemInstance instance_from_json(const json& doc) {
    if (!doc.is_object()) throw InputError("scenario must be an object");
    const int schema = field<int>(doc, "schema");
    if (schema != kSchemaVersion) throw InputError("unsupported scenario schema " + std::to_string(schema));
    ProblemInstance inst;
    inst.name = field_or<std::string>(doc, "name", "");
    inst.num_stations = field<int>(doc, "num_stations");
    inst.total_resources = field<int>(doc, "total_resources");
    inst.min_resources_per_ws = field<int>(doc, "min_resources_per_ws");
    inst.max_resources_per_ws = field<int>(doc, "max_resources_per_ws");
    inst.buffer_min = field<int>(doc, "buffer_min");
    inst.buffer_max = field<int>(doc, "buffer_max");
    inst.buffer_unit = field_or<int>(doc, "buffer_unit", 1);
    if (doc.contains("stochastic")) {
        const auto& s = doc.at("stochastic");
        inst.stochastic.availability = field_or<double>(s, "availability", 1.0);
        inst.stochastic.mttr = field_or<double>(s, "mttr", 0.0);
        inst.stochastic.task_time_cv = field_or<double>(s, "task_time_cv", 0.0);
        inst.stochastic.setup_time = field_or<double>(s, "setup_time", 0.0);
        inst.stochastic.handling_time = field_or<double>(s, "handling_time", 0.0);
    }
    inst.mix.proportions = field<std::vector<double>>(doc, "mix");
    const auto& variants = doc.at("variants");
    if (!variants.is_array()) throw InputError("'variants' must be an array");
    for (const auto& vj : variants) {
        Variant v;
        v.id = field<std::string>(vj, "id");
        for (const auto& tj : vj.at("tasks"))
            v.tasks.push_back({field<std::string>(tj, "id"), field<double>(tj, "time")});
        const std::size_t nt = v.tasks.size();
        v.precedence = vj.contains("precedence") ? matrix_from_json(vj.at("precedence"), "precedence")
                                                 : BoolMatrix(nt, std::vector<bool>(nt, false));
        v.tech_req = vj.contains("tech_req") ? matrix_from_json(vj.at("tech_req"), "tech_req")
                                             : BoolMatrix(static_cast<std::size_t>(std::max(inst.num_stations, 0)),
                                                          std::vector<bool>(nt, true));
        inst.variants.push_back(std::move(v));
    }
    return inst;
}

json to_json(const RmsConfiguration& cfg) {
    return {{"resources", cfg.resources_per_ws}, {"assignment", cfg.assignment}, {"buffers", cfg.buffers}};
}

RmsConfiguration configuration_from_json(const json& doc, const ProblemInstance& inst) {
    RmsConfiguration cfg;
    cfg.resources_per_ws = field<std::vector<int>>(doc, "resources");
    cfg.assignment = field<std::vector<std::vector<int>>>(doc, "assignment");
    cfg.buffers = field<std::vector<int>>(doc, "buffers");
    if (cfg.assignment.size() != inst.variants.size()) throw InputError("assignment variant count mismatch");
    for (std::size_t v = 0; v < inst.variants.size(); ++v)
        if (cfg.assignment[v].size() != inst.variants[v].num_tasks())
            throw InputError("assignment of variant " + std::to_string(v) + " has wrong task count");
    compute_workload(inst, cfg);
    return cfg;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string content_hash(const json& doc) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
    return buf;
}

std::string instance_hash(const ProblemInstance& inst) {
    return content_hash(to_json(inst));
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc, int indent) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << doc.dump(indent) << '\n';
    if (!out) throw InputError("write failed for " + path.string());
}

ProblemInstance load_scenario(const std::filesystem::path& path) {
    return instance_from_json(read_json_file(path));
}

void save_scenario(const std::filesystem::path& path, const ProblemInstance& inst) {
    write_json_file(path, to_json(inst));
}

}  // namespace rms
