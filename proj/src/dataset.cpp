#include "rms/dataset.hpp"

#include <cmath>

#include "rms/scenario_io.hpp"

namespace rms {

using nlohmann::json;

namespace {

const char* distribution_name(TaskTimeDistribution d) {
    switch (d) {
        case TaskTimeDistribution::deterministic:
            return "deterministic";
        case TaskTimeDistribution::lognormal:
            return "lognormal";
        case TaskTimeDistribution::triangular:
            return "triangular";
    }
    return "deterministic";
}

TaskTimeDistribution distribution_from(const std::string& s) {
    if (s == "deterministic") return TaskTimeDistribution::deterministic;
    if (s == "lognormal") return TaskTimeDistribution::lognormal;
    if (s == "triangular") return TaskTimeDistribution::triangular;
    throw InputError("unknown task time distribution '" + s + "'");
}

template <class T>
T get(const json& j, const char* key) {
    if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const AlgorithmParams& p) {
    return {{"population_size", p.population_size}, {"max_generations", p.max_generations},
            {"crossover_prob", p.crossover_prob},   {"mutation_prob", p.mutation_prob},
            {"tournament_size", p.tournament_size}, {"seed", p.seed}};
}

AlgorithmParams params_from_json(const json& j) {
    AlgorithmParams p;
    p.population_size = get<int>(j, "population_size");
    p.max_generations = get<int>(j, "max_generations");
    p.crossover_prob = get<double>(j, "crossover_prob");
    p.mutation_prob = get<double>(j, "mutation_prob");
    p.tournament_size = get<int>(j, "tournament_size");
    p.seed = get<std::uint64_t>(j, "seed");
    return p;
}

json to_json(const SimulationConfig& s) {
    return {{"horizon", s.horizon},
            {"warmup", s.warmup},
            {"replications", s.replications},
            {"seed", s.seed},
            {"task_time_distribution", distribution_name(s.task_time_distribution)},
            {"cv_override", s.cv_override},
            {"sequencing", s.sequencing == VariantSequencing::bernoulli ? "bernoulli" : "interleaved"}};
}

SimulationConfig sim_from_json(const json& j) {
    SimulationConfig s;
    s.horizon = get<double>(j, "horizon");
    s.warmup = get<double>(j, "warmup");
    s.replications = get<int>(j, "replications");
    s.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("task_time_distribution"))
        s.task_time_distribution = distribution_from(get<std::string>(j, "task_time_distribution"));
    if (j.contains("cv_override")) s.cv_override = get<double>(j, "cv_override");
    if (j.contains("sequencing")) {
        const auto q = get<std::string>(j, "sequencing");
        if (q == "bernoulli")
            s.sequencing = VariantSequencing::bernoulli;
        else if (q == "interleaved")
            s.sequencing = VariantSequencing::interleaved;
        else
            throw InputError("unknown sequencing '" + q + "'");
    }
    return s;
}

std::string scenario_label(const RunArchive& archive) {
    return "NO=" + std::to_string(archive.instance.total_resources) + " " + fpm::mix_label(archive.instance.mix) + " " +
           archive.algorithm;
}

json dataset_to_json(const RunArchive& archive) {
    std::vector<int> final_rank(archive.solutions.size(), 0);
    if (!archive.generations.empty()) {
        const auto& last = archive.generations.back();
        for (std::size_t i = 0; i < last.size() && i < archive.final_ranks.size(); ++i)
            final_rank[static_cast<std::size_t>(last[i])] = archive.final_ranks[i];
    }
    json solutions = json::array();
    for (const auto& s : archive.solutions) {
        solutions.push_back({{"id", s.id},
                             {"generation", s.generation},
                             {"chromosome", s.chromosome.keys},
                             {"feasible", s.result.feasible},
                             {"configuration", s.config ? to_json(*s.config) : json(nullptr)},
                             {"objectives",
                              {{"thp", s.result.thp},
                               {"thp_stderr", s.result.thp_stderr},
                               {"tbc", s.result.tbc},
                               {"per_replication", s.result.per_replication}}},
                             {"rank", final_rank[static_cast<std::size_t>(s.id)]}});
    }
    const RunArchive* self = &archive;
    const Normalization norm = shared_normalization(std::span<const RunArchive* const>(&self, 1));
    const auto curve = hypervolume_curve(archive, norm);
    json series = json::array();
    for (std::size_t g = 0; g < curve.size(); ++g) series.push_back({g, curve[g]});
    return {{"schema", kSchemaVersion},
            {"kind", "rms-dataset"},
            {"algorithm", archive.algorithm},
            {"label", {{"operators", archive.instance.total_resources}, {"mix", fpm::mix_label(archive.instance.mix)}}},
            {"instance_hash", archive.instance_hash},
            {"instance", to_json(archive.instance)},
            {"params", to_json(archive.params)},
            {"sim", to_json(archive.sim)},
            {"seed", archive.params.seed},
            {"solutions", std::move(solutions)},
            {"generations", archive.generations},
            {"final_ranks", archive.final_ranks},
            {"final_front", archive.final_front},
            {"hv",
             {{"ideal", {norm.ideal.x, norm.ideal.y}},
              {"nadir", {norm.nadir.x, norm.nadir.y}},
              {"ref", {1.1, 1.1}},
              {"series", std::move(series)}}}};
}

RunArchive dataset_from_json(const json& doc) {
    if (!doc.is_object() || doc.value("kind", "") != "rms-dataset") throw InputError("not a dataset document");
    if (get<int>(doc, "schema") != kSchemaVersion) throw InputError("unsupported dataset schema");
    RunArchive a;
    a.algorithm = get<std::string>(doc, "algorithm");
    a.instance = instance_from_json(doc.at("instance"));
    a.instance_hash = get<std::string>(doc, "instance_hash");
    if (a.instance_hash != instance_hash(a.instance))
        throw InputError("dataset instance hash does not match its scenario");
    if (auto v = validate_instance(a.instance); !v.empty())
        throw InputError("embedded scenario invalid: " + v.front().message);
    a.params = params_from_json(doc.at("params"));
    a.sim = sim_from_json(doc.at("sim"));
    for (const auto& sj : doc.at("solutions")) {
        SolutionRecord s;
        s.id = get<long long>(sj, "id");
        if (s.id != static_cast<long long>(a.solutions.size()))
            throw InputError("dataset solution ids must be 0..n-1 in order");
        s.generation = get<int>(sj, "generation");
        s.chromosome.keys = get<std::vector<double>>(sj, "chromosome");
        if (s.chromosome.size() != a.instance.chromosome_length())
            throw InputError("solution " + std::to_string(s.id) + " chromosome length mismatch");
        const auto& obj = sj.at("objectives");
        s.result.feasible = get<bool>(sj, "feasible");
        s.result.thp = get<double>(obj, "thp");
        s.result.thp_stderr = get<double>(obj, "thp_stderr");
        s.result.tbc = get<int>(obj, "tbc");
        s.result.per_replication = get<std::vector<double>>(obj, "per_replication");
        if (!sj.at("configuration").is_null()) {
            s.config = configuration_from_json(sj.at("configuration"), a.instance);
            if (auto v = check_configuration(a.instance, *s.config); !v.empty())
                throw InputError("solution " + std::to_string(s.id) + " violates " + v.front().code + ": " +
                                 v.front().message);
        }
        a.solutions.push_back(std::move(s));
    }
    a.generations = get<std::vector<std::vector<long long>>>(doc, "generations");
    a.final_ranks = get<std::vector<int>>(doc, "final_ranks");
    a.final_front = get<std::vector<long long>>(doc, "final_front");
    const auto n = static_cast<long long>(a.solutions.size());
    for (const auto& g : a.generations)
        for (long long id : g)
            if (id < 0 || id >= n) throw InputError("generation references unknown solution " + std::to_string(id));
    for (long long id : a.final_front)
        if (id < 0 || id >= n) throw InputError("final front references unknown solution " + std::to_string(id));
    return a;
}

RunArchive load_dataset(const std::filesystem::path& path) {
    try {
        return dataset_from_json(read_json_file(path));
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void save_dataset(const std::filesystem::path& path, const RunArchive& archive) {
    write_json_file(path, dataset_to_json(archive), -1);
}

json to_json(const fpm::Rule& r) {
    return {{"variable", r.variable}, {"relation", fpm::relation_code(r.relation)}, {"threshold", r.threshold}};
}

fpm::Rule rule_from_json(const json& j) {
    return {get<std::string>(j, "variable"), fpm::relation_from_code(get<std::string>(j, "relation")),
            get<double>(j, "threshold")};
}

json to_json(const fpm::RuleInteraction& ri) {
    json rules = json::array();
    for (const auto& r : ri.rules) rules.push_back(to_json(r));
    return {{"rules", std::move(rules)},
            {"text", fpm::to_text(ri.rules)},
            {"significance", ri.significance},
            {"unsignificance", ri.unsignificance},
            {"level", ri.level()}};
}

fpm::RuleInteraction interaction_from_json(const json& j) {
    fpm::RuleInteraction ri;
    for (const auto& r : j.at("rules")) ri.rules.push_back(rule_from_json(r));
    ri.significance = j.value("significance", 0.0);
    ri.unsignificance = j.value("unsignificance", 0.0);
    return ri;
}

json rules_document(const std::vector<fpm::RuleInteraction>& interactions) {
    json list = json::array();
    for (const auto& ri : interactions) list.push_back(to_json(ri));
    return {{"schema", kSchemaVersion}, {"kind", "rms-rules"}, {"interactions", std::move(list)}};
}

json mining_document(const fpm::MiningResult& result, std::size_t selected_rows, std::size_t unselected_rows) {
    json doc = rules_document(result.interactions);
    doc["selected_rows"] = selected_rows;
    doc["unselected_rows"] = unselected_rows;
    doc["candidates"] = result.candidates;
    doc["truncated"] = result.truncated;
    return doc;
}

std::vector<fpm::RuleInteraction> interactions_from_document(const json& doc, const std::string& group) {
    const std::string kind = doc.value("kind", "");
    std::vector<fpm::RuleInteraction> out;
    if (kind == "rms-rules") {
        for (const auto& j : doc.at("interactions")) out.push_back(interaction_from_json(j));
        return out;
    }
    if (kind == "rms-rule-report") {
        bool found = group.empty();
        for (const auto& g : doc.at("groups")) {
            if (!group.empty() && g.value("key", "") != group) continue;
            found = true;
            for (const auto& j : g.at("interactions")) out.push_back(interaction_from_json(j));
        }
        if (!found) throw InputError("rule report has no group '" + group + "'");
        return out;
    }
    throw InputError("not a rules document");
}

}  // namespace rms
