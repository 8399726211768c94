#include "rms/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rms/dataset.hpp"
#include "rms/fpm.hpp"
#include "rms/report.hpp"
#include "rms/scenario_io.hpp"
#include "rms/service.hpp"

namespace rms::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Validation failure carrying a printable list.
struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out;
};

struct RunFlags {
    int population = 50;
    int generations = 500;
    double crossover = 0.9;
    double mutation = 0.1;
    int tournament = 2;
    double horizon_hours = 100.0;
    double warmup_hours = 10.0;
    int replications = 3;
    std::string distribution = "deterministic";
    double cv = -1.0;
    std::string sequencing = "interleaved";
    bool baseline = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--pop", f.population, "Population size NP")->capture_default_str();
    cmd->add_option("--generations", f.generations, "Generations G_max")->capture_default_str();
    cmd->add_option("--cp", f.crossover, "Crossover probability per pair")->capture_default_str();
    cmd->add_option("--mp", f.mutation, "Mutation probability per individual")->capture_default_str();
    cmd->add_option("--tournament", f.tournament, "Tournament size")->capture_default_str();
    cmd->add_option("--horizon", f.horizon_hours, "Simulated hours per replication")->capture_default_str();
    cmd->add_option("--warmup", f.warmup_hours, "Warmup hours")->capture_default_str();
    cmd->add_option("--replications", f.replications, "Replications per evaluation")->capture_default_str();
    cmd->add_option("--distribution", f.distribution, "Task time distribution")
        ->check(CLI::IsMember({"deterministic", "lognormal", "triangular"}))
        ->capture_default_str();
    cmd->add_option("--cv", f.cv, "Task time cv override (negative keeps the scenario's)")->capture_default_str();
    cmd->add_option("--sequencing", f.sequencing, "Variant release rule")
        ->check(CLI::IsMember({"interleaved", "bernoulli"}))
        ->capture_default_str();
    cmd->add_flag("--baseline", f.baseline, "Use the rounding decoder with greedy repair");
}

AlgorithmParams to_params(const RunFlags& f, const Globals& g) {
    AlgorithmParams p;
    p.population_size = f.population;
    p.max_generations = f.generations;
    p.crossover_prob = f.crossover;
    p.mutation_prob = f.mutation;
    p.tournament_size = f.tournament;
    p.seed = g.seed;
    p.jobs = g.jobs;
    validate(p);
    return p;
}

SimulationConfig to_sim(const RunFlags& f, const Globals& g) {
    SimulationConfig s;
    s.horizon = f.horizon_hours * 3600.0;
    s.warmup = f.warmup_hours * 3600.0;
    s.replications = f.replications;
    s.seed = g.seed;
    s.task_time_distribution = f.distribution == "lognormal"    ? TaskTimeDistribution::lognormal
                               : f.distribution == "triangular" ? TaskTimeDistribution::triangular
                                                                : TaskTimeDistribution::deterministic;
    s.cv_override = f.cv;
    s.sequencing = f.sequencing == "bernoulli" ? VariantSequencing::bernoulli : VariantSequencing::interleaved;
    validate(s);
    return s;
}

ProductionMix parse_mix(const std::string& text, std::size_t variants) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '/')) {
        try {
            std::size_t pos = 0;
            parts.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError("mix '" + text + "' is not a list like 30/70");
        }
    }
    if (parts.size() != variants)
        throw InputError("mix '" + text + "' has " + std::to_string(parts.size()) + " shares for " +
                         std::to_string(variants) + " variants");
    double sum = 0.0;
    for (double p : parts) {
        if (p < 0.0) throw InputError("mix '" + text + "' has a negative share");
        sum += p;
    }
    if (!(sum > 0.0)) throw InputError("mix '" + text + "' sums to zero");
    ProductionMix mix;
    for (double p : parts) mix.proportions.push_back(p / sum);
    return mix;
}

void require_valid(const ProblemInstance& inst) {
    const auto v = validate_instance(inst);
    if (v.empty()) return;
    std::string msg = "scenario '" + inst.name + "' is invalid:";
    for (const auto& x : v) msg += "\n  [" + x.code + "] " + x.message;
    throw ValidationFailure(msg);
}

std::string file_label(const std::string& algorithm, const ProblemInstance& inst) {
    std::string mix = fpm::mix_label(inst.mix);
    std::replace(mix.begin(), mix.end(), '/', '-');
    return "NO" + std::to_string(inst.total_resources) + "_" + mix + "_" + algorithm;
}

RunArchive run(const ProblemInstance& inst, const RunFlags& f, const Globals& g, int jobs) {
    AlgorithmParams p = to_params(f, g);
    p.jobs = jobs;
    return run_nsga(inst, p, to_sim(f, g), f.baseline ? DecoderKind::naive_rounding : DecoderKind::priority_key);
}

void print_summaries(std::ostream& out, const std::vector<FrontSummary>& rows) {
    out << "Throughput and buffer capacity ranges (final non-dominated set)\n" << ranges_table(rows) << '\n';
    out << "Configuration and task allocation (final non-dominated set)\n" << configuration_table(rows);
}

struct LoadedDataset {
    std::string source;
    RunArchive archive;
};

std::vector<LoadedDataset> load_all(const std::vector<std::string>& paths) {
    std::vector<LoadedDataset> out;
    std::set<std::string> taken;
    for (const auto& p : paths) {
        std::string stem = fs::path(p).stem().string();
        std::string source = stem;
        for (int n = 2; taken.contains(source); ++n) source = stem + "-" + std::to_string(n);
        taken.insert(source);
        out.push_back({source, load_dataset(p)});
    }
    return out;
}

std::string percent(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << v * 100.0 << '%';
    return os.str();
}

// Code points, so "∧" and "≠" count as one column.
std::size_t display_width(const std::string& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) {
    const std::size_t w = display_width(s);
    return w >= width ? s : s + std::string(width - w, ' ');
}

void print_rules(std::ostream& out, const std::vector<fpm::RuleInteraction>& list, std::size_t top) {
    const std::size_t n = top == 0 ? list.size() : std::min(top, list.size());
    std::size_t width = 4;
    for (std::size_t i = 0; i < n; ++i) width = std::max(width, display_width(fpm::to_text(list[i].rules)));
    out << "  #    " << pad("Rule", width) << "  Sig      Unsig\n";
    for (std::size_t i = 0; i < n; ++i) {
        out << "  " << pad(std::to_string(i + 1), 5) << pad(fpm::to_text(list[i].rules), width) << "  "
            << pad(percent(list[i].significance), 9) << percent(list[i].unsignificance) << '\n';
    }
    if (n < list.size()) out << "  ... " << list.size() - n << " more in the rules file\n";
}

fs::path out_path(const Globals& g, const std::string& fallback) {
    return g.out.empty() ? fs::path(fallback) : fs::path(g.out);
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
    ensure_parent(p);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

// --- commands -------------------------------------------------------------

struct OptimizeArgs {
    std::string scenario;
    RunFlags flags;
    int operators = 0;
    std::string mix;
};

int cmd_optimize(const OptimizeArgs& a, const Globals& g, std::ostream& out) {
    ProblemInstance inst = load_scenario(a.scenario);
    if (a.operators > 0) inst.total_resources = a.operators;
    if (!a.mix.empty()) inst.mix = parse_mix(a.mix, inst.variants.size());
    require_valid(inst);
    const RunArchive archive = run(inst, a.flags, g, g.jobs);
    const fs::path path = out_path(g, file_label(archive.algorithm, inst) + ".json");
    ensure_parent(path);
    save_dataset(path, archive);
    out << "wrote " << path.string() << " (" << archive.solutions.size() << " solutions, final front "
        << archive.final_front.size() << ")\n\n";
    print_summaries(out, {summarize_front(archive)});
    return ok;
}

struct SweepArgs {
    std::string scenario;
    RunFlags flags;
    std::vector<int> operators;
    std::vector<std::string> mixes;
};

int cmd_sweep(const SweepArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    const ProblemInstance base = load_scenario(a.scenario);
    std::vector<int> ops = a.operators.empty() ? std::vector<int>{base.total_resources} : a.operators;
    std::vector<ProblemInstance> jobs;
    for (int o : ops) {
        std::vector<ProductionMix> mixes;
        if (a.mixes.empty()) mixes.push_back(base.mix);
        for (const auto& m : a.mixes) mixes.push_back(parse_mix(m, base.variants.size()));
        for (const auto& mix : mixes) {
            ProblemInstance inst = base;
            inst.total_resources = o;
            inst.mix = mix;
            if (const auto v = validate_instance(inst); !v.empty()) {
                err << "warning: skipping NO=" << o << " " << fpm::mix_label(mix) << ": [" << v.front().code << "] "
                    << v.front().message << '\n';
                continue;
            }
            jobs.push_back(std::move(inst));
        }
    }
    if (jobs.empty()) throw ValidationFailure("no feasible (operators, mix) pair to run");

    std::vector<RunArchive> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    {
        std::atomic<std::size_t> next{0};
        const int workers = std::clamp(g.jobs, 1, static_cast<int>(jobs.size()));
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    try {
                        results[i] = run(jobs[i], a.flags, g, 1);
                    } catch (const std::exception& e) {
                        errors[i] = e.what();
                    }
                }
            });
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw std::runtime_error(e);

    const fs::path dir = out_path(g, "sweep");
    fs::create_directories(dir);
    std::vector<FrontSummary> rows;
    json datasets = json::array();
    for (const auto& r : results) {
        const fs::path p = dir / (file_label(r.algorithm, r.instance) + ".json");
        save_dataset(p, r);
        rows.push_back(summarize_front(r));
        datasets.push_back({{"file", p.filename().string()}, {"summary", to_json(rows.back())}});
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& x, const auto& y) { return std::tie(x.operators, x.mix) < std::tie(y.operators, y.mix); });
    std::vector<MarginalThp> averages;
    const auto marginal = marginal_thp(rows, &averages);
    json mj = json::array();
    for (const auto& m : marginal)
        mj.push_back({{"mix", m.mix}, {"from", m.from}, {"to", m.to}, {"per_operator", m.per_operator}});
    json aj = json::array();
    for (const auto& m : averages)
        aj.push_back({{"mix", m.mix}, {"from", m.from}, {"to", m.to}, {"per_operator", m.per_operator}});
    write_json_file(dir / "sweep_report.json", {{"schema", kSchemaVersion},
                                                {"kind", "rms-sweep-report"},
                                                {"datasets", std::move(datasets)},
                                                {"marginal_thp", std::move(mj)},
                                                {"average_marginal_thp", std::move(aj)}});

    out << "wrote " << results.size() << " datasets and sweep_report.json to " << dir.string() << "\n\n";
    print_summaries(out, rows);
    if (!marginal.empty()) {
        out << "\nMarginal max-THP per added operator (JPH)\n";
        for (const auto& m : marginal)
            out << "  " << m.mix << "  NO " << m.from << " -> " << m.to << ": " << std::fixed << std::setprecision(2)
                << m.per_operator << '\n';
        for (const auto& m : averages)
            out << "  " << m.mix << "  average over NO " << m.from << ".." << m.to << ": " << std::fixed
                << std::setprecision(2) << m.per_operator << '\n';
        out << std::defaultfloat;
    }
    return ok;
}

struct MineArgs {
    std::vector<std::string> datasets;
    std::string group_by = "operators";
    std::size_t max_level = 5;
    double min_sig = 0.90;
    std::string columns = "all";
    std::string select;
    std::string select_file;
    std::size_t top = 10;
    std::size_t max_candidates = 1'000'000;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char c : text) {
        if (c == ',' || c == '\n' || c == ' ' || c == '\t' || c == '\r') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else {
            item += c;
        }
    }
    if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_mine(const MineArgs& a, const Globals& g, std::ostream& out) {
    const auto loaded = load_all(a.datasets);
    fpm::MiningParams params;
    params.max_level = a.max_level;
    params.min_significance = a.min_sig;
    params.max_candidates = a.max_candidates;
    if (params.max_level < 1) throw ValidationFailure("--max-level must be at least 1");
    if (!(params.min_significance > 0.0 && params.min_significance <= 1.0))
        throw ValidationFailure("--min-sig must lie in (0, 1]");
    const fpm::ColumnSelection which = fpm::parse_column_selection(a.columns);
    const fs::path path = out_path(g, "rules.json");

    std::string selection_text = a.select;
    if (!a.select_file.empty()) {
        std::ifstream is(a.select_file);
        if (!is) throw InputError("cannot read " + a.select_file);
        selection_text += "," + std::string(std::istreambuf_iterator<char>(is), {});
    }
    const auto items = split_list(selection_text);
    if (!items.empty()) {
        std::vector<fpm::SelectionPart> parts;
        for (const auto& d : loaded) parts.push_back({&d.archive, d.source, {}});
        for (const auto& item : items) {
            const auto colon = item.rfind(':');
            std::string source = colon == std::string::npos ? "" : item.substr(0, colon);
            if (source.empty()) {
                if (parts.size() != 1) throw ValidationFailure("with several datasets, select as <dataset>:<id>");
                source = parts.front().source;
            }
            long long id = -1;
            try {
                id = std::stoll(colon == std::string::npos ? item : item.substr(colon + 1));
            } catch (const std::exception&) {
                throw ValidationFailure("selection '" + item + "' has no numeric solution id");
            }
            auto it = std::find_if(parts.begin(), parts.end(), [&](const auto& p) { return p.source == source; });
            if (it == parts.end()) throw ValidationFailure("selection names unknown dataset '" + source + "'");
            if (id < 0 || static_cast<std::size_t>(id) >= it->archive->solutions.size())
                throw ValidationFailure("solution " + std::to_string(id) + " is not in dataset '" + source + "'");
            if (!it->archive->solutions[static_cast<std::size_t>(id)].config)
                throw ValidationFailure("solution " + std::to_string(id) + " of '" + source + "' is infeasible");
            it->selected.insert(id);
        }
        fpm::FeatureTable table;
        try {
            table = fpm::build_union_table(parts, which);
        } catch (const InputError& e) {
            throw ValidationFailure(
                std::string(e.what()) +
                "\nhint: the selection must be a non-empty proper subset of the feasible solutions");
        }
        const auto result = fpm::mine(table, params);
        ensure_parent(path);
        write_json_file(path, mining_document(result, table.num_selected(), table.num_unselected()), -1);
        out << "selection: " << table.num_selected() << " selected / " << table.num_unselected() << " unselected rows, "
            << result.candidates << " candidates" << (result.truncated ? " (truncated)" : "") << '\n';
        print_rules(out, result.interactions, a.top);
        out << "wrote " << path.string() << '\n';
        return ok;
    }

    fpm::Grouping grouping = fpm::Grouping::by_operators;
    if (a.group_by == "proportion") grouping = fpm::Grouping::by_proportion;
    if (a.group_by == "all") grouping = fpm::Grouping::all;
    std::vector<fpm::LabeledArchive> labeled;
    for (const auto& d : loaded) labeled.push_back({&d.archive, d.source});
    std::vector<std::string> skipped;
    const auto groups = fpm::mine_scenario_groups(labeled, grouping, params, which, &skipped);
    if (groups.empty())
        throw ValidationFailure(
            "every group has an empty selected or unselected set\nhint: the final fronts must be a "
            "non-empty proper subset of each group's feasible solutions; pass --select otherwise");
    json gj = json::array();
    for (const auto& gr : groups) {
        json doc = mining_document(gr.result, gr.selected_rows, gr.unselected_rows);
        gj.push_back({{"key", gr.key},
                      {"selected_rows", gr.selected_rows},
                      {"unselected_rows", gr.unselected_rows},
                      {"candidates", gr.result.candidates},
                      {"truncated", gr.result.truncated},
                      {"interactions", doc.at("interactions")}});
        out << "Group " << gr.key << ": " << gr.selected_rows << " selected / " << gr.unselected_rows
            << " unselected rows, " << gr.result.candidates << " candidates"
            << (gr.result.truncated ? " (truncated)" : "") << '\n';
        print_rules(out, gr.result.interactions, a.top);
        out << '\n';
    }
    for (const auto& k : skipped) out << "skipped group " << k << " (single-class selection)\n";
    json sources = json::array();
    for (const auto& d : loaded) sources.push_back({{"source", d.source}, {"label", scenario_label(d.archive)}});
    ensure_parent(path);
    write_json_file(path,
                    {{"schema", kSchemaVersion},
                     {"kind", "rms-rule-report"},
                     {"group_by", a.group_by},
                     {"max_level", params.max_level},
                     {"min_significance", params.min_significance},
                     {"columns", a.columns},
                     {"datasets", std::move(sources)},
                     {"groups", std::move(gj)},
                     {"skipped", skipped}},
                    -1);
    out << "wrote " << path.string() << '\n';
    return ok;
}

struct HvArgs {
    std::vector<std::string> datasets;
    std::vector<double> ref{1.1, 1.1};
    std::string normalize = "shared";
};

std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

int cmd_hv(const HvArgs& a, const Globals& g, std::ostream& out) {
    if (a.ref.size() != 2) throw ValidationFailure("--ref takes two numbers");
    const auto loaded = load_all(a.datasets);
    std::vector<const RunArchive*> ptrs;
    for (const auto& d : loaded) ptrs.push_back(&d.archive);
    Normalization norm;
    if (a.normalize == "shared") norm = shared_normalization(ptrs);
    const Point2 ref{a.ref[0], a.ref[1]};
    const fs::path dir = out_path(g, "hv");
    fs::create_directories(dir);
    json list = json::array();
    out << "normalization ideal (" << norm.ideal.x << ", " << norm.ideal.y << ") nadir (" << norm.nadir.x << ", "
        << norm.nadir.y << "), ref (" << ref.x << ", " << ref.y << ")\n";
    for (const auto& d : loaded) {
        const auto curve = hypervolume_curve(d.archive, norm, ref);
        std::string csv = "generation,hv\n";
        for (std::size_t i = 0; i < curve.size(); ++i) csv += std::to_string(i) + "," + csv_number(curve[i]) + "\n";
        write_text(dir / (d.source + ".csv"), csv);
        const double final_hv = curve.empty() ? 0.0 : curve.back();
        list.push_back({{"source", d.source},
                        {"label", scenario_label(d.archive)},
                        {"generations", curve.empty() ? 0 : curve.size() - 1},
                        {"final_hv", final_hv},
                        {"curve", d.source + ".csv"}});
        out << "  " << std::left << std::setw(28) << d.source << std::setw(28) << scenario_label(d.archive)
            << std::right << std::fixed << std::setprecision(6) << final_hv << std::defaultfloat << '\n';
    }
    write_json_file(dir / "hv_report.json", {{"schema", kSchemaVersion},
                                             {"kind", "rms-hv-report"},
                                             {"normalize", a.normalize},
                                             {"ideal", {norm.ideal.x, norm.ideal.y}},
                                             {"nadir", {norm.nadir.x, norm.nadir.y}},
                                             {"ref", {ref.x, ref.y}},
                                             {"datasets", std::move(list)}});
    out << "wrote curves and hv_report.json to " << dir.string() << '\n';
    return ok;
}

struct RuleMatchArgs {
    std::string dataset;
    std::string rules;
    std::string group;
};

int cmd_rule_match(const RuleMatchArgs& a, const Globals& g, std::ostream& out) {
    const RunArchive archive = load_dataset(a.dataset);
    const auto interactions = interactions_from_document(read_json_file(a.rules), a.group);
    const auto columns = fpm::feature_columns(archive.instance);
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < columns.size(); ++c) index[columns[c].name] = c;
    for (const auto& ri : interactions)
        for (const auto& r : ri.rules)
            if (!index.contains(r.variable))
                throw ValidationFailure("rule variable '" + r.variable + "' does not exist in dataset " + a.dataset);

    const std::set<long long> front(archive.final_front.begin(), archive.final_front.end());
    std::vector<std::size_t> matches(interactions.size(), 0), matches_front(interactions.size(), 0);
    std::size_t all_total = 0, all_front = 0, any_total = 0, any_front = 0;
    json sols = json::array();
    for (const auto& s : archive.solutions) {
        std::vector<double> row;
        if (s.config) row = fpm::feature_row(*s.config);
        json m = json::array();
        bool all = true, any = false;
        for (std::size_t k = 0; k < interactions.size(); ++k) {
            bool hit = s.config.has_value();
            for (const auto& r : interactions[k].rules) {
                if (!hit) break;
                hit = r.holds(row[index.at(r.variable)]);
            }
            m.push_back(hit);
            all = all && hit;
            any = any || hit;
            if (hit) {
                ++matches[k];
                if (front.contains(s.id)) ++matches_front[k];
            }
        }
        all_total += all;
        any_total += any;
        if (front.contains(s.id)) {
            all_front += all;
            any_front += any;
        }
        sols.push_back(
            {{"id", s.id}, {"front", front.contains(s.id)}, {"all", all}, {"any", any}, {"matches", std::move(m)}});
    }
    const std::size_t n = archive.solutions.size();
    const std::size_t nf = front.size();
    auto frac = [](std::size_t x, std::size_t d) { return d ? static_cast<double>(x) / static_cast<double>(d) : 0.0; };
    json ij = json::array();
    out << "dataset " << fs::path(a.dataset).stem().string() << " (" << scenario_label(archive) << "): " << n
        << " solutions, final front " << nf << "; rules from " << fs::path(a.rules).stem().string() << '\n';
    for (std::size_t k = 0; k < interactions.size(); ++k) {
        const std::string text = fpm::to_text(interactions[k].rules);
        ij.push_back({{"text", text},
                      {"matches", matches[k]},
                      {"fraction", frac(matches[k], n)},
                      {"matches_front", matches_front[k]},
                      {"fraction_front", frac(matches_front[k], nf)}});
        out << "  " << pad(std::to_string(k + 1), 5) << pad(text, 40) << std::setw(7) << matches[k] << " ("
            << percent(frac(matches[k], n)) << ")  front " << matches_front[k] << " ("
            << percent(frac(matches_front[k], nf)) << ")\n";
    }
    out << "  all rules: " << all_total << " (" << percent(frac(all_total, n)) << "), any rule: " << any_total << " ("
        << percent(frac(any_total, n)) << ")\n";
    const fs::path path = out_path(g, "rule_match.json");
    ensure_parent(path);
    write_json_file(path,
                    {{"schema", kSchemaVersion},
                     {"kind", "rms-rule-match"},
                     {"dataset", fs::path(a.dataset).stem().string()},
                     {"label", scenario_label(archive)},
                     {"rules", fs::path(a.rules).stem().string()},
                     {"solutions_total", n},
                     {"front_total", nf},
                     {"interactions", std::move(ij)},
                     {"all", {{"matches", all_total}, {"matches_front", all_front}}},
                     {"any", {{"matches", any_total}, {"matches_front", any_front}}},
                     {"solutions", std::move(sols)}},
                    -1);
    out << "wrote " << path.string() << '\n';
    return ok;
}

struct ValidateArgs {
    std::string file;
    std::string configuration;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
    const json doc = read_json_file(a.file);
    const std::string kind = doc.is_object() ? doc.value("kind", "") : "";
    if (kind == "rms-dataset") {
        const RunArchive archive = dataset_from_json(doc);
        out << "valid dataset: " << scenario_label(archive) << ", " << archive.solutions.size() << " solutions\n";
        return ok;
    }
    const ProblemInstance inst = instance_from_json(doc);
    require_valid(inst);
    if (!a.configuration.empty()) {
        const RmsConfiguration cfg = configuration_from_json(read_json_file(a.configuration), inst);
        const auto v = check_configuration(inst, cfg);
        if (!v.empty()) {
            std::string msg = "configuration violates constraints:";
            for (const auto& x : v) msg += "\n  [" + x.code + "] " + x.message;
            throw ValidationFailure(msg);
        }
        out << "valid configuration for scenario '" << inst.name << "'\n";
        return ok;
    }
    out << "valid scenario '" << inst.name << "': " << inst.num_stations << " stations, " << inst.variants.size()
        << " variants, " << inst.total_tasks() << " tasks, chromosome length " << inst.chromosome_length() << '\n';
    return ok;
}

struct GenCaseArgs {
    bool reference = false;
    bool toy = false;
    CaseGenOptions opts;
    int operators = 0;
    std::string mix;
};

int cmd_gen_case(const GenCaseArgs& a, const Globals& g, std::ostream& out) {
    ProblemInstance inst;
    if (a.reference) {
        inst = reference_case();
    } else if (a.toy) {
        inst = toy_case();
    } else {
        inst = generate_case(a.opts, g.seed);
    }
    if (a.operators > 0) inst.total_resources = a.operators;
    if (!a.mix.empty()) inst.mix = parse_mix(a.mix, inst.variants.size());
    require_valid(inst);
    if (g.out.empty()) {
        out << to_json(inst).dump(1) << '\n';
        return ok;
    }
    ensure_parent(g.out);
    save_scenario(g.out, inst);
    out << "wrote " << g.out << " (instance hash " << instance_hash(inst) << ")\n";
    return ok;
}

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::vector<std::string> datasets;
    int workers = 2;
    std::string static_dir;
    std::size_t async_cells = 200'000;
};

service::HttpServer* g_server = nullptr;

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    service::Service svc({a.workers, a.async_cells});
    for (const auto& p : a.datasets) out << "loaded " << svc.load_dataset_file(p) << " from " << p << '\n';
    service::HttpServer http(svc, a.static_dir);
    const int port = http.bind(a.host, a.port);
    if (port < 0) {
        err << "error: cannot bind " << a.host << ":" << a.port << '\n';
        return runtime;
    }
    out << "serving " << svc.datasets().size() << " datasets on http://" << a.host << ":" << port << '\n' << std::flush;
    g_server = &http;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    http.run();
    g_server = nullptr;
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reconfigurable flow line optimization, simulation and rule mining"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for the optimizer and the simulation streams")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file or directory");

    OptimizeArgs opt;
    auto* c_opt = app.add_subcommand("optimize", "Run the optimizer on a scenario and write a dataset");
    c_opt->add_option("scenario", opt.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    c_opt->add_option("--operators", opt.operators, "Override total resources TNM");
    c_opt->add_option("--mix", opt.mix, "Override production mix, e.g. 30/70");
    add_run_flags(c_opt, opt.flags);

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("sweep", "Optimize every (operators, mix) combination");
    c_sw->add_option("scenario", sw.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    c_sw->add_option("--operators", sw.operators, "Operator counts, e.g. 7,8,9")->delimiter(',');
    c_sw->add_option("--mix", sw.mixes, "Mixes, e.g. 30/70,70/30")->delimiter(',');
    add_run_flags(c_sw, sw.flags);

    MineArgs mn;
    auto* c_mn = app.add_subcommand("mine", "Mine decision rules separating selected from unselected solutions");
    c_mn->add_option("datasets", mn.datasets, "Dataset files")->required()->check(CLI::ExistingFile);
    c_mn->add_option("--group-by", mn.group_by, "Scenario grouping when mining final fronts")
        ->check(CLI::IsMember({"operators", "proportion", "all"}))
        ->capture_default_str();
    c_mn->add_option("--max-level", mn.max_level, "Maximum rules per interaction")->capture_default_str();
    c_mn->add_option("--min-sig", mn.min_sig, "Minimum significance")->capture_default_str();
    c_mn->add_option("--columns", mn.columns, "Variable groups: tasks,stations,buffers or all")->capture_default_str();
    c_mn->add_option("--select", mn.select, "Selected solutions, e.g. 3,7 or run1:3,run2:7");
    c_mn->add_option("--select-file", mn.select_file, "File listing selected solutions")->check(CLI::ExistingFile);
    c_mn->add_option("--top", mn.top, "Rules printed per group (0 prints all)")->capture_default_str();
    c_mn->add_option("--max-candidates", mn.max_candidates, "Candidate budget")->capture_default_str();

    HvArgs hv;
    auto* c_hv = app.add_subcommand("hv", "Hypervolume per dataset and per-generation curves");
    c_hv->add_option("datasets", hv.datasets, "Dataset files")->required()->check(CLI::ExistingFile);
    c_hv->add_option("--ref", hv.ref, "Reference point in normalized minimization space")->delimiter(',')->expected(2);
    c_hv->add_option("--normalize", hv.normalize, "shared: ideal/nadir over all inputs; none: raw values")
        ->check(CLI::IsMember({"shared", "none"}))
        ->capture_default_str();

    RuleMatchArgs rm;
    auto* c_rm = app.add_subcommand("rule-match", "Mark which solutions of a dataset satisfy each rule interaction");
    c_rm->add_option("dataset", rm.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    c_rm->add_option("rules", rm.rules, "Rules file or rule report")->required()->check(CLI::ExistingFile);
    c_rm->add_option("--group", rm.group, "Group key of a rule report, e.g. NO=7");

    ValidateArgs va;
    auto* c_va = app.add_subcommand("validate", "Validate a scenario, a dataset, or a configuration");
    c_va->add_option("file", va.file, "Scenario or dataset file")->required()->check(CLI::ExistingFile);
    c_va->add_option("--configuration", va.configuration, "Configuration to check against the scenario")
        ->check(CLI::ExistingFile);

    GenCaseArgs gc;
    auto* c_gc = app.add_subcommand("gen-case", "Write the reference case, the toy case, or a generated case");
    c_gc->add_flag("--reference", gc.reference, "Two-variant, three-station reference case");
    c_gc->add_flag("--toy", gc.toy, "Two-station, four-task toy case");
    c_gc->add_option("--stations", gc.opts.num_stations)->capture_default_str();
    c_gc->add_option("--variants", gc.opts.num_variants)->capture_default_str();
    c_gc->add_option("--tasks", gc.opts.tasks_per_variant, "Tasks per variant")->capture_default_str();
    c_gc->add_option("--resources", gc.opts.total_resources, "Total resources TNM")->capture_default_str();
    c_gc->add_option("--min-res", gc.opts.min_resources_per_ws)->capture_default_str();
    c_gc->add_option("--max-res", gc.opts.max_resources_per_ws)->capture_default_str();
    c_gc->add_option("--bmin", gc.opts.buffer_min)->capture_default_str();
    c_gc->add_option("--bmax", gc.opts.buffer_max)->capture_default_str();
    c_gc->add_option("--bunit", gc.opts.buffer_unit)->capture_default_str();
    c_gc->add_option("--edge-prob", gc.opts.edge_probability)->capture_default_str();
    c_gc->add_option("--min-time", gc.opts.min_task_time)->capture_default_str();
    c_gc->add_option("--max-time", gc.opts.max_task_time)->capture_default_str();
    c_gc->add_option("--tech-restriction", gc.opts.tech_restriction)->capture_default_str();
    c_gc->add_option("--availability", gc.opts.stochastic.availability)->capture_default_str();
    c_gc->add_option("--mttr", gc.opts.stochastic.mttr, "Seconds")->capture_default_str();
    c_gc->add_option("--setup", gc.opts.stochastic.setup_time, "Seconds")->capture_default_str();
    c_gc->add_option("--handling", gc.opts.stochastic.handling_time, "Seconds")->capture_default_str();
    c_gc->add_option("--task-cv", gc.opts.stochastic.task_time_cv)->capture_default_str();
    c_gc->add_option("--operators", gc.operators, "Override total resources of --reference/--toy");
    c_gc->add_option("--mix", gc.mix, "Production mix, e.g. 30/70");

    ServeArgs sv;
    auto* c_sv = app.add_subcommand("serve", "Serve datasets, mining and what-if simulation over HTTP");
    c_sv->add_option("--host", sv.host)->capture_default_str();
    c_sv->add_option("--port", sv.port)->capture_default_str();
    c_sv->add_option("--datasets", sv.datasets, "Dataset files")->check(CLI::ExistingFile);
    c_sv->add_option("--workers", sv.workers, "Mining and simulation workers")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    c_sv->add_option("--static", sv.static_dir, "Directory served at /")->check(CLI::ExistingDirectory);
    c_sv->add_option("--async-cells", sv.async_cells, "Table size above which mining becomes a polled job")
        ->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
            err << "run '" << sub->get_name() << " --help' for usage\n";
        else
            err << "run '--help' for usage\n";
        return usage;
    }

    try {
        if (*c_opt) return cmd_optimize(opt, g, out);
        if (*c_sw) return cmd_sweep(sw, g, out, err);
        if (*c_mn) return cmd_mine(mn, g, out);
        if (*c_hv) return cmd_hv(hv, g, out);
        if (*c_rm) return cmd_rule_match(rm, g, out);
        if (*c_va) return cmd_validate(va, out);
        if (*c_gc) return cmd_gen_case(gc, g, out);
        if (*c_sv) return cmd_serve(sv, out, err);
    } catch (const ValidationFailure& e) {
        err << "invalid: " << e.what() << '\n';
        return validation;
    } catch (const InputError& e) {
        err << "invalid: " << e.what() << '\n';
        return validation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime;
    }
    return usage;
}

}  // namespace rms::cli
