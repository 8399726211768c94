#include "rms/fpm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

namespace rms::fpm {

std::size_t FeatureTable::num_selected() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
}

std::size_t FeatureTable::column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c].name == name) return c;
    return npos;
}

void validate(const FeatureTable& table) {
    if (table.selected.size() != table.rows.size()) throw InputError("selection mask size differs from row count");
    for (const auto& row : table.rows)
        if (row.size() != table.columns.size()) throw InputError("row width differs from column count");
    if (table.num_selected() == 0) throw InputError("selected set is empty");
    if (table.num_unselected() == 0)
        throw InputError("unselected set is empty; select a proper subset of the solutions");
}

bool Rule::holds(double value) const {
    switch (relation) {
        case Relation::lt:
            return value < threshold;
        case Relation::gt:
            return value > threshold;
        case Relation::eq:
            return value == threshold;
        case Relation::ne:
            return value != threshold;
    }
    return false;
}

std::vector<Column> feature_columns(const ProblemInstance& inst, ColumnSelection which) {
    std::vector<Column> cols;
    if (which.tasks)
        for (const auto& v : inst.variants)
            for (const auto& t : v.tasks) cols.push_back({v.id + "_" + t.id, ColumnKind::categorical});
    if (which.stations)
        for (int j = 0; j < inst.num_stations; ++j)
            cols.push_back({"WS_" + std::to_string(j + 1), ColumnKind::numeric});
    if (which.buffers)
        for (int k = 0; k < inst.num_buffers(); ++k)
            cols.push_back({"Bu_" + std::to_string(k + 1), ColumnKind::numeric});
    return cols;
}

std::vector<double> feature_row(const RmsConfiguration& cfg, ColumnSelection which) {
    std::vector<double> row;
    if (which.tasks)
        for (const auto& asg : cfg.assignment)
            for (int s : asg) row.push_back(static_cast<double>(s + 1));
    if (which.stations)
        for (int k : cfg.resources_per_ws) row.push_back(static_cast<double>(k));
    if (which.buffers)
        for (int b : cfg.buffers) row.push_back(static_cast<double>(b));
    return row;
}

FeatureTable collect_feature_rows(const RunArchive& archive, const std::set<long long>& selection,
                                  ColumnSelection which, const std::string& source) {
    for (long long id : selection)
        if (id < 0 || static_cast<std::size_t>(id) >= archive.solutions.size())
            throw InputError("selected solution " + std::to_string(id) + " is not in the archive");
    FeatureTable t;
    t.columns = feature_columns(archive.instance, which);
    for (const auto& sol : archive.solutions) {
        if (!sol.config) continue;
        t.rows.push_back(feature_row(*sol.config, which));
        t.selected.push_back(selection.contains(sol.id));
        t.row_labels.push_back(source + ":" + std::to_string(sol.id));
    }
    return t;
}

FeatureTable build_feature_table(const RunArchive& archive, const std::set<long long>& selection, ColumnSelection which,
                                 const std::string& source) {
    FeatureTable t = collect_feature_rows(archive, selection, which, source);
    validate(t);
    return t;
}

void append(FeatureTable& table, const FeatureTable& other) {
    if (table.columns.size() != other.columns.size()) throw InputError("feature tables have different columns");
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        if (table.columns[c].name != other.columns[c].name || table.columns[c].kind != other.columns[c].kind)
            throw InputError("feature tables have different columns");
    table.rows.insert(table.rows.end(), other.rows.begin(), other.rows.end());
    table.selected.insert(table.selected.end(), other.selected.begin(), other.selected.end());
    table.row_labels.insert(table.row_labels.end(), other.row_labels.begin(), other.row_labels.end());
}

FeatureTable build_union_table(const std::vector<SelectionPart>& parts, ColumnSelection which) {
    if (parts.empty()) throw InputError("no datasets given");
    FeatureTable table =
        collect_feature_rows(*parts.front().archive, parts.front().selected, which, parts.front().source);
    for (std::size_t p = 1; p < parts.size(); ++p)
        append(table, collect_feature_rows(*parts[p].archive, parts[p].selected, which, parts[p].source));
    validate(table);
    return table;
}

ColumnSelection parse_column_selection(const std::string& list) {
    ColumnSelection out{false, false, false};
    std::size_t start = 0;
    while (start <= list.size()) {
        const std::size_t end = std::min(list.find(',', start), list.size());
        const std::string name = list.substr(start, end - start);
        if (name == "tasks")
            out.tasks = true;
        else if (name == "stations")
            out.stations = true;
        else if (name == "buffers")
            out.buffers = true;
        else if (name == "all")
            out = {};
        else
            throw InputError("unknown column group '" + name + "' (expected tasks, stations, buffers or all)");
        start = end + 1;
    }
    return out;
}

std::vector<Rule> candidate_rules(const FeatureTable& table, std::size_t column) {
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (const auto& row : table.rows) values.push_back(row[column]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    const auto& col = table.columns[column];
    std::vector<Rule> out;
    for (double v : values) {
        out.push_back({col.name, Relation::eq, v});
        out.push_back({col.name, Relation::ne, v});
    }
    if (col.kind == ColumnKind::numeric) {
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            const double mid = 0.5 * (values[i] + values[i + 1]);
            out.push_back({col.name, Relation::lt, mid});
            out.push_back({col.name, Relation::gt, mid});
        }
    }
    return out;
}

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
    std::size_t n = 0;
    for (auto w : b) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

struct Item {
    Rule rule;
    std::size_t column = 0;
    Bits sel;
    Bits unsel;
};

// Itemsets of one level, flat and in lexicographic order.
struct LevelStore {
    std::size_t k = 0;
    std::vector<std::uint32_t> items;
    std::vector<Bits> sel;
    std::vector<std::size_t> sel_count;
    std::vector<std::size_t> unsel_count;

    [[nodiscard]] std::size_t size() const { return k == 0 ? 0 : items.size() / k; }
    [[nodiscard]] const std::uint32_t* at(std::size_t i) const { return items.data() + i * k; }

    [[nodiscard]] std::size_t find(const std::uint32_t* key) const {
        std::size_t lo = 0;
        std::size_t hi = size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (std::lexicographical_compare(at(mid), at(mid) + k, key, key + k))
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo < size() && std::equal(at(lo), at(lo) + k, key)) return lo;
        return static_cast<std::size_t>(-1);
    }
};

bool meets(std::size_t count, std::size_t total, double min_sig) {
    return static_cast<double>(count) >= min_sig * static_cast<double>(total) - 1e-9;
}

}  // namespace

MiningResult mine(const FeatureTable& table, const MiningParams& params) {
    validate(table);
    if (params.max_level < 1) throw InputError("max level must be at least 1");
    if (!(params.min_significance > 0.0 && params.min_significance <= 1.0))
        throw InputError("min significance must lie in (0,1]");

    std::vector<std::size_t> sel_rows;
    std::vector<std::size_t> unsel_rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) (table.selected[r] ? sel_rows : unsel_rows).push_back(r);
    const std::size_t n_sel = sel_rows.size();
    const std::size_t n_unsel = unsel_rows.size();
    const std::size_t sel_words = (n_sel + 63) / 64;
    const std::size_t unsel_words = (n_unsel + 63) / 64;

    MiningResult result;
    std::vector<Item> items;
    LevelStore level1;
    level1.k = 1;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        for (auto& rule : candidate_rules(table, c)) {
            ++result.candidates;
            Item item{std::move(rule), c, Bits(sel_words, 0), Bits(unsel_words, 0)};
            for (std::size_t i = 0; i < n_sel; ++i)
                if (item.rule.holds(table.rows[sel_rows[i]][c])) item.sel[i / 64] |= 1ULL << (i % 64);
            const std::size_t count = popcount(item.sel);
            if (!meets(count, n_sel, params.min_significance)) continue;
            for (std::size_t i = 0; i < n_unsel; ++i)
                if (item.rule.holds(table.rows[unsel_rows[i]][c])) item.unsel[i / 64] |= 1ULL << (i % 64);
            level1.items.push_back(static_cast<std::uint32_t>(items.size()));
            level1.sel.push_back(item.sel);
            level1.sel_count.push_back(count);
            level1.unsel_count.push_back(popcount(item.unsel));
            items.push_back(std::move(item));
        }
    }

    std::vector<LevelStore> levels;
    levels.push_back(std::move(level1));
    std::vector<std::uint32_t> candidate;
    std::vector<std::uint32_t> subset;
    Bits unsel_scratch(unsel_words);
    for (std::size_t k = 2; k <= params.max_level && !result.truncated; ++k) {
        const LevelStore& prev = levels.back();
        LevelStore next;
        next.k = k;
        const std::size_t m = prev.size();
        // Itemsets sharing their first k-2 members form contiguous runs.
        std::size_t run_start = 0;
        while (run_start < m && !result.truncated) {
            std::size_t run_end = run_start + 1;
            while (run_end < m && std::equal(prev.at(run_start), prev.at(run_start) + (k - 2), prev.at(run_end)))
                ++run_end;
            for (std::size_t a = run_start; a < run_end && !result.truncated; ++a) {
                for (std::size_t b = a + 1; b < run_end; ++b) {
                    const std::uint32_t last_a = prev.at(a)[k - 2];
                    const std::uint32_t last_b = prev.at(b)[k - 2];
                    if (items[last_a].column == items[last_b].column) continue;
                    candidate.assign(prev.at(a), prev.at(a) + (k - 1));
                    candidate.push_back(last_b);
                    // Every (k-1)-subset must have survived.
                    bool all_survived = true;
                    for (std::size_t drop = 0; drop + 2 < k && all_survived; ++drop) {
                        subset.clear();
                        for (std::size_t q = 0; q < k; ++q)
                            if (q != drop) subset.push_back(candidate[q]);
                        all_survived = prev.find(subset.data()) != static_cast<std::size_t>(-1);
                    }
                    if (!all_survived) continue;
                    if (result.candidates >= params.max_candidates) {
                        result.truncated = true;
                        break;
                    }
                    ++result.candidates;
                    Bits sel = prev.sel[a];
                    const Bits& other = items[last_b].sel;
                    for (std::size_t w = 0; w < sel_words; ++w) sel[w] &= other[w];
                    const std::size_t count = popcount(sel);
                    if (!meets(count, n_sel, params.min_significance)) continue;
                    unsel_scratch = items[candidate[0]].unsel;
                    for (std::size_t q = 1; q < k; ++q) {
                        const Bits& u = items[candidate[q]].unsel;
                        for (std::size_t w = 0; w < unsel_words; ++w) unsel_scratch[w] &= u[w];
                    }
                    next.items.insert(next.items.end(), candidate.begin(), candidate.end());
                    next.sel.push_back(std::move(sel));
                    next.sel_count.push_back(count);
                    next.unsel_count.push_back(popcount(unsel_scratch));
                }
            }
            run_start = run_end;
        }
        if (next.size() == 0) break;
        levels.push_back(std::move(next));
    }

    struct Emitted {
        std::size_t level;
        std::size_t index;
    };
    std::vector<Emitted> emitted;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const auto& store = levels[li];
        const std::size_t k = store.k;
        for (std::size_t i = 0; i < store.size(); ++i) {
            if (params.prune_redundant && k > 1) {
                const std::uint32_t* set = store.at(i);
                bool redundant = false;
                // Non-empty strict subsets, encoded as bit masks over the k members.
                for (std::uint32_t mask = 1; mask + 1 < (1u << k) && !redundant; ++mask) {
                    subset.clear();
                    for (std::size_t q = 0; q < k; ++q)
                        if (mask & (1u << q)) subset.push_back(set[q]);
                    const auto& sub_store = levels[subset.size() - 1];
                    const std::size_t at = sub_store.find(subset.data());
                    if (at == static_cast<std::size_t>(-1)) continue;
                    redundant = sub_store.sel_count[at] >= store.sel_count[i] &&
                                sub_store.unsel_count[at] <= store.unsel_count[i];
                }
                if (redundant) continue;
            }
            emitted.push_back({li, i});
        }
    }

    std::sort(emitted.begin(), emitted.end(), [&](const Emitted& x, const Emitted& y) {
        const auto& sx = levels[x.level];
        const auto& sy = levels[y.level];
        // Shared denominators, so counts order exactly like the fractions.
        if (sx.unsel_count[x.index] != sy.unsel_count[y.index])
            return sx.unsel_count[x.index] < sy.unsel_count[y.index];
        if (sx.sel_count[x.index] != sy.sel_count[y.index]) return sx.sel_count[x.index] > sy.sel_count[y.index];
        if (sx.k != sy.k) return sx.k < sy.k;
        return std::lexicographical_compare(sx.at(x.index), sx.at(x.index) + sx.k, sy.at(y.index),
                                            sy.at(y.index) + sy.k);
    });

    result.interactions.reserve(emitted.size());
    for (const auto& e : emitted) {
        const auto& store = levels[e.level];
        RuleInteraction ri;
        for (std::size_t q = 0; q < store.k; ++q) ri.rules.push_back(items[store.at(e.index)[q]].rule);
        ri.significance = static_cast<double>(store.sel_count[e.index]) / static_cast<double>(n_sel);
        ri.unsignificance = static_cast<double>(store.unsel_count[e.index]) / static_cast<double>(n_unsel);
        result.interactions.push_back(std::move(ri));
    }
    return result;
}

std::vector<bool> match_rows(const FeatureTable& table, const std::vector<Rule>& rules) {
    std::vector<std::size_t> cols;
    cols.reserve(rules.size());
    for (const auto& rule : rules) {
        const std::size_t c = table.column_index(rule.variable);
        if (c == FeatureTable::npos) throw InputError("unknown variable '" + rule.variable + "'");
        cols.push_back(c);
    }
    std::vector<bool> out(table.rows.size(), true);
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t q = 0; q < rules.size() && out[r]; ++q) out[r] = rules[q].holds(table.rows[r][cols[q]]);
    return out;
}

std::pair<double, double> evaluate_interaction(const FeatureTable& table, const RuleInteraction& interaction) {
    const auto mask = match_rows(table, interaction.rules);
    std::size_t sel = 0;
    std::size_t unsel = 0;
    std::size_t n_sel = 0;
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (table.selected[r]) {
            ++n_sel;
            sel += mask[r] ? 1 : 0;
        } else {
            unsel += mask[r] ? 1 : 0;
        }
    }
    const std::size_t n_unsel = mask.size() - n_sel;
    const double s = n_sel ? static_cast<double>(sel) / static_cast<double>(n_sel) : 1.0;
    const double u = n_unsel ? static_cast<double>(unsel) / static_cast<double>(n_unsel) : 1.0;
    return {s, u};
}

std::string mix_label(const ProductionMix& mix) {
    std::string out;
    for (std::size_t v = 0; v < mix.proportions.size(); ++v) {
        if (v) out += '/';
        out += std::to_string(static_cast<long>(std::lround(mix.proportions[v] * 100.0)));
    }
    return out;
}

std::vector<GroupReport> mine_scenario_groups(const std::vector<LabeledArchive>& archives, Grouping grouping,
                                              const MiningParams& params, ColumnSelection which,
                                              std::vector<std::string>* skipped) {
    // Ordered by (numeric key, label) so NO=10 sorts after NO=9.
    std::map<std::pair<long, std::string>, std::vector<const LabeledArchive*>> groups;
    for (const auto& la : archives) {
        const auto& inst = la.archive->instance;
        switch (grouping) {
            case Grouping::by_operators:
                groups[{inst.total_resources, "NO=" + std::to_string(inst.total_resources)}].push_back(&la);
                break;
            case Grouping::by_proportion:
                groups[{0, mix_label(inst.mix)}].push_back(&la);
                break;
            case Grouping::all:
                groups[{0, "all"}].push_back(&la);
                break;
        }
    }
    std::vector<GroupReport> out;
    for (const auto& [key, members] : groups) {
        FeatureTable table;
        bool first = true;
        for (const LabeledArchive* la : members) {
            const std::set<long long> front(la->archive->final_front.begin(), la->archive->final_front.end());
            FeatureTable part = collect_feature_rows(*la->archive, front, which, la->source);
            if (first) {
                table = std::move(part);
                first = false;
            } else {
                append(table, part);
            }
        }
        if (table.num_selected() == 0 || table.num_unselected() == 0) {
            if (skipped) skipped->push_back(key.second);
            continue;
        }
        GroupReport rep;
        rep.key = key.second;
        rep.selected_rows = table.num_selected();
        rep.unselected_rows = table.num_unselected();
        rep.result = mine(table, params);
        out.push_back(std::move(rep));
    }
    return out;
}

std::string relation_symbol(Relation r) {
    switch (r) {
        case Relation::lt:
            return "<";
        case Relation::gt:
            return ">";
        case Relation::eq:
            return "=";
        case Relation::ne:
            return "≠";
    }
    return "?";
}

std::string relation_code(Relation r) {
    switch (r) {
        case Relation::lt:
            return "lt";
        case Relation::gt:
            return "gt";
        case Relation::eq:
            return "eq";
        case Relation::ne:
            return "ne";
    }
    return "?";
}

Relation relation_from_code(const std::string& code) {
    if (code == "lt" || code == "<") return Relation::lt;
    if (code == "gt" || code == ">") return Relation::gt;
    if (code == "eq" || code == "=") return Relation::eq;
    if (code == "ne" || code == "!=" || code == "≠") return Relation::ne;
    throw InputError("unknown relation '" + code + "'");
}

std::string format_threshold(double value) {
    if (value == std::floor(value) && std::abs(value) < 1e15) return std::to_string(static_cast<long long>(value));
    std::ostringstream os;
    os << value;
    return os.str();
}

std::string to_text(const Rule& rule) {
    return rule.variable + " " + relation_symbol(rule.relation) + " " + format_threshold(rule.threshold);
}

std::string to_text(const std::vector<Rule>& rules) {
    std::string out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (i) out += " ∧ ";
        out += to_text(rules[i]);
    }
    return out;
}

}  // namespace rms::fpm
