#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rms/moea.hpp"

namespace rms::fpm {

enum class ColumnKind { categorical, numeric };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
};

/// Rows of decision-variable values split into a selected and an unselected set.
struct FeatureTable {
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;
    std::vector<bool> selected;
    std::vector<std::string> row_labels;  // "<source>:<solution id>"

    [[nodiscard]] std::size_t num_selected() const;
    [[nodiscard]] std::size_t num_unselected() const { return rows.size() - num_selected(); }
    /// Column index by name, or npos.
    [[nodiscard]] std::size_t column_index(const std::string& name) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Throws InputError unless both sets are non-empty and every row has one value per column.
void validate(const FeatureTable& table);

enum class Relation { lt, gt, eq, ne };

struct Rule {
    std::string variable;
    Relation relation = Relation::eq;
    double threshold = 0.0;

    [[nodiscard]] bool holds(double value) const;
    bool operator==(const Rule&) const = default;
};

struct RuleInteraction {
    std::vector<Rule> rules;
    double significance = 0.0;    // support in the selected set
    double unsignificance = 0.0;  // support in the unselected set

    [[nodiscard]] std::size_t level() const { return rules.size(); }
    bool operator==(const RuleInteraction&) const = default;
};

/// Which decision variables become columns: task assignments, station resources, buffers.
struct ColumnSelection {
    bool tasks = true;
    bool stations = true;
    bool buffers = true;
};

/// Column names follow "<variant id>_<task id>", "WS_<j>", "Bu_<k>" with 1-based stations.
std::vector<Column> feature_columns(const ProblemInstance& inst, ColumnSelection which = {});
std::vector<double> feature_row(const RmsConfiguration& cfg, ColumnSelection which = {});

/// One row per feasible solution, without the non-empty-sets check.
FeatureTable collect_feature_rows(const RunArchive& archive, const std::set<long long>& selection,
                                  ColumnSelection which = {}, const std::string& source = "0");

/// One row per feasible solution of the archive (solutions are unique by chromosome).
/// Throws InputError when an id is unknown or either set ends up empty.
FeatureTable build_feature_table(const RunArchive& archive, const std::set<long long>& selection,
                                 ColumnSelection which = {}, const std::string& source = "0");

/// Appends rows of `other`; columns must match exactly.
void append(FeatureTable& table, const FeatureTable& other);

struct SelectionPart {
    const RunArchive* archive = nullptr;
    std::string source;
    std::set<long long> selected;
};

/// Union of every part's rows; throws InputError on column mismatch or when either set is empty.
FeatureTable build_union_table(const std::vector<SelectionPart>& parts, ColumnSelection which = {});

/// Comma list over {tasks, stations, buffers, all}; throws InputError on an unknown name.
ColumnSelection parse_column_selection(const std::string& list);

struct MiningParams {
    std::size_t max_level = 5;
    double min_significance = 0.90;
    std::size_t max_candidates = 1'000'000;
    bool prune_redundant = true;
};

struct MiningResult {
    std::vector<RuleInteraction> interactions;
    std::size_t candidates = 0;  // conjunctions counted against max_candidates
    bool truncated = false;
};

/// Level-wise (Apriori) search for conjunctions whose selected-set support reaches min_significance.
MiningResult mine(const FeatureTable& table, const MiningParams& params);

/// Level-1 candidate rules for one column, in emission order.
std::vector<Rule> candidate_rules(const FeatureTable& table, std::size_t column);

/// Exact (significance, unsignificance); throws InputError for an unknown variable.
std::pair<double, double> evaluate_interaction(const FeatureTable& table, const RuleInteraction& interaction);

/// Row mask of rows satisfying every conjunct.
std::vector<bool> match_rows(const FeatureTable& table, const std::vector<Rule>& rules);

enum class Grouping { by_operators, by_proportion, all };

struct LabeledArchive {
    const RunArchive* archive = nullptr;
    std::string source;  // used in row labels
};

struct GroupReport {
    std::string key;  // e.g. "NO=7" or "30/70"
    std::size_t selected_rows = 0;
    std::size_t unselected_rows = 0;
    MiningResult result;
};

/// Percent label of a mix, e.g. "30/70".
std::string mix_label(const ProductionMix& mix);

/// Per group: selected = union of member archives' final fronts, unselected = their other solutions.
/// Groups whose table would lack either set are skipped; their keys are appended to `skipped`.
std::vector<GroupReport> mine_scenario_groups(const std::vector<LabeledArchive>& archives, Grouping grouping,
                                              const MiningParams& params, ColumnSelection which,
                                              std::vector<std::string>* skipped = nullptr);

std::string relation_symbol(Relation r);  // "<", ">", "=", "≠"
std::string relation_code(Relation r);    // "lt", "gt", "eq", "ne"
Relation relation_from_code(const std::string& code);
std::string format_threshold(double value);
std::string to_text(const Rule& rule);
/// "A_10 = 2 ∧ E_4 ≠ 3"
std::string to_text(const std::vector<Rule>& rules);

}  // namespace rms::fpm
