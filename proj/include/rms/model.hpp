#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rms {

/// Thrown for malformed inputs: dimension mismatches, infeasible generator options, bad files.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Task {
    std::string id;
    double nominal_time = 0.0;  // seconds
};

using BoolMatrix = std::vector<std::vector<bool>>;

/// One product variant: its tasks, precedence (pred[i][r] = i precedes r)
/// and technological eligibility (tech[j][i] = task i allowed on station j).
struct Variant {
    std::string id;
    std::vector<Task> tasks;
    BoolMatrix precedence;
    BoolMatrix tech_req;

    [[nodiscard]] std::size_t num_tasks() const { return tasks.size(); }
    /// Number of stations that may host task i.
    [[nodiscard]] int flexibility(std::size_t task) const;
};

struct StochasticParams {
    double availability = 1.0;
    double mttr = 0.0;  // seconds
    double task_time_cv = 0.0;
    double setup_time = 0.0;     // seconds per variant changeover
    double handling_time = 0.0;  // seconds per buffer load/unload
};

struct ProductionMix {
    std::vector<double> proportions;
};

struct ProblemInstance {
    std::string name;
    int num_stations = 0;
    std::vector<Variant> variants;
    int total_resources = 0;
    int min_resources_per_ws = 1;
    int max_resources_per_ws = 1;
    int buffer_min = 0;
    int buffer_max = 0;
    int buffer_unit = 1;
    StochasticParams stochastic;
    ProductionMix mix;

    [[nodiscard]] int num_buffers() const { return num_stations > 0 ? num_stations - 1 : 0; }
    [[nodiscard]] std::size_t total_tasks() const;
    /// Offset of variant v's first task key inside a chromosome.
    [[nodiscard]] std::size_t task_key_offset(std::size_t variant) const;
    [[nodiscard]] std::size_t chromosome_length() const;
};

/// A decoded, fully specified line configuration. Station indices are 0-based.
struct RmsConfiguration {
    std::vector<int> resources_per_ws;
    std::vector<std::vector<int>> assignment;  // [variant][task] -> station
    std::vector<int> buffers;
    std::vector<std::vector<double>> station_workload;  // [variant][station] seconds

    [[nodiscard]] int total_buffer_capacity() const;
    bool operator==(const RmsConfiguration&) const = default;
};

/// Recomputes station_workload from the assignment.
void compute_workload(const ProblemInstance& inst, RmsConfiguration& cfg);

struct Violation {
    std::string code;     // e.g. "eligibility", "buffer-bounds" or "precedence cycle"
    std::string message;  // names the offending index
};

std::vector<Violation> validate_instance(const ProblemInstance& inst);

/// Throws InputError on dimension mismatch; otherwise lists every violated constraint.
std::vector<Violation> check_configuration(const ProblemInstance& inst, const RmsConfiguration& cfg);

/// Topological order of a variant's precedence graph, or empty if it has a cycle.
std::vector<std::size_t> topological_order(const BoolMatrix& precedence);

/// Transitive closure of the precedence relation: reach[i][r] iff i precedes r through some path.
BoolMatrix transitive_closure(const BoolMatrix& precedence);

/// Two-family, three-station line with the published task counts and time totals.
/// Precedence is synthetic: each task depends on one or two of the four tasks numbered before it.
ProblemInstance reference_case(int total_resources = 7, std::vector<double> proportions = {0.3, 0.7});

/// Two stations, one four-task variant, three resources, buffer 1..8.
ProblemInstance toy_case();

struct CaseGenOptions {
    int num_stations = 2;
    int num_variants = 1;
    int tasks_per_variant = 4;
    int total_resources = 3;
    int min_resources_per_ws = 1;
    int max_resources_per_ws = 3;
    int buffer_min = 1;
    int buffer_max = 10;
    int buffer_unit = 1;
    double edge_probability = 0.3;
    double min_task_time = 5.0;
    double max_task_time = 60.0;
    /// Probability of narrowing a task's eligible station interval; 0 keeps TR all-ones.
    double tech_restriction = 0.0;
    std::vector<double> proportions;  // empty -> uniform
    StochasticParams stochastic;
};

/// Deterministic per seed. Restricted TR matrices are contiguous station intervals whose bounds
/// are monotone along precedence, which keeps every decode feasible.
ProblemInstance generate_case(const CaseGenOptions& opts, std::uint64_t seed);

}  // namespace rms
