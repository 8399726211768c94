#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rms/genome.hpp"
#include "rms/model.hpp"

namespace rms {

enum class TaskTimeDistribution { deterministic, lognormal, triangular };
enum class VariantSequencing { interleaved, bernoulli };

struct SimulationConfig {
    double horizon = 100.0 * 3600.0;  // seconds
    double warmup = 10.0 * 3600.0;    // seconds
    int replications = 3;
    std::uint64_t seed = 1;
    TaskTimeDistribution task_time_distribution = TaskTimeDistribution::deterministic;
    /// Overrides the instance's task_time_cv when non-negative.
    double cv_override = -1.0;
    VariantSequencing sequencing = VariantSequencing::interleaved;
    /// When set, every event of replication 0 is written as "time,kind,station,resource,part" lines.
    std::ostream* trace = nullptr;
};

/// Throws InputError when warmup >= horizon or replications < 1.
void validate(const SimulationConfig& sim);

/// Per-station time shares after warmup, averaged over resources and replications.
struct StationStats {
    double busy = 0.0;
    double down = 0.0;
    double blocked = 0.0;
    double idle = 0.0;
};

struct EvaluationResult {
    double thp = 0.0;         // jobs per hour, mean over replications
    double thp_stderr = 0.0;  // jobs per hour
    int tbc = 0;              // total buffer capacity
    bool feasible = true;
    std::vector<double> per_replication;
    std::vector<StationStats> stations;
    // Bookkeeping of the last replication, used by conservation checks.
    long long entered = 0;
    long long completed = 0;
    long long in_system = 0;
    std::vector<int> max_buffer_occupancy;

    bool operator==(const EvaluationResult& o) const {
        return thp == o.thp && thp_stderr == o.thp_stderr && tbc == o.tbc && feasible == o.feasible &&
               per_replication == o.per_replication;
    }
};

/// Event-driven run of source -> WS1 -> Bu1 -> ... -> WS_NS -> sink.
/// Throws InputError if the configuration violates any constraint or the sim config is invalid.
EvaluationResult simulate(const RmsConfiguration& cfg, const ProblemInstance& inst, const SimulationConfig& sim);

/// Worst-case objectives assigned to infeasible solutions.
EvaluationResult death_penalty(const ProblemInstance& inst);

enum class DecoderKind { priority_key, naive_rounding };

/// Decodes a chromosome with the selected decoder; nullopt signals an infeasible solution.
std::optional<RmsConfiguration> decode_with(DecoderKind kind, const Chromosome& chrom, const ProblemInstance& inst);

/// Decode + simulate with a per-configuration result cache. All replications of every
/// configuration use the same random streams (seed, replication), so equal configurations
/// always receive equal objectives. Thread-safe.
class Evaluator {
public:
    Evaluator(const ProblemInstance& inst, SimulationConfig sim, DecoderKind kind = DecoderKind::priority_key);

    struct Outcome {
        std::optional<RmsConfiguration> config;
        EvaluationResult result;
    };

    Outcome evaluate(const Chromosome& chrom) const;
    /// Order-independent; runs on up to `jobs` threads and merges by index.
    std::vector<Outcome> evaluate_all(const std::vector<Chromosome>& chroms, int jobs = 1) const;

    [[nodiscard]] const ProblemInstance& instance() const { return inst_; }
    [[nodiscard]] const SimulationConfig& sim() const { return sim_; }
    [[nodiscard]] DecoderKind decoder() const { return kind_; }
    [[nodiscard]] std::size_t cache_size() const;

private:
    const ProblemInstance& inst_;
    SimulationConfig sim_;
    DecoderKind kind_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, EvaluationResult> cache_;
};

std::vector<EvaluationResult> evaluate_population(const std::vector<Chromosome>& chroms, const ProblemInstance& inst,
                                                  const SimulationConfig& sim, int jobs = 1);

/// Deterministic 64-bit mixer used to derive independent RNG streams.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rms
