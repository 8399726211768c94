#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rms/des.hpp"
#include "rms/genome.hpp"
#include "rms/model.hpp"

namespace rms {

/// Throughput is maximized, total buffer capacity minimized.
struct Objectives {
    double thp = 0.0;
    double tbc = 0.0;
    bool operator==(const Objectives&) const = default;
};

bool dominates(const Objectives& a, const Objectives& b);

struct Individual {
    Chromosome chromosome;
    Objectives objectives;
    int rank = 0;  // 1-based front index
    double crowding = 0.0;
    long long solution_id = -1;
};

using Fronts = std::vector<std::vector<std::size_t>>;

/// Partitions indices of `pop` into fronts F1, F2, ...; sets each member's rank.
Fronts fast_nondominated_sort(std::vector<Individual>& pop);
Fronts fast_nondominated_sort(std::span<const Objectives> objs);

/// Assigns crowding distance to the members of one front.
void crowding_distance(std::vector<Individual>& pop, const std::vector<std::size_t>& front);

/// Binary-tournament style selection over k draws with replacement; returns the winner's index.
std::size_t tournament_select(const std::vector<Individual>& pop, int k, std::mt19937_64& rng);

/// Weight-mapping crossover over one contiguous interval [first, last] (inclusive).
std::pair<Chromosome, Chromosome> weight_mapping_crossover(const Chromosome& p1, const Chromosome& p2,
                                                           std::size_t first, std::size_t last);
/// Draws two distinct cut points, then applies the interval form above.
std::pair<Chromosome, Chromosome> weight_mapping_crossover(const Chromosome& p1, const Chromosome& p2,
                                                           std::mt19937_64& rng);

Chromosome swap_mutation(const Chromosome& c, std::size_t a, std::size_t b);
Chromosome swap_mutation(const Chromosome& c, std::mt19937_64& rng);

struct AlgorithmParams {
    int population_size = 50;
    int max_generations = 500;
    double crossover_prob = 0.9;
    double mutation_prob = 0.1;
    int tournament_size = 2;
    std::uint64_t seed = 1;
    int jobs = 1;
};

/// Throws InputError unless NP is even and >= 4 and both probabilities lie in [0,1].
void validate(const AlgorithmParams& params);

/// One evaluated, unique chromosome in a run.
struct SolutionRecord {
    long long id = 0;
    Chromosome chromosome;
    std::optional<RmsConfiguration> config;  // empty for infeasible decodes
    EvaluationResult result;
    int generation = 0;  // generation of birth
};

struct RunArchive {
    std::string algorithm;  // "proposed" or "baseline"
    std::string instance_hash;
    ProblemInstance instance;
    AlgorithmParams params;
    SimulationConfig sim;
    std::vector<SolutionRecord> solutions;            // indexed by id
    std::vector<std::vector<long long>> generations;  // population ids after each generation's selection
    std::vector<int> final_ranks;                     // per generations.back() member
    std::vector<long long> final_front;               // unique ids of rank-1 members of the final population

    [[nodiscard]] Objectives objectives(long long id) const;
};

RunArchive run_smo(const ProblemInstance& inst, const AlgorithmParams& params, const SimulationConfig& sim);
/// Same loop, with decode_naive in place of the priority-key encode/decode.
RunArchive run_baseline_smo(const ProblemInstance& inst, const AlgorithmParams& params, const SimulationConfig& sim);
RunArchive run_nsga(const ProblemInstance& inst, const AlgorithmParams& params, const SimulationConfig& sim,
                    DecoderKind decoder);

/// A point in minimization space.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct HypervolumeResult {
    double value = 0.0;
    std::size_t discarded = 0;  // points not strictly dominating the reference
};

/// Exact 2-D hypervolume of minimization points against `ref`.
HypervolumeResult hypervolume_2d(std::span<const Point2> points, Point2 ref);

/// Ideal and nadir in minimization space (negated throughput, buffer capacity).
struct Normalization {
    Point2 ideal{0.0, 0.0};
    Point2 nadir{1.0, 1.0};
};

Point2 to_minimization(const Objectives& o);
Point2 normalize(Point2 p, const Normalization& norm);

/// Converts throughput to minimization, normalizes with `norm`, then computes the HV against ref.
HypervolumeResult hypervolume(std::span<const Objectives> points, const Normalization& norm, Point2 ref = {1.1, 1.1});

/// Normalization spanning every per-generation non-dominated set of the given archives.
Normalization shared_normalization(std::span<const RunArchive* const> archives);

/// HV of the non-dominated subset of each generation's population; length = generations + 1.
std::vector<double> hypervolume_curve(const RunArchive& archive, const Normalization& norm, Point2 ref = {1.1, 1.1});

/// Indices of the mutually non-dominated objective vectors.
std::vector<std::size_t> nondominated_indices(std::span<const Objectives> objs);

}  // namespace rms
