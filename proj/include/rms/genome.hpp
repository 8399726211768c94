#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rms/model.hpp"

namespace rms {

/// Keys strictly inside (0,1) are needed by the ceiling and cumulative-threshold rules.
inline constexpr double kKeyEpsilon = 1e-9;

/// Priority-key vector: NS station keys, then the task keys of each variant in turn, then NB buffer keys.
struct Chromosome {
    std::vector<double> keys;

    [[nodiscard]] std::size_t size() const { return keys.size(); }
    bool operator==(const Chromosome&) const = default;
};

double clamp_key(double key);
void clamp_keys(Chromosome& c);

/// Views into a chromosome's three segments.
std::span<const double> station_keys(const Chromosome& c, const ProblemInstance& inst);
std::span<const double> task_keys(const Chromosome& c, const ProblemInstance& inst, std::size_t variant);
std::span<const double> buffer_keys(const Chromosome& c, const ProblemInstance& inst);

struct EncodedSettings {
    std::vector<int> resources_per_ws;
    std::vector<std::vector<std::size_t>> sorted_task_order;  // per variant
    std::vector<int> buffers;
};

/// Throws InputError when the chromosome length does not match the instance.
EncodedSettings encode(const Chromosome& chrom, const ProblemInstance& inst);

/// Returned when a task's eligibility empties during decoding (only possible with restrictive TR).
struct InfeasibleDecode {
    std::size_t variant = 0;
    std::size_t task = 0;
};

struct DecodeResult {
    std::optional<RmsConfiguration> config;
    std::optional<InfeasibleDecode> failure;

    [[nodiscard]] bool feasible() const { return config.has_value(); }
};

DecodeResult decode(const EncodedSettings& settings, const Chromosome& chrom, const ProblemInstance& inst);

/// encode followed by decode.
DecodeResult decode_chromosome(const Chromosome& chrom, const ProblemInstance& inst);

/// Comparison decoder: keys rounded straight to resource counts, stations and buffer sizes,
/// followed by a greedy repair. Precedence is restored by pushing tasks forward; under restrictive
/// TR the repair can leave violations, which callers detect with check_configuration.
RmsConfiguration decode_naive(const Chromosome& chrom, const ProblemInstance& inst);

Chromosome random_chromosome(const ProblemInstance& inst, std::uint64_t seed);
Chromosome random_chromosome(const ProblemInstance& inst, std::mt19937_64& rng);

}  // namespace rms
