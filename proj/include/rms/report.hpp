#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rms/moea.hpp"

namespace rms {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Ranges over the feasible members of an archive's final non-dominated set.
struct FrontSummary {
    std::string label;
    int operators = 0;
    std::string mix;
    std::string algorithm;
    std::size_t front_size = 0;
    Range thp;
    std::vector<Range> buffers;
    Range tbc;
    std::vector<Range> resources;  // per workstation
    std::vector<Range> tasks;      // tasks of all variants per workstation
};

FrontSummary summarize_front(const RunArchive& archive);

/// "66.76-68.90", or a single value when both ends agree at the given precision.
std::string format_range(Range r, int precision);

/// NO, Proportion, THP, Bu_k..., TBC.
std::string ranges_table(const std::vector<FrontSummary>& rows);
/// NO, Proportion, WS_j..., Tasks ("n1/n2/n3" ranges).
std::string configuration_table(const std::vector<FrontSummary>& rows);

/// Max-THP gain between consecutive operator counts at a fixed mix.
struct MarginalThp {
    std::string mix;
    int from = 0;
    int to = 0;
    double per_operator = 0.0;
};

/// Rows sorted per mix by operator count; also one average entry per mix with from/to spanning the sweep.
std::vector<MarginalThp> marginal_thp(const std::vector<FrontSummary>& rows,
                                      std::vector<MarginalThp>* averages = nullptr);

nlohmann::json to_json(const FrontSummary& s);

}  // namespace rms
