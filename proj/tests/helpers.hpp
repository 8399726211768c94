#pragma once

#include <algorithm>
#include <vector>

#include "rms/model.hpp"

namespace rms::test {

/// Serial line with one task per station, all-ones TR and no buffer handling time.
inline ProblemInstance single_task_line(const std::vector<double>& cycle, const std::vector<int>& resources,
                                        int buffer_max = 1) {
    ProblemInstance inst;
    inst.name = "line";
    inst.num_stations = static_cast<int>(cycle.size());
    int total = 0;
    int lo = resources.front(), hi = resources.front();
    for (int r : resources) {
        total += r;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    inst.total_resources = total;
    inst.min_resources_per_ws = lo;
    inst.max_resources_per_ws = hi;
    inst.buffer_min = 1;
    inst.buffer_max = buffer_max;
    Variant v;
    v.id = "P";
    const std::size_t n = cycle.size();
    for (std::size_t i = 0; i < n; ++i) v.tasks.push_back({std::to_string(i + 1), cycle[i]});
    v.precedence.assign(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i + 1 < n; ++i) v.precedence[i][i + 1] = true;
    v.tech_req.assign(n, std::vector<bool>(n, true));
    inst.variants.push_back(v);
    inst.mix.proportions = {1.0};
    return inst;
}

/// Task i on station i, the given resources and every buffer at `buffer`.
inline RmsConfiguration diagonal_configuration(const ProblemInstance& inst, const std::vector<int>& resources,
                                               int buffer) {
    RmsConfiguration cfg;
    cfg.resources_per_ws = resources;
    cfg.assignment.push_back({});
    for (std::size_t i = 0; i < inst.variants[0].num_tasks(); ++i) cfg.assignment[0].push_back(static_cast<int>(i));
    cfg.buffers.assign(static_cast<std::size_t>(inst.num_buffers()), buffer);
    compute_workload(inst, cfg);
    return cfg;
}

/// Splits each variant's topological order into NS contiguous blocks of roughly workload/resources share.
RmsConfiguration balanced_configuration(const ProblemInstance& inst, const std::vector<int>& resources,
                                        const std::vector<int>& buffers);

}  // namespace rms::test
