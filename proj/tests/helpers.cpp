#include "helpers.hpp"

#include <numeric>

namespace rms::test {

RmsConfiguration balanced_configuration(const ProblemInstance& inst, const std::vector<int>& resources,
                                        const std::vector<int>& buffers) {
    RmsConfiguration cfg;
    cfg.resources_per_ws = resources;
    cfg.buffers = buffers;
    const double share_total = std::accumulate(resources.begin(), resources.end(), 0.0);
    for (const auto& var : inst.variants) {
        const auto order = topological_order(var.precedence);
        double work = 0.0;
        for (const auto& t : var.tasks) work += t.nominal_time;
        std::vector<int> asg(var.num_tasks(), 0);
        double done = 0.0;
        std::size_t station = 0;
        double bound = work * resources[0] / share_total;
        for (std::size_t i : order) {
            while (station + 1 < resources.size() && done + 0.5 * var.tasks[i].nominal_time > bound) {
                ++station;
                bound += work * resources[station] / share_total;
            }
            asg[i] = static_cast<int>(station);
            done += var.tasks[i].nominal_time;
        }
        cfg.assignment.push_back(asg);
    }
    compute_workload(inst, cfg);
    return cfg;
}

}  // namespace rms::test
