#include "rms/genome.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rms {

double clamp_key(double key) {
    return std::clamp(key, kKeyEpsilon, 1.0 - kKeyEpsilon);
}

void clamp_keys(Chromosome& c) {
    for (auto& k : c.keys) k = clamp_key(k);
}

std::span<const double> station_keys(const Chromosome& c, const ProblemInstance& inst) {
    return std::span<const double>(c.keys).subspan(0, static_cast<std::size_t>(inst.num_stations));
}

std::span<const double> task_keys(const Chromosome& c, const ProblemInstance& inst, std::size_t variant) {
    return std::span<const double>(c.keys).subspan(inst.task_key_offset(variant), inst.variants[variant].num_tasks());
}

std::span<const double> buffer_keys(const Chromosome& c, const ProblemInstance& inst) {
    return std::span<const double>(c.keys).subspan(inst.num_stations + inst.total_tasks(),
                                                   static_cast<std::size_t>(inst.num_buffers()));
}

namespace {

void check_length(const Chromosome& chrom, const ProblemInstance& inst) {
    if (chrom.size() != inst.chromosome_length())
        throw InputError("chromosome length " + std::to_string(chrom.size()) + " does not match instance length " +
                         std::to_string(inst.chromosome_length()));
}

// Indices sorted by key; ties go to the lower index.
std::vector<std::size_t> order_by_key(std::span<const double> keys, bool descending) {
    std::vector<std::size_t> idx(keys.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return descending ? keys[a] > keys[b] : keys[a] < keys[b]; });
    return idx;
}

int scaled_ceil(double lo, double hi, double key) {
    return static_cast<int>(std::ceil(lo + key * (hi - lo)));
}

// Round-robin over `order`, stepping each entry by `step` while `total` is outside the target.
// Entries that would leave [lo, hi] are skipped; a full pass without progress ends the loop.
void repair_round_robin(std::vector<int>& values, const std::vector<std::size_t>& order, int step, int lo, int hi,
                        auto needs_step) {
    int total = std::accumulate(values.begin(), values.end(), 0);
    std::size_t pos = 0;
    std::size_t stalled = 0;
    while (needs_step(total) && stalled < order.size()) {
        const std::size_t j = order[pos];
        pos = (pos + 1) % order.size();
        const int next = values[j] + step;
        if (next < lo || next > hi) {
            ++stalled;
            continue;
        }
        values[j] = next;
        total += step;
        stalled = 0;
    }
}

}  // namespace

EncodedSettings encode(const Chromosome& chrom, const ProblemInstance& inst) {
    check_length(chrom, inst);
    EncodedSettings out;

    const auto skeys = station_keys(chrom, inst);
    const int rmin = inst.min_resources_per_ws;
    const int rmax = inst.max_resources_per_ws;
    out.resources_per_ws.resize(skeys.size());
    for (std::size_t j = 0; j < skeys.size(); ++j)
        out.resources_per_ws[j] = std::clamp(scaled_ceil(rmin, rmax, skeys[j]), rmin, rmax);
    const int tnm = inst.total_resources;
    int total = std::accumulate(out.resources_per_ws.begin(), out.resources_per_ws.end(), 0);
    if (total > tnm) {
        repair_round_robin(out.resources_per_ws, order_by_key(skeys, true), -1, rmin, rmax,
                           [tnm](int t) { return t > tnm; });
    } else if (total < tnm) {
        repair_round_robin(out.resources_per_ws, order_by_key(skeys, false), +1, rmin, rmax,
                           [tnm](int t) { return t < tnm; });
    }

    out.sorted_task_order.resize(inst.variants.size());
    for (std::size_t v = 0; v < inst.variants.size(); ++v) {
        const auto& var = inst.variants[v];
        const auto keys = task_keys(chrom, inst, v);
        std::vector<int> flex(var.num_tasks());
        for (std::size_t i = 0; i < flex.size(); ++i) flex[i] = var.flexibility(i);
        auto& order = out.sorted_task_order[v];
        order.resize(var.num_tasks());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (flex[a] != flex[b]) return flex[a] < flex[b];
            return keys[a] > keys[b];
        });
    }

    const auto bkeys = buffer_keys(chrom, inst);
    const int bmin = inst.buffer_min;
    const int bmax = inst.buffer_max;
    out.buffers.resize(bkeys.size());
    for (std::size_t k = 0; k < bkeys.size(); ++k)
        out.buffers[k] = std::clamp(scaled_ceil(bmin, bmax, bkeys[k]), bmin, bmax);
    const int nb = inst.num_buffers();
    const int unit = inst.buffer_unit;
    const int bsum = std::accumulate(out.buffers.begin(), out.buffers.end(), 0);
    if (bsum > bmax * nb) {
        repair_round_robin(out.buffers, order_by_key(bkeys, true), -unit, bmin, bmax,
                           [cap = bmax * nb](int t) { return t > cap; });
    } else if (bsum < bmin * nb) {
        repair_round_robin(out.buffers, order_by_key(bkeys, false), +unit, bmin, bmax,
                           [floor = bmin * nb](int t) { return t < floor; });
    }
    return out;
}

DecodeResult decode(const EncodedSettings& settings, const Chromosome& chrom, const ProblemInstance& inst) {
    check_length(chrom, inst);
    const auto ns = static_cast<std::size_t>(inst.num_stations);
    RmsConfiguration cfg;
    cfg.resources_per_ws = settings.resources_per_ws;
    cfg.buffers = settings.buffers;
    cfg.assignment.resize(inst.variants.size());

    for (std::size_t v = 0; v < inst.variants.size(); ++v) {
        const auto& var = inst.variants[v];
        const std::size_t nt = var.num_tasks();
        const auto keys = task_keys(chrom, inst, v);
        const BoolMatrix reach = transitive_closure(var.precedence);

        // eligible[i][j]: station j still open for task i.
        std::vector<std::vector<bool>> eligible(nt, std::vector<bool>(ns));
        for (std::size_t i = 0; i < nt; ++i)
            for (std::size_t j = 0; j < ns; ++j) eligible[i][j] = var.tech_req[j][i];

        auto& asg = cfg.assignment[v];
        asg.assign(nt, -1);
        for (const std::size_t task : settings.sorted_task_order[v]) {
            const auto& open = eligible[task];
            const auto count = static_cast<std::size_t>(std::count(open.begin(), open.end(), true));
            if (count == 0) return {std::nullopt, InfeasibleDecode{v, task}};
            // Normalized cumulative eligibility reaches m/count at the m-th open station, so the first
            // station whose cumulative share covers the key is the ceil(key*count)-th open one.
            const auto m = std::clamp<std::size_t>(
                static_cast<std::size_t>(std::ceil(keys[task] * static_cast<double>(count))), 1, count);
            std::size_t seen = 0;
            std::size_t station = ns;
            for (std::size_t j = 0; j < ns; ++j) {
                if (open[j] && ++seen == m) {
                    station = j;
                    break;
                }
            }
            asg[task] = static_cast<int>(station);
            for (std::size_t j = 0; j < ns; ++j) eligible[task][j] = (j == station);
            for (std::size_t r = 0; r < nt; ++r) {
                if (reach[task][r])
                    for (std::size_t j = 0; j < station; ++j) eligible[r][j] = false;
                if (reach[r][task])
                    for (std::size_t j = station + 1; j < ns; ++j) eligible[r][j] = false;
            }
        }
    }
    compute_workload(inst, cfg);
    return {std::move(cfg), std::nullopt};
}

DecodeResult decode_chromosome(const Chromosome& chrom, const ProblemInstance& inst) {
    return decode(encode(chrom, inst), chrom, inst);
}

RmsConfiguration decode_naive(const Chromosome& chrom, const ProblemInstance& inst) {
    check_length(chrom, inst);
    const int ns = inst.num_stations;
    RmsConfiguration cfg;

    const auto skeys = station_keys(chrom, inst);
    const int rmin = inst.min_resources_per_ws;
    const int rmax = inst.max_resources_per_ws;
    auto& res = cfg.resources_per_ws;
    for (const double k : skeys)
        res.push_back(std::clamp(static_cast<int>(std::lround(rmin + k * (rmax - rmin))), rmin, rmax));
    int total = std::accumulate(res.begin(), res.end(), 0);
    while (total > inst.total_resources) {
        auto it = std::max_element(res.begin(), res.end());
        if (*it <= rmin) break;
        --*it;
        --total;
    }
    while (total < inst.total_resources) {
        auto it = std::min_element(res.begin(), res.end());
        if (*it >= rmax) break;
        ++*it;
        ++total;
    }

    cfg.assignment.resize(inst.variants.size());
    for (std::size_t v = 0; v < inst.variants.size(); ++v) {
        const auto& var = inst.variants[v];
        const auto keys = task_keys(chrom, inst, v);
        auto& asg = cfg.assignment[v];
        asg.resize(var.num_tasks());
        for (std::size_t i = 0; i < asg.size(); ++i) asg[i] = std::min(ns - 1, static_cast<int>(keys[i] * ns));
        for (const std::size_t i : topological_order(var.precedence)) {
            int lo = 0;
            for (std::size_t p = 0; p < asg.size(); ++p)
                if (var.precedence[p][i]) lo = std::max(lo, asg[p]);
            int s = std::max(asg[i], lo);
            while (s < ns && !var.tech_req[s][i]) ++s;
            if (s == ns) {
                // Nothing eligible downstream; fall back to the last eligible station.
                s = ns - 1;
                while (s > 0 && !var.tech_req[s][i]) --s;
            }
            asg[i] = s;
        }
    }

    const auto bkeys = buffer_keys(chrom, inst);
    const int unit = std::max(1, inst.buffer_unit);
    const int steps = (inst.buffer_max - inst.buffer_min) / unit;
    for (const double k : bkeys)
        cfg.buffers.push_back(inst.buffer_min + unit * std::clamp(static_cast<int>(std::lround(k * steps)), 0, steps));
    compute_workload(inst, cfg);
    return cfg;
}

Chromosome random_chromosome(const ProblemInstance& inst, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Chromosome c;
    c.keys.resize(inst.chromosome_length());
    for (auto& k : c.keys) {
        double x = unit(rng);
        while (x <= 0.0) x = unit(rng);
        k = clamp_key(x);
    }
    return c;
}

Chromosome random_chromosome(const ProblemInstance& inst, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return random_chromosome(inst, rng);
}

}  // namespace rms
