#include "rms/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

namespace rms {

int Variant::flexibility(std::size_t task) const {
    int n = 0;
    for (const auto& row : tech_req) n += row[task] ? 1 : 0;
    return n;
}

std::size_t ProblemInstance::total_tasks() const {
    std::size_t n = 0;
    for (const auto& v : variants) n += v.num_tasks();
    return n;
}

std::size_t ProblemInstance::task_key_offset(std::size_t variant) const {
    std::size_t off = static_cast<std::size_t>(num_stations);
    for (std::size_t v = 0; v < variant; ++v) off += variants[v].num_tasks();
    return off;
}

std::size_t ProblemInstance::chromosome_length() const {
    return static_cast<std::size_t>(num_stations) + total_tasks() + static_cast<std::size_t>(num_buffers());
}

int RmsConfiguration::total_buffer_capacity() const {
    return std::accumulate(buffers.begin(), buffers.end(), 0);
}

void compute_workload(const ProblemInstance& inst, RmsConfiguration& cfg) {
    cfg.station_workload.assign(inst.variants.size(), std::vector<double>(inst.num_stations, 0.0));
    for (std::size_t v = 0; v < inst.variants.size(); ++v) {
        const auto& tasks = inst.variants[v].tasks;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const int s = cfg.assignment[v][i];
            if (s >= 0 && s < inst.num_stations) cfg.station_workload[v][s] += tasks[i].nominal_time;
        }
    }
}

std::vector<std::size_t> topological_order(const BoolMatrix& precedence) {
    const std::size_t n = precedence.size();
    std::vector<int> indeg(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < n; ++r)
            if (precedence[i][r]) ++indeg[r];
    std::vector<std::size_t> order;
    order.reserve(n);
    // Smallest ready index first keeps the order deterministic.
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        auto it = std::min_element(ready.begin(), ready.end());
        const std::size_t i = *it;
        ready.erase(it);
        order.push_back(i);
        for (std::size_t r = 0; r < n; ++r)
            if (precedence[i][r] && --indeg[r] == 0) ready.push_back(r);
    }
    if (order.size() != n) return {};
    return order;
}

BoolMatrix transitive_closure(const BoolMatrix& precedence) {
    BoolMatrix reach = precedence;
    const std::size_t n = reach.size();
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t r = 0; r < n; ++r)
                    if (reach[k][r]) reach[i][r] = true;
    return reach;
}

namespace {

void add(std::vector<Violation>& out, std::string code, std::string message) {
    out.push_back({std::move(code), std::move(message)});
}

std::string variant_label(std::size_t v, const Variant& var) {
    std::ostringstream os;
    os << "variant " << v << " (" << var.id << ")";
    return os.str();
}

}  // namespace

std::vector<Violation> validate_instance(const ProblemInstance& inst) {
    std::vector<Violation> out;
    const int ns = inst.num_stations;
    if (ns < 1) {
        add(out, "NS >= 1", "num_stations must be at least 1");
        return out;
    }
    if (inst.min_resources_per_ws < 0 || inst.max_resources_per_ws < inst.min_resources_per_ws)
        add(out, "NMWS bounds", "need 0 <= NMWS_min <= NMWS_max");
    if (inst.total_resources < inst.min_resources_per_ws * ns)
        add(out, "TNM < NMWS_min×NS",
            "total_resources " + std::to_string(inst.total_resources) + " below " +
                std::to_string(inst.min_resources_per_ws * ns));
    if (inst.total_resources > inst.max_resources_per_ws * ns)
        add(out, "TNM > NMWS_max×NS",
            "total_resources " + std::to_string(inst.total_resources) + " above " +
                std::to_string(inst.max_resources_per_ws * ns));
    if (inst.buffer_min < 0) add(out, "B_min >= 0", "buffer_min is negative");
    if (inst.buffer_max < inst.buffer_min) add(out, "B_max >= B_min", "buffer_max below buffer_min");
    if (inst.buffer_unit < 1) add(out, "B_unit >= 1", "buffer_unit must be at least 1");

    const auto& st = inst.stochastic;
    if (!(st.availability > 0.0 && st.availability <= 1.0)) add(out, "availability", "availability must lie in (0,1]");
    if (st.mttr < 0.0) add(out, "mttr", "mttr is negative");
    if (st.task_time_cv < 0.0) add(out, "task_time_cv", "task_time_cv is negative");
    if (st.setup_time < 0.0) add(out, "setup_time", "setup_time is negative");
    if (st.handling_time < 0.0) add(out, "handling_time", "handling_time is negative");

    if (inst.variants.empty()) add(out, "NV >= 1", "instance has no variants");
    if (inst.mix.proportions.size() != inst.variants.size()) {
        add(out, "mix size",
            "mix has " + std::to_string(inst.mix.proportions.size()) + " proportions for " +
                std::to_string(inst.variants.size()) + " variants");
    } else {
        double sum = 0.0;
        for (std::size_t v = 0; v < inst.mix.proportions.size(); ++v) {
            const double p = inst.mix.proportions[v];
            if (p < 0.0) add(out, "mix negative", "proportion " + std::to_string(v) + " is negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) add(out, "mix sum", "proportions sum to " + std::to_string(sum));
    }

    for (std::size_t v = 0; v < inst.variants.size(); ++v) {
        const auto& var = inst.variants[v];
        const std::size_t nt = var.num_tasks();
        const std::string label = variant_label(v, var);
        if (nt == 0) {
            add(out, "NT_v >= 1", label + " has no tasks");
            continue;
        }
        for (std::size_t i = 0; i < nt; ++i)
            if (!(var.tasks[i].nominal_time > 0.0))
                add(out, "task time", label + " task " + std::to_string(i) + " has non-positive time");

        bool shape_ok = var.precedence.size() == nt;
        for (const auto& row : var.precedence) shape_ok = shape_ok && row.size() == nt;
        if (!shape_ok) {
            add(out, "precedence shape",
                label + " precedence must be " + std::to_string(nt) + "x" + std::to_string(nt));
            continue;
        }
        bool tr_ok = var.tech_req.size() == static_cast<std::size_t>(ns);
        for (const auto& row : var.tech_req) tr_ok = tr_ok && row.size() == nt;
        if (!tr_ok) {
            add(out, "tech_req shape", label + " tech_req must be " + std::to_string(ns) + "x" + std::to_string(nt));
            continue;
        }
        const auto order = topological_order(var.precedence);
        if (order.empty()) {
            add(out, "precedence cycle", label + " precedence graph has a cycle");
            continue;
        }
        bool eligible_ok = true;
        for (std::size_t i = 0; i < nt; ++i) {
            if (var.flexibility(i) == 0) {
                add(out, "no eligible station", label + " task " + std::to_string(i) + " has no eligible station");
                eligible_ok = false;
            }
        }
        if (!eligible_ok) continue;
        // Forward pass: earliest eligible station not before any predecessor's.
        std::vector<int> earliest(nt, 0);
        for (const std::size_t i : order) {
            int lo = 0;
            for (std::size_t p = 0; p < nt; ++p)
                if (var.precedence[p][i]) lo = std::max(lo, earliest[p]);
            int s = lo;
            while (s < ns && !var.tech_req[s][i]) ++s;
            if (s == ns) {
                add(out, "precedence/TR infeasible",
                    label + " task " + std::to_string(i) + " has no eligible station after its predecessors");
                break;
            }
            earliest[i] = s;
        }
    }
    return out;
}

std::vector<Violation> check_configuration(const ProblemInstance& inst, const RmsConfiguration& cfg) {
    const int ns = inst.num_stations;
    if (cfg.resources_per_ws.size() != static_cast<std::size_t>(ns))
        throw InputError("configuration has " + std::to_string(cfg.resources_per_ws.size()) +
                         " stations, instance has " + std::to_string(ns));
    if (cfg.buffers.size() != static_cast<std::size_t>(inst.num_buffers()))
        throw InputError("configuration has " + std::to_string(cfg.buffers.size()) + " buffers, instance has " +
                         std::to_string(inst.num_buffers()));
    if (cfg.assignment.size() != inst.variants.size())
        throw InputError("configuration assignment covers " + std::to_string(cfg.assignment.size()) +
                         " variants, instance has " + std::to_string(inst.variants.size()));
    for (std::size_t v = 0; v < inst.variants.size(); ++v)
        if (cfg.assignment[v].size() != inst.variants[v].num_tasks())
            throw InputError("assignment of variant " + std::to_string(v) + " has wrong task count");

    std::vector<Violation> out;
    int total = 0;
    for (int j = 0; j < ns; ++j) {
        const int k = cfg.resources_per_ws[j];
        total += k;
        if (k < inst.min_resources_per_ws)
            add(out, "resource-min", "station " + std::to_string(j) + " has " + std::to_string(k) + " resources");
        if (k > inst.max_resources_per_ws)
            add(out, "resource-max", "station " + std::to_string(j) + " has " + std::to_string(k) + " resources");
    }
    if (total != inst.total_resources)
        add(out, "resource-total",
            "resources sum to " + std::to_string(total) + ", expected " + std::to_string(inst.total_resources));

    for (std::size_t v = 0; v < inst.variants.size(); ++v) {
        const auto& var = inst.variants[v];
        const auto& asg = cfg.assignment[v];
        const std::string label = variant_label(v, var);
        for (std::size_t i = 0; i < var.num_tasks(); ++i) {
            const int s = asg[i];
            if (s < 0 || s >= ns) {
                add(out, "assignment", label + " task " + std::to_string(i) + " not assigned to a station");
                continue;
            }
            if (!var.tech_req[s][i])
                add(out, "eligibility",
                    label + " task " + std::to_string(i) + " on ineligible station " + std::to_string(s));
        }
        for (std::size_t i = 0; i < var.num_tasks(); ++i)
            for (std::size_t r = 0; r < var.num_tasks(); ++r)
                if (var.precedence[i][r] && asg[i] > asg[r])
                    add(out, "precedence",
                        label + " task " + std::to_string(i) + " precedes task " + std::to_string(r) +
                            " but sits on a later station");
    }

    for (std::size_t k = 0; k < cfg.buffers.size(); ++k) {
        const int b = cfg.buffers[k];
        if (b < inst.buffer_min || b > inst.buffer_max)
            add(out, "buffer-bounds",
                "buffer " + std::to_string(k) + " capacity " + std::to_string(b) + " outside [" +
                    std::to_string(inst.buffer_min) + ", " + std::to_string(inst.buffer_max) + "]");
    }
    return out;
}

namespace {

// Published totals: 336.38 s over 29 tasks and 293.38 s over 24 tasks. Individual times were drawn
// once from U(0.4, 1.6) and scaled to the totals at centisecond resolution.
constexpr double kPart1Times[] = {11.66, 13.26, 18.67, 11.86, 12.49, 13.67, 7.69,  12.55, 14.30, 16.72,
                                  6.35,  9.45,  6.29,  16.97, 15.24, 5.57,  19.53, 19.27, 14.66, 14.09,
                                  7.29,  5.17,  12.79, 5.83,  7.77,  8.54,  5.39,  11.84, 11.47};
constexpr double kPart2Times[] = {19.03, 19.39, 18.54, 6.31,  14.00, 11.45, 13.06, 7.01, 7.95,  11.77, 8.39,  11.93,
                                  5.42,  6.34,  15.78, 11.41, 12.80, 16.15, 10.47, 5.91, 16.89, 13.95, 14.99, 14.44};

// 1-based (pred, succ) edges.
constexpr std::pair<int, int> kPart1Edges[] = {
    {1, 2},   {1, 3},   {2, 3},   {2, 4},   {3, 4},   {1, 5},   {2, 6},   {4, 6},   {3, 7},   {4, 8},
    {7, 9},   {6, 10},  {7, 11},  {10, 11}, {8, 12},  {12, 13}, {11, 14}, {12, 15}, {13, 15}, {14, 16},
    {16, 17}, {14, 18}, {17, 18}, {15, 19}, {19, 20}, {18, 21}, {19, 21}, {21, 22}, {20, 23}, {23, 24},
    {24, 25}, {22, 26}, {23, 26}, {23, 27}, {25, 27}, {27, 28}, {25, 29}, {28, 29}};
constexpr std::pair<int, int> kPart2Edges[] = {
    {1, 2},   {2, 3},   {2, 4},   {3, 4},   {4, 5},   {5, 6},   {6, 7},   {4, 8},   {5, 8},   {7, 9},   {8, 9},
    {7, 10},  {8, 10},  {7, 11},  {10, 12}, {11, 13}, {12, 13}, {12, 14}, {12, 15}, {13, 15}, {14, 16}, {13, 17},
    {14, 18}, {17, 18}, {16, 19}, {16, 20}, {17, 20}, {17, 21}, {21, 22}, {20, 23}, {20, 24}, {23, 24}};

template <std::size_t N, std::size_t E>
Variant make_variant(std::string id, const double (&times)[N], const std::pair<int, int> (&edges)[E], int ns) {
    Variant v;
    v.id = std::move(id);
    for (std::size_t i = 0; i < N; ++i) v.tasks.push_back({std::to_string(i + 1), times[i]});
    v.precedence.assign(N, std::vector<bool>(N, false));
    for (const auto& [a, b] : edges) v.precedence[a - 1][b - 1] = true;
    v.tech_req.assign(ns, std::vector<bool>(N, true));
    return v;
}

}  // namespace

ProblemInstance reference_case(int total_resources, std::vector<double> proportions) {
    ProblemInstance inst;
    inst.name = "reference";
    inst.num_stations = 3;
    inst.total_resources = total_resources;
    inst.min_resources_per_ws = 1;
    inst.max_resources_per_ws = 5;
    inst.buffer_min = 1;
    inst.buffer_max = 40;
    inst.buffer_unit = 1;
    inst.stochastic.availability = 0.85;
    inst.stochastic.mttr = 600.0;
    inst.stochastic.handling_time = 5.0;
    inst.variants.push_back(make_variant("A", kPart1Times, kPart1Edges, inst.num_stations));
    inst.variants.push_back(make_variant("E", kPart2Times, kPart2Edges, inst.num_stations));
    inst.mix.proportions = std::move(proportions);
    return inst;
}

constexpr double kToyTimes[] = {40.0, 25.0, 35.0, 30.0};
constexpr std::pair<int, int> kToyEdges[] = {{1, 2}, {1, 3}, {3, 4}};

ProblemInstance toy_case() {
    ProblemInstance inst;
    inst.name = "toy";
    inst.num_stations = 2;
    inst.total_resources = 3;
    inst.min_resources_per_ws = 1;
    inst.max_resources_per_ws = 2;
    inst.buffer_min = 1;
    inst.buffer_max = 8;
    inst.buffer_unit = 1;
    inst.stochastic.availability = 0.85;
    inst.stochastic.mttr = 600.0;
    inst.stochastic.handling_time = 5.0;
    inst.variants.push_back(make_variant("T", kToyTimes, kToyEdges, inst.num_stations));
    inst.mix.proportions = {1.0};
    return inst;
}

ProblemInstance generate_case(const CaseGenOptions& opts, std::uint64_t seed) {
    if (opts.num_stations < 1 || opts.num_variants < 1 || opts.tasks_per_variant < 1)
        throw InputError("case generator needs at least one station, variant and task");
    if (opts.total_resources < opts.min_resources_per_ws * opts.num_stations ||
        opts.total_resources > opts.max_resources_per_ws * opts.num_stations)
        throw InputError("case generator: total_resources outside [NMWS_min×NS, NMWS_max×NS]");
    if (opts.buffer_min < 0 || opts.buffer_max < opts.buffer_min || opts.buffer_unit < 1)
        throw InputError("case generator: invalid buffer bounds");
    if (!(opts.min_task_time > 0.0) || opts.max_task_time < opts.min_task_time)
        throw InputError("case generator: invalid task time range");
    if (!opts.proportions.empty() && opts.proportions.size() != static_cast<std::size_t>(opts.num_variants))
        throw InputError("case generator: proportions size differs from num_variants");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> time(opts.min_task_time, opts.max_task_time);

    ProblemInstance inst;
    inst.name = "generated-" + std::to_string(seed);
    inst.num_stations = opts.num_stations;
    inst.total_resources = opts.total_resources;
    inst.min_resources_per_ws = opts.min_resources_per_ws;
    inst.max_resources_per_ws = opts.max_resources_per_ws;
    inst.buffer_min = opts.buffer_min;
    inst.buffer_max = opts.buffer_max;
    inst.buffer_unit = opts.buffer_unit;
    inst.stochastic = opts.stochastic;

    const int ns = opts.num_stations;
    const auto nt = static_cast<std::size_t>(opts.tasks_per_variant);
    for (int v = 0; v < opts.num_variants; ++v) {
        Variant var;
        var.id = std::string(1, static_cast<char>('A' + v % 26)) + (v >= 26 ? std::to_string(v / 26) : "");
        for (std::size_t i = 0; i < nt; ++i) {
            // Round to centiseconds so scenario files stay readable.
            const double t = std::round(time(rng) * 100.0) / 100.0;
            var.tasks.push_back({std::to_string(i + 1), std::max(t, 0.01)});
        }
        // Random labelling over an upper-triangular DAG.
        std::vector<std::size_t> label(nt);
        std::iota(label.begin(), label.end(), 0);
        std::shuffle(label.begin(), label.end(), rng);
        var.precedence.assign(nt, std::vector<bool>(nt, false));
        for (std::size_t a = 0; a < nt; ++a)
            for (std::size_t b = a + 1; b < nt; ++b)
                if (unit(rng) < opts.edge_probability) var.precedence[label[a]][label[b]] = true;

        var.tech_req.assign(ns, std::vector<bool>(nt, true));
        if (opts.tech_restriction > 0.0 && ns > 1) {
            // Interval [lo, hi] per task, both bounds non-decreasing along topological position.
            std::vector<int> lo(nt), hi(nt);
            std::vector<double> draws(nt);
            for (auto& d : draws) d = unit(rng);
            std::vector<double> sorted_draws = draws;
            std::sort(sorted_draws.begin(), sorted_draws.end());
            std::vector<double> widths(nt);
            for (auto& w : widths) w = unit(rng);
            // position a in topological order (labels a < b imply no edge b->a)
            for (std::size_t a = 0; a < nt; ++a) {
                const int anchor = std::min(ns - 1, static_cast<int>(sorted_draws[a] * ns));
                lo[label[a]] = anchor;
                hi[label[a]] = anchor;
            }
            int prev_lo = 0;
            int prev_hi = 0;
            for (std::size_t a = 0; a < nt; ++a) {
                const std::size_t t = label[a];
                if (unit(rng) >= opts.tech_restriction) {
                    lo[t] = prev_lo;
                    hi[t] = ns - 1;
                } else {
                    const int spread = static_cast<int>(widths[a] * 2.0);
                    lo[t] = std::max(prev_lo, lo[t] - spread);
                    hi[t] = std::max(prev_hi, std::min(ns - 1, hi[t] + spread));
                }
                prev_lo = lo[t];
                prev_hi = hi[t];
                for (int j = 0; j < ns; ++j) var.tech_req[j][t] = (j >= lo[t] && j <= hi[t]);
            }
        }
        inst.variants.push_back(std::move(var));
    }
    if (opts.proportions.empty()) {
        inst.mix.proportions.assign(opts.num_variants, 1.0 / opts.num_variants);
    } else {
        inst.mix.proportions = opts.proportions;
    }
    double sum = std::accumulate(inst.mix.proportions.begin(), inst.mix.proportions.end(), 0.0);
    if (!(sum > 0.0)) throw InputError("case generator: proportions sum to zero");
    for (auto& p : inst.mix.proportions) p /= sum;
    // Absorb rounding so the sum is exact to 1e-12.
    sum = std::accumulate(inst.mix.proportions.begin(), inst.mix.proportions.end() - 1, 0.0);
    inst.mix.proportions.back() = 1.0 - sum;

    auto violations = validate_instance(inst);
    if (!violations.empty()) throw InputError("generated case invalid: " + violations.front().message);
    return inst;
}

}  // namespace rms
