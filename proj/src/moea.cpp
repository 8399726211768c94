#include "rms/moea.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <set>
#include <unordered_map>

#include "rms/scenario_io.hpp"

namespace rms {

bool dominates(const Objectives& a, const Objectives& b) {
    const bool no_worse = a.thp >= b.thp && a.tbc <= b.tbc;
    const bool better = a.thp > b.thp || a.tbc < b.tbc;
    return no_worse && better;
}

Fronts fast_nondominated_sort(std::span<const Objectives> objs) {
    const std::size_t n = objs.size();
    std::vector<std::vector<std::size_t>> dominated_by_me(n);
    std::vector<int> domination_count(n, 0);
    Fronts fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(objs[p], objs[q]))
                dominated_by_me[p].push_back(q);
            else if (dominates(objs[q], objs[p]))
                ++domination_count[p];
        }
        if (domination_count[p] == 0) current.push_back(p);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : current)
            for (std::size_t q : dominated_by_me[p])
                if (--domination_count[q] == 0) next.push_back(q);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

Fronts fast_nondominated_sort(std::vector<Individual>& pop) {
    std::vector<Objectives> objs;
    objs.reserve(pop.size());
    for (const auto& ind : pop) objs.push_back(ind.objectives);
    auto fronts = fast_nondominated_sort(objs);
    for (std::size_t f = 0; f < fronts.size(); ++f)
        for (std::size_t i : fronts[f]) pop[i].rank = static_cast<int>(f) + 1;
    return fronts;
}

void crowding_distance(std::vector<Individual>& pop, const std::vector<std::size_t>& front) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i : front) pop[i].crowding = 0.0;
    if (front.size() <= 2) {
        for (std::size_t i : front) pop[i].crowding = inf;
        return;
    }
    auto pass = [&](auto value) {
        std::vector<std::size_t> order = front;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return value(pop[a]) < value(pop[b]); });
        const double lo = value(pop[order.front()]);
        const double hi = value(pop[order.back()]);
        pop[order.front()].crowding = inf;
        pop[order.back()].crowding = inf;
        const double range = hi - lo;
        if (range <= 0.0) return;
        for (std::size_t k = 1; k + 1 < order.size(); ++k) {
            auto& c = pop[order[k]].crowding;
            if (c != inf) c += (value(pop[order[k + 1]]) - value(pop[order[k - 1]])) / range;
        }
    };
    pass([](const Individual& x) { return x.objectives.thp; });
    pass([](const Individual& x) { return x.objectives.tbc; });
}

namespace {

bool better_for_selection(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

}  // namespace

std::size_t tournament_select(const std::vector<Individual>& pop, int k, std::mt19937_64& rng) {
    if (pop.empty()) throw InputError("tournament over an empty population");
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (int draw = 1; draw < k; ++draw) {
        const std::size_t c = pick(rng);
        if (better_for_selection(pop[c], pop[best])) best = c;
    }
    return best;
}

std::pair<Chromosome, Chromosome> weight_mapping_crossover(const Chromosome& p1, const Chromosome& p2,
                                                           std::size_t first, std::size_t last) {
    if (p1.size() != p2.size()) throw InputError("crossover parents differ in length");
    if (first > last || last >= p1.size()) throw InputError("crossover interval out of range");
    const std::size_t n = last - first + 1;
    // rank_of[k]: 0-based rank of position first+k among the interval keys, ascending value.
    auto ranks = [&](const Chromosome& c) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return c.keys[first + a] < c.keys[first + b]; });
        std::vector<std::size_t> rank_of(n);
        for (std::size_t r = 0; r < n; ++r) rank_of[order[r]] = r;
        return rank_of;
    };
    auto sorted_values = [&](const Chromosome& c) {
        std::vector<double> v(c.keys.begin() + static_cast<std::ptrdiff_t>(first),
                              c.keys.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto r1 = ranks(p1);
    const auto r2 = ranks(p2);
    const auto v1 = sorted_values(p1);
    const auto v2 = sorted_values(p2);
    Chromosome c1 = p1;
    Chromosome c2 = p2;
    for (std::size_t k = 0; k < n; ++k) {
        c1.keys[first + k] = v1[r2[k]];
        c2.keys[first + k] = v2[r1[k]];
    }
    return {std::move(c1), std::move(c2)};
}

std::pair<Chromosome, Chromosome> weight_mapping_crossover(const Chromosome& p1, const Chromosome& p2,
                                                           std::mt19937_64& rng) {
    if (p1.size() < 2) return {p1, p2};
    std::uniform_int_distribution<std::size_t> pick(0, p1.size() - 1);
    std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    if (a > b) std::swap(a, b);
    return weight_mapping_crossover(p1, p2, a, b);
}

Chromosome swap_mutation(const Chromosome& c, std::size_t a, std::size_t b) {
    if (a >= c.size() || b >= c.size()) throw InputError("mutation position out of range");
    Chromosome out = c;
    std::swap(out.keys[a], out.keys[b]);
    return out;
}

Chromosome swap_mutation(const Chromosome& c, std::mt19937_64& rng) {
    if (c.size() < 2) throw InputError("swap mutation needs at least two keys");
    std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    return swap_mutation(c, a, b);
}

void validate(const AlgorithmParams& p) {
    if (p.population_size < 4 || p.population_size % 2 != 0)
        throw InputError("population size must be even and at least 4");
    if (p.max_generations < 0) throw InputError("max generations must be non-negative");
    if (p.crossover_prob < 0.0 || p.crossover_prob > 1.0) throw InputError("crossover probability outside [0,1]");
    if (p.mutation_prob < 0.0 || p.mutation_prob > 1.0) throw InputError("mutation probability outside [0,1]");
    if (p.tournament_size < 1) throw InputError("tournament size must be at least 1");
}

Objectives RunArchive::objectives(long long id) const {
    const auto& r = solutions.at(static_cast<std::size_t>(id)).result;
    return {r.thp, static_cast<double>(r.tbc)};
}

namespace {

std::string chromosome_key(const Chromosome& c) {
    std::string key(c.keys.size() * sizeof(double), '\0');
    std::memcpy(key.data(), c.keys.data(), key.size());
    return key;
}

class Registry {
public:
    Registry(RunArchive& archive, const Evaluator& evaluator, int jobs)
        : archive_(archive), evaluator_(evaluator), jobs_(jobs) {}

    /// Returns solution ids, evaluating only chromosomes not seen before.
    std::vector<long long> admit(const std::vector<Chromosome>& chroms, int generation) {
        std::vector<long long> ids(chroms.size(), -1);
        std::vector<Chromosome> fresh;
        std::vector<std::size_t> fresh_at;
        std::unordered_map<std::string, long long> pending;
        for (std::size_t i = 0; i < chroms.size(); ++i) {
            auto key = chromosome_key(chroms[i]);
            if (auto it = known_.find(key); it != known_.end()) {
                ids[i] = it->second;
                continue;
            }
            if (auto it = pending.find(key); it != pending.end()) {
                ids[i] = it->second;
                continue;
            }
            const auto id = static_cast<long long>(archive_.solutions.size() + fresh.size());
            pending.emplace(std::move(key), id);
            ids[i] = id;
            fresh.push_back(chroms[i]);
            fresh_at.push_back(i);
        }
        auto outcomes = evaluator_.evaluate_all(fresh, jobs_);
        for (std::size_t k = 0; k < fresh.size(); ++k) {
            SolutionRecord rec;
            rec.id = static_cast<long long>(archive_.solutions.size());
            rec.chromosome = fresh[k];
            rec.config = std::move(outcomes[k].config);
            rec.result = std::move(outcomes[k].result);
            rec.generation = generation;
            known_.emplace(chromosome_key(rec.chromosome), rec.id);
            archive_.solutions.push_back(std::move(rec));
        }
        return ids;
    }

private:
    RunArchive& archive_;
    const Evaluator& evaluator_;
    int jobs_;
    std::unordered_map<std::string, long long> known_;
};

std::vector<Individual> make_individuals(const RunArchive& archive, const std::vector<long long>& ids) {
    std::vector<Individual> pop;
    pop.reserve(ids.size());
    for (long long id : ids) {
        Individual ind;
        ind.solution_id = id;
        ind.chromosome = archive.solutions[static_cast<std::size_t>(id)].chromosome;
        ind.objectives = archive.objectives(id);
        pop.push_back(std::move(ind));
    }
    return pop;
}

void rank_and_crowd(std::vector<Individual>& pop) {
    const auto fronts = fast_nondominated_sort(pop);
    for (const auto& f : fronts) crowding_distance(pop, f);
}

// Elitist truncation of parents+offspring to `size`. Within the split front, distinct objective
// vectors are taken before repeats so a front with <= size distinct points survives whole.
std::vector<Individual> select_survivors(std::vector<Individual> merged, std::size_t size) {
    const auto fronts = fast_nondominated_sort(merged);
    std::vector<Individual> next;
    next.reserve(size);
    for (const auto& front : fronts) {
        if (next.size() + front.size() <= size) {
            for (std::size_t i : front) next.push_back(merged[i]);
            if (next.size() == size) break;
            continue;
        }
        crowding_distance(merged, front);
        std::vector<std::size_t> order = front;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return merged[a].crowding > merged[b].crowding; });
        std::vector<std::size_t> firsts;
        std::vector<std::size_t> repeats;
        std::set<std::pair<double, double>> seen;
        for (std::size_t i : order) {
            const auto key = std::make_pair(merged[i].objectives.thp, merged[i].objectives.tbc);
            (seen.insert(key).second ? firsts : repeats).push_back(i);
        }
        firsts.insert(firsts.end(), repeats.begin(), repeats.end());
        for (std::size_t k = 0; next.size() < size; ++k) next.push_back(merged[firsts[k]]);
        break;
    }
    rank_and_crowd(next);
    return next;
}

void snapshot(RunArchive& archive, const std::vector<Individual>& pop) {
    std::vector<long long> ids;
    ids.reserve(pop.size());
    for (const auto& ind : pop) ids.push_back(ind.solution_id);
    archive.generations.push_back(std::move(ids));
}

}  // namespace

RunArchive run_nsga(const ProblemInstance& inst, const AlgorithmParams& params, const SimulationConfig& sim,
                    DecoderKind decoder) {
    validate(params);
    validate(sim);
    if (auto v = validate_instance(inst); !v.empty()) throw InputError("invalid instance: " + v.front().message);

    RunArchive archive;
    archive.algorithm = decoder == DecoderKind::priority_key ? "proposed" : "baseline";
    archive.instance = inst;
    archive.instance_hash = instance_hash(inst);
    archive.params = params;
    archive.sim = sim;
    archive.sim.trace = nullptr;

    const Evaluator evaluator(archive.instance, archive.sim, decoder);
    Registry registry(archive, evaluator, params.jobs);
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const auto np = static_cast<std::size_t>(params.population_size);

    std::vector<Chromosome> initial;
    initial.reserve(np);
    for (std::size_t i = 0; i < np; ++i) initial.push_back(random_chromosome(archive.instance, rng));
    auto pop = make_individuals(archive, registry.admit(initial, 0));
    rank_and_crowd(pop);
    snapshot(archive, pop);

    for (int g = 1; g <= params.max_generations; ++g) {
        std::vector<Chromosome> offspring;
        offspring.reserve(np);
        while (offspring.size() < np) {
            const auto& a = pop[tournament_select(pop, params.tournament_size, rng)].chromosome;
            const auto& b = pop[tournament_select(pop, params.tournament_size, rng)].chromosome;
            auto children =
                coin(rng) < params.crossover_prob ? weight_mapping_crossover(a, b, rng) : std::make_pair(a, b);
            for (Chromosome* c : {&children.first, &children.second}) {
                if (coin(rng) < params.mutation_prob) *c = swap_mutation(*c, rng);
                clamp_keys(*c);
            }
            offspring.push_back(std::move(children.first));
            offspring.push_back(std::move(children.second));
        }
        auto merged = pop;
        auto children = make_individuals(archive, registry.admit(offspring, g));
        merged.insert(merged.end(), std::make_move_iterator(children.begin()), std::make_move_iterator(children.end()));
        pop = select_survivors(std::move(merged), np);
        snapshot(archive, pop);
    }

    std::set<long long> front;
    for (const auto& ind : pop) {
        archive.final_ranks.push_back(ind.rank);
        if (ind.rank == 1) front.insert(ind.solution_id);
    }
    archive.final_front.assign(front.begin(), front.end());
    return archive;
}

RunArchive run_smo(const ProblemInstance& inst, const AlgorithmParams& params, const SimulationConfig& sim) {
    return run_nsga(inst, params, sim, DecoderKind::priority_key);
}

RunArchive run_baseline_smo(const ProblemInstance& inst, const AlgorithmParams& params, const SimulationConfig& sim) {
    return run_nsga(inst, params, sim, DecoderKind::naive_rounding);
}

HypervolumeResult hypervolume_2d(std::span<const Point2> points, Point2 ref) {
    HypervolumeResult out;
    std::vector<Point2> pts;
    pts.reserve(points.size());
    for (const auto& p : points) {
        if (p.x < ref.x && p.y < ref.y)
            pts.push_back(p);
        else
            ++out.discarded;
    }
    std::sort(pts.begin(), pts.end(),
              [](const Point2& a, const Point2& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    std::vector<Point2> staircase;
    for (const auto& p : pts)
        if (staircase.empty() || p.y < staircase.back().y) staircase.push_back(p);
    for (std::size_t i = 0; i < staircase.size(); ++i) {
        const double next_x = i + 1 < staircase.size() ? staircase[i + 1].x : ref.x;
        out.value += (next_x - staircase[i].x) * (ref.y - staircase[i].y);
    }
    return out;
}

Point2 to_minimization(const Objectives& o) {
    return {-o.thp, o.tbc};
}

Point2 normalize(Point2 p, const Normalization& n) {
    const double rx = n.nadir.x - n.ideal.x;
    const double ry = n.nadir.y - n.ideal.y;
    return {(p.x - n.ideal.x) / (rx > 0.0 ? rx : 1.0), (p.y - n.ideal.y) / (ry > 0.0 ? ry : 1.0)};
}

HypervolumeResult hypervolume(std::span<const Objectives> points, const Normalization& norm, Point2 ref) {
    std::vector<Point2> pts;
    pts.reserve(points.size());
    for (const auto& o : points) pts.push_back(normalize(to_minimization(o), norm));
    return hypervolume_2d(pts, ref);
}

std::vector<std::size_t> nondominated_indices(std::span<const Objectives> objs) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < objs.size() && !dominated; ++j) dominated = j != i && dominates(objs[j], objs[i]);
        if (!dominated) out.push_back(i);
    }
    return out;
}

namespace {

std::vector<Objectives> generation_objectives(const RunArchive& archive, const std::vector<long long>& ids) {
    std::vector<Objectives> objs;
    objs.reserve(ids.size());
    for (long long id : ids) objs.push_back(archive.objectives(id));
    return objs;
}

}  // namespace

Normalization shared_normalization(std::span<const RunArchive* const> archives) {
    Normalization n;
    bool any = false;
    for (const RunArchive* a : archives) {
        for (const auto& gen : a->generations) {
            const auto objs = generation_objectives(*a, gen);
            for (std::size_t i : nondominated_indices(objs)) {
                const Point2 p = to_minimization(objs[i]);
                if (!any) {
                    n.ideal = n.nadir = p;
                    any = true;
                }
                n.ideal.x = std::min(n.ideal.x, p.x);
                n.ideal.y = std::min(n.ideal.y, p.y);
                n.nadir.x = std::max(n.nadir.x, p.x);
                n.nadir.y = std::max(n.nadir.y, p.y);
            }
        }
    }
    return n;
}

std::vector<double> hypervolume_curve(const RunArchive& archive, const Normalization& norm, Point2 ref) {
    std::vector<double> out;
    out.reserve(archive.generations.size());
    for (const auto& gen : archive.generations)
        out.push_back(hypervolume(generation_objectives(archive, gen), norm, ref).value);
    return out;
}

}  // namespace rms
