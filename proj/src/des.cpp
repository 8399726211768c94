#include "rms/des.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <thread>

namespace rms {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void validate(const SimulationConfig& sim) {
    if (!(sim.warmup >= 0.0)) throw InputError("warmup must be non-negative");
    if (!(sim.horizon > sim.warmup)) throw InputError("horizon must exceed warmup");
    if (sim.replications < 1) throw InputError("replications must be at least 1");
}

EvaluationResult death_penalty(const ProblemInstance& inst) {
    EvaluationResult r;
    r.feasible = false;
    r.thp = 0.0;
    r.tbc = inst.buffer_max * inst.num_buffers();
    return r;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Part {
    long long id = -1;
    int variant = 0;
};

enum class ResourceState { idle, busy, down, blocked };

struct Resource {
    ResourceState state = ResourceState::idle;
    double since = 0.0;
    Part part;
    double remaining = 0.0;  // processing seconds still owed on the current part
    double time_to_failure = kInf;
    int last_variant = -1;
    std::mt19937_64 failures;
    std::array<double, 4> time_in{};  // post-warmup seconds per ResourceState
};

enum class EventKind { finish, fail, repair };

struct Event {
    double time;
    std::uint64_t seq;
    int station;
    int resource;
    EventKind kind;
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::finish:
            return "finish";
        case EventKind::fail:
            return "fail";
        case EventKind::repair:
            return "repair";
    }
    return "?";
}

/// State of one replication. Owns every mutable piece of the run.
class LineRun {
public:
    LineRun(const RmsConfiguration& cfg, const ProblemInstance& inst, const SimulationConfig& sim, int replication)
        : cfg_(cfg), inst_(inst), sim_(sim), ns_(inst.num_stations) {
        const std::uint64_t rep_seed =
            splitmix64(sim.seed ^ splitmix64(0x5eedULL + static_cast<std::uint64_t>(replication)));
        stations_.resize(ns_);
        noise_.reserve(ns_);
        for (int j = 0; j < ns_; ++j) {
            stations_[j].resize(cfg.resources_per_ws[j]);
            for (int r = 0; r < cfg.resources_per_ws[j]; ++r)
                stations_[j][r].failures.seed(
                    splitmix64(rep_seed + 0x1000ULL * (j + 1) + static_cast<std::uint64_t>(r)));
            noise_.emplace_back(splitmix64(rep_seed ^ (0xabcdef12345ULL * (j + 1))));
        }
        mix_rng_.seed(splitmix64(rep_seed ^ 0x6d6978ULL));
        buffers_.resize(inst.num_buffers());
        blocked_.resize(ns_);
        max_occupancy_.assign(inst.num_buffers(), 0);
        released_.assign(inst.variants.size(), 0);

        const auto& st = inst.stochastic;
        failures_enabled_ = st.availability < 1.0 && st.mttr > 0.0;
        if (failures_enabled_) {
            mtbf_ = st.mttr * st.availability / (1.0 - st.availability);
        }
        cv_ = sim.cv_override >= 0.0 ? sim.cv_override : st.task_time_cv;
        if (sim.task_time_distribution == TaskTimeDistribution::lognormal && cv_ > 0.0) {
            const double s2 = std::log1p(cv_ * cv_);
            lognormal_ = std::lognormal_distribution<double>(-0.5 * s2, std::sqrt(s2));
        }
        trace_ = replication == 0 ? sim.trace : nullptr;
    }

    void run() {
        for (auto& station : stations_)
            for (auto& res : station) res.time_to_failure = draw_ttf(res);
        for (int r = 0; r < static_cast<int>(stations_[0].size()); ++r) pull(0, r, 0.0);

        while (!events_.empty()) {
            const Event e = events_.top();
            if (e.time > sim_.horizon) break;
            events_.pop();
            now_ = e.time;
            if (trace_) {
                const auto& res = stations_[e.station][e.resource];
                *trace_ << e.time << ',' << kind_name(e.kind) << ',' << e.station << ',' << e.resource << ','
                        << res.part.id << '\n';
            }
            handle(e);
            assert(entered_ == completed_ + in_system_);
        }
        for (auto& station : stations_)
            for (auto& res : station) account(res, sim_.horizon);
    }

    [[nodiscard]] double throughput_per_hour() const {
        return static_cast<double>(counted_) / (sim_.horizon - sim_.warmup) * 3600.0;
    }

    void collect(EvaluationResult& out) const {
        const double span = sim_.horizon - sim_.warmup;
        for (int j = 0; j < ns_; ++j) {
            auto& s = out.stations[j];
            const auto n = static_cast<double>(stations_[j].size());
            for (const auto& res : stations_[j]) {
                s.idle += res.time_in[0] / span / n;
                s.busy += res.time_in[1] / span / n;
                s.down += res.time_in[2] / span / n;
                s.blocked += res.time_in[3] / span / n;
            }
        }
        out.entered = entered_;
        out.completed = completed_;
        out.in_system = in_system_;
        out.max_buffer_occupancy = max_occupancy_;
    }

private:
    double draw_ttf(Resource& res) {
        if (!failures_enabled_) return kInf;
        return std::exponential_distribution<double>(1.0 / mtbf_)(res.failures);
    }

    double draw_repair(Resource& res) {
        return std::exponential_distribution<double>(1.0 / inst_.stochastic.mttr)(res.failures);
    }

    double time_factor(int station) {
        if (cv_ <= 0.0) return 1.0;
        switch (sim_.task_time_distribution) {
            case TaskTimeDistribution::deterministic:
                return 1.0;
            case TaskTimeDistribution::lognormal:
                return lognormal_(noise_[station]);
            case TaskTimeDistribution::triangular: {
                // Symmetric triangular on [1-cv, 1+cv] by inverse CDF, clipped at zero.
                const double u = std::uniform_real_distribution<double>(0.0, 1.0)(noise_[station]);
                const double x = u < 0.5 ? -1.0 + std::sqrt(2.0 * u) : 1.0 - std::sqrt(2.0 * (1.0 - u));
                return std::max(0.0, 1.0 + cv_ * x);
            }
        }
        return 1.0;
    }

    int next_variant() {
        const auto& p = inst_.mix.proportions;
        int chosen = 0;
        if (sim_.sequencing == VariantSequencing::bernoulli) {
            std::discrete_distribution<int> d(p.begin(), p.end());
            chosen = d(mix_rng_);
        } else {
            // Largest deficit against the target share keeps the release sequence balanced.
            const double n = static_cast<double>(entered_ + 1);
            double best = -kInf;
            for (std::size_t v = 0; v < p.size(); ++v) {
                const double deficit = n * p[v] - static_cast<double>(released_[v]);
                if (deficit > best + 1e-12) {
                    best = deficit;
                    chosen = static_cast<int>(v);
                }
            }
        }
        ++released_[chosen];
        return chosen;
    }

    void account(Resource& res, double t) {
        const double lo = std::max(res.since, sim_.warmup);
        const double hi = std::min(t, sim_.horizon);
        if (hi > lo) res.time_in[static_cast<int>(res.state)] += hi - lo;
        res.since = t;
    }

    void set_state(Resource& res, ResourceState s) {
        account(res, now_);
        res.state = s;
    }

    void schedule(double t, int station, int resource, EventKind kind) {
        events_.push({t, seq_++, station, resource, kind});
    }

    void advance(int j, int r) {
        auto& res = stations_[j][r];
        if (res.remaining <= res.time_to_failure) {
            schedule(now_ + res.remaining, j, r, EventKind::finish);
        } else {
            schedule(now_ + res.time_to_failure, j, r, EventKind::fail);
        }
    }

    void start(int j, int r, Part part) {
        auto& res = stations_[j][r];
        const double h = inst_.stochastic.handling_time;
        double work = cfg_.station_workload[part.variant][j] * time_factor(j);
        if (j > 0) work += h;
        if (j < ns_ - 1) work += h;
        if (res.last_variant >= 0 && res.last_variant != part.variant) work += inst_.stochastic.setup_time;
        res.last_variant = part.variant;
        res.part = part;
        res.remaining = work;
        set_state(res, ResourceState::busy);
        advance(j, r);
    }

    void handle(const Event& e) {
        auto& res = stations_[e.station][e.resource];
        switch (e.kind) {
            case EventKind::fail:
                // Preempt-resume: the unfinished work waits through the repair.
                res.remaining -= res.time_to_failure;
                res.time_to_failure = 0.0;
                set_state(res, ResourceState::down);
                schedule(now_ + draw_repair(res), e.station, e.resource, EventKind::repair);
                break;
            case EventKind::repair:
                res.time_to_failure = draw_ttf(res);
                set_state(res, ResourceState::busy);
                advance(e.station, e.resource);
                break;
            case EventKind::finish:
                res.time_to_failure -= res.remaining;
                res.remaining = 0.0;
                route(e.station, e.resource);
                break;
        }
    }

    int idle_resource(int j) const {
        for (int r = 0; r < static_cast<int>(stations_[j].size()); ++r)
            if (stations_[j][r].state == ResourceState::idle) return r;
        return -1;
    }

    void route(int j, int r) {
        auto& res = stations_[j][r];
        if (j == ns_ - 1) {
            ++completed_;
            --in_system_;
            if (now_ > sim_.warmup) ++counted_;
            set_state(res, ResourceState::idle);
            pull(j, r, now_);
            return;
        }
        auto& queue = buffers_[j];
        const auto cap = static_cast<std::size_t>(cfg_.buffers[j]);
        if (queue.size() < cap) {
            queue.push_back(res.part);
            max_occupancy_[j] = std::max<int>(max_occupancy_[j], static_cast<int>(queue.size()));
            assert(queue.size() <= cap);
            set_state(res, ResourceState::idle);
            feed(j + 1);
            pull(j, r, now_);
            return;
        }
        const int down = idle_resource(j + 1);
        if (queue.empty() && down >= 0) {
            // Zero-capacity buffer: hand the part straight over.
            const Part part = res.part;
            set_state(res, ResourceState::idle);
            start(j + 1, down, part);
            pull(j, r, now_);
            return;
        }
        set_state(res, ResourceState::blocked);
        blocked_[j].push_back(r);
    }

    // Moves the first blocked resource of station j into the freed buffer slot and restarts it.
    void release_blocked(int j) {
        if (blocked_[j].empty()) return;
        const int r = blocked_[j].front();
        blocked_[j].pop_front();
        auto& res = stations_[j][r];
        buffers_[j].push_back(res.part);
        max_occupancy_[j] = std::max<int>(max_occupancy_[j], static_cast<int>(buffers_[j].size()));
        set_state(res, ResourceState::idle);
        pull(j, r, now_);
    }

    std::optional<Part> take(int j) {
        if (j == 0) {
            Part p{next_part_id_++, next_variant()};
            ++entered_;
            ++in_system_;
            return p;
        }
        auto& queue = buffers_[j - 1];
        if (!queue.empty()) {
            const Part p = queue.front();
            queue.pop_front();
            release_blocked(j - 1);
            return p;
        }
        if (!blocked_[j - 1].empty()) {
            const int r = blocked_[j - 1].front();
            blocked_[j - 1].pop_front();
            auto& up = stations_[j - 1][r];
            const Part p = up.part;
            set_state(up, ResourceState::idle);
            pull(j - 1, r, now_);
            return p;
        }
        return std::nullopt;
    }

    void pull(int j, int r, double) {
        if (auto part = take(j)) start(j, r, *part);
    }

    void feed(int j) {
        for (int r = idle_resource(j); r >= 0; r = idle_resource(j)) {
            auto part = take(j);
            if (!part) return;
            start(j, r, *part);
        }
    }

    const RmsConfiguration& cfg_;
    const ProblemInstance& inst_;
    const SimulationConfig& sim_;
    int ns_;
    std::vector<std::vector<Resource>> stations_;
    std::vector<std::deque<Part>> buffers_;
    std::vector<std::deque<int>> blocked_;
    std::vector<std::mt19937_64> noise_;
    std::mt19937_64 mix_rng_;
    std::lognormal_distribution<double> lognormal_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::vector<long long> released_;
    std::vector<int> max_occupancy_;
    std::ostream* trace_ = nullptr;
    bool failures_enabled_ = false;
    double mtbf_ = kInf;
    double cv_ = 0.0;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;
    long long next_part_id_ = 0;
    long long entered_ = 0;
    long long completed_ = 0;
    long long in_system_ = 0;
    long long counted_ = 0;
};

}  // namespace

EvaluationResult simulate(const RmsConfiguration& cfg, const ProblemInstance& inst, const SimulationConfig& sim) {
    validate(sim);
    const auto violations = check_configuration(inst, cfg);
    if (!violations.empty())
        throw InputError("configuration infeasible: " + violations.front().code + " " + violations.front().message);
    if (cfg.station_workload.size() != inst.variants.size())
        throw InputError("configuration is missing station workloads");

    EvaluationResult out;
    out.tbc = cfg.total_buffer_capacity();
    out.stations.assign(inst.num_stations, {});
    for (int rep = 0; rep < sim.replications; ++rep) {
        LineRun run(cfg, inst, sim, rep);
        run.run();
        out.per_replication.push_back(run.throughput_per_hour());
        EvaluationResult part;
        part.stations.assign(inst.num_stations, {});
        run.collect(part);
        for (int j = 0; j < inst.num_stations; ++j) {
            out.stations[j].busy += part.stations[j].busy / sim.replications;
            out.stations[j].down += part.stations[j].down / sim.replications;
            out.stations[j].blocked += part.stations[j].blocked / sim.replications;
            out.stations[j].idle += part.stations[j].idle / sim.replications;
        }
        out.entered = part.entered;
        out.completed = part.completed;
        out.in_system = part.in_system;
        out.max_buffer_occupancy = part.max_buffer_occupancy;
    }
    const double n = static_cast<double>(out.per_replication.size());
    out.thp = std::accumulate(out.per_replication.begin(), out.per_replication.end(), 0.0) / n;
    if (out.per_replication.size() > 1) {
        double ss = 0.0;
        for (double x : out.per_replication) ss += (x - out.thp) * (x - out.thp);
        out.thp_stderr = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

std::optional<RmsConfiguration> decode_with(DecoderKind kind, const Chromosome& chrom, const ProblemInstance& inst) {
    if (kind == DecoderKind::priority_key) return decode_chromosome(chrom, inst).config;
    auto cfg = decode_naive(chrom, inst);
    if (!check_configuration(inst, cfg).empty()) return std::nullopt;
    return cfg;
}

namespace {

std::string config_key(const RmsConfiguration& cfg) {
    std::string key;
    auto put = [&key](int x) {
        key += std::to_string(x);
        key += ',';
    };
    for (int x : cfg.resources_per_ws) put(x);
    key += '|';
    for (const auto& row : cfg.assignment) {
        for (int x : row) put(x);
        key += '|';
    }
    for (int x : cfg.buffers) put(x);
    return key;
}

}  // namespace

Evaluator::Evaluator(const ProblemInstance& inst, SimulationConfig sim, DecoderKind kind)
    : inst_(inst), sim_(sim), kind_(kind) {
    sim_.trace = nullptr;
    validate(sim_);
}

Evaluator::Outcome Evaluator::evaluate(const Chromosome& chrom) const {
    Outcome out;
    out.config = decode_with(kind_, chrom, inst_);
    if (!out.config) {
        out.result = death_penalty(inst_);
        return out;
    }
    const std::string key = config_key(*out.config);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            out.result = it->second;
            return out;
        }
    }
    out.result = simulate(*out.config, inst_, sim_);
    std::lock_guard lock(mutex_);
    cache_.emplace(key, out.result);
    return out;
}

std::vector<Evaluator::Outcome> Evaluator::evaluate_all(const std::vector<Chromosome>& chroms, int jobs) const {
    std::vector<Outcome> out(chroms.size());
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || chroms.size() < 2) {
        for (std::size_t i = 0; i < chroms.size(); ++i) out[i] = evaluate(chroms[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, chroms.size()); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < chroms.size(); i = next++) out[i] = evaluate(chroms[i]);
            });
        }
    }
    return out;
}

std::size_t Evaluator::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::vector<EvaluationResult> evaluate_population(const std::vector<Chromosome>& chroms, const ProblemInstance& inst,
                                                  const SimulationConfig& sim, int jobs) {
    Evaluator eval(inst, sim);
    auto outcomes = eval.evaluate_all(chroms, jobs);
    std::vector<EvaluationResult> out;
    out.reserve(outcomes.size());
    for (auto& o : outcomes) out.push_back(std::move(o.result));
    return out;
}

}  // namespace rms
