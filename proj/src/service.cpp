#include "rms/service.hpp"

#include <algorithm>
#include <set>

#include <httplib.h>

#include "rms/dataset.hpp"
#include "rms/fpm.hpp"
#include "rms/scenario_io.hpp"

namespace rms::service {

using nlohmann::json;

WorkerPool::WorkerPool(int workers) {
    const int n = std::max(1, workers);
    for (int i = 0; i < n; ++i) {
        threads_.emplace_back([this] {
            for (;;) {
                std::packaged_task<void()> task;
                {
                    std::unique_lock lock(mutex_);
                    cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
                    if (queue_.empty()) return;
                    task = std::move(queue_.front());
                    queue_.pop_front();
                }
                task();
            }
        });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
}

std::future<void> WorkerPool::submit(std::function<void()> task) {
    std::packaged_task<void()> pt(std::move(task));
    auto fut = pt.get_future();
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(pt));
    }
    cv_.notify_one();
    return fut;
}

namespace {

Response json_response(int status, const json& body) {
    return {status, body.dump(), "application/json"};
}

Response error(int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    return json_response(status, extra);
}

std::size_t parse_size(const std::map<std::string, std::string>& query, const std::string& key, std::size_t fallback) {
    const auto it = query.find(key);
    if (it == query.end() || it->second.empty()) return fallback;
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
}

json summary(const DatasetEntry& e) {
    const auto& a = e.archive;
    return {{"id", e.id},
            {"label", scenario_label(a)},
            {"operators", a.instance.total_resources},
            {"mix", fpm::mix_label(a.instance.mix)},
            {"algorithm", a.algorithm},
            {"instance_hash", a.instance_hash},
            {"solutions", a.solutions.size()},
            {"final_front", a.final_front.size()}};
}

std::vector<int> final_rank_by_id(const RunArchive& a) {
    std::vector<int> rank(a.solutions.size(), 0);
    if (!a.generations.empty()) {
        const auto& last = a.generations.back();
        for (std::size_t i = 0; i < last.size() && i < a.final_ranks.size(); ++i)
            rank[static_cast<std::size_t>(last[i])] = a.final_ranks[i];
    }
    return rank;
}

}  // namespace

Service::Service(ServiceOptions options) : options_(options), pool_(options.workers) {}

Service::~Service() = default;

std::string Service::add_dataset(RunArchive archive, const std::string& stem) {
    std::string id = stem.empty() ? "dataset" : stem;
    for (int n = 2; find(id) != nullptr; ++n) id = stem + "-" + std::to_string(n);
    datasets_.push_back(std::make_unique<DatasetEntry>(DatasetEntry{id, std::move(archive)}));
    return id;
}

std::string Service::load_dataset_file(const std::filesystem::path& path) {
    return add_dataset(load_dataset(path), path.stem().string());
}

const DatasetEntry* Service::find(const std::string& id) const {
    for (const auto& d : datasets_)
        if (d->id == id) return d.get();
    return nullptr;
}

std::size_t Service::mining_cache_size() const {
    std::lock_guard lock(mutex_);
    return mining_cache_.size();
}

Response Service::handle(const std::string& method, const std::string& path,
                         const std::map<std::string, std::string>& query, const std::string& body) {
    try {
        const std::string datasets_prefix = "/api/datasets/";
        const std::string jobs_prefix = "/api/jobs/";
        if (method == "GET") {
            if (path == "/api/datasets") return list_datasets();
            if (path.starts_with(datasets_prefix) && path.ends_with("/solutions")) {
                const std::string id = path.substr(
                    datasets_prefix.size(), path.size() - datasets_prefix.size() - std::string("/solutions").size());
                std::size_t offset = 0;
                std::size_t limit = 0;
                try {
                    offset = parse_size(query, "offset", 0);
                    limit = parse_size(query, "limit", static_cast<std::size_t>(-1));
                } catch (const std::exception&) {
                    return error(400, "offset and limit must be non-negative integers");
                }
                return solutions(id, offset, limit);
            }
            if (path.starts_with(jobs_prefix)) return job(path.substr(jobs_prefix.size()));
        } else if (method == "POST") {
            if (path == "/api/mine" || path == "/api/whatif" || path == "/api/rulematch") {
                json request;
                try {
                    request = json::parse(body);
                } catch (const json::parse_error& e) {
                    return error(400, std::string("request body is not valid JSON: ") + e.what());
                }
                if (!request.is_object()) return error(400, "request body must be a JSON object");
                if (path == "/api/mine") return mine(request);
                if (path == "/api/whatif") return whatif(request);
                return rulematch(request);
            }
        }
        return error(404, "no such endpoint", {{"method", method}, {"path", path}});
    } catch (const InputError& e) {
        return error(422, e.what());
    } catch (const json::exception& e) {
        return error(422, e.what());
    } catch (const std::exception& e) {
        return error(500, e.what());
    }
}

Response Service::list_datasets() const {
    json list = json::array();
    for (const auto& d : datasets_) list.push_back(summary(*d));
    return json_response(200, {{"datasets", std::move(list)}});
}

Response Service::solutions(const std::string& id, std::size_t offset, std::size_t limit) const {
    const DatasetEntry* d = find(id);
    if (!d) return error(404, "unknown dataset", {{"id", id}});
    const auto& a = d->archive;
    const auto columns = fpm::feature_columns(a.instance);
    const auto rank = final_rank_by_id(a);
    const std::set<long long> front(a.final_front.begin(), a.final_front.end());
    json names = json::array();
    for (const auto& c : columns) names.push_back(c.name);
    json records = json::array();
    const std::size_t n = a.solutions.size();
    const std::size_t end = offset >= n ? n : offset + std::min(limit, n - offset);
    for (std::size_t i = std::min(offset, n); i < end; ++i) {
        const auto& s = a.solutions[i];
        json vars = nullptr;
        if (s.config) {
            vars = json::object();
            const auto row = fpm::feature_row(*s.config);
            for (std::size_t c = 0; c < columns.size(); ++c) vars[columns[c].name] = row[c];
        }
        records.push_back({{"id", s.id},
                           {"thp", s.result.thp},
                           {"thp_stderr", s.result.thp_stderr},
                           {"tbc", s.result.tbc},
                           {"feasible", s.result.feasible},
                           {"rank", rank[i]},
                           {"final_front", front.contains(s.id)},
                           {"generation", s.generation},
                           {"variables", std::move(vars)}});
    }
    return json_response(200, {{"dataset", id},
                               {"total", n},
                               {"offset", offset},
                               {"columns", std::move(names)},
                               {"solutions", std::move(records)}});
}

Response Service::mine(const json& request) {
    if (!request.contains("dataset_ids") || !request.at("dataset_ids").is_array() || request.at("dataset_ids").empty())
        return error(422, "dataset_ids must be a non-empty array");
    std::vector<std::string> ids;
    for (const auto& j : request.at("dataset_ids")) ids.push_back(j.get<std::string>());
    std::vector<fpm::SelectionPart> parts;
    for (const auto& id : ids) {
        const DatasetEntry* d = find(id);
        if (!d) return error(404, "unknown dataset", {{"id", id}});
        if (std::any_of(parts.begin(), parts.end(), [&](const auto& p) { return p.source == id; }))
            return error(422, "dataset '" + id + "' listed twice");
        parts.push_back({&d->archive, id, {}});
    }
    if (!request.contains("selected_solution_ids") || !request.at("selected_solution_ids").is_array() ||
        request.at("selected_solution_ids").empty())
        return error(422, "selected_solution_ids must be a non-empty array");
    for (const auto& j : request.at("selected_solution_ids")) {
        std::string source;
        long long sid = -1;
        if (j.is_number_integer()) {
            if (parts.size() != 1) return error(422, "with several datasets, select solutions as \"<dataset>:<id>\"");
            source = parts.front().source;
            sid = j.get<long long>();
        } else {
            const auto label = j.get<std::string>();
            const auto colon = label.rfind(':');
            if (colon == std::string::npos) return error(422, "selection '" + label + "' is not \"<dataset>:<id>\"");
            source = label.substr(0, colon);
            try {
                sid = std::stoll(label.substr(colon + 1));
            } catch (const std::exception&) {
                return error(422, "selection '" + label + "' has no numeric solution id");
            }
        }
        auto it = std::find_if(parts.begin(), parts.end(), [&](const auto& p) { return p.source == source; });
        if (it == parts.end()) return error(422, "selection refers to dataset '" + source + "' not in dataset_ids");
        if (sid < 0 || static_cast<std::size_t>(sid) >= it->archive->solutions.size())
            return error(422, "solution " + std::to_string(sid) + " is not in dataset '" + source + "'");
        if (!it->archive->solutions[static_cast<std::size_t>(sid)].config)
            return error(422,
                         "solution " + std::to_string(sid) + " of '" + source + "' is infeasible and has no variables");
        it->selected.insert(sid);
    }
    fpm::MiningParams params;
    params.max_level = request.value("max_level", params.max_level);
    params.min_significance = request.value("min_significance", params.min_significance);
    if (params.max_level < 1) return error(422, "max_level must be at least 1");
    if (!(params.min_significance > 0.0 && params.min_significance <= 1.0))
        return error(422, "min_significance must lie in (0, 1]");
    const fpm::ColumnSelection which = fpm::parse_column_selection(request.value("columns", std::string("all")));

    fpm::FeatureTable table;
    try {
        table = fpm::build_union_table(parts, which);
    } catch (const InputError& e) {
        return error(422, std::string(e.what()) + "; the selection must be a non-empty proper subset of the solutions");
    }

    json key = {{"parts", json::array()},
                {"max_level", params.max_level},
                {"min_significance", params.min_significance},
                {"columns", {which.tasks, which.stations, which.buffers}}};
    std::vector<std::string> sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    for (const auto& id : sorted_ids) {
        const auto& p = *std::find_if(parts.begin(), parts.end(), [&](const auto& q) { return q.source == id; });
        key["parts"].push_back({{"id", id}, {"hash", p.archive->instance_hash}, {"selected", p.selected}});
    }
    const std::string hash = content_hash(key);

    {
        std::lock_guard lock(mutex_);
        if (auto it = mining_cache_.find(hash); it != mining_cache_.end()) return {200, it->second, "application/json"};
    }

    const std::size_t cells = table.rows.size() * table.columns.size();
    auto run = [table = std::move(table), params]() {
        const auto result = fpm::mine(table, params);
        return mining_document(result, table.num_selected(), table.num_unselected()).dump();
    };
    if (cells <= options_.async_cells) {
        std::string body;
        pool_.submit([&] { body = run(); }).get();
        std::lock_guard lock(mutex_);
        mining_cache_.emplace(hash, body);
        return {200, body, "application/json"};
    }

    auto job = std::make_shared<Job>();
    std::string job_id;
    {
        std::lock_guard lock(mutex_);
        job_id = "mine-" + std::to_string(next_job_++);
        jobs_[job_id] = job;
    }
    pool_.submit([this, job, hash, run = std::move(run)]() {
        {
            std::lock_guard lock(mutex_);
            job->status = "running";
        }
        try {
            std::string body = run();
            std::lock_guard lock(mutex_);
            mining_cache_.emplace(hash, body);
            job->body = std::move(body);
            job->status = "done";
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex_);
            job->body = json{{"error", e.what()}}.dump();
            job->http_status = 500;
            job->status = "failed";
        }
    });
    return json_response(202, {{"job", job_id}, {"status", "pending"}, {"poll", "/api/jobs/" + job_id}});
}

Response Service::job(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return error(404, "unknown job", {{"id", id}});
    const Job& j = *it->second;
    json out = {{"job", id}, {"status", j.status}};
    if (j.status == "done") out["result"] = json::parse(j.body);
    if (j.status == "failed") out["error"] = json::parse(j.body).at("error");
    return json_response(200, out);
}

Response Service::whatif(const json& request) {
    const std::string id = request.value("dataset_id", std::string());
    const DatasetEntry* d = find(id);
    if (!d) return error(404, "unknown dataset", {{"id", id}});
    const auto& a = d->archive;
    if (!request.contains("configuration")) return error(422, "configuration is required");
    const RmsConfiguration cfg = configuration_from_json(request.at("configuration"), a.instance);
    if (const auto v = check_configuration(a.instance, cfg); !v.empty()) {
        json list = json::array();
        for (const auto& x : v) list.push_back({{"code", x.code}, {"message", x.message}});
        return error(422, "configuration violates constraints", {{"violations", std::move(list)}});
    }
    SimulationConfig sim = a.sim;
    if (request.contains("sim_overrides")) {
        const auto& o = request.at("sim_overrides");
        if (!o.is_object()) return error(422, "sim_overrides must be an object");
        for (const auto& [k, val] : o.items())
            if (k != "replications" && k != "horizon" && k != "warmup" && k != "seed")
                return error(422, "sim_overrides: unsupported key '" + k + "'");
        sim.replications = o.value("replications", sim.replications);
        sim.horizon = o.value("horizon", sim.horizon);
        sim.warmup = o.value("warmup", sim.warmup);
        sim.seed = o.value("seed", sim.seed);
    }
    validate(sim);
    EvaluationResult r;
    pool_.submit([&] { r = simulate(cfg, a.instance, sim); }).get();
    json stations = json::array();
    for (const auto& s : r.stations)
        stations.push_back({{"busy", s.busy}, {"down", s.down}, {"blocked", s.blocked}, {"idle", s.idle}});
    return json_response(200, {{"dataset", id},
                               {"thp", r.thp},
                               {"thp_stderr", r.thp_stderr},
                               {"tbc", r.tbc},
                               {"per_replication", r.per_replication},
                               {"stations", std::move(stations)},
                               {"sim", to_json(sim)}});
}

Response Service::rulematch(const json& request) const {
    const std::string id = request.value("dataset_id", std::string());
    const DatasetEntry* d = find(id);
    if (!d) return error(404, "unknown dataset", {{"id", id}});
    const auto& a = d->archive;
    std::vector<fpm::RuleInteraction> interactions;
    if (request.contains("interactions")) {
        if (!request.at("interactions").is_array()) return error(422, "interactions must be an array");
        for (const auto& j : request.at("interactions")) interactions.push_back(interaction_from_json(j));
    }
    const auto columns = fpm::feature_columns(a.instance);
    std::set<std::string> names;
    for (const auto& c : columns) names.insert(c.name);
    for (const auto& ri : interactions)
        for (const auto& r : ri.rules)
            if (!names.contains(r.variable))
                return error(422, "unknown variable '" + r.variable + "'", {{"variable", r.variable}});

    json ids = json::array();
    json matrix = json::array();
    std::vector<std::size_t> counts(interactions.size(), 0);
    for (const auto& s : a.solutions) {
        ids.push_back(s.id);
        json row = json::array();
        std::vector<double> values;
        if (s.config) values = fpm::feature_row(*s.config);
        for (std::size_t k = 0; k < interactions.size(); ++k) {
            bool match = s.config.has_value();
            for (const auto& r : interactions[k].rules) {
                if (!match) break;
                const auto c =
                    static_cast<std::size_t>(std::find_if(columns.begin(), columns.end(),
                                                          [&](const auto& col) { return col.name == r.variable; }) -
                                             columns.begin());
                match = r.holds(values[c]);
            }
            counts[k] += match ? 1 : 0;
            row.push_back(match);
        }
        matrix.push_back(std::move(row));
    }
    return json_response(
        200, {{"dataset", id}, {"solution_ids", std::move(ids)}, {"matrix", std::move(matrix)}, {"counts", counts}});
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Service& service, const std::filesystem::path& static_dir) : impl_(std::make_unique<Impl>()) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> query;
        for (const auto& [k, v] : req.params) query.emplace(k, v);
        const Response r = service.handle(req.method, req.path, query, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    impl_->server.Get(R"(/api/.*)", forward);
    impl_->server.Post(R"(/api/.*)", forward);
    if (!static_dir.empty()) impl_->server.set_mount_point("/", static_dir.string());
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() {
    return impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    impl_->server.stop();
}

}  // namespace rms::service
