#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rms/moea.hpp"

namespace rms::service {

/// Fixed-size FIFO pool; tasks run in submission order on up to `workers` threads.
class WorkerPool {
public:
    explicit WorkerPool(int workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::future<void> submit(std::function<void()> task);
    [[nodiscard]] int size() const { return static_cast<int>(threads_.size()); }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::packaged_task<void()>> queue_;
    bool stopping_ = false;
    std::vector<std::jthread> threads_;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct ServiceOptions {
    int workers = 2;
    /// Mining requests whose table has more cells (rows x columns) than this become polled jobs.
    std::size_t async_cells = 200'000;
};

struct DatasetEntry {
    std::string id;
    RunArchive archive;
};

/// Transport-independent request handling for the /api endpoints.
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();

    /// Registers a dataset; the id defaults to `stem`, suffixed when already taken.
    std::string add_dataset(RunArchive archive, const std::string& stem = "dataset");
    std::string load_dataset_file(const std::filesystem::path& path);
    [[nodiscard]] const std::vector<std::unique_ptr<DatasetEntry>>& datasets() const { return datasets_; }

    Response handle(const std::string& method, const std::string& path, const std::map<std::string, std::string>& query,
                    const std::string& body);

    Response list_datasets() const;
    Response solutions(const std::string& id, std::size_t offset, std::size_t limit) const;
    Response mine(const nlohmann::json& request);
    Response job(const std::string& id) const;
    Response whatif(const nlohmann::json& request);
    Response rulematch(const nlohmann::json& request) const;

    [[nodiscard]] std::size_t mining_cache_size() const;

private:
    struct Job {
        std::string status = "pending";
        std::string body;
        int http_status = 200;
    };

    const DatasetEntry* find(const std::string& id) const;

    ServiceOptions options_;
    std::vector<std::unique_ptr<DatasetEntry>> datasets_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> mining_cache_;  // input hash -> response body
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::size_t next_job_ = 1;
    WorkerPool pool_;
};

/// HTTP adapter over a Service; files under `static_dir` (if non-empty) are served at /.
class HttpServer {
public:
    explicit HttpServer(Service& service, const std::filesystem::path& static_dir = {});
    ~HttpServer();

    /// Port 0 binds any free port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rms::service
