#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "rms/dataset.hpp"
#include "rms/scenario_io.hpp"
#include "rms/service.hpp"

using namespace rms;
using namespace rms::service;
using nlohmann::json;

namespace {

const RunArchive& toy_run() {
    static const RunArchive run = [] {
        AlgorithmParams p;
        p.population_size = 12;
        p.max_generations = 6;
        p.seed = 3;
        SimulationConfig sim;
        sim.horizon = 20 * 3600.0;
        sim.warmup = 2 * 3600.0;
        sim.replications = 2;
        return run_smo(toy_case(), p, sim);
    }();
    return run;
}

json body_of(const Response& r) {
    return json::parse(r.body);
}

Response post(Service& s, const std::string& path, const json& body) {
    return s.handle("POST", path, {}, body.dump());
}

json front_ids(const RunArchive& a) {
    json ids = json::array();
    for (auto id : a.final_front) ids.push_back(id);
    return ids;
}

}  // namespace

TEST_CASE("worker pool runs tasks in submission order") {
    WorkerPool pool(1);
    std::vector<int> order;
    std::vector<std::future<void>> done;
    for (int i = 0; i < 10; ++i) done.push_back(pool.submit([&order, i] { order.push_back(i); }));
    for (auto& f : done) f.get();
    CHECK(order == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto failing = pool.submit([] { throw std::runtime_error("x"); });
    CHECK_THROWS_AS(failing.get(), std::runtime_error);
}

TEST_CASE("dataset listing and paging") {
    Service s;
    CHECK(s.add_dataset(toy_run(), "toy") == "toy");
    CHECK(s.add_dataset(toy_run(), "toy") == "toy-2");
    const auto list = body_of(s.handle("GET", "/api/datasets", {}, ""));
    REQUIRE(list["datasets"].size() == 2);
    CHECK(list["datasets"][0]["operators"] == 3);
    CHECK(list["datasets"][0]["solutions"] == toy_run().solutions.size());

    const auto page = s.handle("GET", "/api/datasets/toy/solutions", {{"offset", "2"}, {"limit", "3"}}, "");
    CHECK(page.status == 200);
    const auto pj = body_of(page);
    CHECK(pj["total"] == toy_run().solutions.size());
    REQUIRE(pj["solutions"].size() == 3);
    CHECK(pj["solutions"][0]["id"] == 2);
    CHECK(pj["columns"].size() == 4 + 2 + 1);
    const auto& first = toy_run().solutions[2];
    CHECK(pj["solutions"][0]["thp"].get<double>() == first.result.thp);

    CHECK(s.handle("GET", "/api/datasets/nope/solutions", {}, "").status == 404);
    CHECK(s.handle("GET", "/api/datasets/toy/solutions", {{"offset", "x"}}, "").status == 400);
    CHECK(s.handle("GET", "/api/unknown", {}, "").status == 404);
    CHECK(s.handle("POST", "/api/mine", {}, "{bad").status == 400);
}

TEST_CASE("mining matches the library and is cached") {
    Service s;
    s.add_dataset(toy_run(), "toy");
    const json req{{"dataset_ids", {"toy"}},
                   {"selected_solution_ids", front_ids(toy_run())},
                   {"max_level", 3},
                   {"min_significance", 0.9}};
    const auto r = post(s, "/api/mine", req);
    REQUIRE(r.status == 200);
    const std::set<long long> sel(toy_run().final_front.begin(), toy_run().final_front.end());
    const auto table = fpm::build_feature_table(toy_run(), sel);
    const auto expect = mining_document(fpm::mine(table, {3, 0.9}), table.num_selected(), table.num_unselected());
    CHECK(r.body == expect.dump());
    CHECK(s.mining_cache_size() == 1);
    CHECK(post(s, "/api/mine", req).body == r.body);
    CHECK(s.mining_cache_size() == 1);

    json prefixed = req;
    prefixed["selected_solution_ids"] = json::array();
    for (auto id : toy_run().final_front) prefixed["selected_solution_ids"].push_back("toy:" + std::to_string(id));
    CHECK(post(s, "/api/mine", prefixed).body == r.body);
}

TEST_CASE("large mining requests become polled jobs") {
    Service s({1, 0});
    s.add_dataset(toy_run(), "toy");
    const json req{{"dataset_ids", {"toy"}}, {"selected_solution_ids", front_ids(toy_run())}};
    const auto r = post(s, "/api/mine", req);
    REQUIRE(r.status == 202);
    const auto job = body_of(r)["job"].get<std::string>();
    json polled;
    for (int i = 0; i < 500; ++i) {
        polled = body_of(s.handle("GET", "/api/jobs/" + job, {}, ""));
        if (polled["status"] == "done") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    REQUIRE(polled["status"] == "done");
    Service sync;
    sync.add_dataset(toy_run(), "toy");
    CHECK(polled["result"].dump() == post(sync, "/api/mine", req).body);
    CHECK(s.handle("GET", "/api/jobs/999", {}, "").status == 404);
}

TEST_CASE("bad mining selections are rejected") {
    Service s;
    s.add_dataset(toy_run(), "toy");
    s.add_dataset(toy_run(), "other");
    json all = json::array();
    for (const auto& sol : toy_run().solutions)
        if (sol.config) all.push_back(sol.id);
    CHECK(post(s, "/api/mine", {{"dataset_ids", {"toy"}}, {"selected_solution_ids", all}}).status == 422);
    CHECK(post(s, "/api/mine", {{"dataset_ids", {"toy"}}, {"selected_solution_ids", json::array()}}).status == 422);
    CHECK(post(s, "/api/mine", {{"dataset_ids", {"toy"}}, {"selected_solution_ids", {100000}}}).status == 422);
    CHECK(post(s, "/api/mine", {{"dataset_ids", {"zzz"}}, {"selected_solution_ids", {0}}}).status == 404);
    CHECK(post(s, "/api/mine", {{"dataset_ids", {"toy", "other"}}, {"selected_solution_ids", {0}}}).status == 422);
    CHECK(post(s, "/api/mine", {{"dataset_ids", {"toy"}}, {"selected_solution_ids", {"zzz:0"}}}).status == 422);
    CHECK(post(s, "/api/mine",
               {{"dataset_ids", {"toy"}}, {"selected_solution_ids", front_ids(toy_run())}, {"min_significance", 0}})
              .status == 422);
    CHECK(post(s, "/api/mine",
               {{"dataset_ids", {"toy"}}, {"selected_solution_ids", front_ids(toy_run())}, {"columns", "bogus"}})
              .status == 422);
    const auto err = body_of(post(s, "/api/mine", {{"dataset_ids", {"toy"}}, {"selected_solution_ids", all}}));
    CHECK(err.contains("error"));
}

TEST_CASE("what-if reproduces stored objectives") {
    Service s;
    s.add_dataset(toy_run(), "toy");
    for (auto id : toy_run().final_front) {
        const auto& sol = toy_run().solutions[static_cast<std::size_t>(id)];
        const auto r = post(s, "/api/whatif", {{"dataset_id", "toy"}, {"configuration", to_json(*sol.config)}});
        REQUIRE(r.status == 200);
        const auto j = body_of(r);
        CHECK(j["thp"].get<double>() == sol.result.thp);
        CHECK(j["tbc"] == sol.result.tbc);
        CHECK(j["per_replication"].get<std::vector<double>>() == sol.result.per_replication);
    }
    const auto& sol = toy_run().solutions[static_cast<std::size_t>(toy_run().final_front[0])];
    const auto longer = body_of(post(
        s, "/api/whatif",
        {{"dataset_id", "toy"}, {"configuration", to_json(*sol.config)}, {"sim_overrides", {{"replications", 4}}}}));
    CHECK(longer["per_replication"].size() == 4);
    CHECK(longer["sim"]["replications"] == 4);

    auto bad = to_json(*sol.config);
    bad["buffers"][0] = 99;
    const auto v = post(s, "/api/whatif", {{"dataset_id", "toy"}, {"configuration", bad}});
    CHECK(v.status == 422);
    CHECK(body_of(v)["violations"][0]["code"] == "buffer-bounds");
    CHECK(post(s, "/api/whatif",
               {{"dataset_id", "toy"}, {"configuration", to_json(*sol.config)}, {"sim_overrides", {{"mttr", 4}}}})
              .status == 422);
    CHECK(post(s, "/api/whatif", {{"dataset_id", "toy"}}).status == 422);
}

TEST_CASE("rule match matrix") {
    Service s;
    s.add_dataset(toy_run(), "toy");
    const fpm::RuleInteraction ri{{{"Bu_1", fpm::Relation::lt, 3.5}}};
    const fpm::RuleInteraction rj{{{"WS_1", fpm::Relation::eq, 1}, {"Bu_1", fpm::Relation::gt, 1.5}}};
    const auto r = post(s, "/api/rulematch", {{"dataset_id", "toy"}, {"interactions", {to_json(ri), to_json(rj)}}});
    REQUIRE(r.status == 200);
    const auto j = body_of(r);
    const auto& sols = toy_run().solutions;
    REQUIRE(j["matrix"].size() == sols.size());
    std::vector<int> counts(2, 0);
    for (std::size_t i = 0; i < sols.size(); ++i) {
        const bool a = sols[i].config && sols[i].config->buffers[0] < 3.5;
        const bool b = sols[i].config && sols[i].config->resources_per_ws[0] == 1 && sols[i].config->buffers[0] > 1.5;
        CHECK(j["matrix"][i][0] == a);
        CHECK(j["matrix"][i][1] == b);
        counts[0] += a;
        counts[1] += b;
    }
    CHECK(j["counts"] == json(counts));
    const auto unknown = post(
        s, "/api/rulematch",
        {{"dataset_id", "toy"}, {"interactions", {to_json(fpm::RuleInteraction{{{"Q_9", fpm::Relation::eq, 1}}})}}});
    CHECK(unknown.status == 422);
    CHECK(body_of(unknown)["variable"] == "Q_9");
}

TEST_CASE("http adapter serves the api and static files") {
    const auto dir = std::filesystem::temp_directory_path() / "rms_test_static";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "index.html") << "<p>ui</p>";
    save_dataset(dir / "toy.json", toy_run());

    Service s;
    CHECK(s.load_dataset_file(dir / "toy.json") == "toy");
    HttpServer server(s, dir);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread loop([&] { server.run(); });

    httplib::Client client("127.0.0.1", port);
    auto list = client.Get("/api/datasets");
    REQUIRE(list);
    CHECK(list->status == 200);
    CHECK(json::parse(list->body)["datasets"][0]["id"] == "toy");

    const json req{{"dataset_ids", {"toy"}}, {"selected_solution_ids", front_ids(toy_run())}};
    auto mined = client.Post("/api/mine", req.dump(), "application/json");
    REQUIRE(mined);
    CHECK(mined->status == 200);
    CHECK(mined->body == post(s, "/api/mine", req).body);

    auto page = client.Get("/api/datasets/toy/solutions?limit=1");
    REQUIRE(page);
    CHECK(json::parse(page->body)["solutions"].size() == 1);

    auto missing = client.Get("/api/nothing");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto index = client.Get("/index.html");
    REQUIRE(index);
    CHECK(index->body == "<p>ui</p>");

    server.stop();
    loop.join();
}
