#include "rms/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "rms/dataset.hpp"
#include "rms/fpm.hpp"

namespace rms {

namespace {

void widen(Range& r, double v, bool first) {
    if (first) {
        r = {v, v};
        return;
    }
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
}

std::string fixed(double v, int precision) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string render(const std::vector<std::vector<std::string>>& cells) {
    std::vector<std::size_t> width;
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (width.size() <= c) width.push_back(0);
            width[c] = std::max(width[c], row[c].size());
        }
    std::ostringstream os;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            os << row[c];
            if (c + 1 < row.size()) os << std::string(width[c] - row[c].size() + 2, ' ');
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace

FrontSummary summarize_front(const RunArchive& archive) {
    FrontSummary s;
    s.label = scenario_label(archive);
    s.operators = archive.instance.total_resources;
    s.mix = fpm::mix_label(archive.instance.mix);
    s.algorithm = archive.algorithm;
    const auto ns = static_cast<std::size_t>(archive.instance.num_stations);
    s.buffers.resize(static_cast<std::size_t>(archive.instance.num_buffers()));
    s.resources.resize(ns);
    s.tasks.resize(ns);
    bool first = true;
    for (long long id : archive.final_front) {
        const auto& sol = archive.solutions[static_cast<std::size_t>(id)];
        if (!sol.config || !sol.result.feasible) continue;
        const auto& cfg = *sol.config;
        ++s.front_size;
        widen(s.thp, sol.result.thp, first);
        widen(s.tbc, sol.result.tbc, first);
        for (std::size_t k = 0; k < s.buffers.size(); ++k) widen(s.buffers[k], cfg.buffers[k], first);
        std::vector<int> count(ns, 0);
        for (const auto& asg : cfg.assignment)
            for (int j : asg) ++count[static_cast<std::size_t>(j)];
        for (std::size_t j = 0; j < ns; ++j) {
            widen(s.resources[j], cfg.resources_per_ws[j], first);
            widen(s.tasks[j], count[j], first);
        }
        first = false;
    }
    return s;
}

std::string format_range(Range r, int precision) {
    const std::string lo = fixed(r.lo, precision);
    const std::string hi = fixed(r.hi, precision);
    return lo == hi ? lo : lo + "-" + hi;
}

std::string ranges_table(const std::vector<FrontSummary>& rows) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> head{"NO", "Proportion", "Algorithm", "Front", "THP"};
    const std::size_t nb = rows.empty() ? 0 : rows.front().buffers.size();
    for (std::size_t k = 0; k < nb; ++k) head.push_back("Bu_" + std::to_string(k + 1));
    head.push_back("TBC");
    cells.push_back(head);
    for (const auto& r : rows) {
        std::vector<std::string> row{std::to_string(r.operators), r.mix, r.algorithm, std::to_string(r.front_size)};
        if (r.front_size == 0) {
            row.push_back("-");
            for (std::size_t k = 0; k < nb; ++k) row.push_back("-");
            row.push_back("-");
        } else {
            row.push_back(format_range(r.thp, 2));
            for (std::size_t k = 0; k < nb && k < r.buffers.size(); ++k) row.push_back(format_range(r.buffers[k], 0));
            row.push_back(format_range(r.tbc, 0));
        }
        cells.push_back(std::move(row));
    }
    return render(cells);
}

std::string configuration_table(const std::vector<FrontSummary>& rows) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> head{"NO", "Proportion", "Algorithm"};
    const std::size_t ns = rows.empty() ? 0 : rows.front().resources.size();
    for (std::size_t j = 0; j < ns; ++j) head.push_back("WS" + std::to_string(j + 1));
    head.push_back("Tasks");
    cells.push_back(head);
    for (const auto& r : rows) {
        std::vector<std::string> row{std::to_string(r.operators), r.mix, r.algorithm};
        std::string tasks;
        for (std::size_t j = 0; j < ns && j < r.resources.size(); ++j) {
            row.push_back(r.front_size ? format_range(r.resources[j], 0) : "-");
            if (j) tasks += '/';
            tasks += r.front_size ? format_range(r.tasks[j], 0) : "-";
        }
        row.push_back(tasks);
        cells.push_back(std::move(row));
    }
    return render(cells);
}

std::vector<MarginalThp> marginal_thp(const std::vector<FrontSummary>& rows, std::vector<MarginalThp>* averages) {
    std::map<std::string, std::map<int, double>> best;
    for (const auto& r : rows) {
        if (r.front_size == 0) continue;
        auto& slot = best[r.mix];
        const auto it = slot.find(r.operators);
        slot[r.operators] = it == slot.end() ? r.thp.hi : std::max(it->second, r.thp.hi);
    }
    std::vector<MarginalThp> out;
    for (const auto& [mix, by_ops] : best) {
        for (auto it = by_ops.begin(); std::next(it) != by_ops.end(); ++it) {
            const auto nx = std::next(it);
            out.push_back({mix, it->first, nx->first, (nx->second - it->second) / (nx->first - it->first)});
        }
        if (averages && by_ops.size() > 1) {
            const auto lo = by_ops.begin();
            const auto hi = std::prev(by_ops.end());
            averages->push_back({mix, lo->first, hi->first, (hi->second - lo->second) / (hi->first - lo->first)});
        }
    }
    return out;
}

nlohmann::json to_json(const FrontSummary& s) {
    auto ranges = [](const std::vector<Range>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : v) a.push_back({r.lo, r.hi});
        return a;
    };
    return {{"label", s.label},
            {"operators", s.operators},
            {"mix", s.mix},
            {"algorithm", s.algorithm},
            {"front_size", s.front_size},
            {"thp", {s.thp.lo, s.thp.hi}},
            {"buffers", ranges(s.buffers)},
            {"tbc", {s.tbc.lo, s.tbc.hi}},
            {"resources", ranges(s.resources)},
            {"tasks", ranges(s.tasks)}};
}

}  // namespace rms
