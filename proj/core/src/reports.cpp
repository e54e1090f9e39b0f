#include "bsmm/reports.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "bsmm/errors.hpp"

namespace bsmm {
namespace {

using nlohmann::json;

double pct(double part, double total) { return total > 0.0 ? part / total * 100.0 : 0.0; }

void check_pct_sum(double waitall, double batch, double other, const std::string& where) {
    const double sum = waitall + batch + other;
    if (std::abs(sum - 100.0) > 0.5) {
        throw IntegrityError("time percentages for " + where + " sum to " +
                             std::to_string(sum) + ", expected 100 +- 0.5");
    }
}

json comm_to_json(const CommStats& s) {
    return json{{"rank", s.rank},
                {"bytes_sent", s.bytes_sent},
                {"bytes_received", s.bytes_received},
                {"waitall_pct", pct(s.waitall_seconds, s.total_seconds)},
                {"batch_pct", pct(s.batch_seconds, s.total_seconds)},
                {"other_pct", pct(s.other_seconds, s.total_seconds)},
                {"total_s", s.total_seconds}};
}

void validate_comm(const CommStats& s) {
    if (s.total_seconds > 0.0) {
        check_pct_sum(pct(s.waitall_seconds, s.total_seconds),
                      pct(s.batch_seconds, s.total_seconds),
                      pct(s.other_seconds, s.total_seconds),
                      "rank " + std::to_string(s.rank));
    }
}

void validate_microbench(const MicrobenchReport& report) {
    if (report.keys.empty()) {
        throw IntegrityError("microbench report has no keys");
    }
    std::vector<double> rates;
    for (const MicrobenchKeyResult& r : report.keys) {
        if (!std::isfinite(r.gflops) || r.gflops <= 0.0) {
            throw IntegrityError("microbench rate for key (" + std::to_string(r.key.m) +
                                 ", " + std::to_string(r.key.n) + ", " +
                                 std::to_string(r.key.k) + ") is not positive");
        }
        rates.push_back(r.gflops);
    }
    const double geomean = geometric_mean(rates);
    if (std::abs(geomean - report.geomean_gflops) >
        1e-9 * std::max(std::abs(geomean), std::abs(report.geomean_gflops))) {
        throw IntegrityError("microbench geomean disagrees with its per-key rates");
    }
}

void validate_bench(const BenchReport& report) {
    if (report.runs.empty()) {
        throw IntegrityError("bench report has no runs");
    }
    double time_sum = 0.0, waitall_sum = 0.0, batch_sum = 0.0, other_sum = 0.0,
           gflops_sum = 0.0;
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const BenchRun& run = report.runs[i];
        check_pct_sum(run.waitall_pct, run.batch_pct, run.other_pct,
                      "run " + std::to_string(i));
        for (const CommStats& s : run.rank_stats) validate_comm(s);
        time_sum += run.time_s;
        waitall_sum += run.waitall_pct;
        batch_sum += run.batch_pct;
        other_sum += run.other_pct;
        gflops_sum += run.gflops;
    }
    const auto n = static_cast<double>(report.runs.size());
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1.0});
    };
    if (!close(report.avg_time_s, time_sum / n) ||
        !close(report.avg_waitall_pct, waitall_sum / n) ||
        !close(report.avg_batch_pct, batch_sum / n) ||
        !close(report.avg_other_pct, other_sum / n) ||
        !close(report.avg_gflops, gflops_sum / n)) {
        throw IntegrityError("bench report averages disagree with its runs");
    }
}

}  // namespace

void finalize_averages(BenchReport& report) {
    if (report.runs.empty()) {
        throw ParameterError("cannot average a report with no runs");
    }
    const auto n = static_cast<double>(report.runs.size());
    double time_sum = 0.0, waitall_sum = 0.0, batch_sum = 0.0, other_sum = 0.0,
           gflops_sum = 0.0;
    double tmin = report.runs.front().time_s, tmax = report.runs.front().time_s;
    for (const BenchRun& run : report.runs) {
        time_sum += run.time_s;
        waitall_sum += run.waitall_pct;
        batch_sum += run.batch_pct;
        other_sum += run.other_pct;
        gflops_sum += run.gflops;
        tmin = std::min(tmin, run.time_s);
        tmax = std::max(tmax, run.time_s);
    }
    report.avg_time_s = time_sum / n;
    report.time_spread = report.avg_time_s > 0.0 ? (tmax - tmin) / report.avg_time_s : 0.0;
    report.avg_waitall_pct = waitall_sum / n;
    report.avg_batch_pct = batch_sum / n;
    report.avg_other_pct = other_sum / n;
    report.avg_gflops = gflops_sum / n;
}

std::string to_json_string(const MicrobenchReport& report) {
    validate_microbench(report);
    json keys = json::array();
    for (const MicrobenchKeyResult& r : report.keys) {
        keys.push_back(json{{"m", r.key.m}, {"n", r.key.n}, {"k", r.key.k},
                            {"gflops", r.gflops}});
    }
    const json j{{"keys", keys},
                 {"geomean_gflops", report.geomean_gflops},
                 {"working_set_bytes", report.working_set_bytes},
                 {"reps", report.reps}};
    return j.dump(2) + "\n";
}

std::string to_csv_string(const MicrobenchReport& report) {
    validate_microbench(report);
    std::ostringstream out;
    out << "m,n,k,gflops\n";
    for (const MicrobenchKeyResult& r : report.keys) {
        out << r.key.m << ',' << r.key.n << ',' << r.key.k << ',' << r.gflops << '\n';
    }
    return out.str();
}

std::string to_json_string(std::span<const CommStats> stats) {
    json ranks = json::array();
    double waitall_sum = 0.0, batch_sum = 0.0;
    for (const CommStats& s : stats) {
        validate_comm(s);
        ranks.push_back(comm_to_json(s));
        waitall_sum += pct(s.waitall_seconds, s.total_seconds);
        batch_sum += pct(s.batch_seconds, s.total_seconds);
    }
    const double n = stats.empty() ? 1.0 : static_cast<double>(stats.size());
    const json j{{"ranks", ranks},
                 {"avg_waitall_pct", waitall_sum / n},
                 {"avg_batch_pct", batch_sum / n}};
    return j.dump(2) + "\n";
}

namespace {

json config_to_json(const ConfigEcho& c) {
    return json{{"preset", c.preset},  {"scale", c.scale},
                {"eps", c.eps},        {"ranks", c.ranks},
                {"workers", c.workers},{"batch_capacity", c.batch_capacity},
                {"reps", c.reps},      {"chain", c.chain},
                {"seed", c.seed}};
}

json run_to_json(const BenchRun& run) {
    json ranks = json::array();
    for (const CommStats& s : run.rank_stats) ranks.push_back(comm_to_json(s));
    return json{{"time_s", run.time_s},
                {"flops", run.flops},
                {"gflops", run.gflops},
                {"waitall_pct", run.waitall_pct},
                {"batch_pct", run.batch_pct},
                {"other_pct", run.other_pct},
                {"imbalance_pct", run.imbalance_pct},
                {"rank_stats", ranks},
                {"occupancy_trajectory", run.occupancy_trajectory}};
}

}  // namespace

std::string to_json_string(const BenchReport& report) {
    validate_bench(report);
    json runs = json::array();
    for (const BenchRun& run : report.runs) runs.push_back(run_to_json(run));
    const json j{{"config", config_to_json(report.config)},
                 {"runs", runs},
                 {"averaged",
                  json{{"time_s", report.avg_time_s},
                       {"time_spread", report.time_spread},
                       {"waitall_pct", report.avg_waitall_pct},
                       {"batch_pct", report.avg_batch_pct},
                       {"other_pct", report.avg_other_pct},
                       {"gflops", report.avg_gflops}}}};
    return j.dump(2) + "\n";
}

std::string to_csv_string(const BenchReport& report) {
    validate_bench(report);
    std::ostringstream out;
    out << "run,time_s,waitall_pct,batch_pct,other_pct,flops,gflops,imbalance_pct\n";
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const BenchRun& r = report.runs[i];
        out << i << ',' << r.time_s << ',' << r.waitall_pct << ',' << r.batch_pct << ','
            << r.other_pct << ',' << r.flops << ',' << r.gflops << ',' << r.imbalance_pct
            << '\n';
    }
    return out.str();
}

}  // namespace bsmm
