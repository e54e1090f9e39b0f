#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsmm/dist_engine.hpp"
#include "bsmm/microbench.hpp"

namespace bsmm {

/// The configuration a report was produced under, echoed verbatim.
struct ConfigEcho {
    std::string preset;
    double scale = 1.0;
    double eps = 0.0;
    std::size_t ranks = 1;
    std::size_t workers = 1;
    std::size_t batch_capacity = 1024;
    std::size_t reps = 1;
    std::size_t chain = 1;
    std::uint64_t seed = 0;
};

/// One benchmark repetition: chain timing, exact flop total, time
/// breakdown aggregated over ranks, per-rank communication counters, and
/// the C occupancy after each chain step.
struct BenchRun {
    double time_s = 0.0;
    std::uint64_t flops = 0;
    double gflops = 0.0;
    double waitall_pct = 0.0;
    double batch_pct = 0.0;
    double other_pct = 0.0;
    double imbalance_pct = 0.0;
    std::vector<CommStats> rank_stats;
    std::vector<double> occupancy_trajectory;
};

struct BenchReport {
    ConfigEcho config;
    std::vector<BenchRun> runs;
    double avg_time_s = 0.0;
    double time_spread = 0.0;  // (max - min) / mean over runs
    double avg_waitall_pct = 0.0;
    double avg_batch_pct = 0.0;
    double avg_other_pct = 0.0;
    double avg_gflops = 0.0;
};

/// Fills the averaged fields from the per-run entries.
void finalize_averages(BenchReport& report);

/// Serializers. Every to_json_string/to_csv_string validates the report
/// first (required fields, percentage decomposition summing to 100 +- 0.5,
/// averages consistent with runs) and throws IntegrityError on violation.
std::string to_json_string(const MicrobenchReport& report);
std::string to_csv_string(const MicrobenchReport& report);

/// Per-rank stats plus the averaged percentages.
std::string to_json_string(std::span<const CommStats> stats);

std::string to_json_string(const BenchReport& report);
std::string to_csv_string(const BenchReport& report);

}  // namespace bsmm
