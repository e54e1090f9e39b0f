// bsmm: generate block-sparse matrices, run local or distributed
// multiplication chains, microbenchmark the small-GEMM kernels, and emit
// JSON/CSV reports.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsmm/bsm_io.hpp"
#include "bsmm/dist_engine.hpp"
#include "bsmm/errors.hpp"
#include "bsmm/local_mm.hpp"
#include "bsmm/matrix_gen.hpp"
#include "bsmm/microbench.hpp"
#include "bsmm/reports.hpp"

namespace {

using namespace bsmm;

// BSMM_LOG: off, error, warn (default), info, debug
int log_level() {
    static const int level = [] {
        const char* env = std::getenv("BSMM_LOG");
        if (env == nullptr) return 2;
        std::string s(env);
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (s == "off" || s == "none") return 0;
        if (s == "error") return 1;
        if (s == "warn" || s == "warning") return 2;
        if (s == "info") return 3;
        if (s == "debug") return 4;
        return 2;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 3) std::cerr << "[bsmm] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 4) std::cerr << "[bsmm] " << msg << "\n";
}

std::size_t parse_working_set(const std::string& text) {
    std::size_t pos = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == 0) {
        throw ParameterError("cannot parse working-set size \"" + text + "\"");
    }
    const std::uint64_t value = std::stoull(text.substr(0, pos));
    std::string suffix = text.substr(pos);
    for (char& c : suffix) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::uint64_t mult = 1;
    if (suffix.empty() || suffix == "b") {
        mult = 1;
    } else if (suffix == "kb" || suffix == "kib") {
        mult = 1ull << 10;
    } else if (suffix == "mb" || suffix == "mib") {
        mult = 1ull << 20;
    } else if (suffix == "gb" || suffix == "gib") {
        mult = 1ull << 30;
    } else {
        throw ParameterError("unknown working-set suffix \"" + suffix + "\"");
    }
    return value * mult;
}

std::vector<KernelKey> parse_sizes(const std::string& text) {
    std::size_t first = text.find(':');
    std::size_t second = first == std::string::npos ? std::string::npos
                                                    : text.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos) {
        throw ParameterError("--sizes expects m0:m1:step, got \"" + text + "\"");
    }
    std::size_t m0 = 0, m1 = 0, step = 0;
    try {
        m0 = std::stoull(text.substr(0, first));
        m1 = std::stoull(text.substr(first + 1, second - first - 1));
        step = std::stoull(text.substr(second + 1));
    } catch (const std::exception&) {
        throw ParameterError("--sizes expects m0:m1:step, got \"" + text + "\"");
    }
    if (m0 < 1 || m1 < m0 || step < 1 || m1 > kMaxKernelDim) {
        throw ParameterError("--sizes range must satisfy 1 <= m0 <= m1 <= " +
                             std::to_string(kMaxKernelDim) + " with step >= 1");
    }
    std::vector<KernelKey> keys;
    for (std::size_t s = m0; s <= m1; s += step) {
        keys.push_back({s, s, s});
    }
    return keys;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out.flush()) {
        throw Error("write failed: " + path.string());
    }
}

struct Options {
    std::string preset;
    double scale = 1.0;
    std::uint64_t seed = 0;
    double eps = 0.0;
    std::size_t ranks = 1;
    std::size_t workers = 1;
    std::size_t batch_capacity = 1024;
    std::size_t reps = 4;
    std::size_t chain = 0;  // 0: use the preset's chain length
    std::string sizes = "4:32:4";
    std::string working_set = "64MiB";
    std::string output;
    std::string report;
    std::string a_file;
    std::string b_file;
};

int run_gen(const Options& opt) {
    const BenchPreset& preset = preset_by_name(opt.preset);
    log_info("generating " + preset.name + " at scale " + std::to_string(opt.scale));
    const BlockCsr m = generate(preset, opt.scale, opt.seed);
    write_bsm(m, std::filesystem::path(opt.output));
    const nlohmann::json summary{{"preset", preset.name},
                                 {"block_rows", m.layout().n_row_blocks()},
                                 {"block_cols", m.layout().n_col_blocks()},
                                 {"rows", m.layout().total_rows()},
                                 {"cols", m.layout().total_cols()},
                                 {"blocks", m.n_blocks()},
                                 {"occupancy", occupancy(m)},
                                 {"file", opt.output}};
    std::cout << summary.dump(2) << "\n";
    return 0;
}

ConfigEcho make_echo(const Options& opt, std::size_t chain) {
    ConfigEcho echo;
    echo.preset = opt.preset;
    echo.scale = opt.scale;
    echo.eps = opt.eps;
    echo.ranks = opt.ranks;
    echo.workers = opt.workers;
    echo.batch_capacity = opt.batch_capacity;
    echo.reps = opt.reps;
    echo.chain = chain;
    echo.seed = opt.seed;
    return echo;
}

/// Multiplies a chain of `chain` steps starting from a and b, filtering the
/// product after each step when filter_products is set. Fills one BenchRun.
/// Steps time only the multiplication calls; redistribution and filtering
/// live outside time_s and outside the per-rank totals.
BenchRun run_chain(const BlockCsr& a, const BlockCsr& b, std::size_t chain,
                   const Options& opt, bool filter_products, BlockCsr* final_c) {
    BenchRun run;
    const ProcessGrid grid = grid_for_ranks(opt.ranks);

    if (grid.side() == 1) {
        CommStats cs;
        cs.rank = 0;
        const auto t0 = std::chrono::steady_clock::now();
        BlockCsr current = a;
        for (std::size_t step = 0; step < chain; ++step) {
            MultiplyOptions mo;
            mo.eps = opt.eps;
            mo.workers = opt.workers;
            mo.batch_capacity = opt.batch_capacity;
            auto [c, stats] = multiply_local(step == 0 ? a : current, b, mo);
            run.time_s += stats.total_seconds;
            cs.batch_seconds += stats.total_seconds;
            run.flops += count_flops(stats);
            run.imbalance_pct = std::max(run.imbalance_pct, stats.imbalance * 100.0);
            current = filter_products ? filter_blocks(c, opt.eps) : std::move(c);
            run.occupancy_trajectory.push_back(occupancy(current));
            log_debug("step " + std::to_string(step) + ": occupancy " +
                      std::to_string(run.occupancy_trajectory.back()));
        }
        cs.total_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cs.other_seconds =
            std::max(0.0, cs.total_seconds - cs.batch_seconds - cs.waitall_seconds);
        run.rank_stats.push_back(cs);
        if (final_c != nullptr) *final_c = std::move(current);
    } else {
        std::vector<CommStats> totals(grid.ranks());
        for (std::size_t r = 0; r < totals.size(); ++r) totals[r].rank = r;

        DistMatrix db = distribute(b, grid, opt.seed + 1);
        DistMatrix da = distribute(a, grid, opt.seed);
        BlockCsr gathered;
        for (std::size_t step = 0; step < chain; ++step) {
            CannonResult result = cannon_multiply(step == 0 ? da : distribute(gathered, grid, opt.seed),
                                                  db, opt.eps, opt.workers,
                                                  opt.batch_capacity);
            run.flops += result.flops;
            double step_time = 0.0;
            double batch_max = 0.0, batch_sum = 0.0;
            for (const CommStats& s : result.comm) {
                totals[s.rank].bytes_sent += s.bytes_sent;
                totals[s.rank].bytes_received += s.bytes_received;
                totals[s.rank].waitall_seconds += s.waitall_seconds;
                totals[s.rank].batch_seconds += s.batch_seconds;
                totals[s.rank].total_seconds += s.total_seconds;
                step_time = std::max(step_time, s.total_seconds);
                batch_max = std::max(batch_max, s.batch_seconds);
                batch_sum += s.batch_seconds;
            }
            run.time_s += step_time;
            const double batch_mean = batch_sum / static_cast<double>(result.comm.size());
            if (batch_mean > 0.0) {
                run.imbalance_pct = std::max(
                    run.imbalance_pct, (batch_max - batch_mean) / batch_mean * 100.0);
            }
            gathered = gather(result.c);
            if (filter_products) gathered = filter_blocks(gathered, opt.eps);
            run.occupancy_trajectory.push_back(occupancy(gathered));
            log_debug("step " + std::to_string(step) + ": occupancy " +
                      std::to_string(run.occupancy_trajectory.back()));
        }
        for (CommStats& s : totals) {
            s.other_seconds =
                std::max(0.0, s.total_seconds - s.waitall_seconds - s.batch_seconds);
        }
        run.rank_stats = std::move(totals);
        if (final_c != nullptr) *final_c = std::move(gathered);
    }

    double waitall_sum = 0.0, batch_sum = 0.0, other_sum = 0.0, total_sum = 0.0;
    for (const CommStats& s : run.rank_stats) {
        waitall_sum += s.waitall_seconds;
        batch_sum += s.batch_seconds;
        other_sum += s.other_seconds;
        total_sum += s.total_seconds;
    }
    if (total_sum > 0.0) {
        run.waitall_pct = waitall_sum / total_sum * 100.0;
        run.batch_pct = batch_sum / total_sum * 100.0;
        run.other_pct = other_sum / total_sum * 100.0;
    } else {
        run.other_pct = 100.0;
    }
    run.gflops = run.time_s > 0.0 ? static_cast<double>(run.flops) / run.time_s / 1e9 : 0.0;
    return run;
}

void emit_report(const BenchReport& report, const std::string& report_path, bool with_csv) {
    const std::string json_text = to_json_string(report);
    if (report_path.empty()) {
        std::cout << json_text;
        return;
    }
    write_text(report_path, json_text);
    if (with_csv) {
        std::filesystem::path csv_path(report_path);
        csv_path.replace_extension(".csv");
        write_text(csv_path, to_csv_string(report));
    }
    log_info("report written to " + report_path);
}

int run_multiply(const Options& opt) {
    log_info("reading " + opt.a_file + " and " + opt.b_file);
    const BlockCsr a = read_bsm(std::filesystem::path(opt.a_file));
    const BlockCsr b = read_bsm(std::filesystem::path(opt.b_file));

    Options chain_opt = opt;
    chain_opt.reps = 1;
    BlockCsr c;
    BenchRun run = run_chain(a, b, 1, chain_opt, /*filter_products=*/false, &c);

    if (!opt.output.empty()) {
        write_bsm(c, std::filesystem::path(opt.output));
        log_info("product written to " + opt.output);
    }

    BenchReport report;
    report.config = make_echo(chain_opt, 1);
    report.runs.push_back(std::move(run));
    finalize_averages(report);
    emit_report(report, opt.report, /*with_csv=*/false);
    return 0;
}

int run_bench(const Options& opt) {
    const BenchPreset& preset = preset_by_name(opt.preset);
    const std::size_t chain = opt.chain > 0 ? opt.chain : preset.chain_length;
    if (opt.reps < 1) {
        throw ParameterError("--reps must be >= 1");
    }
    log_info("bench " + preset.name + " scale " + std::to_string(opt.scale) + ", chain " +
             std::to_string(chain) + ", " + std::to_string(opt.reps) + " repetitions");

    const BlockCsr a = generate(preset, opt.scale, opt.seed);
    const BlockCsr b = generate(preset, opt.scale, opt.seed + 1);

    BenchReport report;
    report.config = make_echo(opt, chain);
    report.config.preset = preset.name;
    for (std::size_t rep = 0; rep < opt.reps; ++rep) {
        report.runs.push_back(run_chain(a, b, chain, opt, /*filter_products=*/true,
                                        nullptr));
        log_info("rep " + std::to_string(rep) + ": " +
                 std::to_string(report.runs.back().time_s) + " s");
    }
    finalize_averages(report);
    emit_report(report, opt.report, /*with_csv=*/true);
    return 0;
}

int run_kernels(const Options& opt) {
    const std::vector<KernelKey> keys = parse_sizes(opt.sizes);
    const std::size_t ws = parse_working_set(opt.working_set);
    if (opt.reps < 1) {
        throw ParameterError("--reps must be >= 1");
    }
    log_info("microbenchmarking " + std::to_string(keys.size()) + " keys, working set " +
             std::to_string(ws) + " bytes");
    const MicrobenchReport report = run_microbench(keys, ws, opt.reps);
    if (opt.report.empty()) {
        std::cout << to_json_string(report);
    } else {
        write_text(opt.report, to_json_string(report));
        std::filesystem::path csv_path(opt.report);
        csv_path.replace_extension(".csv");
        write_text(csv_path, to_csv_string(report));
        log_info("report written to " + opt.report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-sparse matrix multiplication engine and benchmark harness"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* gen = app.add_subcommand("gen", "Generate a preset matrix as a BSM1 file");
    gen->add_option("--preset", opt.preset, "Preset name: s-e, h2o-dft-ls, amorph")
        ->required();
    gen->add_option("--scale", opt.scale, "Fraction of full-scale block rows (0, 1]");
    gen->add_option("--seed", opt.seed, "Generator seed");
    gen->add_option("-o,--output", opt.output, "Output BSM1 path")->required();

    CLI::App* multiply =
        app.add_subcommand("multiply", "Multiply two BSM1 files, optionally distributed");
    multiply->add_option("a", opt.a_file, "Left operand (BSM1)")->required();
    multiply->add_option("b", opt.b_file, "Right operand (BSM1)")->required();
    multiply->add_option("--eps", opt.eps, "Norm-product filter threshold");
    multiply->add_option("--ranks", opt.ranks, "Simulated rank count (perfect square)");
    multiply->add_option("--workers", opt.workers, "Worker threads per rank");
    multiply->add_option("--batch-capacity", opt.batch_capacity, "Batch entry capacity");
    multiply->add_option("--seed", opt.seed, "Distribution permutation seed");
    multiply->add_option("-o,--output", opt.output, "Write the product here (BSM1)");
    multiply->add_option("--report", opt.report, "Write the run report JSON here");

    CLI::App* bench = app.add_subcommand(
        "bench", "Run a preset multiplication chain and report the time breakdown");
    bench->add_option("--preset", opt.preset, "Preset name")->required();
    bench->add_option("--scale", opt.scale, "Fraction of full-scale block rows (0, 1]");
    bench->add_option("--seed", opt.seed, "Generator and distribution seed");
    bench->add_option("--eps", opt.eps, "Filter threshold for the chain");
    bench->add_option("--ranks", opt.ranks, "Simulated rank count (perfect square)");
    bench->add_option("--workers", opt.workers, "Worker threads per rank");
    bench->add_option("--batch-capacity", opt.batch_capacity, "Batch entry capacity");
    bench->add_option("--reps", opt.reps, "Independent repetitions to average");
    bench->add_option("--chain", opt.chain,
                      "Chain length override (default: the preset's)");
    bench->add_option("--report", opt.report, "Report JSON path (CSV twin alongside)");

    CLI::App* kernels =
        app.add_subcommand("kernels", "Microbenchmark the small-GEMM kernels");
    kernels->add_option("--sizes", opt.sizes, "Cubic key range m0:m1:step");
    kernels->add_option("--working-set", opt.working_set,
                        "Streaming working set, e.g. 256MiB");
    kernels->add_option("--reps", opt.reps, "Passes over the working set per timing")
        ->default_val(std::size_t{1});
    kernels->add_option("--report", opt.report, "Report JSON path (CSV twin alongside)");

    try {
        app.parse(argc, argv);
        if (*gen) return run_gen(opt);
        if (*multiply) return run_multiply(opt);
        if (*bench) return run_bench(opt);
        if (*kernels) return run_kernels(opt);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
