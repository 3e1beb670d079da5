#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "coord/bench/bench.hpp"
#include "coord/chol/kernels.hpp"
#include "coord/chol/matrix_io.hpp"

namespace {

void print_summary(const std::vector<coord::bench::BenchRow>& rows) {
    std::fprintf(stderr, "%-10s %6s %6s %7s %12s %9s %12s %8s %8s\n", "impl", "n", "block", "workers", "median_ms",
                 "speedup", "activations", "stalls", "waits");
    for (const auto& r : coord::bench::medians(rows)) {
        std::fprintf(stderr, "%-10s %6zu %6zu %7zu %12.3f %9.3f %12llu %8llu %8llu\n", r.impl.c_str(), r.n, r.block,
                     r.workers, r.wall_ms, r.speedup, static_cast<unsigned long long>(r.activations),
                     static_cast<unsigned long long>(r.stalls), static_cast<unsigned long long>(r.barrier_waits));
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace coord;
    CLI::App app{"Tiled Cholesky benchmark: serial, S-Net barrier/dataflow networks, CnC untuned/tuned"};

    std::vector<std::string> impls{"serial"};
    bench::BenchConfig cfg;
    cfg.blocks.clear();
    cfg.workers.clear();
    std::string input, out, format = "csv", write_matrix;
    bool quiet = false;

    app.add_option("--impl", impls, "serial, barrier, dataflow, cnc, cnc-tuned or all (repeatable)")
        ->check(CLI::IsMember({"serial", "barrier", "dataflow", "cnc", "cnc-tuned", "all"}));
    app.add_option("--n", cfg.n, "Matrix order N (taken from --input when omitted)");
    app.add_option("--block", cfg.blocks, "Tile edge b, must divide N (repeatable)")->required();
    app.add_option("--workers", cfg.workers, "Worker threads (repeatable)")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "Seed of the generated SPD matrix");
    app.add_option("--reps", cfg.reps, "Repetitions per configuration")->check(CLI::PositiveNumber);
    app.add_flag("--check", cfg.check, "Compare every factor with the serial one and report the residual");
    app.add_option("--input", input, "Matrix file (TCHO format) instead of a generated matrix")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out, "Output file (default stdout)");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--write-matrix", write_matrix, "Also save the generated input matrix to this file");
    app.add_flag("--pin", cfg.pin_workers, "Pin worker threads to cores");
    app.add_flag("--quiet", quiet, "No summary table on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        cfg.impls.clear();
        for (const auto& name : impls) {
            if (name == "all") {
                cfg.impls.assign(std::begin(bench::kAllImpls), std::end(bench::kAllImpls));
                break;
            }
            cfg.impls.push_back(*bench::parse_impl(name));
        }
        if (cfg.workers.empty()) cfg.workers.push_back(1);

        std::optional<chol::DenseMatrix> matrix;
        if (!input.empty()) {
            matrix = chol::read_matrix(input);
        } else if (cfg.n == 0) {
            throw bench::ConfigError("either --n or --input is required");
        }
        if (!write_matrix.empty()) chol::write_matrix(write_matrix, matrix ? *matrix : chol::gen_spd(cfg.n, cfg.seed));

        const auto rows = bench::run_bench(cfg, matrix ? &*matrix : nullptr);
        const std::string text = format == "json" ? bench::to_json(rows) : bench::to_csv(rows);
        if (out.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(out, std::ios::binary);
            if (!f) throw std::runtime_error("cannot write " + out);
            f << text;
        }
        if (!quiet) print_summary(rows);
        return 0;
    } catch (const bench::CheckFailure& e) {
        std::cerr << "correctness check failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
