#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coord/chol/tile.hpp"

namespace coord::bench {

enum class Impl { Serial, Barrier, Dataflow, Cnc, CncTuned };

inline constexpr Impl kAllImpls[] = {Impl::Serial, Impl::Barrier, Impl::Dataflow, Impl::Cnc, Impl::CncTuned};

std::string_view impl_name(Impl impl) noexcept;  // serial, barrier, dataflow, cnc, cnc-tuned
std::optional<Impl> parse_impl(std::string_view name);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An implementation disagreed with the serial oracle.
class CheckFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BenchConfig {
    std::vector<Impl> impls{Impl::Serial};
    std::size_t n = 0;
    std::vector<std::size_t> blocks;
    std::vector<std::size_t> workers{1};
    std::uint64_t seed = 1;
    std::size_t reps = 3;
    bool check = false;
    bool pin_workers = false;
};

// Throws ConfigError.
void validate(const BenchConfig& cfg);

struct BenchRow {
    std::string impl;
    std::size_t n = 0;
    std::size_t block = 0;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::size_t rep = 0;
    double wall_ms = 0.0;
    double speedup = 0.0;
    std::optional<double> residual;  // only on checked runs
    std::uint64_t checksum = 0;
    std::uint64_t activations = 0;
    std::uint64_t stalls = 0;
    std::uint64_t barrier_waits = 0;
};

struct ImplRun {
    chol::TiledMatrix l;
    double wall_ms = 0.0;
    // serial: kernel calls; S-Net: box activations; CnC: steps executed.
    std::uint64_t activations = 0;
    std::uint64_t stalls = 0;
    std::uint64_t barrier_waits = 0;
};

// One timed factorization, including tiling the input and gathering L.
ImplRun run_impl(Impl impl, const chol::DenseMatrix& a, std::size_t b, std::size_t workers, bool pin_workers = false);

// Sum over entries of splitmix64(splitmix64(index) ^ bits). Order independent;
// +0.0 entries contribute nothing, so an all-zero matrix hashes to 0.
std::uint64_t checksum(const chol::DenseMatrix& m);
std::uint64_t checksum(const chol::TiledMatrix& m);

// Full cross product of impls × blocks × workers × reps. The serial baseline
// for each block runs first; serial rows are emitted once with workers = 1.
// `input` replaces the generated matrix (cfg.n must then match or be 0).
// With cfg.check every result is compared with the serial factor and a
// mismatch throws CheckFailure describing the first differing entry.
std::vector<BenchRow> run_bench(const BenchConfig& cfg, const chol::DenseMatrix* input = nullptr);

inline constexpr std::string_view kCsvHeader =
    "impl,n,block,workers,seed,rep,wall_ms,speedup,residual,checksum,activations,stalls,barrier_waits";

std::string to_csv(const std::vector<BenchRow>& rows);
std::string to_json(const std::vector<BenchRow>& rows);

// Median wall time and speedup per (impl, n, block, workers, seed); rep is the
// number of repetitions folded in.
std::vector<BenchRow> medians(const std::vector<BenchRow>& rows);

double median(std::vector<double> values);

}  // namespace coord::bench
