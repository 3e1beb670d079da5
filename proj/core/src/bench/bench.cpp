#include "coord/bench/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "coord/chol/barrier_network.hpp"
#include "coord/chol/dataflow_network.hpp"
#include "coord/chol/kernels.hpp"
#include "coord/cnc/cholesky.hpp"

namespace coord::bench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t entry_hash(std::uint64_t index, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    return bits == 0 ? 0 : splitmix64(splitmix64(index) ^ bits);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string bits_of(double v) { return fmt("%.17g", v) + " (0x" + hex64(std::bit_cast<std::uint64_t>(v)) + ")"; }

// First differing entry, in row-major order of the assembled factor.
std::string diff_report(Impl impl, std::size_t b, std::size_t workers, const chol::TiledMatrix& got,
                        const chol::TiledMatrix& want) {
    std::ostringstream os;
    os << impl_name(impl) << " (b=" << b << ", workers=" << workers << ") differs from the serial factor";
    if (got.p != want.p || got.b != want.b) {
        os << ": shape " << got.p << "x" << got.b << " vs " << want.p << "x" << want.b;
        return os.str();
    }
    std::size_t tiles = 0;
    std::optional<std::tuple<std::size_t, std::size_t, double, double>> first;
    double max_abs = 0.0;
    for (std::size_t ti = 0; ti < got.p; ++ti) {
        for (std::size_t tj = 0; tj < got.p; ++tj) {
            const auto& g = got.at(ti, tj);
            const auto& w = want.at(ti, tj);
            if (g == w) continue;
            ++tiles;
            for (std::size_t r = 0; r < b; ++r) {
                for (std::size_t c = 0; c < b; ++c) {
                    const double x = g(r, c), y = w(r, c);
                    if (std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y)) continue;
                    max_abs = std::max(max_abs, std::abs(x - y));
                    const std::size_t gi = ti * b + r, gj = tj * b + c;
                    if (!first || std::tie(gi, gj) < std::tie(std::get<0>(*first), std::get<1>(*first)))
                        first = std::make_tuple(gi, gj, x, y);
                }
            }
        }
    }
    os << ": " << tiles << " tile(s) differ, max |diff| " << max_abs;
    if (first) {
        const auto& [i, j, x, y] = *first;
        os << "; first at L(" << i << "," << j << "): got " << bits_of(x) << ", serial " << bits_of(y);
    }
    return os.str();
}

}  // namespace

std::string_view impl_name(Impl impl) noexcept {
    switch (impl) {
        case Impl::Serial: return "serial";
        case Impl::Barrier: return "barrier";
        case Impl::Dataflow: return "dataflow";
        case Impl::Cnc: return "cnc";
        case Impl::CncTuned: return "cnc-tuned";
    }
    return "?";
}

std::optional<Impl> parse_impl(std::string_view name) {
    for (Impl i : kAllImpls)
        if (impl_name(i) == name) return i;
    return std::nullopt;
}

void validate(const BenchConfig& cfg) {
    if (cfg.impls.empty()) throw ConfigError("no implementation selected");
    if (cfg.blocks.empty()) throw ConfigError("no block size given");
    if (cfg.workers.empty()) throw ConfigError("no worker count given");
    if (cfg.reps < 1) throw ConfigError("repetitions must be at least 1");
    for (auto w : cfg.workers)
        if (w < 1) throw ConfigError("worker counts must be at least 1");
    for (auto b : cfg.blocks) {
        if (b < 1) throw ConfigError("block sizes must be at least 1");
        if (cfg.n != 0 && cfg.n % b != 0)
            throw ConfigError("block size " + std::to_string(b) + " does not divide N=" + std::to_string(cfg.n));
    }
}

ImplRun run_impl(Impl impl, const chol::DenseMatrix& a, std::size_t b, std::size_t workers, bool pin_workers) {
    ImplRun out;
    const auto t0 = std::chrono::steady_clock::now();
    switch (impl) {
        case Impl::Serial: {
            out.l = chol::serial_tiled_cholesky(chol::decompose(a, b));
            out.wall_ms = elapsed_ms(t0);
            const std::size_t p = out.l.p;
            out.activations = p + p * (p - 1) / 2 + (p + 1) * p * (p - 1) / 6;
            break;
        }
        case Impl::Barrier:
        case Impl::Dataflow: {
            snet::RunOptions opt;
            opt.workers = workers;
            opt.pin_workers = pin_workers;
            auto run = impl == Impl::Barrier ? chol::run_barrier(a, b, opt) : chol::run_dataflow(a, b, opt);
            out.wall_ms = elapsed_ms(t0);
            out.l = std::move(run.l);
            out.activations = run.result.metrics.total_box_activations();
            out.barrier_waits = run.result.metrics.barrier_waits;
            break;
        }
        case Impl::Cnc:
        case Impl::CncTuned: {
            auto run = cnc::run_cnc_cholesky(a, b, impl == Impl::CncTuned, {workers, pin_workers});
            out.wall_ms = elapsed_ms(t0);
            out.l = std::move(run.l);
            out.activations = run.metrics.steps_executed;
            out.stalls = run.metrics.steps_stalled;
            break;
        }
    }
    return out;
}

std::uint64_t checksum(const chol::DenseMatrix& m) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < m.data.size(); ++i) sum += entry_hash(i, m.data[i]);
    return sum;
}

std::uint64_t checksum(const chol::TiledMatrix& m) {
    const std::size_t n = m.n();
    std::uint64_t sum = 0;
    for (std::size_t ti = 0; ti < m.p; ++ti)
        for (std::size_t tj = 0; tj < m.p; ++tj) {
            const auto& t = m.at(ti, tj);
            for (std::size_t r = 0; r < m.b; ++r)
                for (std::size_t c = 0; c < m.b; ++c) sum += entry_hash((ti * m.b + r) * n + tj * m.b + c, t(r, c));
        }
    return sum;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg, const chol::DenseMatrix* input) {
    validate(cfg);
    if (input && cfg.n != 0 && cfg.n != input->n)
        throw ConfigError("input matrix is " + std::to_string(input->n) + "x" + std::to_string(input->n) +
                          " but N=" + std::to_string(cfg.n) + " was requested");
    const chol::DenseMatrix a = input ? *input : chol::gen_spd(cfg.n, cfg.seed);
    if (a.n == 0) throw ConfigError("matrix size must be positive");
    for (auto b : cfg.blocks)
        if (a.n % b != 0)
            throw ConfigError("block size " + std::to_string(b) + " does not divide N=" + std::to_string(a.n));

    std::vector<BenchRow> rows;
    std::map<std::uint64_t, double> residuals;
    auto residual_of = [&](std::uint64_t sum, const chol::TiledMatrix& l) {
        auto it = residuals.find(sum);
        if (it == residuals.end()) it = residuals.emplace(sum, chol::residual(a, chol::assemble(l))).first;
        return it->second;
    };
    auto make_row = [&](Impl impl, std::size_t b, std::size_t w, std::size_t rep, const ImplRun& run,
                        std::uint64_t sum, double baseline) {
        BenchRow row;
        row.impl = std::string(impl_name(impl));
        row.n = a.n;
        row.block = b;
        row.workers = w;
        row.seed = cfg.seed;
        row.rep = rep;
        row.wall_ms = run.wall_ms;
        row.speedup = run.wall_ms > 0 ? baseline / run.wall_ms : 0.0;
        if (cfg.check) row.residual = residual_of(sum, run.l);
        row.checksum = sum;
        row.activations = run.activations;
        row.stalls = run.stalls;
        row.barrier_waits = run.barrier_waits;
        return row;
    };
    const bool emit_serial = std::find(cfg.impls.begin(), cfg.impls.end(), Impl::Serial) != cfg.impls.end();

    for (std::size_t b : cfg.blocks) {
        std::vector<ImplRun> serial;
        std::vector<double> times;
        for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
            serial.push_back(run_impl(Impl::Serial, a, b, 1));
            times.push_back(serial.back().wall_ms);
        }
        const double baseline = median(times);
        const std::uint64_t oracle_sum = checksum(serial.front().l);
        if (emit_serial)
            for (std::size_t rep = 0; rep < cfg.reps; ++rep)
                rows.push_back(make_row(Impl::Serial, b, 1, rep, serial[rep], checksum(serial[rep].l), baseline));
        const chol::TiledMatrix oracle = std::move(serial.front().l);
        serial.clear();

        std::set<Impl> done;
        for (Impl impl : cfg.impls) {
            if (impl == Impl::Serial || !done.insert(impl).second) continue;
            for (std::size_t w : cfg.workers) {
                for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
                    ImplRun run = run_impl(impl, a, b, w, cfg.pin_workers);
                    const std::uint64_t sum = checksum(run.l);
                    if (cfg.check && (sum != oracle_sum || !(run.l == oracle)))
                        throw CheckFailure(diff_report(impl, b, w, run.l, oracle));
                    rows.push_back(make_row(impl, b, w, rep, run, sum, baseline));
                }
            }
        }
    }
    return rows;
}

std::string to_csv(const std::vector<BenchRow>& rows) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += r.impl + ',' + std::to_string(r.n) + ',' + std::to_string(r.block) + ',' + std::to_string(r.workers) +
               ',' + std::to_string(r.seed) + ',' + std::to_string(r.rep) + ',' + fmt("%.3f", r.wall_ms) + ',' +
               fmt("%.4f", r.speedup) + ',' + (r.residual ? fmt("%.3e", *r.residual) : std::string()) + ',' +
               hex64(r.checksum) + ',' + std::to_string(r.activations) + ',' + std::to_string(r.stalls) + ',' +
               std::to_string(r.barrier_waits) + '\n';
    }
    return out;
}

std::string to_json(const std::vector<BenchRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["impl"] = r.impl;
        j["n"] = r.n;
        j["block"] = r.block;
        j["workers"] = r.workers;
        j["seed"] = r.seed;
        j["rep"] = r.rep;
        j["wall_ms"] = r.wall_ms;
        j["speedup"] = r.speedup;
        j["residual"] = r.residual ? nlohmann::ordered_json(*r.residual) : nlohmann::ordered_json(nullptr);
        j["checksum"] = hex64(r.checksum);
        j["activations"] = r.activations;
        j["stalls"] = r.stalls;
        j["barrier_waits"] = r.barrier_waits;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::vector<BenchRow> medians(const std::vector<BenchRow>& rows) {
    using Config = std::tuple<std::string, std::size_t, std::size_t, std::size_t, std::uint64_t>;
    std::vector<Config> order;
    std::map<Config, std::vector<const BenchRow*>> groups;
    for (const auto& r : rows) {
        Config c{r.impl, r.n, r.block, r.workers, r.seed};
        auto& g = groups[c];
        if (g.empty()) order.push_back(c);
        g.push_back(&r);
    }
    std::vector<BenchRow> out;
    for (const auto& c : order) {
        const auto& g = groups[c];
        std::vector<double> wall, speed;
        for (const auto* r : g) {
            wall.push_back(r->wall_ms);
            speed.push_back(r->speedup);
        }
        BenchRow m = *g.front();
        m.rep = g.size();
        m.wall_ms = median(wall);
        m.speedup = median(speed);
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace coord::bench
