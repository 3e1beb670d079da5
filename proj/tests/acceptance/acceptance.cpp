#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "coord/bench/bench.hpp"
#include "coord/chol/barrier_network.hpp"
#include "coord/chol/dataflow_network.hpp"
#include "coord/chol/kernels.hpp"
#include "coord/cnc/cholesky.hpp"
#include "coord/snet/graph.hpp"
#include "coord/snet/network.hpp"
#include "coord/snet/runtime.hpp"
#include "coord/snet/sync_state.hpp"

using namespace coord;
using bench::Impl;

namespace {

constexpr double kResidualTol = 1e-10;
constexpr double kDataflowMinSpeedup = 4.0;
constexpr double kBarrierMinSpeedup = 1.5;
constexpr unsigned kScalingThreads = 8;
constexpr int kSkip = 77;

constexpr Impl kParallel[] = {Impl::Barrier, Impl::Dataflow, Impl::Cnc, Impl::CncTuned};

// Collects failed checks; the first few make up the report line.
class Checks {
public:
    bool expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok) failures_.push_back(what);
        return ok;
    }
    bool ok() const { return failures_.empty(); }
    std::size_t total() const { return total_; }
    std::string failures() const {
        std::string s;
        for (std::size_t i = 0; i < failures_.size() && i < 4; ++i) s += (i ? "; " : "") + failures_[i];
        if (failures_.size() > 4) s += "; +" + std::to_string(failures_.size() - 4) + " more";
        return s;
    }

private:
    std::size_t total_ = 0;
    std::vector<std::string> failures_;
};

struct Outcome {
    enum Status { Pass, Fail, Skip } status;
    std::string detail;
};

Outcome from(const Checks& c, const std::string& detail) {
    if (c.ok()) return {Outcome::Pass, detail + " (" + std::to_string(c.total()) + " checks)"};
    return {Outcome::Fail, c.failures()};
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string name(Impl i) { return std::string(bench::impl_name(i)); }

std::size_t trsm_count(std::size_t p) { return p * (p - 1) / 2; }

std::size_t update_count(std::size_t p) {
    std::size_t total = 0;
    for (std::size_t k = 0; k < p; ++k) total += (p - 1 - k) * (p - k) / 2;
    return total;
}

std::size_t lower_tiles(std::size_t p) { return p * (p + 1) / 2; }

// -- 1 ------------------------------------------------------------------------

Outcome correctness() {
    Checks c;
    double worst = 0.0;
    for (std::size_t n : {256u, 1024u}) {
        bench::BenchConfig cfg;
        cfg.impls.assign(std::begin(bench::kAllImpls), std::end(bench::kAllImpls));
        cfg.n = n;
        cfg.blocks = {32, 64, 128};
        cfg.workers = {4};
        cfg.reps = 1;
        cfg.check = true;
        std::vector<bench::BenchRow> rows;
        try {
            rows = bench::run_bench(cfg);
        } catch (const bench::CheckFailure& e) {
            c.expect(false, e.what());
            continue;
        }
        std::map<std::size_t, std::uint64_t> oracle;
        for (const auto& r : rows)
            if (r.impl == "serial") oracle[r.block] = r.checksum;
        for (const auto& r : rows) {
            const std::string at = r.impl + " N=" + std::to_string(n) + " b=" + std::to_string(r.block);
            c.expect(r.checksum == oracle.at(r.block), at + " checksum differs from serial");
            c.expect(r.residual && *r.residual <= kResidualTol, at + " residual " + fmt("%.3e", r.residual.value_or(NAN)));
            if (r.residual) worst = std::max(worst, *r.residual);
        }
    }
    return from(c, "5 impls, N {256,1024}, b {32,64,128}, max residual " + fmt("%.2e", worst));
}

// -- 2 ------------------------------------------------------------------------

Outcome determinism() {
    Checks c;
    const std::size_t n = 256, b = 32;
    const auto a = chol::gen_spd(n, 2024);
    const auto want = bench::checksum(chol::serial_tiled_cholesky(chol::decompose(a, b)));
    std::size_t runs = 0;
    for (Impl impl : kParallel) {
        std::set<std::uint64_t> seen;
        for (std::size_t w : {1u, 2u, 8u})
            for (int rep = 0; rep < 10; ++rep, ++runs) seen.insert(bench::checksum(bench::run_impl(impl, a, b, w).l));
        c.expect(seen.size() == 1, name(impl) + " produced " + std::to_string(seen.size()) + " checksums");
        c.expect(seen.count(want) == 1, name(impl) + " disagrees with serial");
    }
    return from(c, std::to_string(runs) + " runs at N=256 b=32, workers {1,2,8}");
}

// -- 3 ------------------------------------------------------------------------

// Lower tiles hold the factor; upper tiles stay zero.
bool lower_shape(const chol::TiledMatrix& l) {
    const chol::Tile zero(l.b);
    std::size_t filled = 0;
    for (std::size_t i = 0; i < l.p; ++i)
        for (std::size_t j = 0; j < l.p; ++j) {
            if (j > i && l.at(i, j) != zero) return false;
            if (j <= i && l.at(i, j) != zero) ++filled;
        }
    return filled == lower_tiles(l.p);
}

Outcome activation_counts() {
    Checks c;
    const std::size_t b = 16;
    for (std::size_t p : {1u, 2u, 4u, 8u}) {
        const auto a = chol::gen_spd(p * b, 300 + p);
        const auto want = chol::serial_tiled_cholesky(chol::decompose(a, b));
        const std::string at = " p=" + std::to_string(p);
        snet::RunOptions opt;
        opt.workers = 4;

        const auto br = chol::run_barrier(a, b, opt);
        const auto& bm = br.result.metrics;
        c.expect(bm.activations_of("potrf") == p, "barrier potrf" + at);
        c.expect(bm.activations_of("trsm") == trsm_count(p), "barrier trsm" + at);
        c.expect(bm.activations_of("update") == update_count(p), "barrier update" + at);
        c.expect(bm.barrier_waits == 2 * p, "barrier waits " + std::to_string(bm.barrier_waits) + at);
        c.expect(br.result.parked.empty(), "barrier parked" + at);
        c.expect(bm.ledger.balanced(), "barrier ledger" + at);
        c.expect(lower_shape(br.l) && br.l == want, "barrier factor" + at);

        const auto dr = chol::run_dataflow(a, b, opt);
        const auto& dm = dr.result.metrics;
        c.expect(dm.activations_of("potrf") == p, "dataflow potrf" + at);
        c.expect(dm.activations_of("trsm") == trsm_count(p), "dataflow trsm" + at);
        c.expect(dm.activations_of("update") == update_count(p), "dataflow update" + at);
        c.expect(dm.activations_of("merge") == lower_tiles(p), "dataflow Out tiles" + at);
        c.expect(dm.barrier_waits == 0, "dataflow waits" + at);
        c.expect(dr.result.parked.empty(), "dataflow parked " + std::to_string(dr.result.parked.size()) + at);
        c.expect(dm.ledger.balanced(), "dataflow ledger" + at);
        c.expect(dr.l == want, "dataflow factor" + at);

        for (bool tuned : {false, true}) {
            const std::string who = tuned ? "cnc-tuned" : "cnc";
            auto g = cnc::build_cholesky_cnc(tuned);
            cnc::put_environment(g, chol::decompose(a, b));
            cnc::CncMetrics m;
            try {
                m = cnc::run_cnc(*g.graph, {.workers = 4});
            } catch (const cnc::CncError& e) {
                c.expect(false, who + at + ": " + e.what());
                continue;
            }
            c.expect(m.executed_of("potrf") == p, who + " potrf" + at);
            c.expect(m.executed_of("trsm") == trsm_count(p), who + " trsm" + at);
            c.expect(m.executed_of("update") == update_count(p), who + " update" + at);
            c.expect(m.steps_executed == m.steps_prescribed, who + " unexecuted steps" + at);
            std::size_t finals = 0;
            for (const auto& k : g.lkji->keys())
                if (k[0] == k[2] + 1) ++finals;
            c.expect(finals == lower_tiles(p), who + " Out tiles " + std::to_string(finals) + at);
            c.expect(cnc::collect_factor(g, p, b) == want, who + " factor" + at);
        }
    }
    return from(c, "p {1,2,4,8}: barrier, dataflow, cnc, cnc-tuned");
}

// -- 4 ------------------------------------------------------------------------

bool enough_threads() { return std::thread::hardware_concurrency() >= kScalingThreads; }

std::string hw_note() { return std::to_string(std::thread::hardware_concurrency()) + " hardware threads"; }

Outcome scaling(bool force) {
    if (!force && !enough_threads()) return {Outcome::Skip, "needs >= 8 hardware threads, have " + hw_note()};
    bench::BenchConfig cfg;
    cfg.impls = {Impl::Serial, Impl::Barrier, Impl::Dataflow};
    cfg.n = 2048;
    cfg.blocks = {128};
    cfg.workers = {kScalingThreads};
    cfg.reps = 3;
    std::map<std::string, bench::BenchRow> med;
    for (const auto& r : bench::medians(bench::run_bench(cfg))) med[r.impl] = r;
    const auto& d = med.at("dataflow");
    const auto& br = med.at("barrier");
    Checks c;
    c.expect(d.speedup >= kDataflowMinSpeedup, "dataflow speedup " + fmt("%.2f", d.speedup) + " < 4");
    c.expect(d.wall_ms <= br.wall_ms, "dataflow " + fmt("%.0f ms", d.wall_ms) + " slower than barrier " + fmt("%.0f ms", br.wall_ms));
    c.expect(br.speedup >= kBarrierMinSpeedup, "barrier speedup " + fmt("%.2f", br.speedup) + " < 1.5");
    return from(c, "dataflow " + fmt("%.2fx", d.speedup) + ", barrier " + fmt("%.2fx", br.speedup) + ", " + hw_note());
}

// -- 5 ------------------------------------------------------------------------

struct CncSample {
    double wall_ms;
    std::vector<std::uint64_t> stalls;
};

CncSample cnc_sample(Impl impl, const chol::DenseMatrix& a, std::size_t b, std::size_t workers) {
    std::vector<double> walls;
    CncSample s{};
    for (int rep = 0; rep < 3; ++rep) {
        const auto r = bench::run_impl(impl, a, b, workers);
        walls.push_back(r.wall_ms);
        s.stalls.push_back(r.stalls);
    }
    s.wall_ms = bench::median(walls);
    return s;
}

Outcome tuning() {
    Checks c;
    const std::size_t n = 1024, workers = 4;
    const auto a = chol::gen_spd(n, 7);
    auto all = [](const std::vector<std::uint64_t>& v, auto pred) { return std::all_of(v.begin(), v.end(), pred); };

    const auto u = cnc_sample(Impl::Cnc, a, 32, workers);
    const auto t = cnc_sample(Impl::CncTuned, a, 32, workers);
    c.expect(all(u.stalls, [](auto s) { return s > 0; }), "untuned b=32 ran without stalls");
    c.expect(all(t.stalls, [](auto s) { return s == 0; }), "tuned b=32 stalled");
    c.expect(t.wall_ms <= u.wall_ms, "tuned " + fmt("%.0f ms", t.wall_ms) + " slower than untuned " + fmt("%.0f ms", u.wall_ms));

    const auto u512 = cnc_sample(Impl::Cnc, a, 512, workers);
    const auto t512 = cnc_sample(Impl::CncTuned, a, 512, workers);
    c.expect(all(u512.stalls, [](auto s) { return s > 0; }), "untuned b=512 ran without stalls");
    c.expect(all(t512.stalls, [](auto s) { return s == 0; }), "tuned b=512 stalled");

    return from(c, "b=32 untuned " + fmt("%.0f ms", u.wall_ms) + " stalls " + std::to_string(u.stalls[0]) + ", tuned " +
                       fmt("%.0f ms", t.wall_ms) + "; b=512 untuned " + fmt("%.0f ms", u512.wall_ms) + ", tuned " +
                       fmt("%.0f ms", t512.wall_ms));
}

// -- 6 ------------------------------------------------------------------------

Outcome sweep_shape(bool force) {
    if (!force && !enough_threads()) return {Outcome::Skip, "needs >= 8 hardware threads, have " + hw_note()};
    bench::BenchConfig cfg;
    cfg.impls = {Impl::Serial, Impl::Barrier, Impl::Dataflow, Impl::Cnc, Impl::CncTuned};
    cfg.n = 2048;
    cfg.blocks = {16, 32, 64, 128, 256, 2048};
    cfg.workers = {kScalingThreads};
    cfg.reps = 3;
    std::map<std::string, std::map<std::size_t, double>> speedup;
    for (const auto& r : bench::medians(bench::run_bench(cfg)))
        if (r.impl != "serial") speedup[r.impl][r.block] = r.speedup;
    Checks c;
    std::string detail;
    for (const auto& [impl, by_b] : speedup) {
        double best = 0.0;
        std::size_t best_b = 0;
        for (std::size_t b : {32u, 64u, 128u, 256u})
            if (by_b.at(b) > best) best = by_b.at(b), best_b = b;
        c.expect(by_b.at(16) < best, impl + " b=16 " + fmt("%.2f", by_b.at(16)) + " >= " + fmt("%.2f", best));
        c.expect(by_b.at(2048) < best, impl + " b=N " + fmt("%.2f", by_b.at(2048)) + " >= " + fmt("%.2f", best));
        detail += (detail.empty() ? "" : ", ") + impl + " peak " + fmt("%.2fx", best) + " at b=" + std::to_string(best_b);
    }
    return from(c, detail + ", " + hw_note());
}

// -- 7 ------------------------------------------------------------------------

using snet::BoxSignature;
using snet::Record;
using snet::Tag;
using snet::TypePattern;

Record value(const std::string& field, std::int64_t v, std::initializer_list<std::pair<std::string, Tag>> tags = {}) {
    Record r;
    r.put<std::int64_t>(field, v);
    for (const auto& [n, t] : tags) r.set_tag(n, t);
    return r;
}

snet::RunResult run_net(const snet::Net& n, std::vector<Record> in, snet::RunOptions opt = {},
                        snet::CompileOptions copt = {}) {
    return snet::run(snet::compile(n, copt), std::move(in), opt);
}

void sync_rules(Checks& c) {
    const std::vector<TypePattern> slots{TypePattern{"r"}, TypePattern{"s"}};
    snet::SyncState st(2, false);
    c.expect(!snet::step_sync(st, slots, value("t", 0)).parked, "sync parked a non-matching record");
    c.expect(snet::step_sync(st, slots, value("r", 1)).parked, "sync did not park {r}");
    auto dup = snet::step_sync(st, slots, value("r", 2));
    c.expect(!dup.parked && dup.emit.size() == 1, "sync did not forward a second {r}");
    auto fire = snet::step_sync(st, slots, value("s", 3));
    c.expect(fire.emit.size() == 1 && fire.emit[0].has_field("r") && fire.emit[0].has_field("s") &&
                 *fire.emit[0].get<std::int64_t>("r") == 1,
             "sync merge is not {r,s} with the first {r}");
    auto after = snet::step_sync(st, slots, value("r", 4));
    c.expect(!after.parked && st.spent, "spent sync did not forward");

    snet::SyncState rep(2, true);
    std::size_t fired = 0;
    for (int i = 0; i < 5; ++i) {
        snet::step_sync(rep, slots, value("r", i));
        fired += snet::step_sync(rep, slots, value("s", i)).emit.size();
    }
    c.expect(fired == 5 && rep.fired_count == 5, "repeating sync fired " + std::to_string(fired) + " of 5");
}

void star_count(Checks& c) {
    auto count = snet::box("count",
                           BoxSignature(TypePattern({"x"}, {"n"}), {TypePattern({"x"}, {"n"}), TypePattern({"x"}, {"done"})}),
                           [](Record r) {
                               Tag n = r.tag("n") + 1;
                               r.erase_tag("n");
                               r.set_tag(n >= 3 ? "done" : "n", n);
                               return std::vector{r};
                           });
    auto res = run_net(snet::star(count, snet::tags_pattern({"done"})), {value("x", 0, {{"n", 0}})});
    c.expect(res.outputs.size() == 1 && res.outputs[0].tag("done") == 3, "star output");
    c.expect(res.metrics.find("star")->instances == 3, "star created " + std::to_string(res.metrics.find("star")->instances) + " instances, want 3");
    auto bypass = run_net(snet::star(count, snet::tags_pattern({"done"})), {value("x", 0, {{"done", 1}})});
    c.expect(bypass.metrics.find("star")->instances == 0, "exit-matching record entered the star");
}

void split_routing(Checks& c) {
    auto join = snet::sync({TypePattern({"a"}, {"k"}), TypePattern({"b"}, {"k"})});
    std::vector<Record> in;
    for (Tag k = 0; k < 8; ++k) in.push_back(value("a", k, {{"k", k}}));
    for (Tag k = 7; k >= 0; --k) in.push_back(value("b", k, {{"k", k}}));
    auto res = run_net(snet::split(join, "k"), in, {.workers = 4});
    bool paired = res.outputs.size() == 8;
    for (const auto& r : res.outputs)
        paired = paired && r.has_field("a") && r.has_field("b") && *r.get<std::int64_t>("a") == r.tag("k") &&
                 *r.get<std::int64_t>("b") == r.tag("k");
    c.expect(paired && res.parked.empty(), "split sent equal tags to different branches");
    c.expect(res.metrics.find("split")->instances == 8, "split instance count");
}

void feedback_count(Checks& c) {
    auto step = snet::box("step",
                          BoxSignature(TypePattern({"A"}, {"k", "P"}), {TypePattern({"A"}, {"k", "P"}), TypePattern{"L"}}),
                          [](Record r) {
                              Tag k = r.tag("k") + 1, p = r.tag("P");
                              if (k < p) {
                                  Record out;
                                  out.set_field("A", r.field("A")).set_tag("k", k).set_tag("P", p);
                                  return std::vector{out};
                              }
                              return std::vector<Record>{value("L", k)};
                          });
    for (Tag p : {1, 2, 4, 8}) {
        auto res = run_net(snet::feedback(step, TypePattern{"A"}), {value("A", 0, {{"k", 0}, {"P", p}})});
        c.expect(res.outputs.size() == 1 && *res.outputs[0].get<std::int64_t>("L") == p, "feedback result p=" + std::to_string(p));
        c.expect(res.metrics.find("feedback")->recirculations == static_cast<std::uint64_t>(p - 1),
                 "feedback recirculations p=" + std::to_string(p));
    }
}

void stateful_idiom(Checks& c) {
    for (bool fused : {true, false}) {
        std::atomic<int> in_flight{0}, max_in_flight{0};
        auto acc = snet::box("acc", BoxSignature(TypePattern{"r", "s"}, {TypePattern{"s"}, TypePattern{"o"}}),
                             [&](Record rec) {
                                 int now = ++in_flight;
                                 int seen = max_in_flight.load();
                                 while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
                                 }
                                 auto s = *rec.get<std::int64_t>("s") + *rec.get<std::int64_t>("r");
                                 --in_flight;
                                 return std::vector<Record>{value("s", s), value("o", s)};
                             });
        auto net = snet::feedback(
            snet::serial(snet::star(snet::sync({TypePattern{"r"}, TypePattern{"s"}}), TypePattern{"r", "s"}), acc),
            TypePattern{"s"});
        const int n = 300;
        std::vector<Record> in{value("s", 0)};
        for (int i = 1; i <= n; ++i) in.push_back(value("r", i));
        auto res = run_net(net, in, {.workers = 4}, {.fuse_sync_chains = fused});
        const std::string at = fused ? " (fused)" : " (expanded)";
        c.expect(max_in_flight.load() == 1, "more than one live state" + at);
        c.expect(res.parked.size() == 1 && res.parked[0].record == "{s}", "final state not the only parked record" + at);
        std::int64_t top = 0;
        for (const auto& o : res.outputs) top = std::max(top, *o.get<std::int64_t>("o"));
        c.expect(res.outputs.size() == static_cast<std::size_t>(n) && top == n * (n + 1) / 2, "state lost updates" + at);
    }
}

Outcome combinators() {
    Checks c;
    sync_rules(c);
    star_count(c);
    split_routing(c);
    feedback_count(c);
    stateful_idiom(c);
    return from(c, "sync, star, split, feedback, stateful idiom");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria for the coordination runtimes"};
    int criterion = 0;
    bool force = false;
    app.add_option("--criterion", criterion, "1..7")->required()->check(CLI::Range(1, 7));
    app.add_flag("--force", force, "Run hardware-gated criteria regardless of thread count");
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::function<Outcome()>> table{
        {1, correctness},
        {2, determinism},
        {3, activation_counts},
        {4, [force] { return scaling(force); }},
        {5, tuning},
        {6, [force] { return sweep_shape(force); }},
        {7, combinators},
    };
    Outcome out;
    try {
        out = table.at(criterion)();
    } catch (const std::exception& e) {
        out = {Outcome::Fail, std::string("error: ") + e.what()};
    }
    static const char* label[] = {"PASS", "FAIL", "SKIP"};
    std::printf("criterion %d: %s - %s\n", criterion, label[out.status], out.detail.c_str());
    return out.status == Outcome::Pass ? 0 : out.status == Outcome::Skip ? kSkip : 1;
}
