#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "coord/chol/barrier_network.hpp"
#include "coord/chol/dataflow_network.hpp"
#include "coord/chol/kernels.hpp"
#include "coord/snet/graph.hpp"

using namespace coord;
using namespace coord::chol;

namespace {

std::size_t trsm_count(std::size_t p) { return p * (p - 1) / 2; }

std::size_t update_count(std::size_t p) {
    std::size_t total = 0;
    for (std::size_t k = 0; k < p; ++k) total += (p - 1 - k) * (p - k) / 2;
    return total;
}

// The outermost feedback node has the shortest path.
const snet::NodeMetrics& outer_feedback(const snet::RunMetrics& m) {
    const snet::NodeMetrics* best = nullptr;
    for (const auto& n : m.nodes) {
        if (n.kind != snet::NodeKind::Feedback) continue;
        if (!best || n.path.size() < best->path.size()) best = &n;
    }
    if (!best) throw std::logic_error("no feedback node");
    return *best;
}

std::uint64_t fired_at(const snet::RunMetrics& m, const std::string& path_suffix) {
    for (const auto& n : m.nodes) {
        if (n.path.size() >= path_suffix.size() &&
            n.path.compare(n.path.size() - path_suffix.size(), path_suffix.size(), path_suffix) == 0)
            return n.fired;
    }
    throw std::logic_error("no node at " + path_suffix);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void expect_golden(const std::string& name, const std::string& actual) {
    const std::string path = std::string(COORD_GOLDEN_DIR) + "/" + name;
    if (std::getenv("COORD_UPDATE_GOLDEN")) {
        std::ofstream(path) << actual;
        GTEST_SKIP() << "rewrote " << path;
    }
    EXPECT_EQ(read_file(path), actual) << "graph dump drifted from " << path;
}

}  // namespace

TEST(DataflowRouting, SuccessorsOfDiagonalFactor) {
    // L_22 at p=4: Out plus Sym_Ljk for rows 2 and 3, no Sym_Lik (j range empty).
    auto out = emit_successors(1, 1, 4);
    ASSERT_FALSE(out.empty());
    EXPECT_EQ(out[0], (Message{Role::Out, 1, 1, 1}));
}

TEST(DataflowRouting, SuccessorsEnumerateBothRoles) {
    const auto out = emit_successors(0, 2, 4);
    const std::vector<Message> want{
        {Role::Out, 0, 2, 0},    {Role::SymLik, 0, 2, 1}, {Role::SymLik, 0, 2, 2},
        {Role::SymLjk, 0, 2, 2}, {Role::SymLjk, 0, 3, 2},
    };
    EXPECT_EQ(out, want);
}

TEST(DataflowRouting, EveryFactorTileFeedsItsConsumers) {
    for (std::size_t p = 1; p <= 9; ++p) {
        std::size_t lik = 0, ljk = 0;
        std::map<std::tuple<std::size_t, std::size_t, std::size_t>, int> joins;
        for (std::size_t k = 0; k < p; ++k) {
            for (std::size_t m = k + 1; m < p; ++m) {
                const auto out = emit_successors(k, m, p);
                ASSERT_EQ(out.size(), 1 + (m - k) + (p - m)) << "k=" << k << " m=" << m;
                EXPECT_EQ(std::count_if(out.begin(), out.end(), [](const Message& x) { return x.role == Role::Out; }), 1);
                for (const auto& x : out) {
                    if (x.role == Role::Out) continue;
                    EXPECT_EQ(x.k, k);
                    EXPECT_TRUE(k < x.j && x.j <= x.i && x.i < p);
                    if (x.role == Role::SymLik) {
                        ++lik;
                        EXPECT_EQ(x.i, m);
                    } else {
                        ++ljk;
                        EXPECT_EQ(x.j, m);
                    }
                    joins[{x.k, x.i, x.j}] += x.role == Role::SymLik ? 1 : 10;
                }
            }
        }
        EXPECT_EQ(lik, update_count(p));
        EXPECT_EQ(ljk, update_count(p));
        // Each update join receives exactly one Sym_Lik and one Sym_Ljk.
        EXPECT_EQ(joins.size(), update_count(p));
        for (const auto& [key, v] : joins) EXPECT_EQ(v, 11);
    }
}

TEST(DataflowRouting, UpdateSuccessor) {
    EXPECT_EQ(update_successor(0, 1, 1), (Message{Role::FacAkk, 1, 1, 1}));
    EXPECT_EQ(update_successor(0, 3, 1), (Message{Role::TriAjk, 1, 3, 3}));
    EXPECT_EQ(update_successor(0, 3, 2), (Message{Role::SymAij, 1, 3, 2}));
    EXPECT_EQ(update_successor(2, 3, 3), (Message{Role::FacAkk, 3, 3, 3}));
}

TEST(DataflowRouting, UpdateSuccessorsCoverNextStepInputs) {
    // Step k+1 needs one A message per lower tile of the trailing block; the
    // step-k updates must produce exactly those.
    for (std::size_t p = 2; p <= 8; ++p) {
        for (std::size_t k = 0; k + 1 < p; ++k) {
            std::size_t fac = 0, tri = 0, sym = 0;
            for (std::size_t i = k + 1; i < p; ++i) {
                for (std::size_t j = k + 1; j <= i; ++j) {
                    const auto m = update_successor(k, i, j);
                    EXPECT_EQ(m.k, k + 1);
                    fac += m.role == Role::FacAkk;
                    tri += m.role == Role::TriAjk;
                    sym += m.role == Role::SymAij;
                }
            }
            const std::size_t q = p - k - 1;
            EXPECT_EQ(fac, 1u);
            EXPECT_EQ(tri, q - 1);
            EXPECT_EQ(sym, q * (q + 1) / 2 - q);
        }
    }
}

TEST(NetworkGraphs, DataflowHasNoCollectors) {
    const auto g = snet::compile(build_dataflow_network());
    EXPECT_EQ(g.count_completion_nodes(), 0u);
}

TEST(NetworkGraphs, BarrierHasTwoCollectors) {
    const auto g = snet::compile(build_barrier_network());
    EXPECT_EQ(g.count_completion_nodes(), 2u);
}

TEST(NetworkGraphs, DataflowGolden) { expect_golden("dataflow_graph.txt", snet::compile(build_dataflow_network()).dump()); }

TEST(NetworkGraphs, BarrierGolden) { expect_golden("barrier_graph.txt", snet::compile(build_barrier_network()).dump()); }

class NetworkCounts : public ::testing::TestWithParam<std::size_t> {};

TEST_P(NetworkCounts, Barrier) {
    const std::size_t p = GetParam(), b = 8;
    const auto a = gen_spd(p * b, 11 + p);
    const auto run = run_barrier(a, b);
    const auto& m = run.result.metrics;
    EXPECT_EQ(m.activations_of("potrf"), p);
    EXPECT_EQ(m.activations_of("trsm"), trsm_count(p));
    EXPECT_EQ(m.activations_of("update"), update_count(p));
    EXPECT_EQ(m.barrier_waits, 2 * p);
    EXPECT_EQ(outer_feedback(m).recirculations, p);
    EXPECT_TRUE(m.ledger.balanced());
    EXPECT_TRUE(run.result.parked.empty());
    EXPECT_EQ(run.l, serial_tiled_cholesky(decompose(a, b)));
}

TEST_P(NetworkCounts, Dataflow) {
    const std::size_t p = GetParam(), b = 8;
    const auto a = gen_spd(p * b, 23 + p);
    const auto run = run_dataflow(a, b);
    const auto& m = run.result.metrics;
    EXPECT_EQ(m.activations_of("potrf"), p);
    EXPECT_EQ(m.activations_of("trsm"), trsm_count(p));
    EXPECT_EQ(m.activations_of("update"), update_count(p));
    // Finalize merges one Out tile per lower tile.
    EXPECT_EQ(m.activations_of("merge"), p * (p + 1) / 2);
    EXPECT_EQ(fired_at(m, "split<i>/split<j>/serial.0/sync"), update_count(p));
    EXPECT_EQ(m.barrier_waits, 0u);
    EXPECT_TRUE(run.result.parked.empty());
    EXPECT_TRUE(m.ledger.balanced());
    EXPECT_EQ(run.l, serial_tiled_cholesky(decompose(a, b)));
}

INSTANTIATE_TEST_SUITE_P(P, NetworkCounts, ::testing::Values(1, 2, 3, 4, 8));

TEST(NetworkCounts, DataflowJoinTraffic) {
    const std::size_t p = 6, b = 4;
    const auto run = run_dataflow(gen_spd(p * b, 5), b);
    const auto& m = run.result.metrics;
    // Solve joins absorb two records each, update joins three.
    std::uint64_t solve_fired = 0, update_fired = 0;
    for (const auto& n : m.nodes) {
        if (n.kind != snet::NodeKind::Sync) continue;
        if (n.path.find("parallel.1/split<k>") != std::string::npos) solve_fired += n.fired;
        if (n.path.find("parallel.2/split<k>") != std::string::npos) update_fired += n.fired;
    }
    EXPECT_EQ(solve_fired, trsm_count(p));
    EXPECT_EQ(update_fired, update_count(p));
    EXPECT_EQ(m.ledger.sync_merged_in, 2 * trsm_count(p) + 3 * update_count(p) + 2 * (p * (p + 1) / 2));
}

class NetworkWorkers : public ::testing::TestWithParam<std::size_t> {};

TEST_P(NetworkWorkers, BitwiseEqualToSerial) {
    const std::size_t b = 8;
    const auto a = gen_spd(64, 99);
    const auto want = serial_tiled_cholesky(decompose(a, b));
    snet::RunOptions opt;
    opt.workers = GetParam();
    for (int rep = 0; rep < 3; ++rep) {
        EXPECT_EQ(run_barrier(a, b, opt).l, want);
        EXPECT_EQ(run_dataflow(a, b, opt).l, want);
    }
}

TEST_P(NetworkWorkers, SmallStreamCapacity) {
    const std::size_t b = 4;
    const auto a = gen_spd(32, 3);
    snet::RunOptions opt;
    opt.workers = GetParam();
    opt.stream_capacity = 2;
    const auto want = serial_tiled_cholesky(decompose(a, b));
    EXPECT_EQ(run_barrier(a, b, opt).l, want);
    EXPECT_EQ(run_dataflow(a, b, opt).l, want);
}

INSTANTIATE_TEST_SUITE_P(W, NetworkWorkers, ::testing::Values(1, 2, 8));

namespace {

bool iterations_overlap(const std::vector<snet::TimelineSpan>& timeline) {
    std::map<snet::Tag, std::uint64_t> first_start, last_end;
    for (const auto& s : timeline) {
        if (!s.tag) continue;
        auto [it, fresh] = first_start.try_emplace(*s.tag, s.start_ns);
        if (!fresh) it->second = std::min(it->second, s.start_ns);
        last_end[*s.tag] = std::max(last_end[*s.tag], s.end_ns);
    }
    for (const auto& [k, end] : last_end) {
        auto next = first_start.find(k + 1);
        if (next != first_start.end() && next->second < end) return true;
    }
    return false;
}

}  // namespace

TEST(NetworkTimeline, DataflowOverlapsIterations) {
    // Overlap needs two activations in flight at once; on a single core that
    // only happens when a worker is preempted mid-kernel, so tiles are sized
    // to outlast a scheduler slice and a few attempts are allowed.
    const std::size_t p = 6, b = 64;
    snet::RunOptions opt;
    opt.workers = 4;
    opt.timeline_tag = "k";
    const auto a = gen_spd(p * b, 8);
    bool overlap = false;
    for (int attempt = 0; attempt < 5 && !overlap; ++attempt)
        overlap = iterations_overlap(run_dataflow(a, b, opt).result.timeline);
    EXPECT_TRUE(overlap);
}

TEST(NetworkTimeline, BarrierStagesDoNotOverlap) {
    const std::size_t p = 5, b = 8;
    snet::RunOptions opt;
    opt.workers = 2;
    opt.timeline_tag = "k";
    const auto run = run_barrier(gen_spd(p * b, 8), b, opt);
    std::map<snet::Tag, std::uint64_t> first_start, last_end;
    for (const auto& s : run.result.timeline) {
        if (!s.tag) continue;
        const auto& label = run.result.metrics.nodes.at(s.node).label;
        if (label != "potrf" && label != "trsm" && label != "update") continue;
        auto [it, fresh] = first_start.try_emplace(*s.tag, s.start_ns);
        if (!fresh) it->second = std::min(it->second, s.start_ns);
        last_end[*s.tag] = std::max(last_end[*s.tag], s.end_ns);
    }
    for (const auto& [k, end] : last_end) {
        auto next = first_start.find(k + 1);
        if (next != first_start.end()) EXPECT_GE(next->second, end) << "k=" << k;
    }
}

TEST(NetworkErrors, BlockMustDivideN) {
    EXPECT_THROW(run_barrier(gen_spd(10, 1), 4), std::exception);
    EXPECT_THROW(run_dataflow(gen_spd(10, 1), 4), std::exception);
}

TEST(NetworkErrors, NotPositiveDefinite) {
    DenseMatrix a(8);
    for (std::size_t i = 0; i < 8; ++i) a.data[i * 8 + i] = i == 5 ? -1.0 : 1.0;
    EXPECT_THROW(run_barrier(a, 4), snet::RunError);
    EXPECT_THROW(run_dataflow(a, 4), snet::RunError);
}
