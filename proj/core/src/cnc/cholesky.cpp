#include "coord/cnc/cholesky.hpp"

#include "coord/chol/kernels.hpp"

namespace coord::cnc {

using chol::Tile;

namespace {

std::int64_t i64(std::size_t v) { return static_cast<std::int64_t>(v); }

void check_edge(const Tile& t, std::size_t b, const char* step, const Key& tag) {
    if (t.b != b)
        throw chol::NumericError(std::string(step) + tag.str() + ": tile edge " + std::to_string(t.b) +
                                 " does not match b=" + std::to_string(b));
}

}  // namespace

CholeskyGraph build_cholesky_cnc(bool tuned) {
    CholeskyGraph c;
    c.graph = std::make_unique<Graph>();
    Graph& g = *c.graph;
    auto& lkji = g.items<Tile>("Lkji");
    auto& bs = g.items<std::size_t>("b");
    auto& ps = g.items<std::size_t>("p");
    auto& singleton = g.tags("singleton");
    auto& k_tags = g.tags("k_tags");
    auto& kj_tags = g.tags("kj_tags");
    auto& kji_tags = g.tags("kji_tags");
    c.lkji = &lkji;
    c.b = &bs;
    c.p = &ps;
    c.singleton = &singleton;
    c.k_tags = &k_tags;
    c.kj_tags = &kj_tags;
    c.kji_tags = &kji_tags;

    auto depends = [tuned](DependsFn fn) { return tuned ? std::move(fn) : DependsFn{}; };

    g.steps(
        "k_compute", singleton,
        [&ps, &k_tags](const Key&, Context& ctx) {
            const std::size_t p = ctx.get(ps, {});
            for (std::size_t k = 0; k < p; ++k) ctx.put(k_tags, {i64(k)});
        },
        depends([&ps](const Key&) { return std::vector<ItemRef>{{&ps, {}}}; }));

    g.steps(
        "kj_compute", k_tags,
        [&ps, &kj_tags](const Key& t, Context& ctx) {
            const auto p = static_cast<std::int64_t>(ctx.get(ps, {}));
            for (std::int64_t j = t[0] + 1; j < p; ++j) ctx.put(kj_tags, {t[0], j});
        },
        depends([&ps](const Key&) { return std::vector<ItemRef>{{&ps, {}}}; }));

    g.steps(
        "kji_compute", kj_tags,
        [&kji_tags](const Key& t, Context& ctx) {
            for (std::int64_t i = t[0] + 1; i <= t[1]; ++i) ctx.put(kji_tags, {t[0], t[1], i});
        },
        depends([](const Key&) { return std::vector<ItemRef>{}; }));

    g.steps(
        "potrf", k_tags,
        [&lkji, &bs](const Key& t, Context& ctx) {
            const std::int64_t k = t[0];
            const std::size_t b = ctx.get(bs, {});
            const Tile& a = ctx.get(lkji, {k, k, k});
            check_edge(a, b, "potrf", t);
            ctx.put(lkji, {k + 1, k, k}, chol::potrf_tile(a));
        },
        depends([&lkji, &bs](const Key& t) {
            const std::int64_t k = t[0];
            return std::vector<ItemRef>{{&bs, {}}, {&lkji, {k, k, k}}};
        }));

    g.steps(
        "trsm", kj_tags,
        [&lkji, &bs](const Key& t, Context& ctx) {
            const std::int64_t k = t[0], j = t[1];
            const std::size_t b = ctx.get(bs, {});
            const Tile& a = ctx.get(lkji, {k, j, k});
            const Tile& l = ctx.get(lkji, {k + 1, k, k});
            check_edge(a, b, "trsm", t);
            ctx.put(lkji, {k + 1, j, k}, chol::trsm_tile(l, a));
        },
        depends([&lkji, &bs](const Key& t) {
            const std::int64_t k = t[0], j = t[1];
            return std::vector<ItemRef>{{&bs, {}}, {&lkji, {k, j, k}}, {&lkji, {k + 1, k, k}}};
        }));

    g.steps(
        "update", kji_tags,
        [&lkji, &bs](const Key& t, Context& ctx) {
            const std::int64_t k = t[0], j = t[1], i = t[2];
            const std::size_t b = ctx.get(bs, {});
            const Tile& a = ctx.get(lkji, {k, j, i});
            const Tile& l_row = ctx.get(lkji, {k + 1, j, k});
            const Tile& l_col = ctx.get(lkji, {k + 1, i, k});
            check_edge(a, b, "update", t);
            ctx.put(lkji, {k + 1, j, i}, chol::update_tile(a, l_row, l_col));
        },
        depends([&lkji, &bs](const Key& t) {
            const std::int64_t k = t[0], j = t[1], i = t[2];
            return std::vector<ItemRef>{{&bs, {}}, {&lkji, {k, j, i}}, {&lkji, {k + 1, j, k}}, {&lkji, {k + 1, i, k}}};
        }));

    return c;
}

void put_environment(CholeskyGraph& g, const chol::TiledMatrix& a) {
    g.p->put({}, a.p);
    g.b->put({}, a.b);
    for (std::size_t j = 0; j < a.p; ++j)
        for (std::size_t i = 0; i <= j; ++i) g.lkji->put({0, i64(j), i64(i)}, a.at(j, i));
    g.singleton->put({});
}

chol::TiledMatrix collect_factor(const CholeskyGraph& g, std::size_t p, std::size_t b) {
    chol::TiledMatrix l(p, b);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i <= j; ++i) l.at(j, i) = g.lkji->get({i64(i + 1), i64(j), i64(i)});
    return l;
}

CncRun run_cnc_cholesky(const chol::DenseMatrix& a, std::size_t b, bool tuned, const RunOptions& options) {
    if (b == 0 || a.n % b != 0)
        throw std::invalid_argument("block size " + std::to_string(b) + " does not divide N=" + std::to_string(a.n));
    auto g = build_cholesky_cnc(tuned);
    const auto tiles = chol::decompose(a, b);
    put_environment(g, tiles);
    CncRun out;
    out.metrics = run_cnc(*g.graph, options);
    out.l = collect_factor(g, tiles.p, b);
    return out;
}

}  // namespace coord::cnc
