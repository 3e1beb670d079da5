#include "coord/chol/barrier_network.hpp"

#include "coord/chol/kernels.hpp"
#include "coord/snet/graph.hpp"

namespace coord::chol {

using snet::BoxSignature;
using snet::Net;
using snet::Payload;
using snet::Record;
using snet::Tag;
using snet::TypePattern;

namespace {

// Accumulator carried by a stage's state record.
struct StageAcc {
    TileGrid a;
    TileGrid l;
};

// One finished work item, or the base tick (tile == nullptr).
struct StagePart {
    std::size_t i = 0;
    std::size_t j = 0;
    TilePtr tile;
};

const TypePattern kIter({"A", "L"}, {"k", "P", "B"});

std::size_t idx(Tag t) { return static_cast<std::size_t>(t); }

Record iteration(Payload a, Payload l, Tag k, Tag p, Tag b) {
    Record r;
    r.set_field("A", std::move(a)).set_field("L", std::move(l));
    r.set_tag("k", k).set_tag("P", p).set_tag("B", b);
    return r;
}

Record tile_field(Record r, const std::string& name, TilePtr t) {
    r.set_field(name, Payload::wrap<Tile>(std::move(t)));
    return r;
}

Net decompose_box() {
    return snet::box("decompose", BoxSignature(TypePattern({"M"}, {"B"}), {kIter}), [](Record r) {
        auto [m, b] = unpack_matrix_record(r);
        TileGrid a = TileGrid::share(decompose(*m, b));
        TileGrid l(a.p, b);
        const auto p = static_cast<Tag>(a.p);
        return std::vector<Record>{iteration(Payload::make<TileGrid>(std::move(a)),
                                             Payload::make<TileGrid>(std::move(l)), 0, p, static_cast<Tag>(b))};
    });
}

Net guard_box() {
    return snet::box("guard", BoxSignature(kIter, {kIter, TypePattern({"L"}, {"P", "B"})}), [](Record r) {
        if (r.tag("k") < r.tag("P")) return std::vector<Record>{std::move(r)};
        Record done;
        done.set_field("L", r.field("L")).set_tag("P", r.tag("P")).set_tag("B", r.tag("B"));
        return std::vector<Record>{std::move(done)};
    });
}

Net potrf_box() {
    return snet::box("potrf", BoxSignature(kIter, {kIter}), [](Record r) {
        const std::size_t k = idx(r.tag("k"));
        const auto& a = *r.get<TileGrid>("A");
        auto l = std::move(r.take_field("L")).detach<TileGrid>();
        l->at(k, k) = std::make_shared<const Tile>(potrf_tile(*a.at(k, k)));
        r.set_field("L", Payload::wrap<TileGrid>(std::move(l)));
        return std::vector<Record>{std::move(r)};
    });
}

// The fanout, pass-through and collector shared by both stages.
struct StageNames {
    std::string stage;  // "trsm" / "update"
    std::string sum;
    std::string part;
};

Record state_record(const StageNames& n, const Record& iter, std::size_t parts) {
    Record s;
    s.set_field(n.sum, Payload::make<StageAcc>(StageAcc{*iter.get<TileGrid>("A"), *iter.get<TileGrid>("L")}));
    s.set_tag("k", iter.tag("k")).set_tag("P", iter.tag("P")).set_tag("B", iter.tag("B"));
    s.set_tag("pending", static_cast<Tag>(parts + 1));
    return s;
}

Record base_part(const StageNames& n) {
    Record r;
    r.set_field(n.part, Payload::make<StagePart>({}));
    return r;
}

const TypePattern& state_pattern_for(const StageNames& n) {
    static const TypePattern trsm({"TSum"}, {"k", "P", "B", "pending"});
    static const TypePattern update({"USum"}, {"k", "P", "B", "pending"});
    return n.sum == "TSum" ? trsm : update;
}

// (next_k) is k for the trsm stage and k+1 after the updates.
Net collector(const StageNames& n, std::function<void(StageAcc&, const StagePart&)> apply, Tag advance) {
    const TypePattern state = state_pattern_for(n);
    TypePattern merged({n.sum, n.part}, {"k", "P", "B", "pending"});
    auto tally = snet::box(
        n.stage + "_tally", BoxSignature(merged, {state, kIter}),
        [n, apply, advance](Record r) {
            auto acc = std::move(r.take_field(n.sum)).detach<StageAcc>();
            const auto& part = *r.get<StagePart>(n.part);
            if (part.tile) apply(*acc, part);
            const Tag pending = r.tag("pending") - 1;
            if (pending > 0) {
                Record s;
                s.set_field(n.sum, Payload::wrap<StageAcc>(std::move(acc)));
                s.set_tag("k", r.tag("k")).set_tag("P", r.tag("P")).set_tag("B", r.tag("B"));
                s.set_tag("pending", pending);
                return std::vector<Record>{std::move(s)};
            }
            return std::vector<Record>{iteration(Payload::make<TileGrid>(std::move(acc->a)),
                                                 Payload::make<TileGrid>(std::move(acc->l)), r.tag("k") + advance,
                                                 r.tag("P"), r.tag("B"))};
        },
        snet::BoxOptions{.completion = TypePattern{"A", "L"}});
    auto join = snet::star(snet::sync({TypePattern{n.sum}, TypePattern{n.part}}), TypePattern{n.sum, n.part});
    return snet::feedback(snet::serial(join, tally), TypePattern{n.sum});
}

Net trsm_stage() {
    const StageNames n{"trsm", "TSum", "TPart"};
    const TypePattern work({"TRow", "TLkk"}, {"k", "j"});
    auto fanout = snet::box("trsm_fanout", BoxSignature(kIter, {state_pattern_for(n), TypePattern{n.part}, work}),
                            [n](Record r) {
                                const std::size_t k = idx(r.tag("k")), p = idx(r.tag("P"));
                                const auto& a = *r.get<TileGrid>("A");
                                const auto& l = *r.get<TileGrid>("L");
                                std::vector<Record> out;
                                out.reserve(p - k + 1);
                                out.push_back(state_record(n, r, p - 1 - k));
                                out.push_back(base_part(n));
                                for (std::size_t i = k + 1; i < p; ++i) {
                                    Record w;
                                    w.set_field("TRow", Payload::wrap<Tile>(a.at(i, k)));
                                    w.set_field("TLkk", Payload::wrap<Tile>(l.at(k, k)));
                                    w.set_tag("k", static_cast<Tag>(k)).set_tag("j", static_cast<Tag>(i));
                                    out.push_back(std::move(w));
                                }
                                return out;
                            });
    auto solve = snet::box("trsm", BoxSignature(work, {TypePattern{n.part}}), [n](Record r) {
        auto tile = std::make_shared<const Tile>(trsm_tile(*r.get<Tile>("TLkk"), *r.get<Tile>("TRow")));
        Record part;
        part.set_field(n.part, Payload::make<StagePart>(StagePart{idx(r.tag("j")), idx(r.tag("k")), std::move(tile)}));
        return std::vector<Record>{std::move(part)};
    });
    auto apply = [](StageAcc& acc, const StagePart& part) { acc.l.at(part.i, part.j) = part.tile; };
    return snet::serial({fanout, snet::parallel({snet::split(solve, "j"), snet::identity("trsm_pass")}),
                         collector(n, apply, 0)});
}

Net update_stage() {
    const StageNames n{"update", "USum", "UPart"};
    const TypePattern work({"UAij", "ULik", "ULjk"}, {"k", "i", "j"});
    auto fanout = snet::box("update_fanout", BoxSignature(kIter, {state_pattern_for(n), TypePattern{n.part}, work}),
                            [n](Record r) {
                                const std::size_t k = idx(r.tag("k")), p = idx(r.tag("P"));
                                const auto& a = *r.get<TileGrid>("A");
                                const auto& l = *r.get<TileGrid>("L");
                                const std::size_t rest = p - 1 - k;
                                std::vector<Record> out;
                                out.reserve(rest * (rest + 1) / 2 + 2);
                                out.push_back(state_record(n, r, rest * (rest + 1) / 2));
                                out.push_back(base_part(n));
                                for (std::size_t j = k + 1; j < p; ++j) {
                                    for (std::size_t i = j; i < p; ++i) {
                                        Record w;
                                        w.set_field("UAij", Payload::wrap<Tile>(a.at(i, j)));
                                        w.set_field("ULik", Payload::wrap<Tile>(l.at(i, k)));
                                        w.set_field("ULjk", Payload::wrap<Tile>(l.at(j, k)));
                                        w.set_tag("k", static_cast<Tag>(k))
                                            .set_tag("i", static_cast<Tag>(i))
                                            .set_tag("j", static_cast<Tag>(j));
                                        out.push_back(std::move(w));
                                    }
                                }
                                return out;
                            });
    auto update = snet::box("update", BoxSignature(work, {TypePattern{n.part}}), [n](Record r) {
        auto tile = std::make_shared<const Tile>(
            update_tile(*r.get<Tile>("UAij"), *r.get<Tile>("ULik"), *r.get<Tile>("ULjk")));
        Record part;
        part.set_field(n.part, Payload::make<StagePart>(StagePart{idx(r.tag("i")), idx(r.tag("j")), std::move(tile)}));
        return std::vector<Record>{std::move(part)};
    });
    auto apply = [](StageAcc& acc, const StagePart& part) { acc.a.at(part.i, part.j) = part.tile; };
    return snet::serial({fanout,
                         snet::parallel({snet::split(snet::split(update, "j"), "i"), snet::identity("update_pass")}),
                         collector(n, apply, 1)});
}

Net finalize_box() {
    return snet::box("finalize", BoxSignature(TypePattern({"L"}, {"P", "B"}), {TypePattern{"L"}}), [](Record r) {
        Record out;
        out.set_field("L", r.field("L"));
        return std::vector<Record>{std::move(out)};
    });
}

}  // namespace

Net build_barrier_network() {
    auto body = snet::serial({potrf_box(), trsm_stage(), update_stage()});
    auto loop = snet::feedback(snet::serial(guard_box(), snet::parallel({body, snet::identity("exit", TypePattern{"L"})})),
                               TypePattern{"A"});
    return snet::serial({decompose_box(), loop, finalize_box()});
}

NetworkRun run_barrier(const DenseMatrix& a, std::size_t b, snet::RunOptions options) {
    if (b == 0 || a.n % b != 0) {
        throw NumericError("block size " + std::to_string(b) + " does not divide N=" + std::to_string(a.n));
    }
    const std::size_t p = a.n / b;
    options.max_recirculations = std::max<std::size_t>(options.max_recirculations, 4 * p * p * p + 16);
    auto graph = snet::compile(build_barrier_network());
    NetworkRun out;
    out.result = snet::run(graph, {matrix_record(a, b)}, options);
    if (out.result.outputs.size() != 1 || !out.result.outputs[0].has_field("L")) {
        throw snet::RunError(snet::RunError::Kind::Deadlock, "",
                             "barrier network produced " + std::to_string(out.result.outputs.size()) +
                                 " output records instead of one {L}",
                             out.result.parked);
    }
    out.l = out.result.outputs[0].get<TileGrid>("L")->materialize();
    out.result.outputs.clear();
    return out;
}

}  // namespace coord::chol
