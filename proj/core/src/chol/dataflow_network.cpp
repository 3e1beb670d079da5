#include "coord/chol/dataflow_network.hpp"

#include "coord/chol/kernels.hpp"
#include "coord/snet/graph.hpp"

namespace coord::chol {

using snet::BoxSignature;
using snet::Net;
using snet::Payload;
using snet::Record;
using snet::Tag;
using snet::TypePattern;

const char* role_name(Role r) noexcept {
    switch (r) {
        case Role::FacAkk: return "Fac_Akk";
        case Role::TriAjk: return "Tri_Ajk";
        case Role::TriLkk: return "Tri_Lkk";
        case Role::SymAij: return "Sym_Aij";
        case Role::SymLik: return "Sym_Lik";
        case Role::SymLjk: return "Sym_Ljk";
        case Role::Out: return "Out";
    }
    return "?";
}

std::vector<Message> emit_successors(std::size_t k, std::size_t m, std::size_t p) {
    std::vector<Message> out;
    out.reserve(p - k + 1);
    out.push_back({Role::Out, k, m, k});
    for (std::size_t j = k + 1; j <= m; ++j) out.push_back({Role::SymLik, k, m, j});
    for (std::size_t i = m; i < p; ++i) out.push_back({Role::SymLjk, k, i, m});
    return out;
}

Message update_successor(std::size_t k, std::size_t i, std::size_t j) {
    if (i == k + 1 && j == k + 1) return {Role::FacAkk, k + 1, k + 1, k + 1};
    if (j == k + 1) return {Role::TriAjk, k + 1, i, i};
    return {Role::SymAij, k + 1, i, j};
}

namespace {

struct ResultAcc {
    TileGrid l;
};

Tag tag(std::size_t v) { return static_cast<Tag>(v); }
std::size_t idx(Tag t) { return static_cast<std::size_t>(t); }

TypePattern pattern(Role r) {
    switch (r) {
        case Role::FacAkk: return TypePattern({"Fac_Akk"}, {"k", "P"});
        case Role::TriAjk: return TypePattern({"Tri_Ajk"}, {"k", "j", "P"});
        case Role::TriLkk: return TypePattern({"Tri_Lkk"}, {"k", "j", "P"});
        case Role::SymAij: return TypePattern({"Sym_Aij"}, {"k", "i", "j", "P"});
        case Role::SymLik: return TypePattern({"Sym_Lik"}, {"k", "i", "j", "P"});
        case Role::SymLjk: return TypePattern({"Sym_Ljk"}, {"k", "i", "j", "P"});
        case Role::Out: return TypePattern({"Out"}, {"i", "j"});
    }
    return {};
}

// Join slots leave <P> out: it is the same on every message.
TypePattern slot(Role r) {
    TypePattern t = pattern(r);
    std::erase(t.tags, "P");
    return t;
}

// Tri_Ajk and Tri_Lkk carry the row in <j>; Out and Sym_* use <i>,<j>.
Record message(const Message& m, TilePtr tile, std::size_t p) {
    Record r;
    r.set_field(role_name(m.role), Payload::wrap<Tile>(std::move(tile)));
    switch (m.role) {
        case Role::FacAkk: r.set_tag("k", tag(m.k)); break;
        case Role::TriAjk:
        case Role::TriLkk: r.set_tag("k", tag(m.k)).set_tag("j", tag(m.j)); break;
        case Role::SymAij:
        case Role::SymLik:
        case Role::SymLjk: r.set_tag("k", tag(m.k)).set_tag("i", tag(m.i)).set_tag("j", tag(m.j)); break;
        case Role::Out: r.set_tag("i", tag(m.i)).set_tag("j", tag(m.j)); break;
    }
    if (m.role != Role::Out) r.set_tag("P", tag(p));
    return r;
}

Net start_box() {
    const TypePattern result({"Result"}, {"X"});
    return snet::box(
        "start",
        BoxSignature(TypePattern({"M"}, {"B"}),
                     {result, pattern(Role::FacAkk), pattern(Role::TriAjk), pattern(Role::SymAij)}),
        [](Record in) {
            auto [m, b] = unpack_matrix_record(in);
            TiledMatrix a = decompose(*m, b);
            const std::size_t p = a.p;
            std::vector<Record> out;
            out.reserve(p * (p + 1) / 2 + 1);
            Record res;
            res.set_field("Result", Payload::make<ResultAcc>(ResultAcc{TileGrid(p, b)}));
            res.set_tag("X", tag(p * (p + 1) / 2));
            out.push_back(std::move(res));
            for (std::size_t j = 0; j < p; ++j) {
                for (std::size_t i = j; i < p; ++i) {
                    auto tile = std::make_shared<const Tile>(std::move(a.at(i, j)));
                    Message msg = i == 0 ? Message{Role::FacAkk, 0, 0, 0}
                                  : j == 0 ? Message{Role::TriAjk, 0, i, i}
                                           : Message{Role::SymAij, 0, i, j};
                    out.push_back(message(msg, std::move(tile), p));
                }
            }
            return out;
        });
}

Net factor() {
    auto potrf = snet::box("potrf", BoxSignature(pattern(Role::FacAkk), {pattern(Role::Out), pattern(Role::TriLkk)}),
                           [](Record r) {
                               const std::size_t k = idx(r.tag("k")), p = idx(r.tag("P"));
                               auto l = std::make_shared<const Tile>(potrf_tile(*r.get<Tile>("Fac_Akk")));
                               std::vector<Record> out;
                               out.reserve(p - k);
                               out.push_back(message({Role::Out, k, k, k}, l, p));
                               for (std::size_t j = k + 1; j < p; ++j) out.push_back(message({Role::TriLkk, k, j, j}, l, p));
                               return out;
                           });
    return snet::split(potrf, "k");
}

Net triangular_solve() {
    TypePattern in({"Tri_Ajk", "Tri_Lkk"}, {"k", "j", "P"});
    auto solve = snet::box("trsm", BoxSignature(in, {pattern(Role::Out), pattern(Role::SymLik), pattern(Role::SymLjk)}),
                           [](Record r) {
                               const std::size_t k = idx(r.tag("k")), m = idx(r.tag("j")), p = idx(r.tag("P"));
                               auto l = std::make_shared<const Tile>(
                                   trsm_tile(*r.get<Tile>("Tri_Lkk"), *r.get<Tile>("Tri_Ajk")));
                               std::vector<Record> out;
                               for (const auto& msg : emit_successors(k, m, p)) out.push_back(message(msg, l, p));
                               return out;
                           });
    auto join = snet::sync({slot(Role::TriAjk), slot(Role::TriLkk)});
    return snet::split(snet::split(snet::serial(join, solve), "j"), "k");
}

Net symmetric_rank_update() {
    TypePattern in({"Sym_Aij", "Sym_Lik", "Sym_Ljk"}, {"k", "i", "j", "P"});
    auto update = snet::box(
        "update", BoxSignature(in, {pattern(Role::FacAkk), pattern(Role::TriAjk), pattern(Role::SymAij)}), [](Record r) {
            const std::size_t k = idx(r.tag("k")), i = idx(r.tag("i")), j = idx(r.tag("j")), p = idx(r.tag("P"));
            auto t = std::make_shared<const Tile>(
                update_tile(*r.get<Tile>("Sym_Aij"), *r.get<Tile>("Sym_Lik"), *r.get<Tile>("Sym_Ljk")));
            return std::vector<Record>{message(update_successor(k, i, j), std::move(t), p)};
        });
    auto join = snet::sync({slot(Role::SymAij), slot(Role::SymLik), slot(Role::SymLjk)});
    return snet::split(snet::split(snet::split(snet::serial(join, update), "j"), "i"), "k");
}

Net finalize() {
    TypePattern state({"Result"}, {"X"});
    auto merge = snet::box("merge", BoxSignature(TypePattern({"Result", "Out"}, {"X", "i", "j"}), {state, TypePattern{"L"}}),
                           [](Record r) {
                               auto acc = std::move(r.take_field("Result")).detach<ResultAcc>();
                               acc->l.at(idx(r.tag("i")), idx(r.tag("j"))) = r.get<Tile>("Out");
                               const Tag x = r.tag("X") - 1;
                               Record out;
                               if (x > 0) {
                                   out.set_field("Result", Payload::wrap<ResultAcc>(std::move(acc)));
                                   out.set_tag("X", x);
                               } else {
                                   out.set_field("L", Payload::make<TileGrid>(std::move(acc->l)));
                               }
                               return std::vector<Record>{std::move(out)};
                           });
    auto join = snet::star(snet::sync({TypePattern{"Result"}, TypePattern{"Out"}}), TypePattern{"Result", "Out"});
    return snet::feedback(snet::serial(join, merge), TypePattern{"Result"});
}

}  // namespace

Net build_dataflow_network() {
    auto compute = snet::feedback(snet::parallel({factor(), triangular_solve(), symmetric_rank_update()}),
                                  snet::tags_pattern({"P"}));
    auto body = snet::parallel({compute, snet::identity("result_pass", TypePattern{"Result"})});
    return snet::serial({start_box(), body, finalize()});
}

NetworkRun run_dataflow(const DenseMatrix& a, std::size_t b, snet::RunOptions options) {
    if (b == 0 || a.n % b != 0) {
        throw NumericError("block size " + std::to_string(b) + " does not divide N=" + std::to_string(a.n));
    }
    const std::size_t p = a.n / b;
    options.max_recirculations = std::max<std::size_t>(options.max_recirculations, 4 * p * p * p + 16);
    options.max_star_depth = std::max<std::size_t>(options.max_star_depth, p * p + 16);
    auto graph = snet::compile(build_dataflow_network());
    NetworkRun out;
    out.result = snet::run(graph, {matrix_record(a, b)}, options);
    if (out.result.outputs.size() != 1 || !out.result.outputs[0].has_field("L")) {
        throw snet::RunError(snet::RunError::Kind::Deadlock, "",
                             "dataflow network produced " + std::to_string(out.result.outputs.size()) +
                                 " output records instead of one {L}",
                             out.result.parked);
    }
    out.l = out.result.outputs[0].get<TileGrid>("L")->materialize();
    out.result.outputs.clear();
    return out;
}

}  // namespace coord::chol
