#include "coord/snet/graph.hpp"

#include <algorithm>
#include <sstream>

namespace coord::snet {

const char* to_string(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::Box: return "box";
        case NodeKind::Sync: return "sync";
        case NodeKind::Router: return "router";
        case NodeKind::Star: return "star";
        case NodeKind::Split: return "split";
        case NodeKind::Feedback: return "feedback";
    }
    return "?";
}

class GraphBuilder {
public:
    GraphBuilder(NetworkGraph& g, CompileOptions options) : g_(g), options_(options) {}

    std::size_t new_subgraph() {
        Subgraph sg;
        sg.index = g_.subgraphs_.size();
        g_.subgraphs_.push_back(sg);
        return sg.index;
    }

    StreamId new_stream(std::size_t sg) {
        StreamId s = g_.stream_count_++;
        g_.consumer_.push_back(kNoNode);
        g_.subgraphs_[sg].streams.push_back(s);
        return s;
    }

    NodeId add(std::size_t sg, GraphNode n) {
        n.id = g_.nodes_.size();
        if (g_.consumer_.at(n.input) != kNoNode) {
            throw CompileError(n.path, "stream s" + std::to_string(n.input) + " has two consumers");
        }
        g_.consumer_[n.input] = n.id;
        g_.subgraphs_[sg].nodes.push_back(n.id);
        g_.nodes_.push_back(std::move(n));
        return g_.nodes_.back().id;
    }

    void lower(const NetworkExpr& e, std::size_t sg, StreamId in, StreamId out, const std::string& path) {
        if (const auto* b = e.as<BoxExpr>()) {
            GraphNode n;
            n.kind = NodeKind::Box;
            n.label = b->name;
            n.path = path + "/" + b->name;
            n.input = in;
            n.outputs = {out};
            n.box = b;
            add(sg, std::move(n));
        } else if (const auto* s = e.as<SerialExpr>()) {
            StreamId mid = new_stream(sg);
            lower(*s->left, sg, in, mid, path + "/serial.0");
            lower(*s->right, sg, mid, out, path + "/serial.1");
        } else if (const auto* p = e.as<ParallelExpr>()) {
            GraphNode router;
            router.kind = NodeKind::Router;
            router.label = "parallel";
            router.path = path + "/parallel";
            router.input = in;
            for (const auto& op : p->operands) router.branches.push_back(input_variants(*op));
            check_ambiguity(router.branches, router.path);
            std::vector<StreamId> entries;
            for (std::size_t i = 0; i < p->operands.size(); ++i) entries.push_back(new_stream(sg));
            router.outputs = entries;
            add(sg, std::move(router));
            for (std::size_t i = 0; i < p->operands.size(); ++i) {
                lower(*p->operands[i], sg, entries[i], out, path + "/parallel." + std::to_string(i));
            }
        } else if (const auto* st = e.as<StarExpr>()) {
            GraphNode n;
            n.kind = NodeKind::Star;
            n.label = "star";
            n.path = path + "/star";
            n.input = in;
            n.outputs = {out};
            n.pattern = st->exit;
            const auto* inner_sync = st->operand->as<SyncExpr>();
            n.fused_sync_chain = options_.fuse_sync_chains && inner_sync && !inner_sync->repeating;
            n.body = lower_body(*st->operand, n.path);
            add(sg, std::move(n));
        } else if (const auto* sp = e.as<SplitExpr>()) {
            const std::string here = path + "/split<" + sp->index_tag + ">";
            for (const auto& v : input_variants(*sp->operand)) {
                if (!v.requires_tag(sp->index_tag)) {
                    throw CompileError(here, "operand " + sp->operand->describe() + " accepts " + v.describe() +
                                                 " which does not require tag <" + sp->index_tag + ">");
                }
            }
            GraphNode n;
            n.kind = NodeKind::Split;
            n.label = "split";
            n.path = here;
            n.input = in;
            n.outputs = {out};
            n.index_tag = sp->index_tag;
            n.body = lower_body(*sp->operand, here);
            add(sg, std::move(n));
        } else if (const auto* f = e.as<FeedbackExpr>()) {
            StreamId looped = new_stream(sg);
            lower(*f->operand, sg, in, looped, path + "/feedback");
            GraphNode n;
            n.kind = NodeKind::Feedback;
            n.label = "feedback";
            n.path = path + "/feedback";
            n.input = looped;
            n.outputs = {in, out};
            n.pattern = f->back;
            add(sg, std::move(n));
        } else if (const auto* sy = e.as<SyncExpr>()) {
            GraphNode n;
            n.kind = NodeKind::Sync;
            n.label = sy->repeating ? "sync*" : "sync";
            n.path = path + "/sync";
            n.input = in;
            n.outputs = {out};
            n.slots = sy->slots;
            n.repeating = sy->repeating;
            add(sg, std::move(n));
        }
    }

private:
    std::size_t lower_body(const NetworkExpr& operand, const std::string& path) {
        std::size_t sg = new_subgraph();
        StreamId entry = new_stream(sg);
        StreamId exit = new_stream(sg);
        g_.subgraphs_[sg].entry = entry;
        g_.subgraphs_[sg].exit = exit;
        lower(operand, sg, entry, exit, path);
        return sg;
    }

    static void check_ambiguity(const std::vector<std::vector<TypePattern>>& branches, const std::string& path) {
        for (std::size_t i = 0; i < branches.size(); ++i) {
            for (std::size_t j = i + 1; j < branches.size(); ++j) {
                for (const auto& a : branches[i]) {
                    if (std::find(branches[j].begin(), branches[j].end(), a) != branches[j].end()) {
                        throw CompileError(path, "operands " + std::to_string(i) + " and " + std::to_string(j) +
                                                     " both accept " + a.describe() + "; routing is ambiguous");
                    }
                }
            }
        }
    }

    NetworkGraph& g_;
    CompileOptions options_;
};

NetworkGraph compile(const Net& expr, CompileOptions options) {
    if (!expr) throw NetworkError("compile: null expression");
    NetworkGraph g;
    g.expr_ = expr;
    GraphBuilder b(g, options);
    std::size_t root = b.new_subgraph();
    StreamId entry = b.new_stream(root);
    StreamId exit = b.new_stream(root);
    g.subgraphs_[root].entry = entry;
    g.subgraphs_[root].exit = exit;
    b.lower(*expr, root, entry, exit, "root");
    return g;
}

std::size_t NetworkGraph::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [kind](const GraphNode& n) { return n.kind == kind; }));
}

std::size_t NetworkGraph::count_completion_nodes() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const GraphNode& n) {
        return n.kind == NodeKind::Box && n.box->options.completion.has_value();
    }));
}

namespace {

std::string patterns(const std::vector<TypePattern>& ps) {
    std::string out = "[";
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (i) out += ",";
        out += ps[i].describe();
    }
    return out + "]";
}

}  // namespace

std::string NetworkGraph::dump() const {
    std::ostringstream os;
    for (const auto& sg : subgraphs_) {
        os << "subgraph " << sg.index << " entry=s" << sg.entry << " exit=s" << sg.exit
           << " streams=" << sg.streams.size() << '\n';
        for (NodeId id : sg.nodes) {
            const GraphNode& n = nodes_[id];
            os << "node n" << n.id << ' ' << to_string(n.kind) << " \"" << n.label << "\" in=s" << n.input << " out=";
            for (std::size_t i = 0; i < n.outputs.size(); ++i) {
                if (i) os << ',';
                os << 's' << n.outputs[i];
            }
            switch (n.kind) {
                case NodeKind::Box:
                    os << " sig=" << n.box->signature.input.describe() << "->" << patterns(n.box->signature.outputs);
                    if (n.box->options.pass_through) os << " pass_through";
                    if (n.box->options.completion) os << " completion=" << n.box->options.completion->describe();
                    break;
                case NodeKind::Sync:
                    os << " slots=" << patterns(n.slots) << (n.repeating ? " repeating" : "");
                    break;
                case NodeKind::Router:
                    os << " branches=";
                    for (std::size_t i = 0; i < n.branches.size(); ++i) {
                        if (i) os << '|';
                        os << patterns(n.branches[i]);
                    }
                    break;
                case NodeKind::Star:
                    os << " exit=" << n.pattern.describe() << " body=g" << n.body << (n.fused_sync_chain ? " fused" : "");
                    break;
                case NodeKind::Split:
                    os << " tag=<" << n.index_tag << "> body=g" << n.body;
                    break;
                case NodeKind::Feedback:
                    os << " back=" << n.pattern.describe();
                    break;
            }
            os << " path=" << n.path << '\n';
        }
    }
    return os.str();
}

}  // namespace coord::snet
