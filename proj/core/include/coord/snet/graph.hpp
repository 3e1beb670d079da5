#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "coord/snet/network.hpp"

namespace coord::snet {

using StreamId = std::size_t;
using NodeId = std::size_t;
inline constexpr std::size_t kNoSubgraph = std::numeric_limits<std::size_t>::max();
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class NodeKind { Box, Sync, Router, Star, Split, Feedback };

const char* to_string(NodeKind kind) noexcept;

// One node of a compiled graph. Every node reads exactly one stream.
struct GraphNode {
    NodeId id = 0;
    NodeKind kind = NodeKind::Box;
    std::string label;
    // Position of the originating subexpression, e.g. "root/serial.1/split<k>".
    std::string path;
    StreamId input = 0;
    // Box/Sync/Star/Split: {out}. Router: one entry per branch.
    // Feedback: {back, out}.
    std::vector<StreamId> outputs;

    const BoxExpr* box = nullptr;             // Box
    std::vector<TypePattern> slots;           // Sync
    bool repeating = false;                   // Sync
    std::vector<std::vector<TypePattern>> branches;  // Router: input variants per branch
    TypePattern pattern;                      // Star exit, Feedback back pattern
    std::string index_tag;                    // Split
    std::size_t body = kNoSubgraph;           // Star/Split: template instantiated at run time
    bool fused_sync_chain = false;            // Star over a single non-repeating Sync
};

// A template that the runtime instantiates: the root once, star and split
// bodies lazily per instance/branch.
struct Subgraph {
    std::size_t index = 0;
    std::vector<NodeId> nodes;
    std::vector<StreamId> streams;
    StreamId entry = 0;
    StreamId exit = 0;
};

struct CompileOptions {
    // Run star-over-synchrocell chains as one node that skips spent cells.
    bool fuse_sync_chains = true;
};

class NetworkGraph {
public:
    const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
    const std::vector<Subgraph>& subgraphs() const noexcept { return subgraphs_; }
    const Subgraph& root() const { return subgraphs_.front(); }
    const GraphNode& node(NodeId id) const { return nodes_.at(id); }
    std::size_t stream_count() const noexcept { return stream_count_; }

    // Consumer node of a stream within its subgraph, or kNoNode for an exit stream.
    NodeId consumer(StreamId s) const { return consumer_.at(s); }

    std::size_t count(NodeKind kind) const;
    std::size_t count_completion_nodes() const;

    // Stable line-oriented dump:
    //   subgraph <i> entry=s<a> exit=s<b> streams=<n>
    //   node n<id> <kind> "<label>" in=s<a> out=s<b>[,s<c>] [attrs] path=<path>
    std::string dump() const;

private:
    friend class GraphBuilder;
    friend NetworkGraph compile(const Net& expr, CompileOptions options);
    std::vector<GraphNode> nodes_;
    std::vector<Subgraph> subgraphs_;
    std::vector<NodeId> consumer_;
    std::size_t stream_count_ = 0;
    Net expr_;  // keeps BoxExpr pointers alive
};

class CompileError : public NetworkError {
public:
    CompileError(const std::string& path, const std::string& message)
        : NetworkError(path + ": " + message), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Validates split index tags and parallel routing ambiguity, then lowers the
// expression into a graph of SISO nodes and FIFO streams.
NetworkGraph compile(const Net& expr, CompileOptions options = {});

}  // namespace coord::snet
