#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coord/snet/graph.hpp"
#include "coord/snet/record.hpp"

namespace coord::snet {

struct RunOptions {
    std::size_t workers = 1;
    // Bound on every box/feedback input queue. Feedback back edges are exempt.
    std::size_t stream_capacity = 4096;
    std::size_t max_star_depth = 1'000'000;
    // Per feedback node, summed over the run.
    std::size_t max_recirculations = 1'000'000;
    // Turn a non-empty deadlock report (records left parked) into a RunError.
    bool fail_on_parked = false;
    // When set, every box activation is logged with the value of this tag.
    std::optional<std::string> timeline_tag;
    bool pin_workers = false;
};

struct NodeMetrics {
    NodeId node = 0;
    std::string label;
    std::string path;
    NodeKind kind = NodeKind::Box;
    std::uint64_t activations = 0;
    std::uint64_t parked = 0;          // records held at quiescence
    std::uint64_t busy_ns = 0;         // time inside box kernels
    std::uint64_t instances = 0;       // star cells / split branches created
    std::uint64_t recirculations = 0;  // feedback only
    std::uint64_t completions = 0;     // outputs matching a box's completion pattern
    std::uint64_t fired = 0;           // synchrocell merges
    std::uint64_t max_queue = 0;       // deepest input queue seen on any instance
};

struct WorkerMetrics {
    std::uint64_t tasks = 0;
    std::uint64_t busy_ns = 0;
    std::uint64_t idle_ns = 0;
};

// Record bookkeeping checked at quiescence:
//   injected + box_produced + sync_emitted
//     == exited + dropped + parked + box_consumed + sync_merged_in
struct ConservationLedger {
    std::uint64_t injected = 0;
    std::uint64_t box_consumed = 0;
    std::uint64_t box_produced = 0;
    std::uint64_t sync_merged_in = 0;
    std::uint64_t sync_emitted = 0;
    std::uint64_t parked = 0;
    std::uint64_t exited = 0;
    std::uint64_t dropped = 0;

    bool balanced() const noexcept {
        return injected + box_produced + sync_emitted == exited + dropped + parked + box_consumed + sync_merged_in;
    }
};

struct RunMetrics {
    std::vector<NodeMetrics> nodes;
    std::vector<WorkerMetrics> workers;
    ConservationLedger ledger;
    std::uint64_t peak_live = 0;
    std::uint64_t barrier_waits = 0;
    std::uint64_t wall_ns = 0;

    std::uint64_t activations_of(const std::string& label) const;
    std::uint64_t total_box_activations() const;
    const NodeMetrics* find(const std::string& label) const;

    // {"nodes":[{"node":..,"kind":..,"activations":..,"parked":..,"busy_ns":..,...}],
    //  "workers":[{"worker":..,"busy_ns":..,"idle_ns":..}], "ledger":{...}, ...}
    std::string to_json() const;
};

struct RunEvent {
    std::string kind;  // "routing"
    std::string node;
    std::string message;
    std::string record;
};

struct ParkedRecord {
    std::string node;
    std::string path;
    std::size_t slot = 0;
    std::string record;
};

struct TimelineSpan {
    NodeId node = 0;
    std::optional<Tag> tag;
    std::uint64_t start_ns = 0;
    std::uint64_t end_ns = 0;
};

struct RunResult {
    std::vector<Record> outputs;
    RunMetrics metrics;
    std::vector<RunEvent> events;
    // Deadlock report: records still parked in synchrocells at quiescence.
    std::vector<ParkedRecord> parked;
    std::vector<TimelineSpan> timeline;
};

class RunError : public std::runtime_error {
public:
    enum class Kind { Divergence, Contract, Kernel, Deadlock };

    RunError(Kind kind, std::string node, const std::string& message,
             std::vector<ParkedRecord> parked = {});

    Kind kind() const noexcept { return kind_; }
    const std::string& node() const noexcept { return node_; }
    // The message without the node prefix.
    const std::string& detail() const noexcept { return detail_; }
    const std::vector<ParkedRecord>& parked() const noexcept { return parked_; }

private:
    Kind kind_;
    std::string node_;
    std::string detail_;
    std::vector<ParkedRecord> parked_;
};

// Runs the graph on `options.workers` threads until quiescence: no node is
// runnable and every internal stream is empty. Output order is unspecified.
RunResult run(const NetworkGraph& graph, std::vector<Record> inputs, const RunOptions& options = {});

// One box activation checked against the declared signature (input must
// match; every output must match a declared output pattern).
std::vector<Record> activate_box(const BoxExpr& box, Record input);

}  // namespace coord::snet
