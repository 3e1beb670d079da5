#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <span>
#include <vector>

#include "coord/snet/record.hpp"

namespace coord::snet {

// Raised when a star chain or feedback loop exceeds its safety cap.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Partial-match storage of one synchrocell instance.
struct SyncState {
    std::vector<std::optional<Record>> slots;
    bool repeating = false;
    // A non-repeating cell that has fired forwards everything from then on.
    bool spent = false;
    std::uint64_t fired_count = 0;

    SyncState(std::size_t slot_count, bool repeat) : slots(slot_count), repeating(repeat) {}

    std::size_t parked() const noexcept;
    std::uint32_t occupancy_mask() const noexcept;
};

struct SyncStep {
    std::vector<Record> emit;
    bool parked = false;
    // Records absorbed into a merged emission (slot count on a firing, else 0).
    std::size_t merged_in = 0;
};

// A record that fits the lowest-index empty slot whose pattern it matches is
// parked; once every slot is full the merge (slot order, first slot wins on
// collisions) is emitted and the slots are cleared. Anything else passes.
SyncStep step_sync(SyncState& state, std::span<const TypePattern> patterns, Record r);

// Star expansion of a single non-repeating synchrocell, [|...|] * exit.
//
// Each cell fires at most once and then only forwards, so a spent cell is an
// identity stage and can be skipped. Live cells are indexed by occupancy so a
// record finds the first cell that can take it without walking spent ones.
class SyncChain {
public:
    SyncChain(std::vector<TypePattern> slots, TypePattern exit, std::size_t max_depth);

    struct Outcome {
        std::vector<Record> exits;
        std::size_t parked_delta_plus = 0;   // records newly parked
        std::size_t merged_in = 0;           // records absorbed by firings
        std::size_t fired = 0;               // merged records produced
        std::size_t created = 0;             // cells instantiated
    };

    // Throws DivergenceError when the chain would grow past max_depth cells.
    Outcome push(Record r);

    std::size_t instances() const noexcept { return cells_.size(); }
    std::size_t parked() const noexcept;
    std::vector<std::pair<std::size_t, Record>> parked_records() const;

private:
    std::size_t slot_mask_for(const Record& r) const;
    std::optional<std::size_t> first_acceptor(std::uint32_t wanted, std::size_t from) const;
    void index(std::size_t cell);
    void unindex(std::size_t cell);

    std::vector<TypePattern> slots_;
    TypePattern exit_;
    std::size_t max_depth_;
    std::vector<SyncState> cells_;
    // occupancy mask -> live cell indices (ascending)
    std::map<std::uint32_t, std::set<std::size_t>> live_;
};

}  // namespace coord::snet
