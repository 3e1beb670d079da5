#include "coord/snet/sync_state.hpp"

#include <string>

namespace coord::snet {

std::size_t SyncState::parked() const noexcept {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.has_value() ? 1 : 0;
    return n;
}

std::uint32_t SyncState::occupancy_mask() const noexcept {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) m |= 1u << i;
    }
    return m;
}

SyncStep step_sync(SyncState& state, std::span<const TypePattern> patterns, Record r) {
    SyncStep out;
    if (state.spent) {
        out.emit.push_back(std::move(r));
        return out;
    }
    std::optional<std::size_t> slot;
    for (std::size_t i = 0; i < state.slots.size(); ++i) {
        if (!state.slots[i] && matches(r, patterns[i])) {
            slot = i;
            break;
        }
    }
    if (!slot) {
        out.emit.push_back(std::move(r));
        return out;
    }
    state.slots[*slot] = std::move(r);
    for (const auto& s : state.slots) {
        if (!s) {
            out.parked = true;
            return out;
        }
    }
    Record merged = std::move(*state.slots[0]);
    for (std::size_t i = 1; i < state.slots.size(); ++i) merged = merge_records(merged, *state.slots[i]);
    for (auto& s : state.slots) s.reset();
    state.fired_count += 1;
    if (!state.repeating) state.spent = true;
    out.merged_in = state.slots.size();
    out.emit.push_back(std::move(merged));
    return out;
}

SyncChain::SyncChain(std::vector<TypePattern> slots, TypePattern exit, std::size_t max_depth)
    : slots_(std::move(slots)), exit_(std::move(exit)), max_depth_(max_depth) {
    if (slots_.size() > 31) throw std::invalid_argument("sync chain supports at most 31 slots");
}

std::size_t SyncChain::slot_mask_for(const Record& r) const {
    std::size_t m = 0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (matches(r, slots_[i])) m |= std::size_t{1} << i;
    }
    return m;
}

std::optional<std::size_t> SyncChain::first_acceptor(std::uint32_t wanted, std::size_t from) const {
    std::optional<std::size_t> best;
    for (const auto& [mask, cells] : live_) {
        // a cell accepts when one of the wanted slots is still empty
        if ((~mask & wanted) == 0) continue;
        auto it = cells.lower_bound(from);
        if (it != cells.end() && (!best || *it < *best)) best = *it;
    }
    return best;
}

void SyncChain::index(std::size_t cell) {
    live_[cells_[cell].occupancy_mask()].insert(cell);
}

void SyncChain::unindex(std::size_t cell) {
    auto it = live_.find(cells_[cell].occupancy_mask());
    if (it == live_.end()) return;
    it->second.erase(cell);
    if (it->second.empty()) live_.erase(it);
}

SyncChain::Outcome SyncChain::push(Record r) {
    Outcome out;
    std::size_t from = 0;
    for (;;) {
        if (matches(r, exit_)) {
            out.exits.push_back(std::move(r));
            return out;
        }
        const auto wanted = static_cast<std::uint32_t>(slot_mask_for(r));
        if (wanted == 0) {
            // passes every cell unchanged and never reaches the exit pattern
            throw DivergenceError("star over synchrocell: record " + r.describe() +
                                  " matches neither the exit pattern nor any slot");
        }
        std::optional<std::size_t> cell = first_acceptor(wanted, from);
        if (!cell) {
            if (cells_.size() >= max_depth_) {
                throw DivergenceError("star depth limit of " + std::to_string(max_depth_) + " instances exceeded");
            }
            cells_.emplace_back(slots_.size(), false);
            cell = cells_.size() - 1;
            out.created += 1;
            index(*cell);
        }
        unindex(*cell);
        SyncStep step = step_sync(cells_[*cell], slots_, std::move(r));
        if (step.parked) {
            index(*cell);
            out.parked_delta_plus += 1;
            return out;
        }
        // fired: the cell is spent and drops out of the index
        out.merged_in += step.merged_in;
        out.fired += 1;
        r = std::move(step.emit.front());
        from = *cell + 1;
    }
}

std::size_t SyncChain::parked() const noexcept {
    std::size_t n = 0;
    for (const auto& c : cells_) n += c.parked();
    return n;
}

std::vector<std::pair<std::size_t, Record>> SyncChain::parked_records() const {
    std::vector<std::pair<std::size_t, Record>> out;
    for (const auto& c : cells_) {
        for (std::size_t i = 0; i < c.slots.size(); ++i) {
            if (c.slots[i]) out.emplace_back(i, *c.slots[i]);
        }
    }
    return out;
}

}  // namespace coord::snet
