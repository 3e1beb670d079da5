#pragma once

#include "coord/chol/network_run.hpp"
#include "coord/snet/network.hpp"

namespace coord::chol {

// decompose .. (guard .. (potrf .. trsm stage .. update stage | exit{L})) \ {A} .. finalize
//
// Each stage is  fanout .. (work!<j> | pass) .. collector  where the collector
// is the stateful idiom  ([|{Sum},{Part}|] * {Sum,Part} .. tally) \ {Sum}.
// The fanout sends the state record, one base part and the work items; the
// state counts down the parts still missing and the tally emits the next
// iteration record once it reaches zero. That emission is the barrier.
//
// Iteration record: {A,L,<k>,<P>,<B>} with A and L as TileGrid payloads.
// Output: {L} holding the finished factor.
snet::Net build_barrier_network();

NetworkRun run_barrier(const DenseMatrix& a, std::size_t b, snet::RunOptions options = {});

}  // namespace coord::chol
