#pragma once

#include <cstddef>
#include <vector>

#include "coord/chol/network_run.hpp"
#include "coord/snet/network.hpp"

namespace coord::chol {

// Message roles. Tags: <k> on all compute messages, <j> on Tri_*, <i>,<j> on
// Sym_* and Out; compute messages also carry <P> so the compute feedback loop
// can tell them from finished Out tiles.
enum class Role { FacAkk, TriAjk, TriLkk, SymAij, SymLik, SymLjk, Out };

const char* role_name(Role r) noexcept;

struct Message {
    Role role;
    std::size_t k;
    std::size_t i;  // row; unused for Fac_Akk and Tri_*
    std::size_t j;

    friend bool operator==(const Message&, const Message&) = default;
};

// Where the solved tile L_mk goes: Out(m,k), then Sym_Lik(k, m, j) for
// k < j <= m and Sym_Ljk(k, i, m) for m <= i < p.
std::vector<Message> emit_successors(std::size_t k, std::size_t m, std::size_t p);

// Message carrying the updated tile (i,j) into step k+1.
Message update_successor(std::size_t k, std::size_t i, std::size_t j);

// start .. ((IF!<k> | TS | SRU) \ {<P>} | pass{Result}) .. finalize
//   TS  = (([|{Tri_Ajk},{Tri_Lkk}|] .. trsm)!<j>)!<k>
//   SRU = ((([|{Sym_Aij},{Sym_Lik},{Sym_Ljk}|] .. update)!<j>)!<i>)!<k>
//   finalize = ([|{Result},{Out}|] * {Result,Out} .. merge) \ {Result}
// Output: {L}.
snet::Net build_dataflow_network();

NetworkRun run_dataflow(const DenseMatrix& a, std::size_t b, snet::RunOptions options = {});

}  // namespace coord::chol
