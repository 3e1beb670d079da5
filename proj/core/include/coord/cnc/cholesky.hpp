#pragma once

#include <cstddef>
#include <memory>

#include "coord/chol/tile.hpp"
#include "coord/cnc/graph.hpp"

namespace coord::cnc {

// Tiled Cholesky as a CnC graph. Lkji(k, j, i) is tile (row j, column i) as
// it stands before step k; the factor tile L_ji is Lkji(i+1, j, i).
//
//   singleton -> k_compute   : gets p, puts k_tags (k) for k < p
//   k_tags    -> kj_compute  : gets p, puts kj_tags (k,j) for k < j < p
//             -> potrf       : Lkji(k,k,k) -> Lkji(k+1,k,k)
//   kj_tags   -> kji_compute : puts kji_tags (k,j,i) for k < i <= j
//             -> trsm        : Lkji(k,j,k), Lkji(k+1,k,k) -> Lkji(k+1,j,k)
//   kji_tags  -> update      : Lkji(k,j,i), Lkji(k+1,j,k), Lkji(k+1,i,k) -> Lkji(k+1,j,i)
//
// Kernel steps also get b. The tuned graph attaches depends functions listing
// exactly these keys.
struct CholeskyGraph {
    std::unique_ptr<Graph> graph;
    ItemCollection<chol::Tile>* lkji = nullptr;
    ItemCollection<std::size_t>* b = nullptr;
    ItemCollection<std::size_t>* p = nullptr;
    TagCollection* singleton = nullptr;
    TagCollection* k_tags = nullptr;
    TagCollection* kj_tags = nullptr;
    TagCollection* kji_tags = nullptr;
};

CholeskyGraph build_cholesky_cnc(bool tuned);

// Environment puts for `a` split into b×b tiles.
void put_environment(CholeskyGraph& g, const chol::TiledMatrix& a);

// Environment gets: the p(p+1)/2 finished factor tiles.
chol::TiledMatrix collect_factor(const CholeskyGraph& g, std::size_t p, std::size_t b);

struct CncRun {
    chol::TiledMatrix l;
    CncMetrics metrics;
};

CncRun run_cnc_cholesky(const chol::DenseMatrix& a, std::size_t b, bool tuned, const RunOptions& options = {});

}  // namespace coord::cnc
