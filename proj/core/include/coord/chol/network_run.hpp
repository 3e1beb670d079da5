#pragma once

#include "coord/chol/tile.hpp"
#include "coord/snet/record.hpp"
#include "coord/snet/runtime.hpp"

namespace coord::chol {

struct NetworkRun {
    TiledMatrix l;
    // Outputs are consumed into `l`; metrics, events and timeline stay.
    snet::RunResult result;
};

// {M,<B>}: the dense input handed to a Cholesky network.
snet::Record matrix_record(const DenseMatrix& a, std::size_t b);

// Pulls the dense matrix and block size back out, checking that b divides N.
std::pair<std::shared_ptr<const DenseMatrix>, std::size_t> unpack_matrix_record(const snet::Record& r);

}  // namespace coord::chol
