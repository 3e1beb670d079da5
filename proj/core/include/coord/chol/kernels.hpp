#pragma once

#include <cstdint>

#include "coord/chol/tile.hpp"

namespace coord::chol {

// L with L·Lᵀ = a. Only the lower triangle of `a` is read; the strict upper
// triangle of the result is exactly zero.
Tile potrf_tile(const Tile& a);

// L_jk with L_jk·L_kkᵀ = a_jk, by forward substitution along each row.
Tile trsm_tile(const Tile& l_kk, const Tile& a_jk);

// a_ij − l_ik·l_jkᵀ over the full tile.
Tile update_tile(const Tile& a_ij, const Tile& l_ik, const Tile& l_jk);

// for k: L_kk = potrf(A_kk); L_ik = trsm(L_kk, A_ik) for i > k;
//        A_ij -= L_ik·L_jkᵀ for k < j <= i.
// Numeric errors name the failing step as (k,i,j).
TiledMatrix serial_tiled_cholesky(const TiledMatrix& a);

// Unblocked lower factor, row by row.
DenseMatrix dense_cholesky(const DenseMatrix& a);

TiledMatrix decompose(const DenseMatrix& a, std::size_t b);
DenseMatrix assemble(const TiledMatrix& m);

// M·Mᵀ + N·I with M uniform in [0,1).
DenseMatrix gen_spd(std::size_t n, std::uint64_t seed);

// ‖A − L·Lᵀ‖_F / ‖A‖_F, L lower triangular.
double residual(const DenseMatrix& a, const DenseMatrix& l);

}  // namespace coord::chol
