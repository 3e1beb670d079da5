#include "coord/chol/kernels.hpp"

#include <cmath>
#include <random>
#include <string>

namespace coord::chol {

namespace {

std::string loc(std::size_t k, std::size_t i, std::size_t j) {
    return "(k=" + std::to_string(k) + ",i=" + std::to_string(i) + ",j=" + std::to_string(j) + ")";
}

void same_edge(const Tile& a, const Tile& b, const char* op) {
    if (a.b != b.b) {
        throw NumericError(std::string(op) + ": tile edges differ (" + std::to_string(a.b) + " vs " +
                           std::to_string(b.b) + ")");
    }
}

}  // namespace

Tile potrf_tile(const Tile& a) {
    const std::size_t b = a.b;
    Tile l(b);
    for (std::size_t j = 0; j < b; ++j) {
        double s = 0.0;
        for (std::size_t m = 0; m < j; ++m) s += l(j, m) * l(j, m);
        const double d = a(j, j) - s;
        if (!(d > 0.0)) {
            throw NumericError("potrf: non-positive pivot " + std::to_string(d) + " at index " + std::to_string(j), j);
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < b; ++i) {
            double t = 0.0;
            for (std::size_t m = 0; m < j; ++m) t += l(i, m) * l(j, m);
            l(i, j) = (a(i, j) - t) / ljj;
        }
    }
    return l;
}

Tile trsm_tile(const Tile& l_kk, const Tile& a_jk) {
    same_edge(l_kk, a_jk, "trsm");
    const std::size_t b = a_jk.b;
    for (std::size_t c = 0; c < b; ++c) {
        if (l_kk(c, c) == 0.0) throw NumericError("trsm: zero diagonal at index " + std::to_string(c), c);
    }
    Tile x(b);
    for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t c = 0; c < b; ++c) {
            double s = 0.0;
            for (std::size_t m = 0; m < c; ++m) s += x(r, m) * l_kk(c, m);
            x(r, c) = (a_jk(r, c) - s) / l_kk(c, c);
        }
    }
    return x;
}

Tile update_tile(const Tile& a_ij, const Tile& l_ik, const Tile& l_jk) {
    same_edge(a_ij, l_ik, "update");
    same_edge(a_ij, l_jk, "update");
    const std::size_t b = a_ij.b;
    Tile out(b);
    for (std::size_t r = 0; r < b; ++r) {
        const double* lr = &l_ik.data[r * b];
        for (std::size_t c = 0; c < b; ++c) {
            const double* lc = &l_jk.data[c * b];
            double s = 0.0;
            for (std::size_t m = 0; m < b; ++m) s += lr[m] * lc[m];
            out(r, c) = a_ij(r, c) - s;
        }
    }
    return out;
}

TiledMatrix serial_tiled_cholesky(const TiledMatrix& a) {
    const std::size_t p = a.p;
    TiledMatrix work = a;
    TiledMatrix l(p, a.b);
    for (std::size_t k = 0; k < p; ++k) {
        try {
            l.at(k, k) = potrf_tile(work.at(k, k));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " in potrf " + loc(k, k, k), e.pivot());
        }
        for (std::size_t i = k + 1; i < p; ++i) {
            try {
                l.at(i, k) = trsm_tile(l.at(k, k), work.at(i, k));
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " in trsm " + loc(k, i, k), e.pivot());
            }
        }
        for (std::size_t j = k + 1; j < p; ++j) {
            for (std::size_t i = j; i < p; ++i) work.at(i, j) = update_tile(work.at(i, j), l.at(i, k), l.at(j, k));
        }
    }
    return l;
}

DenseMatrix dense_cholesky(const DenseMatrix& a) {
    const std::size_t n = a.n;
    DenseMatrix l(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t m = 0; m < j; ++m) s += l(i, m) * l(j, m);
            if (i == j) {
                const double d = a(i, i) - s;
                if (!(d > 0.0)) {
                    throw NumericError("cholesky: non-positive pivot " + std::to_string(d) + " at index " +
                                           std::to_string(i),
                                       i);
                }
                l(i, i) = std::sqrt(d);
            } else {
                l(i, j) = (a(i, j) - s) / l(j, j);
            }
        }
    }
    return l;
}

TiledMatrix decompose(const DenseMatrix& a, std::size_t b) {
    if (b == 0 || a.n % b != 0) {
        throw NumericError("block size " + std::to_string(b) + " does not divide N=" + std::to_string(a.n));
    }
    const std::size_t p = a.n / b;
    TiledMatrix m(p, b);
    for (std::size_t r = 0; r < a.n; ++r) {
        for (std::size_t c = 0; c < a.n; ++c) m.at(r / b, c / b)(r % b, c % b) = a(r, c);
    }
    return m;
}

DenseMatrix assemble(const TiledMatrix& m) {
    DenseMatrix a(m.n());
    for (std::size_t r = 0; r < a.n; ++r) {
        for (std::size_t c = 0; c < a.n; ++c) a(r, c) = m.at(r / m.b, c / m.b)(r % m.b, c % m.b);
    }
    return a;
}

DenseMatrix gen_spd(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw NumericError("gen_spd: N must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DenseMatrix m(n);
    for (auto& v : m.data) v = unit(rng);
    DenseMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* mi = &m.data[i * n];
        for (std::size_t j = 0; j <= i; ++j) {
            const double* mj = &m.data[j * n];
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += mi[k] * mj[k];
            a(i, j) = s;
            a(j, i) = s;
        }
        a(i, i) += static_cast<double>(n);
    }
    return a;
}

double residual(const DenseMatrix& a, const DenseMatrix& l) {
    const std::size_t n = a.n;
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* li = &l.data[i * n];
        for (std::size_t j = 0; j < n; ++j) {
            const double* lj = &l.data[j * n];
            double s = 0.0;
            const std::size_t upto = std::min(i, j);
            for (std::size_t k = 0; k <= upto; ++k) s += li[k] * lj[k];
            const double d = a(i, j) - s;
            diff += d * d;
            norm += a(i, j) * a(i, j);
        }
    }
    return norm == 0.0 ? std::sqrt(diff) : std::sqrt(diff / norm);
}

}  // namespace coord::chol
