#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coord::chol {

// Non-positive pivot, zero diagonal, or a shape mismatch inside a kernel.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& message, std::optional<std::size_t> pivot = std::nullopt)
        : std::runtime_error(message), pivot_(pivot) {}
    std::optional<std::size_t> pivot() const noexcept { return pivot_; }

private:
    std::optional<std::size_t> pivot_;
};

// b×b block, row-major.
struct Tile {
    std::size_t b = 0;
    std::vector<double> data;

    Tile() = default;
    explicit Tile(std::size_t edge) : b(edge), data(edge * edge, 0.0) {}
    Tile(std::size_t edge, std::vector<double> values);

    static Tile identity(std::size_t edge);

    double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * b + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * b + c]; }

    friend bool operator==(const Tile&, const Tile&) = default;
};

using TilePtr = std::shared_ptr<const Tile>;

// N×N row-major.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t edge) : n(edge), data(edge * edge, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * n + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * n + c]; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

// p×p grid of b×b tiles. The full grid is stored; a factor keeps its upper
// tiles as exact zeros.
struct TiledMatrix {
    std::size_t p = 0;
    std::size_t b = 0;
    std::vector<Tile> tiles;

    TiledMatrix() = default;
    TiledMatrix(std::size_t blocks, std::size_t edge) : p(blocks), b(edge), tiles(blocks * blocks, Tile(edge)) {}

    Tile& at(std::size_t i, std::size_t j) { return tiles[i * p + j]; }
    const Tile& at(std::size_t i, std::size_t j) const { return tiles[i * p + j]; }
    std::size_t n() const noexcept { return p * b; }

    friend bool operator==(const TiledMatrix&, const TiledMatrix&) = default;
};

// Shared, immutable tiles. Updating one tile swaps a pointer, so copies of
// the grid are cheap and never observe each other's changes.
struct TileGrid {
    std::size_t p = 0;
    std::size_t b = 0;
    std::vector<TilePtr> tiles;

    TileGrid() = default;
    TileGrid(std::size_t blocks, std::size_t edge) : p(blocks), b(edge), tiles(blocks * blocks) {}

    const TilePtr& at(std::size_t i, std::size_t j) const { return tiles[i * p + j]; }
    TilePtr& at(std::size_t i, std::size_t j) { return tiles[i * p + j]; }

    static TileGrid share(const TiledMatrix& m);
    // Missing tiles come back as zeros.
    TiledMatrix materialize() const;
};

}  // namespace coord::chol
