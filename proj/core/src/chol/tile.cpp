#include "coord/chol/tile.hpp"

namespace coord::chol {

Tile::Tile(std::size_t edge, std::vector<double> values) : b(edge), data(std::move(values)) {
    if (data.size() != b * b) {
        throw NumericError("tile of edge " + std::to_string(b) + " needs " + std::to_string(b * b) + " values, got " +
                           std::to_string(data.size()));
    }
}

Tile Tile::identity(std::size_t edge) {
    Tile t(edge);
    for (std::size_t i = 0; i < edge; ++i) t(i, i) = 1.0;
    return t;
}

TileGrid TileGrid::share(const TiledMatrix& m) {
    TileGrid g(m.p, m.b);
    for (std::size_t i = 0; i < m.tiles.size(); ++i) g.tiles[i] = std::make_shared<const Tile>(m.tiles[i]);
    return g;
}

TiledMatrix TileGrid::materialize() const {
    TiledMatrix m(p, b);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (tiles[i]) m.tiles[i] = *tiles[i];
    }
    return m;
}

}  // namespace coord::chol
