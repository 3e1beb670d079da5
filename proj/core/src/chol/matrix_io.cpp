#include "coord/chol/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "coord/chol/tile.hpp"

namespace coord::chol {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'C', 'H', 'O'};

template <class T>
void put_le(std::ostream& os, T v) {
    auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    os.write(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <class T>
T get_le(std::istream& is) {
    std::array<unsigned char, sizeof(T)> bits{};
    is.read(reinterpret_cast<char*>(bits.data()), bits.size());
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kMagic.data(), kMagic.size());
    put_le<std::uint64_t>(os, m.n);
    for (double v : m.data) put_le<double>(os, v);
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::array<char, 4> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw std::runtime_error(path.string() + ": not a TCHO matrix file");
    const auto n = get_le<std::uint64_t>(is);
    if (!is) throw std::runtime_error(path.string() + ": truncated header");
    const auto size = std::filesystem::file_size(path);
    if (n == 0 || n > (std::uint64_t{1} << 26) || size != 12 + n * n * 8) {
        throw std::runtime_error(path.string() + ": expected " + std::to_string(12 + n * n * 8) + " bytes for N=" +
                                 std::to_string(n) + ", found " + std::to_string(size));
    }
    DenseMatrix m(n);
    for (auto& v : m.data) v = get_le<double>(is);
    if (!is) throw std::runtime_error(path.string() + ": truncated data");
    return m;
}

}  // namespace coord::chol
