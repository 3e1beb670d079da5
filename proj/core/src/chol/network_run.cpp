#include "coord/chol/network_run.hpp"

namespace coord::chol {

snet::Record matrix_record(const DenseMatrix& a, std::size_t b) {
    snet::Record r;
    r.set_field("M", snet::Payload::make<DenseMatrix>(a));
    r.set_tag("B", static_cast<snet::Tag>(b));
    return r;
}

std::pair<std::shared_ptr<const DenseMatrix>, std::size_t> unpack_matrix_record(const snet::Record& r) {
    auto m = r.get<DenseMatrix>("M");
    const snet::Tag b = r.tag("B");
    if (b <= 0 || m->n % static_cast<std::size_t>(b) != 0) {
        throw NumericError("block size " + std::to_string(b) + " does not divide N=" + std::to_string(m->n));
    }
    return {std::move(m), static_cast<std::size_t>(b)};
}

}  // namespace coord::chol
