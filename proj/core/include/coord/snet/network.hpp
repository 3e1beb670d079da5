#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coord/snet/record.hpp"

namespace coord::snet {

// A box kernel consumes one record and yields zero or more records. Kernels
// must be pure: no state survives a call and no mutable state is shared.
using BoxFn = std::function<std::vector<Record>(Record)>;

struct BoxOptions {
    // Names the input carries beyond the input pattern are copied onto every
    // output that lacks them.
    bool pass_through = false;
    // Outputs matching this pattern count as fan-in completions (barrier waits).
    std::optional<TypePattern> completion;
};

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NetworkExpr;

struct BoxExpr {
    std::string name;
    BoxSignature signature;
    BoxFn kernel;
    BoxOptions options;
};

struct SerialExpr {
    std::shared_ptr<const NetworkExpr> left;
    std::shared_ptr<const NetworkExpr> right;
};

struct ParallelExpr {
    std::vector<std::shared_ptr<const NetworkExpr>> operands;
};

struct StarExpr {
    std::shared_ptr<const NetworkExpr> operand;
    TypePattern exit;
};

struct SplitExpr {
    std::shared_ptr<const NetworkExpr> operand;
    std::string index_tag;
};

struct FeedbackExpr {
    std::shared_ptr<const NetworkExpr> operand;
    TypePattern back;
};

struct SyncExpr {
    std::vector<TypePattern> slots;
    bool repeating = false;
};

// Immutable combinator expression. Cheap to copy; subexpressions are shared.
class NetworkExpr {
public:
    using Node = std::variant<BoxExpr, SerialExpr, ParallelExpr, StarExpr, SplitExpr, FeedbackExpr,
                              SyncExpr>;

    explicit NetworkExpr(Node node) : node_(std::move(node)) {}

    const Node& node() const noexcept { return node_; }

    template <class T>
    const T* as() const noexcept {
        return std::get_if<T>(&node_);
    }

    // Short operator-style rendering, e.g. "(potrf .. [|{A},{B}|])!<k>".
    std::string describe() const;

private:
    Node node_;
};

using Net = std::shared_ptr<const NetworkExpr>;

Net box(std::string name, BoxSignature signature, BoxFn kernel, BoxOptions options = {});

// Forwards every record unchanged; accepts anything matching `accepts`.
Net identity(std::string name = "id", TypePattern accepts = {});

// a .. b
Net serial(Net a, Net b);
Net serial(std::initializer_list<Net> chain);

// a | b | ...
Net parallel(std::vector<Net> operands);

// a * exit
Net star(Net operand, TypePattern exit);

// a ! <tag>
Net split(Net operand, std::string index_tag);

// a \ back
Net feedback(Net operand, TypePattern back);

// [| p0, p1, ... |]
Net sync(std::vector<TypePattern> slots, bool repeating = false);

// Record types an expression can accept at its entry, one pattern per variant.
std::vector<TypePattern> input_variants(const NetworkExpr& e);

}  // namespace coord::snet
