#include "coord/snet/network.hpp"

#include <sstream>

namespace coord::snet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Net make(NetworkExpr::Node node) { return std::make_shared<const NetworkExpr>(std::move(node)); }

void require(const Net& n, const char* what) {
    if (!n) throw NetworkError(std::string(what) + ": null operand");
}

}  // namespace

Net box(std::string name, BoxSignature signature, BoxFn kernel, BoxOptions options) {
    if (!kernel) throw NetworkError("box '" + name + "' has no kernel");
    return make(BoxExpr{std::move(name), std::move(signature), std::move(kernel), std::move(options)});
}

Net identity(std::string name, TypePattern accepts) {
    BoxSignature sig(accepts, {TypePattern{}});
    return box(std::move(name), std::move(sig), [](Record r) { return std::vector<Record>{std::move(r)}; });
}

Net serial(Net a, Net b) {
    require(a, "serial");
    require(b, "serial");
    return make(SerialExpr{std::move(a), std::move(b)});
}

Net serial(std::initializer_list<Net> chain) {
    if (chain.size() == 0) throw NetworkError("serial: empty chain");
    auto it = chain.begin();
    Net acc = *it++;
    for (; it != chain.end(); ++it) acc = serial(acc, *it);
    return acc;
}

Net parallel(std::vector<Net> operands) {
    if (operands.size() < 2) throw NetworkError("parallel: needs at least two operands");
    for (const auto& op : operands) require(op, "parallel");
    return make(ParallelExpr{std::move(operands)});
}

Net star(Net operand, TypePattern exit) {
    require(operand, "star");
    return make(StarExpr{std::move(operand), std::move(exit)});
}

Net split(Net operand, std::string index_tag) {
    require(operand, "split");
    if (index_tag.empty()) throw NetworkError("split: empty index tag");
    return make(SplitExpr{std::move(operand), std::move(index_tag)});
}

Net feedback(Net operand, TypePattern back) {
    require(operand, "feedback");
    return make(FeedbackExpr{std::move(operand), std::move(back)});
}

Net sync(std::vector<TypePattern> slots, bool repeating) {
    if (slots.size() < 2) throw NetworkError("sync: needs at least two slots");
    return make(SyncExpr{std::move(slots), repeating});
}

std::string NetworkExpr::describe() const {
    return std::visit(
        overloaded{
            [](const BoxExpr& b) { return b.name; },
            [](const SerialExpr& s) { return "(" + s.left->describe() + " .. " + s.right->describe() + ")"; },
            [](const ParallelExpr& p) {
                std::string out = "(";
                for (std::size_t i = 0; i < p.operands.size(); ++i) {
                    if (i) out += " | ";
                    out += p.operands[i]->describe();
                }
                return out + ")";
            },
            [](const StarExpr& s) { return s.operand->describe() + "*" + s.exit.describe(); },
            [](const SplitExpr& s) { return s.operand->describe() + "!<" + s.index_tag + ">"; },
            [](const FeedbackExpr& f) { return "(" + f.operand->describe() + ")\\" + f.back.describe(); },
            [](const SyncExpr& s) {
                std::string out = "[|";
                for (std::size_t i = 0; i < s.slots.size(); ++i) {
                    if (i) out += ",";
                    out += s.slots[i].describe();
                }
                return out + (s.repeating ? "|]^" : "|]");
            },
        },
        node_);
}

std::vector<TypePattern> input_variants(const NetworkExpr& e) {
    return std::visit(overloaded{
                          [](const BoxExpr& b) { return std::vector<TypePattern>{b.signature.input}; },
                          [](const SerialExpr& s) { return input_variants(*s.left); },
                          [](const ParallelExpr& p) {
                              std::vector<TypePattern> out;
                              for (const auto& op : p.operands) {
                                  auto v = input_variants(*op);
                                  out.insert(out.end(), v.begin(), v.end());
                              }
                              return out;
                          },
                          [](const StarExpr& s) {
                              auto v = input_variants(*s.operand);
                              v.push_back(s.exit);
                              return v;
                          },
                          [](const SplitExpr& s) { return input_variants(*s.operand); },
                          [](const FeedbackExpr& f) { return input_variants(*f.operand); },
                          [](const SyncExpr& s) { return s.slots; },
                      },
                      e.node());
}

}  // namespace coord::snet
