#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <typeindex>
#include <typeinfo>
#include <vector>

namespace coord::snet {

class RecordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Opaque, shareable handle to a box-language value. The coordination layer
// never looks inside; only boxes cast it back to the concrete type.
class Payload {
public:
    Payload() : type_(typeid(void)) {}

    template <class T>
    static Payload make(T value) {
        Payload p;
        p.ptr_ = std::make_shared<const T>(std::move(value));
        p.type_ = std::type_index(typeid(T));
        return p;
    }

    template <class T>
    static Payload wrap(std::shared_ptr<const T> ptr) {
        Payload p;
        p.ptr_ = std::move(ptr);
        p.type_ = std::type_index(typeid(T));
        return p;
    }

    bool empty() const noexcept { return ptr_ == nullptr; }
    std::type_index type() const noexcept { return type_; }
    const void* address() const noexcept { return ptr_.get(); }
    long use_count() const noexcept { return ptr_.use_count(); }

    template <class T>
    bool holds() const noexcept {
        return type_ == std::type_index(typeid(T));
    }

    template <class T>
    std::shared_ptr<const T> as() const {
        if (!holds<T>()) {
            throw RecordError(std::string("payload type mismatch: holds ") + type_.name() +
                              ", requested " + typeid(T).name());
        }
        return std::static_pointer_cast<const T>(ptr_);
    }

    // Copy-on-write access. When this handle is the only owner the value is
    // handed out for in-place update; otherwise a private copy is made.
    template <class T>
    std::shared_ptr<T> detach() && {
        auto typed = as<T>();
        ptr_.reset();
        if (typed.use_count() == 1) {
            return std::const_pointer_cast<T>(std::move(typed));
        }
        return std::make_shared<T>(*typed);
    }

private:
    std::shared_ptr<const void> ptr_;
    std::type_index type_;
};

using Tag = std::int64_t;

// A set of named fields and named integer tags. Field and tag names live in
// disjoint name spaces within one record.
class Record {
public:
    Record() = default;

    Record& set_field(const std::string& name, Payload value);
    Record& set_tag(const std::string& name, Tag value);

    template <class T>
    Record& put(const std::string& name, T value) {
        return set_field(name, Payload::make<T>(std::move(value)));
    }

    bool has_field(const std::string& name) const { return fields_.count(name) != 0; }
    bool has_tag(const std::string& name) const { return tags_.count(name) != 0; }

    const Payload& field(const std::string& name) const;
    Tag tag(const std::string& name) const;
    std::optional<Tag> find_tag(const std::string& name) const;

    template <class T>
    std::shared_ptr<const T> get(const std::string& name) const {
        return field(name).as<T>();
    }

    // Removes and returns a field; used with Payload::detach for in-place updates.
    Payload take_field(const std::string& name);
    void erase_tag(const std::string& name);

    const std::map<std::string, Payload>& fields() const noexcept { return fields_; }
    const std::map<std::string, Tag>& tags() const noexcept { return tags_; }

    std::size_t name_count() const noexcept { return fields_.size() + tags_.size(); }
    bool empty() const noexcept { return fields_.empty() && tags_.empty(); }

    // "{A,L,<k>=3}" style rendering for diagnostics and graph dumps.
    std::string describe() const;

    // Same names, same tag values, and identical payload handles.
    friend bool operator==(const Record& a, const Record& b);

private:
    std::map<std::string, Payload> fields_;
    std::map<std::string, Tag> tags_;
};

// Record type pattern: the names a record must at least carry.
struct TypePattern {
    std::vector<std::string> fields;
    std::vector<std::string> tags;

    TypePattern() = default;
    TypePattern(std::initializer_list<std::string> field_names,
                std::initializer_list<std::string> tag_names = {});
    TypePattern(std::vector<std::string> field_names, std::vector<std::string> tag_names);

    std::size_t size() const noexcept { return fields.size() + tags.size(); }
    bool empty() const noexcept { return fields.empty() && tags.empty(); }
    bool requires_tag(const std::string& name) const;
    bool requires_field(const std::string& name) const;

    // Componentwise subset: every name required here is also required by `other`.
    bool subset_of(const TypePattern& other) const;

    std::string describe() const;

    friend bool operator==(const TypePattern& a, const TypePattern& b) = default;
};

// Shorthand for tags-only patterns: tags({"k"}) == {<k>}.
TypePattern tags_pattern(std::initializer_list<std::string> tag_names);

struct BoxSignature {
    TypePattern input;
    std::vector<TypePattern> outputs;

    BoxSignature(TypePattern in, std::vector<TypePattern> outs);
};

bool matches(const Record& r, const TypePattern& p);

// Index of the matching pattern with the most required names; ties go to the
// lowest index. nullopt when nothing matches.
std::optional<std::size_t> best_match(const Record& r, std::span<const TypePattern> patterns);

// Union of names. On a collision the entry of `first` (the earlier arrival) wins.
Record merge_records(const Record& first, const Record& second);

}  // namespace coord::snet
