#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace coord::cnc {

// Tag tuple, also used as item key. Up to four components.
class Key {
public:
    static constexpr std::size_t kMaxArity = 4;

    Key() = default;
    Key(std::initializer_list<std::int64_t> values);

    std::size_t size() const noexcept { return n_; }
    std::int64_t operator[](std::size_t i) const { return v_.at(i); }
    std::string str() const;

    friend bool operator==(const Key& a, const Key& b) noexcept { return a.n_ == b.n_ && a.v_ == b.v_; }
    friend bool operator<(const Key& a, const Key& b) noexcept {
        return a.n_ != b.n_ ? a.n_ < b.n_ : a.v_ < b.v_;
    }

    struct Hash {
        std::size_t operator()(const Key& k) const noexcept;
    };

private:
    std::array<std::int64_t, kMaxArity> v_{};
    std::uint8_t n_ = 0;
};

class CncError : public std::runtime_error {
public:
    enum class Kind { SingleAssignment, InvalidTermination, Step, Usage };
    CncError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class Graph;
class Context;
struct RunOptions;
struct CncMetrics;
struct StepInstance;

class ItemCollectionBase {
public:
    using Equal = bool (*)(const void*, const void*);

    ItemCollectionBase(std::string name, Equal equal) : name_(std::move(name)), equal_(equal) {}
    virtual ~ItemCollectionBase() = default;
    ItemCollectionBase(const ItemCollectionBase&) = delete;
    ItemCollectionBase& operator=(const ItemCollectionBase&) = delete;

    const std::string& name() const noexcept { return name_; }
    bool available(const Key& key) const;
    std::size_t size() const;
    std::uint64_t puts() const;
    // Keys of available items, sorted.
    std::vector<Key> keys() const;

protected:
    friend class Context;
    friend class Engine;

    struct Entry {
        std::shared_ptr<const void> value;
        std::vector<StepInstance*> waiters;
    };

    std::shared_ptr<const void> find_raw(const Key& key) const;
    // Value, or null after registering `waiter` to be woken by the put.
    std::shared_ptr<const void> get_or_wait(const Key& key, StepInstance* waiter) const;
    // Returns the waiters to wake. Rewriting a key with an equal value is a no-op.
    std::vector<StepInstance*> commit(const Key& key, std::shared_ptr<const void> value);

private:
    std::string name_;
    Equal equal_;
    mutable std::mutex mu_;
    mutable std::unordered_map<Key, Entry, Key::Hash> entries_;
    std::uint64_t puts_ = 0;
};

// Single-assignment store. Values are immutable once put.
template <class T>
class ItemCollection final : public ItemCollectionBase {
public:
    explicit ItemCollection(std::string name)
        : ItemCollectionBase(std::move(name), [](const void* a, const void* b) {
              return *static_cast<const T*>(a) == *static_cast<const T*>(b);
          }) {}

    // Environment put; steps put through their Context.
    void put(const Key& key, T value) { put(key, std::make_shared<const T>(std::move(value))); }
    void put(const Key& key, std::shared_ptr<const T> value) { commit(key, std::move(value)); }

    // Environment get; throws if the item was never produced.
    const T& get(const Key& key) const {
        auto v = find_raw(key);
        if (!v) throw CncError(CncError::Kind::Usage, "item " + name() + key.str() + " is not available");
        return *static_cast<const T*>(v.get());
    }
    std::shared_ptr<const T> find(const Key& key) const { return std::static_pointer_cast<const T>(find_raw(key)); }
};

using StepFn = std::function<void(const Key& tag, Context& ctx)>;

struct ItemRef {
    const ItemCollectionBase* collection;
    Key key;
};

// Declares every item a step instance will get, so it runs only once they exist.
using DependsFn = std::function<std::vector<ItemRef>(const Key& tag)>;

class StepCollection;

class TagCollection {
public:
    explicit TagCollection(std::string name) : name_(std::move(name)) {}
    TagCollection(const TagCollection&) = delete;
    TagCollection& operator=(const TagCollection&) = delete;

    const std::string& name() const noexcept { return name_; }
    // Environment put; duplicates are ignored.
    void put(const Key& key);
    bool contains(const Key& key) const;
    std::size_t size() const;
    std::uint64_t puts() const;

private:
    friend class Graph;
    friend class Engine;

    // True when the tag is new.
    bool insert(const Key& key);
    std::vector<Key> snapshot() const;

    std::string name_;
    mutable std::mutex mu_;
    std::unordered_set<Key, Key::Hash> tags_;
    std::uint64_t puts_ = 0;
    std::vector<StepCollection*> prescribes_;
};

class StepCollection {
public:
    StepCollection(std::string name, TagCollection& prescriber, StepFn fn, DependsFn depends)
        : name_(std::move(name)), prescriber_(&prescriber), fn_(std::move(fn)), depends_(std::move(depends)) {}
    StepCollection(const StepCollection&) = delete;
    StepCollection& operator=(const StepCollection&) = delete;

    const std::string& name() const noexcept { return name_; }
    const TagCollection& prescriber() const noexcept { return *prescriber_; }
    bool tuned() const noexcept { return static_cast<bool>(depends_); }

private:
    friend class Engine;

    std::string name_;
    TagCollection* prescriber_;
    StepFn fn_;
    DependsFn depends_;
};

// Handed to a running step. Puts are tentative until the step returns; a get
// of an unavailable item aborts the step, which is retried once the item is put.
class Context {
public:
    template <class T>
    const T& get(const ItemCollection<T>& c, const Key& key) {
        return *static_cast<const T*>(get_raw(c, key));
    }
    template <class T>
    void put(ItemCollection<T>& c, const Key& key, T value) {
        items_.push_back({&c, key, std::make_shared<const T>(std::move(value))});
    }
    template <class T>
    void put(ItemCollection<T>& c, const Key& key, std::shared_ptr<const T> value) {
        items_.push_back({&c, key, std::move(value)});
    }
    void put(TagCollection& t, const Key& key) { tags_.push_back({&t, key}); }

private:
    friend class Engine;
    explicit Context(StepInstance& self) : self_(self) {}
    const void* get_raw(const ItemCollectionBase& c, const Key& key);

    struct ItemPut {
        ItemCollectionBase* collection;
        Key key;
        std::shared_ptr<const void> value;
    };
    struct TagPut {
        TagCollection* collection;
        Key key;
    };

    StepInstance& self_;
    std::vector<ItemPut> items_;
    std::vector<TagPut> tags_;
    std::vector<std::shared_ptr<const void>> held_;
};

struct CollectionMetrics {
    std::string name;
    std::uint64_t executed = 0;  // step collections
    std::uint64_t stalled = 0;
    std::uint64_t prescribed = 0;
    std::uint64_t puts = 0;      // item and tag collections
};

struct CncMetrics {
    std::uint64_t steps_executed = 0;
    std::uint64_t steps_stalled = 0;
    std::uint64_t retries = 0;
    std::uint64_t steps_prescribed = 0;
    std::uint64_t wall_ns = 0;
    std::vector<CollectionMetrics> steps;
    std::vector<CollectionMetrics> items;
    std::vector<CollectionMetrics> tags;

    std::uint64_t executed_of(const std::string& step) const;
    std::uint64_t puts_of(const std::string& collection) const;

    // {"steps_executed":..,"steps_stalled":..,"retries":..,"steps":[..],"items":[..],"tags":[..]}
    std::string to_json() const;
};

struct RunOptions {
    std::size_t workers = 1;
    bool pin_workers = false;
};

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    template <class T>
    ItemCollection<T>& items(std::string name) {
        auto c = std::make_unique<ItemCollection<T>>(std::move(name));
        auto& ref = *c;
        items_.push_back(std::move(c));
        return ref;
    }
    TagCollection& tags(std::string name);
    // A step collection is prescribed by exactly one tag collection. Attaching
    // `depends` defers each instance until the listed items are available.
    StepCollection& steps(std::string name, TagCollection& prescriber, StepFn fn, DependsFn depends = {});

    const std::vector<std::unique_ptr<ItemCollectionBase>>& item_collections() const { return items_; }
    const std::vector<std::unique_ptr<TagCollection>>& tag_collections() const { return tags_; }
    const std::vector<std::unique_ptr<StepCollection>>& step_collections() const { return steps_; }

private:
    friend class Engine;
    friend CncMetrics run_cnc(Graph& g, const RunOptions& options);
    std::vector<std::unique_ptr<ItemCollectionBase>> items_;
    std::vector<std::unique_ptr<TagCollection>> tags_;
    std::vector<std::unique_ptr<StepCollection>> steps_;
    bool ran_ = false;
};

// Executes every prescribed step of `g` until no step is running and none is
// enabled. Throws CncError(InvalidTermination) if prescribed steps remain
// unexecuted, and rethrows the first step failure. A graph runs once.
CncMetrics run_cnc(Graph& g, const RunOptions& options = {});

}  // namespace coord::cnc
