#include "coord/cnc/graph.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <optional>

#include <json.hpp>

#include "coord/sched/worker_pool.hpp"

namespace coord::cnc {

Key::Key(std::initializer_list<std::int64_t> values) {
    if (values.size() > kMaxArity) throw CncError(CncError::Kind::Usage, "tag tuples hold at most 4 components");
    for (auto v : values) v_[n_++] = v;
}

std::string Key::str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < n_; ++i) {
        if (i) s += ",";
        s += std::to_string(v_[i]);
    }
    return s + ")";
}

std::size_t Key::Hash::operator()(const Key& k) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ k.n_;
    for (std::size_t i = 0; i < k.n_; ++i) {
        h ^= static_cast<std::uint64_t>(k.v_[i]) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

struct StepInstance {
    StepCollection* collection;
    Key tag;
    // Tuned instances count down their missing dependencies (plus one held
    // while registering); zero means scheduled or running.
    std::atomic<std::int64_t> missing{0};
    std::atomic<bool> done{false};
    std::atomic<std::uint32_t> attempts{0};
};

namespace {

struct Stall {};

}  // namespace

bool ItemCollectionBase::available(const Key& key) const { return static_cast<bool>(find_raw(key)); }

std::size_t ItemCollectionBase::size() const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& [k, e] : entries_) n += e.value ? 1 : 0;
    return n;
}

std::vector<Key> ItemCollectionBase::keys() const {
    std::vector<Key> out;
    {
        std::lock_guard lk(mu_);
        for (const auto& [k, e] : entries_)
            if (e.value) out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t ItemCollectionBase::puts() const {
    std::lock_guard lk(mu_);
    return puts_;
}

std::shared_ptr<const void> ItemCollectionBase::find_raw(const Key& key) const {
    std::lock_guard lk(mu_);
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : it->second.value;
}

std::shared_ptr<const void> ItemCollectionBase::get_or_wait(const Key& key, StepInstance* waiter) const {
    std::lock_guard lk(mu_);
    auto& e = entries_[key];
    if (e.value) return e.value;
    e.waiters.push_back(waiter);
    return nullptr;
}

std::vector<StepInstance*> ItemCollectionBase::commit(const Key& key, std::shared_ptr<const void> value) {
    std::lock_guard lk(mu_);
    ++puts_;
    auto& e = entries_[key];
    if (e.value) {
        if (!equal_(e.value.get(), value.get()))
            throw CncError(CncError::Kind::SingleAssignment,
                           "item " + name_ + key.str() + " written twice with different values");
        return {};
    }
    e.value = std::move(value);
    return std::move(e.waiters);
}

void TagCollection::put(const Key& key) { insert(key); }

bool TagCollection::insert(const Key& key) {
    std::lock_guard lk(mu_);
    ++puts_;
    return tags_.insert(key).second;
}

bool TagCollection::contains(const Key& key) const {
    std::lock_guard lk(mu_);
    return tags_.count(key) != 0;
}

std::size_t TagCollection::size() const {
    std::lock_guard lk(mu_);
    return tags_.size();
}

std::uint64_t TagCollection::puts() const {
    std::lock_guard lk(mu_);
    return puts_;
}

std::vector<Key> TagCollection::snapshot() const {
    std::lock_guard lk(mu_);
    return {tags_.begin(), tags_.end()};
}

TagCollection& Graph::tags(std::string name) {
    tags_.push_back(std::make_unique<TagCollection>(std::move(name)));
    return *tags_.back();
}

StepCollection& Graph::steps(std::string name, TagCollection& prescriber, StepFn fn, DependsFn depends) {
    steps_.push_back(std::make_unique<StepCollection>(std::move(name), prescriber, std::move(fn), std::move(depends)));
    prescriber.prescribes_.push_back(steps_.back().get());
    return *steps_.back();
}

const void* Context::get_raw(const ItemCollectionBase& c, const Key& key) {
    auto v = c.get_or_wait(key, &self_);
    if (!v) throw Stall{};
    const void* raw = v.get();
    held_.push_back(std::move(v));
    return raw;
}

std::uint64_t CncMetrics::executed_of(const std::string& step) const {
    for (const auto& s : steps)
        if (s.name == step) return s.executed;
    return 0;
}

std::uint64_t CncMetrics::puts_of(const std::string& collection) const {
    for (const auto& c : items)
        if (c.name == collection) return c.puts;
    for (const auto& c : tags)
        if (c.name == collection) return c.puts;
    return 0;
}

std::string CncMetrics::to_json() const {
    nlohmann::ordered_json j;
    j["steps_executed"] = steps_executed;
    j["steps_stalled"] = steps_stalled;
    j["retries"] = retries;
    j["steps_prescribed"] = steps_prescribed;
    j["wall_ns"] = wall_ns;
    j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : steps)
        j["steps"].push_back({{"name", s.name}, {"executed", s.executed}, {"stalled", s.stalled}, {"prescribed", s.prescribed}});
    j["items"] = nlohmann::ordered_json::array();
    for (const auto& c : items) j["items"].push_back({{"name", c.name}, {"puts", c.puts}});
    j["tags"] = nlohmann::ordered_json::array();
    for (const auto& c : tags) j["tags"].push_back({{"name", c.name}, {"puts", c.puts}});
    return j.dump();
}

class Engine {
public:
    Engine(Graph& g, const RunOptions& options) : graph_(g), options_(options), per_step_(g.steps_.size()) {
        for (std::size_t i = 0; i < g.steps_.size(); ++i) slot_[g.steps_[i].get()] = i;
    }

    CncMetrics run() {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::pair<TagCollection*, std::vector<Key>>> initial;
        for (const auto& t : graph_.tags_) initial.emplace_back(t.get(), t->snapshot());
        {
            sched::WorkerPool pool(options_.workers, options_.pin_workers);
            pool_ = &pool;
            outstanding_.store(1);
            for (auto& [tags, keys] : initial)
                for (const auto& k : keys) prescribe(*tags, k);
            finish();
            std::unique_lock lk(done_mu_);
            done_cv_.wait(lk, [&] { return outstanding_.load() == 0; });
            pool_ = nullptr;
        }
        if (error_) std::rethrow_exception(error_);

        CncMetrics m;
        m.wall_ns = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count());
        m.retries = retries_.load();
        std::vector<std::string> unexecuted;
        std::size_t unexecuted_count = 0;
        for (std::size_t i = 0; i < graph_.steps_.size(); ++i) {
            auto& ps = per_step_[i];
            CollectionMetrics cm;
            cm.name = graph_.steps_[i]->name();
            cm.executed = ps.executed.load();
            cm.stalled = ps.stalled.load();
            cm.prescribed = ps.instances.size();
            m.steps_executed += cm.executed;
            m.steps_stalled += cm.stalled;
            m.steps_prescribed += cm.prescribed;
            m.steps.push_back(cm);
            for (const auto& [k, inst] : ps.instances) {
                if (inst->done.load()) continue;
                ++unexecuted_count;
                if (unexecuted.size() < 16) unexecuted.push_back(cm.name + k.str());
            }
        }
        for (const auto& c : graph_.items_) m.items.push_back({c->name(), 0, 0, 0, c->puts()});
        for (const auto& t : graph_.tags_) m.tags.push_back({t->name(), 0, 0, 0, t->puts()});
        if (unexecuted_count) {
            std::string msg = "invalid termination: " + std::to_string(unexecuted_count) +
                              " prescribed step(s) never executed:";
            for (const auto& s : unexecuted) msg += " " + s;
            if (unexecuted_count > unexecuted.size()) msg += " ...";
            throw CncError(CncError::Kind::InvalidTermination, msg);
        }
        return m;
    }

private:
    struct PerStep {
        std::mutex mu;
        std::unordered_map<Key, std::unique_ptr<StepInstance>, Key::Hash> instances;
        std::atomic<std::uint64_t> executed{0};
        std::atomic<std::uint64_t> stalled{0};
    };

    void prescribe(TagCollection& tags, const Key& tag) {
        for (StepCollection* sc : tags.prescribes_) {
            auto& ps = per_step_[slot_.at(sc)];
            StepInstance* inst;
            {
                std::lock_guard lk(ps.mu);
                auto& slot = ps.instances[tag];
                if (slot) continue;
                slot = std::make_unique<StepInstance>();
                slot->collection = sc;
                slot->tag = tag;
                inst = slot.get();
            }
            if (!sc->depends_) {
                schedule(inst);
                continue;
            }
            std::vector<ItemRef> deps;
            try {
                deps = sc->depends_(tag);
            } catch (...) {
                fail(std::current_exception());
                continue;
            }
            inst->missing.store(static_cast<std::int64_t>(deps.size()) + 1);
            for (const auto& d : deps)
                if (d.collection->get_or_wait(d.key, inst)) inst->missing.fetch_sub(1);
            if (inst->missing.fetch_sub(1) == 1) schedule(inst);
        }
    }

    void wake(StepInstance* inst) {
        if (inst->missing.load() > 0) {
            if (inst->missing.fetch_sub(1) == 1) schedule(inst);
        } else {
            schedule(inst);
        }
    }

    void schedule(StepInstance* inst) {
        outstanding_.fetch_add(1);
        pool_->submit([this, inst] { execute(inst); });
    }

    void execute(StepInstance* inst) {
        if (!failed_.load()) attempt(inst);
        finish();
    }

    void attempt(StepInstance* inst) {
        auto& ps = per_step_[slot_.at(inst->collection)];
        if (inst->attempts.fetch_add(1) > 0) retries_.fetch_add(1);
        Context ctx(*inst);
        try {
            inst->collection->fn_(inst->tag, ctx);
        } catch (const Stall&) {
            ps.stalled.fetch_add(1);
            return;
        } catch (const CncError&) {
            fail(std::current_exception());
            return;
        } catch (const std::exception& e) {
            fail(std::make_exception_ptr(
                CncError(CncError::Kind::Step, inst->collection->name() + inst->tag.str() + ": " + e.what())));
            return;
        }
        try {
            for (auto& p : ctx.items_)
                for (StepInstance* w : p.collection->commit(p.key, std::move(p.value))) wake(w);
            for (auto& t : ctx.tags_)
                if (t.collection->insert(t.key)) prescribe(*t.collection, t.key);
        } catch (...) {
            fail(std::current_exception());
            return;
        }
        inst->done.store(true);
        ps.executed.fetch_add(1);
    }

    void finish() {
        if (outstanding_.fetch_sub(1) == 1) {
            std::lock_guard lk(done_mu_);
            done_cv_.notify_all();
        }
    }

    void fail(std::exception_ptr e) {
        std::lock_guard lk(error_mu_);
        if (!error_) error_ = e;
        failed_.store(true);
    }

    Graph& graph_;
    RunOptions options_;
    std::vector<PerStep> per_step_;
    std::unordered_map<const StepCollection*, std::size_t> slot_;
    sched::WorkerPool* pool_ = nullptr;
    std::atomic<std::uint64_t> outstanding_{0};
    std::atomic<std::uint64_t> retries_{0};
    std::atomic<bool> failed_{false};
    std::mutex done_mu_;
    std::condition_variable done_cv_;
    std::mutex error_mu_;
    std::exception_ptr error_;
};

CncMetrics run_cnc(Graph& g, const RunOptions& options) {
    if (g.ran_) throw CncError(CncError::Kind::Usage, "a graph runs only once");
    if (options.workers == 0) throw CncError(CncError::Kind::Usage, "at least one worker is required");
    g.ran_ = true;
    Engine engine(g, options);
    return engine.run();
}

}  // namespace coord::cnc
