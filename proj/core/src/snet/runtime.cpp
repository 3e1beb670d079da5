#include "coord/snet/runtime.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <unordered_map>

#include <json.hpp>

#include "coord/sched/worker_pool.hpp"
#include "coord/snet/sync_state.hpp"

namespace coord::snet {

RunError::RunError(Kind kind, std::string node, const std::string& message, std::vector<ParkedRecord> parked)
    : std::runtime_error(node.empty() ? message : node + ": " + message),
      kind_(kind),
      node_(std::move(node)),
      detail_(message),
      parked_(std::move(parked)) {}

std::vector<Record> activate_box(const BoxExpr& box, Record input) {
    if (!matches(input, box.signature.input)) {
        throw RunError(RunError::Kind::Contract, box.name,
                       "input " + input.describe() + " does not match " + box.signature.input.describe());
    }
    Record extras;
    if (box.options.pass_through) {
        for (const auto& [name, payload] : input.fields()) {
            if (!box.signature.input.requires_field(name)) extras.set_field(name, payload);
        }
        for (const auto& [name, value] : input.tags()) {
            if (!box.signature.input.requires_tag(name)) extras.set_tag(name, value);
        }
    }
    std::vector<Record> out;
    try {
        out = box.kernel(std::move(input));
    } catch (const RunError&) {
        throw;
    } catch (const std::exception& e) {
        throw RunError(RunError::Kind::Kernel, box.name, e.what());
    }
    for (auto& r : out) {
        if (!best_match(r, box.signature.outputs)) {
            throw RunError(RunError::Kind::Contract, box.name,
                           "output " + r.describe() + " matches no declared output type");
        }
        if (box.options.pass_through) r = merge_records(r, extras);
    }
    return out;
}

namespace {

std::uint64_t now_ns() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

void atomic_max(std::atomic<std::uint64_t>& a, std::uint64_t v) {
    std::uint64_t cur = a.load(std::memory_order_relaxed);
    while (v > cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
    }
}

struct Counters {
    std::atomic<std::uint64_t> activations{0};
    std::atomic<std::uint64_t> parked{0};
    std::atomic<std::uint64_t> busy_ns{0};
    std::atomic<std::uint64_t> instances{0};
    std::atomic<std::uint64_t> recirculations{0};
    std::atomic<std::uint64_t> completions{0};
    std::atomic<std::uint64_t> fired{0};
    std::atomic<std::uint64_t> max_queue{0};
};

class Engine;
class Actor;

struct Blocked {
    Actor* actor;
    Record record;
};

// Consumer end of a stream. Inline ports (routers, synchrocells, star and
// split dispatch) run in the producer's context and forward at most one
// record; actors (boxes, feedback) queue it.
class Port {
public:
    virtual ~Port() = default;
    // nullopt when delivered; otherwise a bounded queue on the route is full,
    // `producer` has been registered to be woken, and the record comes back.
    virtual std::optional<Blocked> push(Record r, Actor* producer, bool force) = 0;
};

template <class T>
class SimpleQueue {
public:
    bool empty() const noexcept { return head_ == items_.size(); }
    std::size_t size() const noexcept { return items_.size() - head_; }
    void push(T v) { items_.push_back(std::move(v)); }
    T& front() { return items_[head_]; }
    T pop() {
        T v = std::move(items_[head_++]);
        if (head_ == items_.size()) {
            items_.clear();
            head_ = 0;
        } else if (head_ >= 1024 && head_ * 2 >= items_.size()) {
            items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(head_));
            head_ = 0;
        }
        return v;
    }

private:
    std::vector<T> items_;
    std::size_t head_ = 0;
};

class Instance;

class Engine {
public:
    Engine(const NetworkGraph& g, const RunOptions& options)
        : graph(g), options(options), counters(g.nodes().size()), stream_slot(g.stream_count()),
          node_slot(g.nodes().size()) {
        for (const auto& sg : g.subgraphs()) {
            for (std::size_t i = 0; i < sg.streams.size(); ++i) stream_slot[sg.streams[i]] = i;
            for (std::size_t i = 0; i < sg.nodes.size(); ++i) node_slot[sg.nodes[i]] = i;
        }
    }

    void live_inc(std::uint64_t n = 1) {
        std::uint64_t v = live.fetch_add(n, std::memory_order_acq_rel) + n;
        atomic_max(peak_live, v);
    }

    void live_dec(std::uint64_t n = 1) {
        if (live.fetch_sub(n, std::memory_order_acq_rel) == n) {
            std::lock_guard lk(done_mu);
            done_cv.notify_all();
        }
    }

    void fail(std::exception_ptr e) {
        std::lock_guard lk(error_mu);
        if (!error) error = e;
        aborted.store(true, std::memory_order_release);
    }

    bool is_aborted() const noexcept { return aborted.load(std::memory_order_acquire); }

    void event(RunEvent e) {
        std::lock_guard lk(event_mu);
        events.push_back(std::move(e));
    }

    void span(TimelineSpan s) {
        std::lock_guard lk(event_mu);
        timeline.push_back(s);
    }

    std::unique_ptr<Instance> instantiate(std::size_t subgraph, Port* exit);

    template <class T>
    T* keep(std::unique_ptr<T> p) {
        std::lock_guard lk(registry_mu);
        T* raw = p.get();
        owned.push_back(std::move(p));
        return raw;
    }

    const NetworkGraph& graph;
    const RunOptions& options;
    std::vector<Counters> counters;
    std::vector<std::size_t> stream_slot;
    std::vector<std::size_t> node_slot;
    std::unique_ptr<sched::WorkerPool> pool;

    std::atomic<std::uint64_t> live{0};
    std::atomic<std::uint64_t> peak_live{0};
    std::mutex done_mu;
    std::condition_variable done_cv;

    std::atomic<bool> aborted{false};
    std::mutex error_mu;
    std::exception_ptr error;

    std::mutex event_mu;
    std::vector<RunEvent> events;
    std::vector<TimelineSpan> timeline;

    struct Ledger {
        std::atomic<std::uint64_t> injected{0}, box_consumed{0}, box_produced{0}, sync_merged_in{0},
            sync_emitted{0}, exited{0}, dropped{0};
    } ledger;
    std::atomic<std::uint64_t> barrier_waits{0};

    std::mutex registry_mu;
    std::vector<std::unique_ptr<Port>> owned;
    std::vector<std::function<void(std::vector<ParkedRecord>&)>> parked_probes;
};

class Actor : public Port {
public:
    Actor(Engine& e, NodeId node) : eng_(e), node_(node) {}

    std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
        std::unique_lock lk(mu_);
        if (!force && queue_.size() >= eng_.options.stream_capacity) {
            if (producer) waiters_.push(producer);
            return Blocked{this, std::move(r)};
        }
        queue_.push(std::move(r));
        eng_.live_inc();
        if (node_ != kNoNode) atomic_max(eng_.counters[node_].max_queue, queue_.size());
        if (scheduled_) return std::nullopt;
        scheduled_ = true;
        lk.unlock();
        submit();
        return std::nullopt;
    }

    void wake() {
        std::unique_lock lk(mu_);
        if (scheduled_) {
            woken_ = true;
            return;
        }
        scheduled_ = true;
        lk.unlock();
        submit();
    }

    void start() { wake(); }

protected:
    virtual void process(Record r) = 0;

    void emit(Port* to, Record r, bool force = false) {
        eng_.live_inc();
        outbox_.push(Pending{to, std::move(r), force});
    }

    Engine& eng_;
    NodeId node_;

private:
    struct Pending {
        Port* port;
        Record record;
        bool force;
    };

    static constexpr int kBatch = 16;

    void submit() {
        eng_.pool->submit([this] { run(); });
    }

    bool flush() {
        while (!outbox_.empty()) {
            Pending& p = outbox_.front();
            std::optional<Blocked> blocked;
            try {
                blocked = p.port->push(std::move(p.record), this, p.force);
            } catch (...) {
                eng_.fail(std::current_exception());
            }
            if (blocked) {
                p.port = blocked->actor;
                p.record = std::move(blocked->record);
                return false;
            }
            outbox_.pop();
            eng_.live_dec();
        }
        return true;
    }

    void run() {
        bool blocked = false;
        for (int i = 0; i < kBatch; ++i) {
            if (!flush()) {
                blocked = true;
                break;
            }
            Record r;
            std::vector<Actor*> waiters;
            {
                std::lock_guard lk(mu_);
                if (queue_.empty()) break;
                r = queue_.pop();
                // One freed slot, one producer. Whoever is left gets woken
                // once the queue runs dry.
                if (queue_.empty()) {
                    while (!waiters_.empty()) waiters.push_back(waiters_.pop());
                } else if (!waiters_.empty()) {
                    waiters.push_back(waiters_.pop());
                }
            }
            for (Actor* w : waiters) w->wake();
            if (!eng_.is_aborted()) {
                try {
                    process(std::move(r));
                } catch (...) {
                    eng_.fail(std::current_exception());
                }
            }
            eng_.live_dec();
        }
        if (!blocked && !flush()) blocked = true;
        std::unique_lock lk(mu_);
        bool again;
        if (blocked) {
            again = woken_;
        } else {
            again = !queue_.empty();
        }
        woken_ = false;
        if (!again) {
            scheduled_ = false;
            return;
        }
        lk.unlock();
        submit();
    }

    std::mutex mu_;
    SimpleQueue<Record> queue_;
    SimpleQueue<Actor*> waiters_;
    bool scheduled_ = false;
    bool woken_ = false;
    SimpleQueue<Pending> outbox_;
};

class Injector final : public Actor {
public:
    Injector(Engine& e, Port* entry, std::vector<Record> inputs) : Actor(e, kNoNode) {
        for (auto& r : inputs) emit(entry, std::move(r));
    }

protected:
    void process(Record) override {}
};

class ExitPort final : public Port {
public:
    explicit ExitPort(Engine& e) : eng_(e) {}

    std::optional<Blocked> push(Record r, Actor*, bool) override {
        std::lock_guard lk(mu_);
        out_.push_back(std::move(r));
        eng_.ledger.exited.fetch_add(1, std::memory_order_relaxed);
        return std::nullopt;
    }

    std::vector<Record> take() {
        std::lock_guard lk(mu_);
        return std::move(out_);
    }

private:
    Engine& eng_;
    std::mutex mu_;
    std::vector<Record> out_;
};

// Node objects --------------------------------------------------------------

class BoxActor final : public Actor {
public:
    BoxActor(Engine& e, const GraphNode& n) : Actor(e, n.id), node(n) {}
    Port* out = nullptr;

protected:
    void process(Record r) override {
        auto& c = eng_.counters[node.id];
        std::optional<Tag> tag;
        if (eng_.options.timeline_tag) tag = r.find_tag(*eng_.options.timeline_tag);
        const std::uint64_t start = now_ns();
        std::vector<Record> outputs;
        try {
            outputs = activate_box(*node.box, std::move(r));
        } catch (RunError& e) {
            throw RunError(e.kind(), node.label + " (" + node.path + ")", e.detail());
        }
        const std::uint64_t end = now_ns();
        c.activations.fetch_add(1, std::memory_order_relaxed);
        c.busy_ns.fetch_add(end - start, std::memory_order_relaxed);
        eng_.ledger.box_consumed.fetch_add(1, std::memory_order_relaxed);
        eng_.ledger.box_produced.fetch_add(outputs.size(), std::memory_order_relaxed);
        if (eng_.options.timeline_tag) eng_.span(TimelineSpan{node.id, tag, start, end});
        const auto& completion = node.box->options.completion;
        for (auto& o : outputs) {
            if (completion && matches(o, *completion)) {
                c.completions.fetch_add(1, std::memory_order_relaxed);
                eng_.barrier_waits.fetch_add(1, std::memory_order_relaxed);
            }
            emit(out, std::move(o));
        }
    }

private:
    const GraphNode& node;
};

class FeedbackActor final : public Actor {
public:
    FeedbackActor(Engine& e, const GraphNode& n) : Actor(e, n.id), node(n) {}
    Port* back = nullptr;
    Port* out = nullptr;

protected:
    void process(Record r) override {
        auto& c = eng_.counters[node.id];
        c.activations.fetch_add(1, std::memory_order_relaxed);
        if (matches(r, node.pattern)) {
            auto n = c.recirculations.fetch_add(1, std::memory_order_relaxed) + 1;
            if (n > eng_.options.max_recirculations) {
                throw RunError(RunError::Kind::Divergence, node.path,
                               "feedback recirculation limit of " +
                                   std::to_string(eng_.options.max_recirculations) + " exceeded");
            }
            emit(back, std::move(r), true);
        } else {
            emit(out, std::move(r));
        }
    }

private:
    const GraphNode& node;
};

class RouterPort final : public Port {
public:
    RouterPort(Engine& e, const GraphNode& n) : eng_(e), node(n) {
        for (std::size_t b = 0; b < n.branches.size(); ++b) {
            for (const auto& p : n.branches[b]) {
                flat_.push_back(p);
                owner_.push_back(b);
            }
        }
    }
    std::vector<Port*> branches;

    std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
        eng_.counters[node.id].activations.fetch_add(1, std::memory_order_relaxed);
        auto hit = best_match(r, flat_);
        if (!hit) {
            eng_.ledger.dropped.fetch_add(1, std::memory_order_relaxed);
            eng_.event(RunEvent{"routing", node.path, "no parallel branch accepts the record", r.describe()});
            return std::nullopt;
        }
        return branches[owner_[*hit]]->push(std::move(r), producer, force);
    }

private:
    Engine& eng_;
    const GraphNode& node;
    std::vector<TypePattern> flat_;
    std::vector<std::size_t> owner_;
};

class SyncPort final : public Port {
public:
    SyncPort(Engine& e, const GraphNode& n) : eng_(e), node(n), state_(n.slots.size(), n.repeating) {}
    Port* out = nullptr;

    std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
        auto& c = eng_.counters[node.id];
        c.activations.fetch_add(1, std::memory_order_relaxed);
        SyncStep step;
        {
            std::lock_guard lk(mu_);
            step = step_sync(state_, node.slots, std::move(r));
        }
        if (step.parked) {
            c.parked.fetch_add(1, std::memory_order_relaxed);
            return std::nullopt;
        }
        if (step.merged_in > 0) {
            c.parked.fetch_sub(step.merged_in - 1, std::memory_order_relaxed);
            c.fired.fetch_add(1, std::memory_order_relaxed);
            eng_.ledger.sync_merged_in.fetch_add(step.merged_in, std::memory_order_relaxed);
            eng_.ledger.sync_emitted.fetch_add(1, std::memory_order_relaxed);
        }
        return out->push(std::move(step.emit.front()), producer, force);
    }

    void collect(std::vector<ParkedRecord>& acc) {
        std::lock_guard lk(mu_);
        for (std::size_t i = 0; i < state_.slots.size(); ++i) {
            if (state_.slots[i]) acc.push_back(ParkedRecord{node.label, node.path, i, state_.slots[i]->describe()});
        }
    }

private:
    Engine& eng_;
    const GraphNode& node;
    std::mutex mu_;
    SyncState state_;
};

class FusedStarPort final : public Port {
public:
    FusedStarPort(Engine& e, const GraphNode& n)
        : eng_(e), node(n), chain_(sync_slots(e.graph, n), n.pattern, e.options.max_star_depth) {}
    Port* out = nullptr;

    std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
        auto& c = eng_.counters[node.id];
        c.activations.fetch_add(1, std::memory_order_relaxed);
        SyncChain::Outcome o;
        {
            std::lock_guard lk(mu_);
            try {
                o = chain_.push(std::move(r));
            } catch (const DivergenceError& e) {
                throw RunError(RunError::Kind::Divergence, node.path, e.what());
            }
        }
        c.instances.fetch_add(o.created, std::memory_order_relaxed);
        c.fired.fetch_add(o.fired, std::memory_order_relaxed);
        c.parked.fetch_add(o.parked_delta_plus, std::memory_order_relaxed);
        if (o.merged_in > 0) c.parked.fetch_sub(o.merged_in - o.fired, std::memory_order_relaxed);
        eng_.ledger.sync_merged_in.fetch_add(o.merged_in, std::memory_order_relaxed);
        eng_.ledger.sync_emitted.fetch_add(o.fired, std::memory_order_relaxed);
        if (o.exits.empty()) return std::nullopt;
        return out->push(std::move(o.exits.front()), producer, force);
    }

    void collect(std::vector<ParkedRecord>& acc) {
        std::lock_guard lk(mu_);
        for (auto& [slot, rec] : chain_.parked_records()) {
            acc.push_back(ParkedRecord{node.label, node.path, slot, rec.describe()});
        }
    }

private:
    static std::vector<TypePattern> sync_slots(const NetworkGraph& g, const GraphNode& n) {
        const auto& body = g.subgraphs().at(n.body);
        return g.node(body.nodes.front()).slots;
    }

    Engine& eng_;
    const GraphNode& node;
    std::mutex mu_;
    SyncChain chain_;
};

class Instance {
public:
    Instance(Engine& e, std::size_t subgraph, Port* exit);
    Port* entry() const { return entry_; }

private:
    std::vector<std::unique_ptr<Port>> nodes_;
    Port* entry_ = nullptr;
};

class SplitPort final : public Port {
public:
    SplitPort(Engine& e, const GraphNode& n) : eng_(e), node(n) {}
    Port* out = nullptr;

    std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
        auto& c = eng_.counters[node.id];
        c.activations.fetch_add(1, std::memory_order_relaxed);
        auto value = r.find_tag(node.index_tag);
        if (!value) {
            eng_.ledger.dropped.fetch_add(1, std::memory_order_relaxed);
            eng_.event(RunEvent{"routing", node.path, "record lacks split tag <" + node.index_tag + ">", r.describe()});
            return std::nullopt;
        }
        Port* entry;
        {
            std::lock_guard lk(mu_);
            auto& slot = branches_[*value];
            if (!slot) {
                slot = eng_.instantiate(node.body, out);
                c.instances.fetch_add(1, std::memory_order_relaxed);
            }
            entry = slot->entry();
        }
        return entry->push(std::move(r), producer, force);
    }

private:
    Engine& eng_;
    const GraphNode& node;
    std::mutex mu_;
    std::unordered_map<Tag, std::unique_ptr<Instance>> branches_;
};

class StarPort final : public Port {
public:
    StarPort(Engine& e, const GraphNode& n) : eng_(e), node(n) {}
    Port* out = nullptr;

    std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
        eng_.counters[node.id].activations.fetch_add(1, std::memory_order_relaxed);
        return forward(0, std::move(r), producer, force);
    }

private:
    // Output of cell n-1 (or the star input for n == 0) on its way to cell n.
    class Link final : public Port {
    public:
        Link(StarPort& s, std::size_t next) : star_(s), next_(next) {}
        std::optional<Blocked> push(Record r, Actor* producer, bool force) override {
            return star_.forward(next_, std::move(r), producer, force);
        }

    private:
        StarPort& star_;
        std::size_t next_;
    };

    std::optional<Blocked> forward(std::size_t next, Record r, Actor* producer, bool force) {
        if (matches(r, node.pattern)) return out->push(std::move(r), producer, force);
        Port* entry;
        {
            std::lock_guard lk(mu_);
            while (cells_.size() <= next) {
                if (cells_.size() >= eng_.options.max_star_depth) {
                    throw RunError(RunError::Kind::Divergence, node.path,
                                   "star depth limit of " + std::to_string(eng_.options.max_star_depth) +
                                       " instances exceeded");
                }
                links_.push_back(std::make_unique<Link>(*this, cells_.size() + 1));
                cells_.push_back(eng_.instantiate(node.body, links_.back().get()));
                eng_.counters[node.id].instances.fetch_add(1, std::memory_order_relaxed);
            }
            entry = cells_[next]->entry();
        }
        return entry->push(std::move(r), producer, force);
    }

    Engine& eng_;
    const GraphNode& node;
    std::mutex mu_;
    std::deque<std::unique_ptr<Link>> links_;
    std::deque<std::unique_ptr<Instance>> cells_;
};

Instance::Instance(Engine& e, std::size_t subgraph, Port* exit) {
    const NetworkGraph& g = e.graph;
    const Subgraph& sg = g.subgraphs()[subgraph];
    nodes_.resize(sg.nodes.size());
    for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
        const GraphNode& n = g.node(sg.nodes[i]);
        switch (n.kind) {
            case NodeKind::Box: nodes_[i] = std::make_unique<BoxActor>(e, n); break;
            case NodeKind::Feedback: nodes_[i] = std::make_unique<FeedbackActor>(e, n); break;
            case NodeKind::Router: nodes_[i] = std::make_unique<RouterPort>(e, n); break;
            case NodeKind::Sync: {
                auto p = std::make_unique<SyncPort>(e, n);
                SyncPort* raw = p.get();
                std::lock_guard lk(e.registry_mu);
                e.parked_probes.push_back([raw](std::vector<ParkedRecord>& acc) { raw->collect(acc); });
                nodes_[i] = std::move(p);
                break;
            }
            case NodeKind::Star:
                if (n.fused_sync_chain) {
                    auto p = std::make_unique<FusedStarPort>(e, n);
                    FusedStarPort* raw = p.get();
                    std::lock_guard lk(e.registry_mu);
                    e.parked_probes.push_back([raw](std::vector<ParkedRecord>& acc) { raw->collect(acc); });
                    nodes_[i] = std::move(p);
                } else {
                    nodes_[i] = std::make_unique<StarPort>(e, n);
                }
                break;
            case NodeKind::Split: nodes_[i] = std::make_unique<SplitPort>(e, n); break;
        }
    }
    auto port_of = [&](StreamId s) -> Port* {
        NodeId consumer = g.consumer(s);
        if (consumer == kNoNode) return exit;
        return nodes_[e.node_slot[consumer]].get();
    };
    entry_ = port_of(sg.entry);
    for (std::size_t i = 0; i < sg.nodes.size(); ++i) {
        const GraphNode& n = g.node(sg.nodes[i]);
        Port* p = nodes_[i].get();
        switch (n.kind) {
            case NodeKind::Box: static_cast<BoxActor*>(p)->out = port_of(n.outputs[0]); break;
            case NodeKind::Feedback: {
                auto* f = static_cast<FeedbackActor*>(p);
                f->back = port_of(n.outputs[0]);
                f->out = port_of(n.outputs[1]);
                break;
            }
            case NodeKind::Router: {
                auto* r = static_cast<RouterPort*>(p);
                for (StreamId s : n.outputs) r->branches.push_back(port_of(s));
                break;
            }
            case NodeKind::Sync: static_cast<SyncPort*>(p)->out = port_of(n.outputs[0]); break;
            case NodeKind::Star:
                if (n.fused_sync_chain) {
                    static_cast<FusedStarPort*>(p)->out = port_of(n.outputs[0]);
                } else {
                    static_cast<StarPort*>(p)->out = port_of(n.outputs[0]);
                }
                break;
            case NodeKind::Split: static_cast<SplitPort*>(p)->out = port_of(n.outputs[0]); break;
        }
    }
}

std::unique_ptr<Instance> Engine::instantiate(std::size_t subgraph, Port* exit) {
    return std::make_unique<Instance>(*this, subgraph, exit);
}

}  // namespace

RunResult run(const NetworkGraph& graph, std::vector<Record> inputs, const RunOptions& options) {
    if (options.workers == 0) throw std::invalid_argument("run: workers must be at least 1");
    if (options.stream_capacity == 0) throw std::invalid_argument("run: stream capacity must be at least 1");

    Engine eng(graph, options);
    ExitPort exit(eng);
    const std::uint64_t start = now_ns();
    RunResult result;
    {
        // The pool is destroyed before the instances it runs on.
        std::unique_ptr<Instance> root = eng.instantiate(0, &exit);
        eng.ledger.injected = inputs.size();
        auto injector = std::make_unique<Injector>(eng, root->entry(), std::move(inputs));
        eng.pool = std::make_unique<sched::WorkerPool>(options.workers, options.pin_workers);
        if (eng.ledger.injected > 0) {
            injector->start();
            std::unique_lock lk(eng.done_mu);
            eng.done_cv.wait(lk, [&] { return eng.live.load(std::memory_order_acquire) == 0; });
        }
        auto stats = eng.pool->stats();
        eng.pool.reset();
        for (const auto& s : stats) result.metrics.workers.push_back(WorkerMetrics{s.tasks, s.busy_ns, s.idle_ns});
        for (auto& probe : eng.parked_probes) probe(result.parked);
        eng.parked_probes.clear();
        root.reset();
    }
    result.metrics.wall_ns = now_ns() - start;

    if (eng.error) std::rethrow_exception(eng.error);

    result.outputs = exit.take();
    result.events = std::move(eng.events);
    result.timeline = std::move(eng.timeline);

    auto& m = result.metrics;
    for (const auto& n : graph.nodes()) {
        const auto& c = eng.counters[n.id];
        NodeMetrics nm;
        nm.node = n.id;
        nm.label = n.label;
        nm.path = n.path;
        nm.kind = n.kind;
        nm.activations = c.activations.load();
        nm.parked = c.parked.load();
        nm.busy_ns = c.busy_ns.load();
        nm.instances = c.instances.load();
        nm.recirculations = c.recirculations.load();
        nm.completions = c.completions.load();
        nm.fired = c.fired.load();
        nm.max_queue = c.max_queue.load();
        m.nodes.push_back(std::move(nm));
    }
    m.ledger.injected = eng.ledger.injected.load();
    m.ledger.box_consumed = eng.ledger.box_consumed.load();
    m.ledger.box_produced = eng.ledger.box_produced.load();
    m.ledger.sync_merged_in = eng.ledger.sync_merged_in.load();
    m.ledger.sync_emitted = eng.ledger.sync_emitted.load();
    m.ledger.exited = eng.ledger.exited.load();
    m.ledger.dropped = eng.ledger.dropped.load();
    m.ledger.parked = result.parked.size();
    m.peak_live = eng.peak_live.load();
    m.barrier_waits = eng.barrier_waits.load();

    if (options.fail_on_parked && !result.parked.empty()) {
        throw RunError(RunError::Kind::Deadlock, "",
                       "quiescent with " + std::to_string(result.parked.size()) + " record(s) parked in synchrocells",
                       result.parked);
    }
    return result;
}

std::uint64_t RunMetrics::activations_of(const std::string& label) const {
    std::uint64_t total = 0;
    for (const auto& n : nodes) {
        if (n.label == label) total += n.activations;
    }
    return total;
}

std::uint64_t RunMetrics::total_box_activations() const {
    std::uint64_t total = 0;
    for (const auto& n : nodes) {
        if (n.kind == NodeKind::Box) total += n.activations;
    }
    return total;
}

const NodeMetrics* RunMetrics::find(const std::string& label) const {
    for (const auto& n : nodes) {
        if (n.label == label) return &n;
    }
    return nullptr;
}

std::string RunMetrics::to_json() const {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes) {
        j["nodes"].push_back({{"node", n.label},
                              {"id", n.node},
                              {"kind", to_string(n.kind)},
                              {"path", n.path},
                              {"activations", n.activations},
                              {"parked", n.parked},
                              {"busy_ns", n.busy_ns},
                              {"instances", n.instances},
                              {"recirculations", n.recirculations},
                              {"completions", n.completions}});
    }
    j["workers"] = nlohmann::json::array();
    for (std::size_t i = 0; i < workers.size(); ++i) {
        j["workers"].push_back({{"worker", i},
                                {"tasks", workers[i].tasks},
                                {"busy_ns", workers[i].busy_ns},
                                {"idle_ns", workers[i].idle_ns}});
    }
    j["ledger"] = {{"injected", ledger.injected},         {"box_consumed", ledger.box_consumed},
                   {"box_produced", ledger.box_produced}, {"sync_merged_in", ledger.sync_merged_in},
                   {"sync_emitted", ledger.sync_emitted}, {"parked", ledger.parked},
                   {"exited", ledger.exited},             {"dropped", ledger.dropped},
                   {"balanced", ledger.balanced()}};
    j["peak_live"] = peak_live;
    j["barrier_waits"] = barrier_waits;
    j["wall_ns"] = wall_ns;
    return j.dump();
}

}  // namespace coord::snet
