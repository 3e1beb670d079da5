#include "coord/sched/worker_pool.hpp"

#include <chrono>
#include <stdexcept>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace coord::sched {

namespace {

thread_local int tls_worker_index = -1;
thread_local const WorkerPool* tls_pool = nullptr;

std::uint64_t now_ns() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

void pin_to_cpu(std::thread& t, std::size_t index) {
#if defined(__linux__)
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) return;
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(static_cast<int>(index % hw), &set);
    pthread_setaffinity_np(t.native_handle(), sizeof(set), &set);
#else
    (void)t;
    (void)index;
#endif
}

}  // namespace

WorkerPool::WorkerPool(std::size_t workers, bool pin_threads) {
    if (workers == 0) throw std::invalid_argument("worker pool needs at least one worker");
    queues_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) queues_.push_back(std::make_unique<Queue>());
    threads_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) {
        threads_.emplace_back([this, i] { worker_loop(i); });
        if (pin_threads) pin_to_cpu(threads_.back(), i);
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lk(sleep_mu_);
        stop_ = true;
    }
    sleep_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

int WorkerPool::current_worker() noexcept { return tls_worker_index; }

void WorkerPool::submit(Task task) {
    std::size_t target;
    if (tls_pool == this && tls_worker_index >= 0) {
        target = static_cast<std::size_t>(tls_worker_index);
    } else {
        target = next_queue_.fetch_add(1, std::memory_order_relaxed) % queues_.size();
    }
    {
        std::lock_guard lk(queues_[target]->mu);
        queues_[target]->tasks.push_back(std::move(task));
    }
    queued_.fetch_add(1, std::memory_order_release);
    {
        std::lock_guard lk(sleep_mu_);
    }
    sleep_cv_.notify_one();
}

bool WorkerPool::pop_local(std::size_t index, Task& out) {
    auto& q = *queues_[index];
    std::lock_guard lk(q.mu);
    if (q.tasks.empty()) return false;
    out = std::move(q.tasks.front());
    q.tasks.pop_front();
    return true;
}

bool WorkerPool::steal(std::size_t thief, Task& out) {
    const std::size_t n = queues_.size();
    for (std::size_t off = 1; off < n; ++off) {
        auto& q = *queues_[(thief + off) % n];
        std::lock_guard lk(q.mu);
        if (q.tasks.empty()) continue;
        out = std::move(q.tasks.front());
        q.tasks.pop_front();
        return true;
    }
    return false;
}

void WorkerPool::worker_loop(std::size_t index) {
    tls_worker_index = static_cast<int>(index);
    tls_pool = this;
    auto& self = *queues_[index];
    std::uint64_t idle_start = now_ns();
    for (;;) {
        Task task;
        bool stolen = false;
        bool got = pop_local(index, task);
        if (!got) {
            got = steal(index, task);
            stolen = got;
        }
        if (got) {
            queued_.fetch_sub(1, std::memory_order_acq_rel);
            const std::uint64_t start = now_ns();
            task();
            const std::uint64_t end = now_ns();
            std::lock_guard lk(self.mu);
            self.stats.idle_ns += start - idle_start;
            self.stats.busy_ns += end - start;
            self.stats.tasks += 1;
            self.stats.steals += stolen ? 1 : 0;
            idle_start = end;
            continue;
        }
        std::unique_lock lk(sleep_mu_);
        if (stop_) break;
        sleep_cv_.wait(lk, [&] { return stop_ || queued_.load(std::memory_order_acquire) > 0; });
        if (stop_ && queued_.load(std::memory_order_acquire) == 0) break;
    }
    std::lock_guard lk(self.mu);
    self.stats.idle_ns += now_ns() - idle_start;
    tls_worker_index = -1;
    tls_pool = nullptr;
}

std::vector<WorkerStats> WorkerPool::stats() const {
    std::vector<WorkerStats> out;
    out.reserve(queues_.size());
    for (const auto& q : queues_) {
        std::lock_guard lk(q->mu);
        out.push_back(q->stats);
    }
    return out;
}

}  // namespace coord::sched
