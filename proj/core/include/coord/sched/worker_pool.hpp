#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace coord::sched {

struct WorkerStats {
    std::uint64_t tasks = 0;
    std::uint64_t steals = 0;
    std::uint64_t busy_ns = 0;
    std::uint64_t idle_ns = 0;
};

// Fixed-size pool with one deque per worker. Workers take the oldest task of
// their own deque first, then steal the oldest from the others, so a task
// that keeps resubmitting itself cannot starve earlier ones. Tasks must not
// throw.
class WorkerPool {
public:
    using Task = std::function<void()>;

    explicit WorkerPool(std::size_t workers, bool pin_threads = false);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(Task task);

    std::size_t size() const noexcept { return queues_.size(); }

    // Only meaningful once the submitter knows no task is running.
    std::vector<WorkerStats> stats() const;

    // Index of the calling worker thread in its pool, or -1 off-pool.
    static int current_worker() noexcept;

private:
    struct Queue {
        mutable std::mutex mu;
        std::deque<Task> tasks;
        WorkerStats stats;
    };

    void worker_loop(std::size_t index);
    bool pop_local(std::size_t index, Task& out);
    bool steal(std::size_t thief, Task& out);

    std::vector<std::unique_ptr<Queue>> queues_;
    std::vector<std::thread> threads_;
    std::atomic<std::size_t> queued_{0};
    std::atomic<std::size_t> next_queue_{0};
    std::mutex sleep_mu_;
    std::condition_variable sleep_cv_;
    bool stop_ = false;
};

}  // namespace coord::sched
