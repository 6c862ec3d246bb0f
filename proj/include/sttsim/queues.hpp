#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "sttsim/common.hpp"

namespace sttsim {

struct QueueConfig {
    std::uint32_t rdq_capacity = 8;
    std::uint32_t wrq_capacity = 32;

    void validate() const {
        if (rdq_capacity == 0 || wrq_capacity == 0)
            throw InputError("queue capacities must be positive");
    }
};

/// A pending array operation. Reads carry a handle so the driver can match
/// the completion; writes are fire-and-forget cost tokens whose array state
/// was already applied when they were enqueued.
struct BankTask {
    std::uint64_t arrival = 0;
    std::uint64_t line_addr = 0;
    cycles_t service_cycles = 0;
    std::uint64_t handle = 0;
};

struct ServiceEvent {
    bool is_write = false;
    BankTask task;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
};

/// Per-bank read/write queues with read-priority scheduling: when both
/// queues hold work the oldest read goes first unless the write queue is
/// more than 80% full, in which case the oldest write is serviced. The
/// threshold uses exact integer arithmetic (occupancy*5 > capacity*4), so
/// 26 of 32 trips it and 25 of 32 does not.
class BankQueues {
public:
    BankQueues() = default;
    explicit BankQueues(QueueConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    const QueueConfig& config() const { return cfg_; }
    std::uint64_t busy_until() const { return busy_until_; }
    std::size_t rdq_size() const { return rdq_.size(); }
    std::size_t wrq_size() const { return wrq_.size(); }
    bool rdq_full() const { return rdq_.size() >= cfg_.rdq_capacity; }
    bool wrq_full() const { return wrq_.size() >= cfg_.wrq_capacity; }
    bool idle() const { return rdq_.empty() && wrq_.empty(); }

    bool wrq_over_threshold() const {
        return wrq_.size() * 5 > std::size_t(cfg_.wrq_capacity) * 4;
    }

    void push_read(BankTask t) {
        require_invariant(!rdq_full(), "RDQ overflow");
        rdq_.push_back(t);
    }
    void push_write(BankTask t) {
        require_invariant(!wrq_full(), "WRQ overflow");
        wrq_.push_back(t);
    }

    /// Oldest pending write to the given line, if any; used for read
    /// forwarding out of the WRQ.
    bool has_pending_write_to(std::uint64_t line_addr) const {
        for (const auto& t : wrq_)
            if (t.line_addr == line_addr)
                return true;
        return false;
    }

    /// An idle bank works through its queues on its own: retire everything
    /// whose service would start strictly before `now`.
    void advance_to(std::uint64_t now) {
        while (!idle()) {
            const BankTask* next = nullptr;
            if (rdq_.empty())
                next = &wrq_.front();
            else if (wrq_.empty())
                next = &rdq_.front();
            else
                next = wrq_over_threshold() ? &wrq_.front() : &rdq_.front();
            if (std::max(busy_until_, next->arrival) >= now)
                return;
            service_one();
        }
    }

    /// Services one request according to the scheduling rule. busy_until
    /// only moves forward.
    std::optional<ServiceEvent> service_one() {
        bool pick_write;
        if (rdq_.empty() && wrq_.empty())
            return std::nullopt;
        if (rdq_.empty())
            pick_write = true;
        else if (wrq_.empty())
            pick_write = false;
        else
            pick_write = wrq_over_threshold();

        auto& q = pick_write ? wrq_ : rdq_;
        BankTask t = q.front();
        q.pop_front();
        const std::uint64_t start = std::max(busy_until_, t.arrival);
        busy_until_ = start + t.service_cycles;
        return ServiceEvent{pick_write, t, start, busy_until_};
    }

    /// Drains until the read with this handle completes; pending writes are
    /// serviced along the way whenever the rule says so. Returns the read's
    /// service event.
    template <typename OnService>
    ServiceEvent service_until_read(std::uint64_t handle, OnService&& on_service) {
        while (true) {
            auto ev = service_one();
            require_invariant(ev.has_value(), "read handle not found in RDQ");
            on_service(*ev);
            if (!ev->is_write && ev->task.handle == handle)
                return *ev;
        }
    }

    /// Makes room in the WRQ before an enqueue. Returns when the freeing
    /// service finished (0 when no draining was needed): back-pressure the
    /// caller must absorb.
    template <typename OnService>
    std::uint64_t make_write_room(OnService&& on_service) {
        std::uint64_t t = 0;
        while (wrq_full()) {
            auto ev = service_one();
            require_invariant(ev.has_value(), "WRQ full but nothing serviceable");
            on_service(*ev);
            t = ev->end;
        }
        return t;
    }

    /// Blocks the array for out-of-band work (pair swaps, merge writes)
    /// starting no earlier than `from`.
    void occupy(std::uint64_t from, cycles_t cycles) {
        busy_until_ = std::max(busy_until_, from) + cycles;
    }

private:
    QueueConfig cfg_;
    std::deque<BankTask> rdq_;
    std::deque<BankTask> wrq_;
    std::uint64_t busy_until_ = 0;
};

} // namespace sttsim
