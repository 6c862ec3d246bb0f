#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sttsim/cache.hpp"
#include "sttsim/config.hpp"
#include "sttsim/endurance.hpp"
#include "sttsim/policy.hpp"
#include "sttsim/queues.hpp"
#include "sttsim/trace.hpp"

namespace sttsim {

struct LevelCounters {
    std::uint64_t read_hits = 0;
    std::uint64_t read_misses = 0;
    std::uint64_t write_hits = 0;
    std::uint64_t write_misses = 0;

    std::uint64_t hits() const { return read_hits + write_hits; }
    std::uint64_t misses() const { return read_misses + write_misses; }
    std::uint64_t accesses() const { return hits() + misses(); }
};

enum class ServiceLevel : std::uint8_t { L1, L2, Llc, Wrq, Mem };

inline const char* to_string(ServiceLevel l) {
    switch (l) {
    case ServiceLevel::L1: return "l1";
    case ServiceLevel::L2: return "l2";
    case ServiceLevel::Llc: return "llc";
    case ServiceLevel::Wrq: return "wrq";
    case ServiceLevel::Mem: return "mem";
    }
    return "?";
}

struct LlcEvicted {
    std::uint64_t line_addr = 0;
    bool dirty = false;
};

struct LlcOutcome {
    std::uint64_t complete = 0;
    double energy_nj = 0.0;
    ServiceLevel level = ServiceLevel::Llc;
    std::vector<LlcEvicted> evictions; // upper levels must drop these
};

struct LlcStats {
    LevelCounters counters;
    std::uint64_t forwards = 0; // reads served out of the WRQ (counted as hits)
    std::uint64_t mem_reads = 0;
    std::uint64_t mem_writes = 0;
    std::uint64_t grows = 0;
    std::uint64_t shrinks = 0;
    std::uint64_t swaps = 0;
    double dynamic_energy_nj = 0.0;
    std::uint64_t accesses = 0; // demand reads + write-backs arriving
};

/// The LLC proper: banked stripped/stacked/SLC array behind per-bank
/// read/write queues, with the adaptive associativity + swap policy and
/// wear tracking folded in. Reads are serviced synchronously through the
/// bank scheduler; writes (write-backs and fills) update array state on
/// arrival and retire through the WRQ as timing tokens, which is what makes
/// read forwarding out of the WRQ possible.
class LlcController {
public:
    LlcController() = default;

    explicit LlcController(const SimConfig& cfg)
        : cfg_(cfg), array_(cfg.llc_array, cfg.llc, cfg.initial_mode),
          policy_(cfg.policy, cfg.llc.min_ways, cfg.llc.max_ways),
          endurance_(cfg.llc_array, cfg.llc, cfg.endurance_config()),
          banks_(cfg.llc.banks, BankQueues(cfg.queues)) {
        // counters live from the first access: the run starts on an epoch edge
        for (std::uint32_t gs = 0; gs < array_.num_sets(); ++gs)
            policy_.on_epoch_start(array_.set(gs));
    }

    const CacheArray& array() const { return array_; }
    CacheArray& array() { return array_; }
    const EnduranceModel& endurance() const { return endurance_; }
    EnduranceModel& endurance() { return endurance_; }
    const AdaptiveController& policy() const { return policy_; }
    const LlcStats& stats() const { return stats_; }
    const BankQueues& bank(std::uint32_t i) const { return banks_[i]; }
    std::uint64_t epoch_count() const { return epoch_count_; }

    double ns_of(std::uint64_t cycles) const { return double(cycles) / cfg_.device.clock_ghz; }

    LlcOutcome demand_read(std::uint64_t line_addr, std::uint64_t t) {
        LlcOutcome out;
        out.complete = t;
        epoch_tick(out, t);

        const AddrParts parts = decompose(line_addr, cfg_.llc);
        BankQueues& bank = banks_[parts.bank];
        CacheSet& set = array_.set(parts.global_set);
        bank.advance_to(t); // an idle bank has been retiring writes meanwhile

        // A read whose line still has a write pending in the WRQ is answered
        // by the queue itself: no array access, no array energy.
        if (bank.has_pending_write_to(line_addr)) {
            stats_.forwards++;
            stats_.counters.read_hits++;
            set.stats.hits++;
            out.level = ServiceLevel::Wrq;
            out.complete = t + cfg_.llc_costs.lookup_cycles;
            flush_death_drops(out); // epoch-boundary merges may have killed lines
            return out;
        }

        auto way = array_.lookup(parts.global_set, parts.tag);
        if (way) {
            const TransactionKind kind = kind_for(way->role, OpKind::Read);
            const TransactionCost cost = charge(kind);
            const std::uint64_t done = run_read(bank, line_addr, t,
                                                cfg_.llc_costs.lookup_cycles + cost.latency_cycles);
            add_energy(out, cost.energy_nj);
            array_.touch(parts.global_set, *way, OpKind::Read);
            stats_.counters.read_hits++;
            set.stats.hits++;
            out.level = ServiceLevel::Llc;
            out.complete = done;
            maybe_swap(parts.global_set, *way, OpKind::Read, done, out);
            flush_death_drops(out);
            return out;
        }

        // Miss: the tag probe still occupies the bank, then memory supplies
        // the line and the fill retires through the WRQ.
        const std::uint64_t probe_done =
            run_read(bank, line_addr, t, cfg_.llc_costs.lookup_cycles);
        stats_.counters.read_misses++;
        set.stats.misses++;
        stats_.mem_reads++;
        const std::uint64_t data_at = probe_done + memory_cycles();

        do_fill(parts, line_addr, /*dirty=*/false, data_at, out);
        grow_check(parts.global_set);

        out.level = ServiceLevel::Mem;
        out.complete = std::max(out.complete, data_at);
        flush_death_drops(out);
        return out;
    }

    /// Write-back (or write-allocate fill) arriving from L2. Array state
    /// changes now; the write pulse itself retires through the WRQ.
    LlcOutcome demand_write(std::uint64_t line_addr, std::uint64_t t) {
        LlcOutcome out;
        out.complete = t;
        epoch_tick(out, t);

        const AddrParts parts = decompose(line_addr, cfg_.llc);
        BankQueues& bank = banks_[parts.bank];
        CacheSet& set = array_.set(parts.global_set);
        bank.advance_to(t);

        auto way = array_.lookup(parts.global_set, parts.tag);
        if (way) {
            const TransactionKind kind = kind_for(way->role, OpKind::Write);
            const TransactionCost cost = charge(kind);
            array_.touch(parts.global_set, *way, OpKind::Write);
            apply_write_wear(parts.global_set, *way, kind, t);
            enqueue_write(bank, line_addr, t,
                          cfg_.llc_costs.lookup_cycles + cost.latency_cycles, out);
            add_energy(out, cost.energy_nj);
            stats_.counters.write_hits++;
            set.stats.hits++;
            maybe_swap(parts.global_set, *way, OpKind::Write, std::max(t, out.complete), out);
            flush_death_drops(out);
            return out;
        }

        // The copy left the array before its write-back arrived (possible
        // when an eviction races a dirty upper line). The block is whole,
        // so allocate it in place without a memory fetch.
        stats_.counters.write_misses++;
        set.stats.misses++;
        do_fill(parts, line_addr, /*dirty=*/true, t, out);
        grow_check(parts.global_set);
        flush_death_drops(out);
        return out;
    }

    /// Retires everything still queued. Returns the final busy time.
    std::uint64_t drain_all() {
        std::uint64_t end = 0;
        for (auto& b : banks_) {
            while (auto ev = b.service_one())
                end = std::max(end, ev->end);
            end = std::max(end, b.busy_until());
        }
        return end;
    }

    void note_upper_dirty_drop() { stats_.mem_writes++; }

    /// hits + misses must equal accesses, per set and in total.
    void check_conservation() const {
        std::uint64_t per_set = 0;
        for (std::uint32_t s = 0; s < array_.num_sets(); ++s) {
            const auto& st = array_.set(s).stats;
            per_set += st.hits + st.misses;
        }
        require_invariant(per_set == stats_.counters.accesses(),
                          "per-set hit/miss totals disagree with global counters");
        require_invariant(stats_.counters.accesses() == stats_.accesses,
                          "hit+miss total disagrees with access count");
    }

private:
    TransactionCost charge(TransactionKind kind) const {
        return transaction_cost(kind, cfg_.device, cfg_.llc.line_bits(), &cfg_.llc_costs);
    }

    void add_energy(LlcOutcome& out, double nj) {
        out.energy_nj += nj;
        stats_.dynamic_energy_nj += nj;
    }

    cycles_t memory_cycles() {
        double ns = cfg_.mem_row_miss_ns;
        if (cfg_.mem_model == MemModel::FixedRatio) {
            mem_hit_accum_ += cfg_.mem_hit_ratio;
            if (mem_hit_accum_ >= 1.0) {
                mem_hit_accum_ -= 1.0;
                ns = cfg_.mem_row_hit_ns;
            }
        }
        return step_cycles_from_duration(ns, cfg_.device.clock_ghz);
    }

    std::uint64_t run_read(BankQueues& bank, std::uint64_t line_addr, std::uint64_t t,
                           cycles_t service_cycles) {
        while (bank.rdq_full())
            bank.service_one();
        const std::uint64_t handle = ++handle_counter_;
        bank.push_read({t, line_addr, service_cycles, handle});
        auto ev = bank.service_until_read(handle, [](const ServiceEvent&) {});
        return ev.end;
    }

    void enqueue_write(BankQueues& bank, std::uint64_t line_addr, std::uint64_t t,
                       cycles_t service_cycles, LlcOutcome& out) {
        const std::uint64_t room_at = bank.make_write_room([](const ServiceEvent&) {});
        bank.push_write({t, line_addr, service_cycles, 0});
        // a full WRQ back-pressures the producer
        out.complete = std::max(out.complete, std::max(t, room_at));
    }

    /// Wear bookkeeping for one write transaction. Stripped arrays wear one
    /// domain per write pulse in the step sequence (an FRHE write pulses
    /// both domains); plain arrays wear their single tracked budget once
    /// per transaction.
    void apply_write_wear(std::uint32_t gset, const WayRef& w, TransactionKind kind,
                          std::uint64_t now) {
        const double now_ns = ns_of(now);
        if (cfg_.llc_array == ArrayKind::StrippedMlc) {
            PairState& p = array_.set(gset).pairs[w.index];
            for (Step s : steps_for(kind)) {
                if (!is_write_step(s))
                    continue;
                const Domain d = s == Step::WriteHard ? Domain::Hard : Domain::Soft;
                if (d == Domain::Hard)
                    p.hard_writes++;
                else
                    p.soft_writes++;
                handle_death(endurance_.record_write(gset, w.index, d, now_ns));
            }
        } else {
            handle_death(endurance_.record_write(gset, w.index, Domain::Soft, now_ns));
        }
    }

    void handle_death(std::optional<DeathEvent> ev) {
        if (!ev)
            return;
        CacheSet& s = array_.set(ev->global_set);
        LineState& line = cfg_.llc_array == ArrayKind::StrippedMlc
                              ? (ev->domain == Domain::Hard ? s.pairs[ev->slot].frhe
                                                            : s.pairs[ev->slot].srle)
                              : s.lines[ev->slot];
        // the content is gone with the worn cells; upper copies must drop too
        if (line.valid)
            pending_death_drops_.push_back(
                {compose_line_addr(line.tag, ev->global_set, cfg_.llc), false});
        line.invalidate();
        line.dead = true;
        // a worn-out way shrinks the set's usable associativity for good
        s.ctl.active_ways = array_.active_ways_of(s);
        s.ctl.wcnt = s.ctl.active_ways;
    }

    void do_fill(const AddrParts& parts, std::uint64_t line_addr, bool dirty,
                 std::uint64_t when, LlcOutcome& out) {
        CacheSet& set = array_.set(parts.global_set);
        const auto victim_slot = array_.victim_for_fill(parts.global_set);
        if (!victim_slot) {
            // every way of this set has worn out: nothing can be cached,
            // the block passes straight through
            if (dirty)
                stats_.mem_writes++;
            return;
        }
        const WayRef victim = *victim_slot;
        auto evicted = array_.fill(parts.global_set, victim, parts.tag, dirty);
        if (evicted) {
            const std::uint64_t va = compose_line_addr(evicted->tag, parts.global_set, cfg_.llc);
            out.evictions.push_back({va, evicted->dirty});
            if (evicted->dirty)
                stats_.mem_writes++; // write-back lands in memory, not modeled further
        }

        const TransactionKind kind = kind_for(victim.role, OpKind::Write);
        const TransactionCost cost = charge(kind);
        apply_write_wear(parts.global_set, victim, kind, when);
        enqueue_write(banks_[parts.bank], line_addr, when,
                      cfg_.llc_costs.lookup_cycles + cost.latency_cycles, out);
        add_energy(out, cost.energy_nj);

        if (cfg_.llc_array == ArrayKind::StrippedMlc)
            policy_.on_pair_fill(set.pairs[victim.index]);
    }

    void grow_check(std::uint32_t gset) {
        if (cfg_.llc_array != ArrayKind::StrippedMlc)
            return;
        if (auto grow = policy_.on_miss(array_.set(gset))) {
            array_.split_pair(gset, grow->pair);
            stats_.grows++;
        }
    }

    void maybe_swap(std::uint32_t gset, const WayRef& way, OpKind op, std::uint64_t now,
                    LlcOutcome& out) {
        if (cfg_.llc_array != ArrayKind::StrippedMlc || way.role == LineRole::Slc)
            return;
        CacheSet& set = array_.set(gset);
        auto act = policy_.on_hit(set, way.index, way.role, op);
        if (!act)
            return;
        array_.swap_pair(gset, act->pair);
        stats_.swaps++;
        // the exchange costs one full write into each line
        const TransactionCost into_hard = charge(TransactionKind::FrheWrite);
        const TransactionCost into_soft = charge(TransactionKind::SrleWrite);
        apply_write_wear(gset, {act->pair, LineRole::Frhe}, TransactionKind::FrheWrite, now);
        apply_write_wear(gset, {act->pair, LineRole::Srle}, TransactionKind::SrleWrite, now);
        add_energy(out, into_hard.energy_nj + into_soft.energy_nj);
        banks_[gset & (cfg_.llc.banks - 1)].occupy(now,
                                                   into_hard.latency_cycles +
                                                       into_soft.latency_cycles);
    }

    void epoch_tick(LlcOutcome& out, std::uint64_t now) {
        stats_.accesses++;
        if (stats_.accesses % policy_.params().epoch_len != 0)
            return;
        epoch_count_++;
        for (std::uint32_t gs = 0; gs < array_.num_sets(); ++gs) {
            CacheSet& set = array_.set(gs);
            if (cfg_.llc_array == ArrayKind::StrippedMlc) {
                if (auto shrink = policy_.shrink_check(set)) {
                    apply_merge(gs, shrink->pair, now, out);
                    stats_.shrinks++;
                }
            }
            policy_.on_epoch_start(set);
        }
    }

    void apply_merge(std::uint32_t gset, std::uint32_t pair_idx, std::uint64_t now,
                     LlcOutcome& out) {
        auto res = array_.merge_pair(gset, pair_idx);
        if (res.evicted) {
            const std::uint64_t va = compose_line_addr(res.evicted->tag, gset, cfg_.llc);
            out.evictions.push_back({va, res.evicted->dirty});
            if (res.evicted->dirty)
                stats_.mem_writes++;
        }
        // forcing the hard domains to '0' is one hard-line write; a survivor
        // moving down from the hard domains adds one soft-line write
        PairState& p = array_.set(gset).pairs[pair_idx];
        const Step steps_one[] = {Step::WriteHard};
        const Step steps_two[] = {Step::WriteHard, Step::WriteSoft};
        std::span<const Step> steps = res.survivor_relocated
                                          ? std::span<const Step>(steps_two)
                                          : std::span<const Step>(steps_one);
        const TransactionCost cost =
            steps_cost(steps, cfg_.device, cfg_.llc.line_bits(), &cfg_.llc_costs);
        for (Step s : steps) {
            const Domain d = s == Step::WriteHard ? Domain::Hard : Domain::Soft;
            if (d == Domain::Hard)
                p.hard_writes++;
            else
                p.soft_writes++;
            handle_death(endurance_.record_write(gset, pair_idx, d, ns_of(now)));
        }
        add_energy(out, cost.energy_nj);
        banks_[gset & (cfg_.llc.banks - 1)].occupy(now, cost.latency_cycles);
    }

    void flush_death_drops(LlcOutcome& out) {
        for (auto& d : pending_death_drops_)
            out.evictions.push_back(d);
        pending_death_drops_.clear();
    }

    SimConfig cfg_;
    CacheArray array_;
    AdaptiveController policy_;
    EnduranceModel endurance_;
    std::vector<BankQueues> banks_;
    LlcStats stats_;
    std::uint64_t handle_counter_ = 0;
    std::uint64_t epoch_count_ = 0;
    double mem_hit_accum_ = 0.0;
    std::vector<LlcEvicted> pending_death_drops_;
};

// ---------------------------------------------------------------------------
// Upper levels: plain LRU tag arrays with fixed hit latencies. L1 is
// write-through/no-write-allocate, L2 write-back/write-allocate; both sit
// under an inclusive LLC that back-invalidates them on eviction.
// ---------------------------------------------------------------------------

class SimpleCache {
public:
    SimpleCache() = default;

    SimpleCache(std::uint64_t bytes, std::uint32_t ways, std::uint32_t line_bytes,
                bool writes_dirty)
        : ways_(ways), line_bytes_(line_bytes), writes_dirty_(writes_dirty) {
        sets_ = static_cast<std::uint32_t>(bytes / (std::uint64_t(line_bytes) * ways));
        lines_.resize(std::size_t(sets_) * ways_);
    }

    LevelCounters& stats() { return stats_; }
    const LevelCounters& stats() const { return stats_; }

    bool access(std::uint64_t line_addr, OpKind op) {
        Line* l = find(line_addr);
        if (!l) {
            (op == OpKind::Read ? stats_.read_misses : stats_.write_misses)++;
            return false;
        }
        (op == OpKind::Read ? stats_.read_hits : stats_.write_hits)++;
        l->touch = ++touch_ctr_;
        if (op == OpKind::Write && writes_dirty_)
            l->dirty = true;
        return true;
    }

    struct Victim {
        std::uint64_t line_addr = 0;
        bool dirty = false;
    };

    std::optional<Victim> fill(std::uint64_t line_addr, bool dirty) {
        const std::uint32_t set = set_of(line_addr);
        Line* slot = nullptr;
        for (std::uint32_t w = 0; w < ways_; ++w) {
            Line& l = lines_[std::size_t(set) * ways_ + w];
            if (!l.valid) {
                slot = &l;
                break;
            }
            if (!slot || l.touch < slot->touch)
                slot = &l;
        }
        std::optional<Victim> victim;
        if (slot->valid)
            victim = Victim{line_addr_of(slot->tag, set), slot->dirty};
        slot->valid = true;
        slot->dirty = dirty;
        slot->tag = tag_of(line_addr);
        slot->touch = ++touch_ctr_;
        return victim;
    }

    // returns true when the dropped copy was dirty
    bool invalidate(std::uint64_t line_addr) {
        Line* l = find(line_addr);
        if (!l)
            return false;
        const bool dirty = l->dirty;
        l->valid = false;
        l->dirty = false;
        return dirty;
    }

    template <typename Fn>
    void for_each_valid(Fn&& fn) const {
        for (std::uint32_t set = 0; set < sets_; ++set)
            for (std::uint32_t w = 0; w < ways_; ++w) {
                const Line& l = lines_[std::size_t(set) * ways_ + w];
                if (l.valid)
                    fn(line_addr_of(l.tag, set));
            }
    }

private:
    struct Line {
        bool valid = false;
        bool dirty = false;
        std::uint64_t tag = 0;
        std::uint64_t touch = 0;
    };

    std::uint32_t set_of(std::uint64_t line_addr) const {
        return static_cast<std::uint32_t>((line_addr / line_bytes_) & (sets_ - 1));
    }
    std::uint64_t tag_of(std::uint64_t line_addr) const {
        return (line_addr / line_bytes_) / sets_;
    }
    std::uint64_t line_addr_of(std::uint64_t tag, std::uint32_t set) const {
        return (tag * sets_ + set) * line_bytes_;
    }

    Line* find(std::uint64_t line_addr) {
        const std::uint32_t set = set_of(line_addr);
        const std::uint64_t tag = tag_of(line_addr);
        for (std::uint32_t w = 0; w < ways_; ++w) {
            Line& l = lines_[std::size_t(set) * ways_ + w];
            if (l.valid && l.tag == tag)
                return &l;
        }
        return nullptr;
    }

    std::uint32_t sets_ = 0;
    std::uint32_t ways_ = 0;
    std::uint32_t line_bytes_ = 64;
    bool writes_dirty_ = true;
    std::vector<Line> lines_;
    std::uint64_t touch_ctr_ = 0;
    LevelCounters stats_;
};

struct AccessRecord {
    std::uint64_t tick = 0;
    std::uint32_t core = 0;
    OpKind op = OpKind::Read;
    std::uint64_t addr = 0;
    ServiceLevel level = ServiceLevel::L1;
    std::uint64_t latency_cycles = 0;
    double energy_nj = 0.0;
};

/// Whole-machine driver: per-core L1/L2 in front of the shared banked LLC
/// and a fixed-latency main memory. Events run in trace order; reads block,
/// write-backs drain in the background through the WRQs, which is exactly
/// when the scheduling rule matters.
class Hierarchy {
public:
    explicit Hierarchy(const SimConfig& cfg) : cfg_(cfg), llc_(cfg) {
        cfg_.validate();
        for (std::uint32_t c = 0; c < cfg_.cores; ++c) {
            l1_.emplace_back(cfg_.l1.bytes, cfg_.l1.ways, cfg_.llc.line_bytes,
                             /*writes_dirty=*/false);
            l2_.emplace_back(cfg_.l2.bytes, cfg_.l2.ways, cfg_.llc.line_bytes,
                             /*writes_dirty=*/true);
        }
    }

    const SimConfig& config() const { return cfg_; }
    LlcController& llc() { return llc_; }
    const LlcController& llc() const { return llc_; }

    LevelCounters l1_totals() const { return total(l1_); }
    LevelCounters l2_totals() const { return total(l2_); }

    std::uint64_t events() const { return events_; }
    std::uint64_t latency_sum() const { return latency_sum_; }
    double energy_sum_nj() const { return energy_sum_nj_; }
    std::uint64_t end_cycles() const { return end_cycles_; }
    const std::array<std::uint64_t, 5>& level_counts() const { return level_counts_; }

    AccessRecord process(const AccessEvent& e) {
        if (e.size == 0 || e.size > cfg_.llc.line_bytes ||
            (e.addr / cfg_.llc.line_bytes) != ((e.addr + e.size - 1) / cfg_.llc.line_bytes))
            throw InputError("event at tick " + std::to_string(e.tick) +
                             " crosses a line boundary");
        const std::uint32_t core = e.core % cfg_.cores;
        const std::uint64_t line = line_address(e.addr, cfg_.llc.line_bytes);
        const std::uint64_t start = std::max(e.tick, clock_);

        AccessRecord rec;
        rec.tick = e.tick;
        rec.core = e.core;
        rec.op = e.op;
        rec.addr = e.addr;

        std::uint64_t complete = 0;
        if (e.op == OpKind::Read) {
            if (l1_[core].access(line, OpKind::Read)) {
                complete = start + cfg_.l1_hit_cycles;
                rec.level = ServiceLevel::L1;
            } else if (l2_[core].access(line, OpKind::Read)) {
                complete = start + cfg_.l1_hit_cycles + cfg_.l2_hit_cycles;
                rec.level = ServiceLevel::L2;
                fill_l1(core, line);
            } else {
                complete = fetch_through_llc(core, line, start, /*store=*/false, rec);
            }
        } else {
            // write-through L1: the store always continues to L2
            l1_[core].access(line, OpKind::Write);
            if (l2_[core].access(line, OpKind::Write)) {
                complete = start + cfg_.l1_hit_cycles + cfg_.l2_hit_cycles;
                rec.level = ServiceLevel::L2;
            } else {
                complete = fetch_through_llc(core, line, start, /*store=*/true, rec);
            }
        }

        clock_ = complete;
        end_cycles_ = std::max(end_cycles_, complete);
        rec.latency_cycles = complete - start;
        events_++;
        latency_sum_ += rec.latency_cycles;
        energy_sum_nj_ += rec.energy_nj;
        level_counts_[static_cast<std::size_t>(rec.level)]++;
        return rec;
    }

    /// Runs the whole trace; per-access records go to `sink` when given.
    template <typename Sink>
    void run(const Trace& trace, Sink&& sink) {
        for (const auto& e : trace) {
            sink(process(e));
            if (cfg_.stop_on_set_failure &&
                llc_.endurance().failures().first_failure_write_count)
                break;
        }
        finish();
    }

    void run(const Trace& trace) {
        run(trace, [](const AccessRecord&) {});
    }

    void finish() {
        end_cycles_ = std::max(end_cycles_, llc_.drain_all());
        llc_.check_conservation();
    }

    double amat_cycles() const {
        if (events_ == 0)
            throw InputError("no accesses: AMAT undefined");
        return double(latency_sum_) / double(events_);
    }
    double amat_ns() const { return amat_cycles() / cfg_.device.clock_ghz; }

    /// Every line in an upper level must live in the LLC too.
    bool inclusion_holds() const {
        bool ok = true;
        auto check = [&](std::uint64_t line_addr) {
            const AddrParts p = decompose(line_addr, cfg_.llc);
            if (!llc_.array().lookup(p.global_set, p.tag))
                ok = false;
        };
        for (const auto& c : l1_)
            c.for_each_valid(check);
        for (const auto& c : l2_)
            c.for_each_valid(check);
        return ok;
    }

private:
    static LevelCounters total(const std::vector<SimpleCache>& cs) {
        LevelCounters t;
        for (const auto& c : cs) {
            t.read_hits += c.stats().read_hits;
            t.read_misses += c.stats().read_misses;
            t.write_hits += c.stats().write_hits;
            t.write_misses += c.stats().write_misses;
        }
        return t;
    }

    void fill_l1(std::uint32_t core, std::uint64_t line) {
        l1_[core].fill(line, false); // write-through L1 victims are never dirty
    }

    void back_invalidate(const std::vector<LlcEvicted>& evictions) {
        for (const auto& ev : evictions) {
            bool upper_dirty = false;
            for (std::uint32_t c = 0; c < cfg_.cores; ++c) {
                l1_[c].invalidate(ev.line_addr);
                upper_dirty |= l2_[c].invalidate(ev.line_addr);
            }
            // a dirty upper copy rides the victim's write-back out to memory
            if (upper_dirty && !ev.dirty)
                llc_.note_upper_dirty_drop();
        }
    }

    std::uint64_t fetch_through_llc(std::uint32_t core, std::uint64_t line,
                                    std::uint64_t start, bool store, AccessRecord& rec) {
        const std::uint64_t t_arr =
            start + cfg_.l1_hit_cycles + cfg_.l2_hit_cycles + cfg_.llc_link_cycles;
        LlcOutcome out = llc_.demand_read(line, t_arr);
        back_invalidate(out.evictions);
        rec.level = out.level;
        rec.energy_nj += out.energy_nj;
        std::uint64_t complete = out.complete;

        // Wear from the fill (or a triggered swap) may have just killed the
        // line's own way; inclusion forbids caching it above in that case,
        // so the data bypasses straight to the core.
        const AddrParts lp = decompose(line, cfg_.llc);
        if (!llc_.array().lookup(lp.global_set, lp.tag)) {
            if (store)
                llc_.note_upper_dirty_drop(); // store data goes to memory
            return complete;
        }

        // L2 allocate; a displaced dirty line writes back into the LLC
        if (auto victim = l2_[core].fill(line, store)) {
            l1_[core].invalidate(victim->line_addr);
            if (victim->dirty) {
                LlcOutcome wb = llc_.demand_write(victim->line_addr, complete);
                // this may kill the freshly filled line's way, in which case
                // the eviction list already dropped it from L2 again
                back_invalidate(wb.evictions);
                rec.energy_nj += wb.energy_nj;
                complete = std::max(complete, wb.complete);
            }
        }
        if (!store && llc_.array().lookup(lp.global_set, lp.tag))
            fill_l1(core, line);
        return complete;
    }

    SimConfig cfg_;
    std::vector<SimpleCache> l1_;
    std::vector<SimpleCache> l2_;
    LlcController llc_;
    std::uint64_t clock_ = 0;
    std::uint64_t events_ = 0;
    std::uint64_t latency_sum_ = 0;
    double energy_sum_nj_ = 0.0;
    std::uint64_t end_cycles_ = 0;
    std::array<std::uint64_t, 5> level_counts_{};
};

} // namespace sttsim
