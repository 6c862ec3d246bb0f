#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sttsim/device.hpp"
#include "sttsim/geometry.hpp"

namespace sttsim {

enum class ArrayKind : std::uint8_t {
    StrippedMlc, // paired FRHE/SRLE lines, pairs mergeable to SLC mode
    StackedMlc,  // plain lines, every access pays both domains
    SlcArray,    // plain single-level lines
};

inline const char* to_string(ArrayKind k) {
    switch (k) {
    case ArrayKind::StrippedMlc: return "stripped_mlc";
    case ArrayKind::StackedMlc: return "stacked_mlc";
    case ArrayKind::SlcArray: return "slc";
    }
    return "?";
}

enum class LineRole : std::uint8_t { Frhe, Srle, Slc, Stacked };

inline const char* to_string(LineRole r) {
    switch (r) {
    case LineRole::Frhe: return "frhe";
    case LineRole::Srle: return "srle";
    case LineRole::Slc: return "slc";
    case LineRole::Stacked: return "stacked";
    }
    return "?";
}

inline TransactionKind kind_for(LineRole role, OpKind op) {
    switch (role) {
    case LineRole::Frhe: return op == OpKind::Read ? TransactionKind::FrheRead : TransactionKind::FrheWrite;
    case LineRole::Srle: return op == OpKind::Read ? TransactionKind::SrleRead : TransactionKind::SrleWrite;
    case LineRole::Slc: return op == OpKind::Read ? TransactionKind::SlcRead : TransactionKind::SlcWrite;
    case LineRole::Stacked: return op == OpKind::Read ? TransactionKind::StackedRead : TransactionKind::StackedWrite;
    }
    return TransactionKind::SlcRead;
}

struct LineState {
    bool valid = false;
    bool dirty = false;
    bool dead = false; // worn out; permanently unusable
    std::uint64_t tag = 0;
    std::uint64_t last_touch = 0;
    std::uint32_t epoch_reads = 0;
    std::uint32_t epoch_writes = 0;

    void invalidate() {
        valid = false;
        dirty = false;
        tag = 0;
    }
};

enum class PairMode : std::uint8_t { Mlc, Slc };

/// One physical cell-row pair. In MLC mode it holds two logical lines:
/// the FRHE line in the hard domains and the SRLE line in the soft domains.
/// In SLC mode the hard domains are pinned at '0' and the single merged
/// line lives in the soft domains (kept in the srle slot).
struct PairState {
    PairMode mode = PairMode::Mlc;
    LineState frhe;
    LineState srle;
    std::uint32_t scnt = 0;   // swap countdown
    std::uint32_t swcnt = 1;  // saturating swap weight
    std::uint64_t hard_writes = 0; // cumulative domain write pulses
    std::uint64_t soft_writes = 0;
    std::uint64_t activations = 0; // times grown to MLC (wear-leveling stat)

    std::uint32_t active_ways() const {
        if (mode == PairMode::Mlc)
            return (frhe.dead ? 0u : 1u) + (srle.dead ? 0u : 1u);
        return srle.dead ? 0u : 1u;
    }
};

struct SetControl {
    std::uint32_t active_ways = 0;
    std::uint64_t mcnt = 0;    // miss countdown, floor 0
    std::uint32_t wcnt = 0;    // tracks active associativity
    std::uint32_t grow_ptr = 0; // circular cursor over pairs
};

struct SetStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t grows = 0;
    std::uint64_t shrinks = 0;
    std::uint64_t swaps = 0;
};

struct CacheSet {
    std::vector<PairState> pairs; // stripped arrays
    std::vector<LineState> lines; // plain arrays
    SetControl ctl;
    SetStats stats;
};

/// Where a line lives: pair index + role for stripped arrays, way index
/// for plain ones (role Slc or Stacked).
struct WayRef {
    std::uint32_t index = 0;
    LineRole role = LineRole::Slc;
};

struct Eviction {
    std::uint64_t tag = 0;
    bool dirty = false;
    LineRole role = LineRole::Slc;
};

/// Set-associative data array with LRU over the currently active ways.
/// Pure mechanics: policy decisions (when to grow/shrink/swap) and cost
/// accounting beyond per-access charging live above this class.
class CacheArray {
public:
    CacheArray() = default;

    CacheArray(ArrayKind kind, const CacheGeometry& geom, PairMode initial_mode)
        : kind_(kind), geom_(geom) {
        geom_.validate(kind == ArrayKind::StrippedMlc);
        sets_.resize(geom_.total_sets());
        for (auto& s : sets_) {
            if (kind_ == ArrayKind::StrippedMlc) {
                s.pairs.resize(geom_.max_ways / 2);
                for (auto& p : s.pairs)
                    p.mode = initial_mode;
            } else {
                s.lines.resize(geom_.max_ways);
            }
            s.ctl.active_ways = active_ways_of(s);
            s.ctl.wcnt = s.ctl.active_ways;
        }
    }

    ArrayKind kind() const { return kind_; }
    const CacheGeometry& geometry() const { return geom_; }
    std::uint32_t pairs_per_set() const { return geom_.max_ways / 2; }

    CacheSet& set(std::uint32_t global_set) { return sets_[global_set]; }
    const CacheSet& set(std::uint32_t global_set) const { return sets_[global_set]; }
    std::uint32_t num_sets() const { return static_cast<std::uint32_t>(sets_.size()); }

    std::uint64_t touch_now() { return ++touch_counter_; }

    std::uint32_t active_ways_of(const CacheSet& s) const {
        std::uint32_t n = 0;
        if (kind_ == ArrayKind::StrippedMlc) {
            for (const auto& p : s.pairs)
                n += p.active_ways();
        } else {
            for (const auto& l : s.lines)
                n += l.dead ? 0 : 1;
        }
        return n;
    }

    LineState& line_at(CacheSet& s, const WayRef& w) {
        if (kind_ == ArrayKind::StrippedMlc)
            return w.role == LineRole::Frhe ? s.pairs[w.index].frhe : s.pairs[w.index].srle;
        return s.lines[w.index];
    }
    const LineState& line_at(const CacheSet& s, const WayRef& w) const {
        if (kind_ == ArrayKind::StrippedMlc)
            return w.role == LineRole::Frhe ? s.pairs[w.index].frhe : s.pairs[w.index].srle;
        return s.lines[w.index];
    }

    /// Scans only the active ways of the set. A merged pair exposes one
    /// line; a deactivated (merged-away) hard-domain way is invisible.
    std::optional<WayRef> lookup(std::uint32_t global_set, std::uint64_t tag) const {
        const CacheSet& s = sets_[global_set];
        if (kind_ == ArrayKind::StrippedMlc) {
            for (std::uint32_t i = 0; i < s.pairs.size(); ++i) {
                const PairState& p = s.pairs[i];
                if (p.mode == PairMode::Mlc) {
                    if (p.frhe.valid && !p.frhe.dead && p.frhe.tag == tag)
                        return WayRef{i, LineRole::Frhe};
                    if (p.srle.valid && !p.srle.dead && p.srle.tag == tag)
                        return WayRef{i, LineRole::Srle};
                } else {
                    if (p.srle.valid && !p.srle.dead && p.srle.tag == tag)
                        return WayRef{i, LineRole::Slc};
                }
            }
            return std::nullopt;
        }
        const LineRole role = kind_ == ArrayKind::SlcArray ? LineRole::Slc : LineRole::Stacked;
        for (std::uint32_t i = 0; i < s.lines.size(); ++i) {
            const LineState& l = s.lines[i];
            if (l.valid && !l.dead && l.tag == tag)
                return WayRef{i, role};
        }
        return std::nullopt;
    }

    /// Victim slot for a fill: first invalid active way (so a freshly grown
    /// way catches the next miss), else the LRU valid line. Dead ways and
    /// merged-away slots are never candidates; a set whose every way has
    /// worn out yields nothing.
    std::optional<WayRef> victim_for_fill(std::uint32_t global_set) const {
        const CacheSet& s = sets_[global_set];
        std::optional<WayRef> lru;
        std::uint64_t lru_touch = ~std::uint64_t(0);
        auto consider = [&](const LineState& l, WayRef ref) -> std::optional<WayRef> {
            if (l.dead)
                return std::nullopt;
            if (!l.valid)
                return ref; // immediate pick
            if (l.last_touch < lru_touch) {
                lru_touch = l.last_touch;
                lru = ref;
            }
            return std::nullopt;
        };
        if (kind_ == ArrayKind::StrippedMlc) {
            for (std::uint32_t i = 0; i < s.pairs.size(); ++i) {
                const PairState& p = s.pairs[i];
                if (p.mode == PairMode::Mlc) {
                    if (auto r = consider(p.frhe, {i, LineRole::Frhe}))
                        return *r;
                    if (auto r = consider(p.srle, {i, LineRole::Srle}))
                        return *r;
                } else {
                    if (auto r = consider(p.srle, {i, LineRole::Slc}))
                        return *r;
                }
            }
        } else {
            const LineRole role = kind_ == ArrayKind::SlcArray ? LineRole::Slc : LineRole::Stacked;
            for (std::uint32_t i = 0; i < s.lines.size(); ++i)
                if (auto r = consider(s.lines[i], {i, role}))
                    return *r;
        }
        return lru;
    }

    /// Places a block into the victim slot. The caller charges the fill
    /// write; this only moves state and surfaces the displaced victim.
    std::optional<Eviction> fill(std::uint32_t global_set, const WayRef& victim,
                                 std::uint64_t tag, bool dirty) {
        CacheSet& s = sets_[global_set];
        LineState& l = line_at(s, victim);
        std::optional<Eviction> ev;
        if (l.valid)
            ev = Eviction{l.tag, l.dirty, victim.role};
        l.valid = true;
        l.dirty = dirty;
        l.tag = tag;
        l.last_touch = touch_now();
        l.epoch_reads = 0;
        l.epoch_writes = 0;
        return ev;
    }

    void touch(std::uint32_t global_set, const WayRef& w, OpKind op) {
        CacheSet& s = sets_[global_set];
        LineState& l = line_at(s, w);
        l.last_touch = touch_now();
        if (op == OpKind::Read)
            l.epoch_reads++;
        else {
            l.epoch_writes++;
            l.dirty = true;
        }
    }

    /// Exchanges the contents of a pair's two lines. Tags, dirty bits and
    /// counters travel with the content; each line additionally counts one
    /// write for the movement itself.
    void swap_pair(std::uint32_t global_set, std::uint32_t pair_idx) {
        CacheSet& s = sets_[global_set];
        PairState& p = s.pairs[pair_idx];
        require_invariant(p.mode == PairMode::Mlc, "swap on a merged pair");
        std::swap(p.frhe, p.srle);
        p.frhe.epoch_writes++;
        p.srle.epoch_writes++;
        s.stats.swaps++;
    }

    struct MergeResult {
        std::optional<Eviction> evicted;
        bool survivor_relocated = false; // survivor moved from hard to soft domains
    };

    /// Collapses an MLC pair to SLC mode: the pair-LRU line is evicted,
    /// the survivor ends up in the soft domains and the hard domains are
    /// forced to '0'. Cost charging (one hard-line write, plus a soft-line
    /// write when the survivor relocates) is the caller's job.
    MergeResult merge_pair(std::uint32_t global_set, std::uint32_t pair_idx) {
        CacheSet& s = sets_[global_set];
        PairState& p = s.pairs[pair_idx];
        require_invariant(p.mode == PairMode::Mlc, "merge on a merged pair");
        MergeResult res;

        bool keep_frhe;
        if (!p.frhe.valid || p.frhe.dead)
            keep_frhe = false;
        else if (!p.srle.valid || p.srle.dead)
            keep_frhe = true;
        else
            keep_frhe = p.frhe.last_touch > p.srle.last_touch; // evict pair-LRU

        LineState& victim = keep_frhe ? p.srle : p.frhe;
        if (victim.valid)
            res.evicted = Eviction{victim.tag, victim.dirty,
                                   keep_frhe ? LineRole::Srle : LineRole::Frhe};
        if (keep_frhe) {
            bool srle_dead = p.srle.dead;
            p.srle = p.frhe;
            p.srle.dead = srle_dead; // deadness is physical, stays with the domain
            res.survivor_relocated = true;
        }
        p.frhe.invalidate();
        p.mode = PairMode::Slc;
        s.stats.shrinks++;
        return res;
    }

    /// Expands a merged pair back to MLC mode. The merged line stays in the
    /// soft domains as the SRLE line; the hard-domain way comes up empty and
    /// is the natural target of the next fill.
    void split_pair(std::uint32_t global_set, std::uint32_t pair_idx) {
        CacheSet& s = sets_[global_set];
        PairState& p = s.pairs[pair_idx];
        require_invariant(p.mode == PairMode::Slc, "split on an expanded pair");
        p.mode = PairMode::Mlc;
        p.frhe.invalidate();
        p.activations++;
        s.stats.grows++;
    }

private:
    ArrayKind kind_ = ArrayKind::StrippedMlc;
    CacheGeometry geom_;
    std::vector<CacheSet> sets_;
    std::uint64_t touch_counter_ = 0;
};

} // namespace sttsim
