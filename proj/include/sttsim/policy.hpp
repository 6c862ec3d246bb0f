#pragma once

#include <cstdint>
#include <optional>

#include "sttsim/cache.hpp"

namespace sttsim {

struct PolicyParams {
    std::uint64_t epoch_len = 100000; // LLC accesses per epoch, global
    std::uint32_t n_assoc = 4;        // associativity threshold multiplier
    std::uint32_t n_swap = 4;         // swap threshold multiplier
    std::uint32_t m_swap = 256;       // SWcnt saturation (8-bit counter)
    bool assoc_enabled = true;
    bool swap_enabled = true;

    void validate() const {
        if (epoch_len == 0 || n_assoc == 0 || n_swap == 0 || m_swap == 0)
            throw InputError("policy parameters must be strictly positive");
    }
};

struct GrowAction {
    std::uint32_t pair = 0;
};
struct ShrinkAction {
    std::uint32_t pair = 0;
};
struct SwapAction {
    std::uint32_t pair = 0;
};

/// Per-set associativity control and per-pair swap control.
///
/// Grow: each set-local miss decrements Mcnt; at zero the set converts the
/// SLC pair under the circular pointer back to MLC mode, gaining one way.
/// The pointer advance makes consecutive grows pick different pairs, which
/// spreads activation wear round-robin.
///
/// Shrink: at an epoch boundary a set whose Mcnt stayed above
/// min_ways x N merges one MLC pair down to SLC mode.
///
/// Swap: a pair hit the "wrong way round" (write into the hard-domain line
/// or read from the soft-domain line) decrements Scnt; at zero the two
/// lines exchange places. SWcnt makes repeat offenders wait longer.
class AdaptiveController {
public:
    AdaptiveController() = default;
    AdaptiveController(PolicyParams params, std::uint32_t min_ways, std::uint32_t max_ways)
        : params_(params), min_ways_(min_ways), max_ways_(max_ways) {
        params_.validate();
    }

    const PolicyParams& params() const { return params_; }

    /// Epoch boundary, phase 2: reinitialize every counter. Scnt picks up
    /// the old SWcnt before SWcnt resets to 1.
    void on_epoch_start(CacheSet& s) const {
        s.ctl.mcnt = std::uint64_t(s.ctl.wcnt) * params_.n_assoc;
        for (auto& p : s.pairs) {
            p.scnt = p.swcnt * params_.n_swap;
            p.swcnt = 1;
            p.frhe.epoch_reads = p.frhe.epoch_writes = 0;
            p.srle.epoch_reads = p.srle.epoch_writes = 0;
        }
        for (auto& l : s.lines)
            l.epoch_reads = l.epoch_writes = 0;
    }

    /// Set-local miss: count down and, at zero, pick the growth pair.
    /// Mcnt re-arms from the post-grow Wcnt either way.
    std::optional<GrowAction> on_miss(CacheSet& s) const {
        if (!params_.assoc_enabled)
            return std::nullopt;
        if (s.ctl.mcnt > 0)
            s.ctl.mcnt--;
        if (s.ctl.mcnt > 0)
            return std::nullopt;

        std::optional<GrowAction> act;
        if (s.ctl.active_ways < max_ways_) {
            if (auto pair = next_growable(s)) {
                act = GrowAction{*pair};
                s.ctl.grow_ptr = (*pair + 1) % std::uint32_t(s.pairs.size());
                s.ctl.active_ways++;
                s.ctl.wcnt++;
            }
        }
        s.ctl.mcnt = std::uint64_t(s.ctl.wcnt) * params_.n_assoc;
        return act;
    }

    /// Epoch boundary, phase 1: decide whether this set gives a way back.
    std::optional<ShrinkAction> shrink_check(CacheSet& s) const {
        if (!params_.assoc_enabled)
            return std::nullopt;
        if (s.ctl.mcnt <= std::uint64_t(min_ways_) * params_.n_assoc)
            return std::nullopt;
        if (s.ctl.active_ways <= min_ways_)
            return std::nullopt;
        auto pair = shrink_candidate(s);
        if (!pair)
            return std::nullopt;
        s.ctl.active_ways--;
        s.ctl.wcnt--;
        return ShrinkAction{*pair};
    }

    /// Hit on an MLC pair. Qualifying events: FRHE written, SRLE read.
    std::optional<SwapAction> on_hit(CacheSet& s, std::uint32_t pair_idx, LineRole role,
                                     OpKind op) const {
        if (!params_.swap_enabled)
            return std::nullopt;
        PairState& p = s.pairs[pair_idx];
        if (p.mode != PairMode::Mlc)
            return std::nullopt;
        const bool qualifying = (role == LineRole::Frhe && op == OpKind::Write) ||
                                (role == LineRole::Srle && op == OpKind::Read);
        if (!qualifying)
            return std::nullopt;
        if (p.scnt > 0)
            p.scnt--;
        if (p.scnt > 0)
            return std::nullopt;
        // both lines must be movable for a content exchange
        if (p.frhe.dead || p.srle.dead)
            return std::nullopt;
        p.swcnt = std::min(p.swcnt + 1, params_.m_swap);
        p.scnt = p.swcnt * params_.n_swap;
        return SwapAction{pair_idx};
    }

    /// A miss filled into this pair: its swap history restarts.
    void on_pair_fill(PairState& p) const {
        p.swcnt = 1;
        p.scnt = params_.n_swap;
    }

private:
    /// Next SLC-mode pair at or after the circular pointer whose hard
    /// domain can still be brought back.
    std::optional<std::uint32_t> next_growable(const CacheSet& s) const {
        const auto n = std::uint32_t(s.pairs.size());
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t idx = (s.ctl.grow_ptr + i) % n;
            const PairState& p = s.pairs[idx];
            if (p.mode == PairMode::Slc && !p.frhe.dead)
                return idx;
        }
        return std::nullopt;
    }

    /// The MLC pair holding the set's least-recent line; a pair with an
    /// invalid line counts as holding the oldest line of all.
    std::optional<std::uint32_t> shrink_candidate(const CacheSet& s) const {
        std::optional<std::uint32_t> best;
        std::uint64_t best_touch = ~std::uint64_t(0);
        for (std::uint32_t i = 0; i < s.pairs.size(); ++i) {
            const PairState& p = s.pairs[i];
            if (p.mode != PairMode::Mlc || p.srle.dead)
                continue;
            std::uint64_t t;
            if (!p.frhe.valid || !p.srle.valid)
                t = 0; // an empty slot is trivially the LRU
            else
                t = std::min(p.frhe.last_touch, p.srle.last_touch);
            if (t < best_touch || (t == best_touch && !best)) {
                best_touch = t;
                best = i;
            }
        }
        return best;
    }

    PolicyParams params_;
    std::uint32_t min_ways_ = 8;
    std::uint32_t max_ways_ = 16;
};

} // namespace sttsim
