#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "sttsim/cache.hpp"
#include "sttsim/common.hpp"

namespace sttsim {

enum class Domain : std::uint8_t { Hard, Soft };

/// ECC corrects up to 5 faulty bits; the 6th kills the line.
inline constexpr std::uint32_t kEccCorrectableBits = 5;
/// A set is failed once more than four of its ways are dead.
inline constexpr std::uint32_t kSetFailDeadWays = 4;

struct EnduranceConfig {
    // max writes per cell, by domain type
    std::uint64_t hard_limit = 100000000000ULL;
    std::uint64_t soft_limit = 100000000000ULL;
    std::uint64_t slc_limit = 1000000000000ULL;
    double variation_sigma = 0.0; // lognormal sigma; 0 = every cell identical
    std::uint64_t seed = 1;
};

struct DeathEvent {
    std::uint32_t global_set = 0;
    std::uint32_t slot = 0; // pair index (stripped) or way (plain)
    Domain domain = Domain::Soft;
    bool set_failed = false;
};

struct FailureRecord {
    std::uint64_t dead_lines = 0;
    std::set<std::uint32_t> failed_sets;
    std::optional<std::uint64_t> first_failure_write_count; // total writes at first set failure
    std::optional<double> first_failure_ns;                 // sim time at first set failure
};

struct LifetimeEstimate {
    double seconds = std::numeric_limits<double>::infinity();
    std::optional<std::uint32_t> limiting_set;
};

/// Tracks per-domain write wear for every line in one LLC array, marks
/// cells faulty once their write budget is spent, and kills lines whose
/// faulty bits exceed what ECC can hide.
///
/// Write counts are per line-domain (all cells of a domain switch together
/// on a line write); endurance limits are per cell. With zero variation all
/// cells of a line share one limit and the count alone decides wear-out;
/// with variation each line draws a seeded set of per-cell limits, hashed
/// from its physical position so results do not depend on access order.
class EnduranceModel {
public:
    EnduranceModel() = default;

    EnduranceModel(ArrayKind kind, const CacheGeometry& geom, EnduranceConfig cfg)
        : kind_(kind), geom_(geom), cfg_(cfg) {
        slots_per_set_ = kind == ArrayKind::StrippedMlc ? geom.max_ways / 2 : geom.max_ways;
        wear_.resize(std::size_t(geom.total_sets()) * slots_per_set_ * domains_per_slot());
        dead_ways_.resize(geom.total_sets(), 0);
    }

    std::uint32_t domains_per_slot() const {
        return kind_ == ArrayKind::StrippedMlc ? 2 : 1;
    }

    std::uint64_t limit_for(Domain d) const {
        switch (kind_) {
        case ArrayKind::SlcArray:
            return cfg_.slc_limit;
        case ArrayKind::StackedMlc:
            // a stacked line spans both domains of its cells and dies with
            // the weaker one
            return std::min(cfg_.hard_limit, cfg_.soft_limit);
        case ArrayKind::StrippedMlc:
            break;
        }
        return d == Domain::Hard ? cfg_.hard_limit : cfg_.soft_limit;
    }

    std::uint64_t writes(std::uint32_t gset, std::uint32_t slot, Domain d) const {
        return wear_[index(gset, slot, d)].writes;
    }
    std::uint32_t faulty_bits(std::uint32_t gset, std::uint32_t slot, Domain d) const {
        return faulty_bits_of(wear_[index(gset, slot, d)], gset, slot, d);
    }
    bool line_dead(std::uint32_t gset, std::uint32_t slot, Domain d) const {
        return faulty_bits(gset, slot, d) > kEccCorrectableBits;
    }
    std::uint32_t dead_ways_in_set(std::uint32_t gset) const { return dead_ways_[gset]; }
    bool set_failed(std::uint32_t gset) const { return dead_ways_[gset] > kSetFailDeadWays; }

    std::uint64_t total_writes() const { return total_writes_; }
    const FailureRecord& failures() const { return failures_; }

    /// Overrides the per-cell limits of one line; test hook for forcing a
    /// precise fault order.
    void force_cell_limits(std::uint32_t gset, std::uint32_t slot, Domain d,
                           std::vector<std::uint64_t> limits) {
        std::sort(limits.begin(), limits.end());
        wear_[index(gset, slot, d)].cell_limits = std::move(limits);
    }

    /// One line write into (set, slot, domain) at simulated time `now_ns`.
    /// Returns the death event when this write kills the line.
    std::optional<DeathEvent> record_write(std::uint32_t gset, std::uint32_t slot, Domain d,
                                           double now_ns) {
        WearEntry& w = wear_[index(gset, slot, d)];
        total_writes_++;
        w.writes++;
        if (w.dead)
            return std::nullopt;
        if (faulty_bits_of(w, gset, slot, d) <= kEccCorrectableBits)
            return std::nullopt;

        w.dead = true;
        failures_.dead_lines++;
        dead_ways_[gset]++;
        DeathEvent ev{gset, slot, d, false};
        if (set_failed(gset) && !failures_.failed_sets.count(gset)) {
            failures_.failed_sets.insert(gset);
            ev.set_failed = true;
            if (!failures_.first_failure_write_count) {
                failures_.first_failure_write_count = total_writes_;
                failures_.first_failure_ns = now_ns;
            }
        }
        return ev;
    }

    /// Linear lifetime extrapolation from an observation window. Each line
    /// keeps writing at its observed rate; a line dies when its cumulative
    /// writes pass the limit of its 6th-weakest cell, and a set fails with
    /// its 5th way death. Returns the earliest projected set failure.
    LifetimeEstimate estimate_lifetime(double window_seconds) const {
        LifetimeEstimate est;
        if (window_seconds <= 0.0)
            return est;
        const std::uint32_t sets = geom_.total_sets();
        std::vector<double> deaths;
        for (std::uint32_t gs = 0; gs < sets; ++gs) {
            deaths.clear();
            for (std::uint32_t slot = 0; slot < slots_per_set_; ++slot) {
                for (std::uint32_t di = 0; di < domains_per_slot(); ++di) {
                    const Domain d = di == 0 && domains_per_slot() == 2 ? Domain::Hard
                                                                        : Domain::Soft;
                    const WearEntry& w = wear_[index(gs, slot, d)];
                    const double rate = double(w.writes) / window_seconds;
                    if (rate <= 0.0) {
                        deaths.push_back(std::numeric_limits<double>::infinity());
                        continue;
                    }
                    deaths.push_back(double(killing_write_count(w, gs, slot, d)) / rate);
                }
            }
            // set failure = (kSetFailDeadWays+1)-th earliest way death
            if (deaths.size() <= kSetFailDeadWays)
                continue;
            std::nth_element(deaths.begin(), deaths.begin() + kSetFailDeadWays, deaths.end());
            const double t = deaths[kSetFailDeadWays];
            if (t < est.seconds) {
                est.seconds = t;
                est.limiting_set = gs;
            }
        }
        return est;
    }

private:
    struct WearEntry {
        std::uint64_t writes = 0;
        bool dead = false;
        // sorted per-cell limits; empty means "uniform at the domain limit".
        // mutable: drawn lazily on first inspection when variation is on.
        mutable std::vector<std::uint64_t> cell_limits;
    };

    std::size_t index(std::uint32_t gset, std::uint32_t slot, Domain d) const {
        std::size_t i = (std::size_t(gset) * slots_per_set_ + slot) * domains_per_slot();
        if (domains_per_slot() == 2 && d == Domain::Soft)
            i += 1;
        return i;
    }

    std::uint32_t faulty_bits_of(const WearEntry& w, std::uint32_t gset, std::uint32_t slot,
                                 Domain d) const {
        if (!w.cell_limits.empty()) {
            // faulty iff writes > limit
            auto it = std::lower_bound(w.cell_limits.begin(), w.cell_limits.end(), w.writes);
            return static_cast<std::uint32_t>(it - w.cell_limits.begin());
        }
        if (cfg_.variation_sigma > 0.0) {
            // materialize lazily so untouched lines cost nothing
            w.cell_limits = draw_limits(gset, slot, d);
            return faulty_bits_of(w, gset, slot, d);
        }
        return w.writes > limit_for(d) ? geom_.line_bits() : 0;
    }

    /// Write count whose arrival kills the line (first count with more
    /// than kEccCorrectableBits cells over budget).
    std::uint64_t killing_write_count(const WearEntry& w, std::uint32_t gset,
                                      std::uint32_t slot, Domain d) const {
        if (!w.cell_limits.empty() || cfg_.variation_sigma > 0.0) {
            if (w.cell_limits.empty())
                w.cell_limits = draw_limits(gset, slot, d);
            if (w.cell_limits.size() <= kEccCorrectableBits)
                return std::numeric_limits<std::uint64_t>::max();
            return w.cell_limits[kEccCorrectableBits] + 1;
        }
        return limit_for(d) + 1;
    }

    std::vector<std::uint64_t> draw_limits(std::uint32_t gset, std::uint32_t slot,
                                           Domain d) const {
        const double mean = double(limit_for(d));
        std::vector<std::uint64_t> limits(geom_.line_bits());
        Rng rng(cfg_.seed ^ (std::uint64_t(gset) << 24) ^ (std::uint64_t(slot) << 4) ^
                (d == Domain::Hard ? 0x2ULL : 0x3ULL));
        rng.next();
        for (auto& l : limits) {
            // Box-Muller from two deterministic uniforms
            double u1 = std::max(rng.next_double(), 1e-12);
            double u2 = rng.next_double();
            double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            double v = mean * std::exp(cfg_.variation_sigma * z -
                                       0.5 * cfg_.variation_sigma * cfg_.variation_sigma);
            l = static_cast<std::uint64_t>(std::max(v, 1.0));
        }
        std::sort(limits.begin(), limits.end());
        return limits;
    }

    ArrayKind kind_ = ArrayKind::StrippedMlc;
    CacheGeometry geom_;
    EnduranceConfig cfg_;
    std::uint32_t slots_per_set_ = 0;
    std::vector<WearEntry> wear_;
    std::vector<std::uint32_t> dead_ways_;
    std::uint64_t total_writes_ = 0;
    FailureRecord failures_;
};

} // namespace sttsim
