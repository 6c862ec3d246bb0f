#pragma once

#include <bit>
#include <cstdint>

#include "sttsim/common.hpp"

namespace sttsim {

inline bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline std::uint32_t log2_exact(std::uint64_t v) {
    return static_cast<std::uint32_t>(std::countr_zero(v));
}

/// Physical shape of one cache level. `max_ways` counts logical ways at
/// full expansion; a stripped array pairs them two to a cell row, so
/// min_ways = max_ways/2 is the all-merged floor.
struct CacheGeometry {
    std::uint64_t total_bytes = 512 * 1024;
    std::uint32_t line_bytes = 64;
    std::uint32_t min_ways = 8;
    std::uint32_t max_ways = 16;
    std::uint32_t banks = 4;

    std::uint32_t sets_per_bank() const {
        return static_cast<std::uint32_t>(total_bytes /
                                          (std::uint64_t(line_bytes) * max_ways * banks));
    }
    std::uint32_t total_sets() const { return sets_per_bank() * banks; }
    std::uint32_t line_bits() const { return line_bytes * 8; }

    std::uint32_t offset_bits() const { return log2_exact(line_bytes); }
    std::uint32_t bank_bits() const { return log2_exact(banks); }
    std::uint32_t set_bits() const { return log2_exact(sets_per_bank()); }

    void validate(bool stripped) const {
        if (!is_pow2(line_bytes))
            throw InputError("line_bytes must be a power of two");
        if (!is_pow2(banks))
            throw InputError("bank count must be a power of two");
        if (max_ways == 0 || min_ways == 0 || min_ways > max_ways)
            throw InputError("need 0 < min_ways <= max_ways");
        if (stripped) {
            if (max_ways % 2 != 0)
                throw InputError("stripped arrays need an even way count");
            if (min_ways != max_ways / 2)
                throw InputError("stripped arrays pair ways: min_ways must be max_ways/2");
        }
        std::uint64_t denom = std::uint64_t(line_bytes) * max_ways * banks;
        if (total_bytes == 0 || total_bytes % denom != 0)
            throw InputError("capacity must divide evenly into lines x ways x banks");
        if (!is_pow2(sets_per_bank()))
            throw InputError("set count must be a power of two");
    }
};

/// Address fields, sliced LSB-up as offset | bank | set | tag. The bank
/// bits are the low bits of the global set index, so consecutive lines
/// interleave across banks.
struct AddrParts {
    std::uint32_t offset = 0;
    std::uint32_t bank = 0;
    std::uint32_t set = 0;       // set within its bank
    std::uint64_t tag = 0;
    std::uint32_t global_set = 0; // (set << bank_bits) | bank
};

inline AddrParts decompose(std::uint64_t addr, const CacheGeometry& g) {
    AddrParts p;
    const std::uint32_t ob = g.offset_bits();
    const std::uint32_t bb = g.bank_bits();
    const std::uint32_t sb = g.set_bits();
    p.offset = static_cast<std::uint32_t>(addr & (g.line_bytes - 1));
    p.bank = static_cast<std::uint32_t>((addr >> ob) & (g.banks - 1));
    p.set = static_cast<std::uint32_t>((addr >> (ob + bb)) & (g.sets_per_bank() - 1));
    p.tag = addr >> (ob + bb + sb);
    p.global_set = (p.set << bb) | p.bank;
    return p;
}

/// Rebuild the base address of a line from its placement; used for
/// back-invalidation of upper levels when an LLC line is evicted.
inline std::uint64_t compose_line_addr(std::uint64_t tag, std::uint32_t global_set,
                                       const CacheGeometry& g) {
    return (tag << (g.offset_bits() + g.bank_bits() + g.set_bits())) |
           (std::uint64_t(global_set) << g.offset_bits());
}

inline std::uint64_t line_address(std::uint64_t addr, std::uint32_t line_bytes) {
    return addr & ~std::uint64_t(line_bytes - 1);
}

} // namespace sttsim
