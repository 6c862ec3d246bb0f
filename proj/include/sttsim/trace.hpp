#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sttsim/common.hpp"
#include "sttsim/geometry.hpp"

namespace sttsim {

struct AccessEvent {
    std::uint64_t tick = 0;
    std::uint32_t core = 0;
    OpKind op = OpKind::Read;
    std::uint64_t addr = 0;
    std::uint32_t size = 8;

    bool operator==(const AccessEvent&) const = default;
};

using Trace = std::vector<AccessEvent>;

inline std::uint64_t trace_checksum(const Trace& t) {
    Fnv1a h;
    for (const auto& e : t) {
        h.update_value(e.tick);
        h.update_value(e.core);
        std::uint8_t op = e.op == OpKind::Read ? 0 : 1;
        h.update_value(op);
        h.update_value(e.addr);
        h.update_value(e.size);
    }
    return h.hash;
}

// ---------------------------------------------------------------------------
// Text format: one access per line, "tick core op addr size" with op R or W
// and addr in hex. '#' starts a comment, blank lines are skipped. Ticks must
// be nondecreasing and an access may not straddle a line boundary.
// ---------------------------------------------------------------------------

inline Trace parse_trace(std::istream& in, std::uint32_t line_bytes = 64) {
    Trace out;
    std::string line;
    std::uint64_t line_no = 0;
    std::uint64_t prev_tick = 0;
    bool first = true;

    auto fail = [&](const std::string& why) {
        throw InputError("trace line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string tick_s, core_s, op_s, addr_s, size_s;
        if (!(ls >> tick_s))
            continue; // blank or comment-only
        if (!(ls >> core_s >> op_s >> addr_s >> size_s))
            fail("expected 'tick core op addr size'");
        std::string extra;
        if (ls >> extra)
            fail("trailing garbage '" + extra + "'");

        AccessEvent e;
        try {
            e.tick = std::stoull(tick_s);
            e.core = static_cast<std::uint32_t>(std::stoul(core_s));
            e.addr = std::stoull(addr_s, nullptr, 16);
            e.size = static_cast<std::uint32_t>(std::stoul(size_s));
        } catch (const std::exception&) {
            fail("unparsable field");
        }
        if (op_s == "R")
            e.op = OpKind::Read;
        else if (op_s == "W")
            e.op = OpKind::Write;
        else
            fail("op must be R or W, got '" + op_s + "'");
        if (e.size == 0 || e.size > line_bytes)
            fail("size must be in [1, line_bytes]");
        if ((e.addr / line_bytes) != ((e.addr + e.size - 1) / line_bytes))
            fail("access crosses a line boundary");
        if (!first && e.tick < prev_tick)
            fail("ticks must be nondecreasing");
        prev_tick = e.tick;
        first = false;
        out.push_back(e);
    }
    return out;
}

inline void emit_trace(const Trace& t, std::ostream& out) {
    for (const auto& e : t) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%llu %u %s 0x%llx %u\n",
                      (unsigned long long)e.tick, e.core, to_string(e.op),
                      (unsigned long long)e.addr, e.size);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Binary variant for large traces. Little-endian, length-prefixed:
//   magic "STTRACE1" (8 bytes), u64 record count, then per record
//   u64 tick, u32 core, u8 op (0=R 1=W), u64 addr, u32 size.
// ---------------------------------------------------------------------------

namespace detail {
template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        b[i] = static_cast<unsigned char>((std::uint64_t(v) >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}
template <typename T>
bool get_le(std::istream& in, T& v) {
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(b), sizeof(T)))
        return false;
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        acc |= std::uint64_t(b[i]) << (8 * i);
    v = static_cast<T>(acc);
    return true;
}
} // namespace detail

inline constexpr char kTraceMagic[8] = {'S', 'T', 'T', 'R', 'A', 'C', 'E', '1'};

inline void write_binary_trace(const Trace& t, std::ostream& out) {
    out.write(kTraceMagic, 8);
    detail::put_le<std::uint64_t>(out, t.size());
    for (const auto& e : t) {
        detail::put_le<std::uint64_t>(out, e.tick);
        detail::put_le<std::uint32_t>(out, e.core);
        detail::put_le<std::uint8_t>(out, e.op == OpKind::Read ? 0 : 1);
        detail::put_le<std::uint64_t>(out, e.addr);
        detail::put_le<std::uint32_t>(out, e.size);
    }
}

inline Trace read_binary_trace(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kTraceMagic))
        throw InputError("not a binary trace (bad magic)");
    std::uint64_t n = 0;
    if (!detail::get_le(in, n))
        throw InputError("binary trace truncated (missing count)");
    Trace out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        AccessEvent e;
        std::uint8_t op = 0;
        if (!detail::get_le(in, e.tick) || !detail::get_le(in, e.core) ||
            !detail::get_le(in, op) || !detail::get_le(in, e.addr) ||
            !detail::get_le(in, e.size))
            throw InputError("binary trace truncated at record " + std::to_string(i));
        if (op > 1)
            throw InputError("binary trace: bad op at record " + std::to_string(i));
        e.op = op ? OpKind::Write : OpKind::Read;
        out.push_back(e);
    }
    return out;
}

// Sniffs the magic to accept either encoding.
inline Trace read_trace_auto(std::istream& in, std::uint32_t line_bytes = 64) {
    char magic[8];
    in.read(magic, 8);
    std::streamsize got = in.gcount();
    in.clear();
    in.seekg(0);
    if (got == 8 && std::equal(magic, magic + 8, kTraceMagic))
        return read_binary_trace(in);
    return parse_trace(in, line_bytes);
}

// ---------------------------------------------------------------------------
// Synthetic workloads. Reproduces the stress patterns that matter to an
// adaptive LLC: skewed per-set pressure (a few sets carry working sets larger
// than the base associativity) and per-block read/write dominance.
// ---------------------------------------------------------------------------

struct SynthSpec {
    std::uint64_t n_events = 100000;
    std::uint32_t n_sets = 512;       // global set count of the target LLC
    std::uint32_t line_bytes = 64;
    double set_skew = 1.2;            // Zipf exponent over set ranks
    double hot_set_fraction = 0.1;    // share of sets holding big working sets
    std::uint32_t working_lines_per_hot_set = 12;
    std::uint32_t cold_lines_per_set = 2;
    double write_ratio = 0.3;
    double dominance_fraction = 0.33; // blocks that are >=90% single-op
    std::uint32_t cores = 1;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_events == 0 || n_sets == 0 || working_lines_per_hot_set == 0 ||
            cold_lines_per_set == 0 || cores == 0)
            throw InputError("synthetic spec: counts must be positive");
        if (!is_pow2(n_sets) || !is_pow2(line_bytes))
            throw InputError("synthetic spec: n_sets and line_bytes must be powers of two");
        auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob_ok(hot_set_fraction) || !prob_ok(write_ratio) ||
            !prob_ok(dominance_fraction))
            throw InputError("synthetic spec: probabilities must be in [0,1]");
        if (set_skew < 0.0)
            throw InputError("synthetic spec: set_skew must be >= 0");
    }
};

/// Deterministic generator: same spec + seed gives a byte-identical trace.
/// Sets are ranked by a seeded permutation; rank weights follow a Zipf law
/// with the hot sets at the head, each cycling over its own pool of distinct
/// lines. Block addresses encode (set, line-slot) under the standard
/// offset|set-index|tag slicing, so slot k of set s is tag k+1 at set s.
inline Trace generate_trace(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const std::uint32_t S = spec.n_sets;
    std::vector<std::uint32_t> by_rank(S);
    for (std::uint32_t i = 0; i < S; ++i)
        by_rank[i] = i;
    for (std::uint32_t i = S - 1; i > 0; --i)
        std::swap(by_rank[i], by_rank[rng.next_below(i + 1)]);

    std::uint32_t hot_count = static_cast<std::uint32_t>(spec.hot_set_fraction * S + 0.5);
    hot_count = std::min(std::max<std::uint32_t>(hot_count, spec.hot_set_fraction > 0 ? 1 : 0), S);

    std::vector<double> cumulative(S);
    double total = 0.0;
    for (std::uint32_t r = 0; r < S; ++r) {
        total += 1.0 / std::pow(double(r + 1), spec.set_skew);
        cumulative[r] = total;
    }

    const std::uint32_t offset_bits = log2_exact(spec.line_bytes);
    const std::uint32_t set_bits = log2_exact(S);
    auto block_addr = [&](std::uint32_t set, std::uint32_t slot) {
        // tag slot+1 keeps generated tags nonzero, distinct per slot
        return (std::uint64_t(slot + 1) << (offset_bits + set_bits)) |
               (std::uint64_t(set) << offset_bits);
    };

    // Per-block op behavior, fixed up front so a block's dominance holds for
    // the whole trace.
    enum class Bias : std::uint8_t { None, Read, Write };
    auto block_bias = [&](std::uint32_t set, std::uint32_t slot) {
        Rng h(spec.seed ^ (0x9e3779b97f4a7c15ULL * (std::uint64_t(set) << 20 | slot)));
        h.next();
        if (h.next_double() < spec.dominance_fraction)
            return h.next_double() < spec.write_ratio ? Bias::Write : Bias::Read;
        return Bias::None;
    };

    Trace out;
    out.reserve(spec.n_events);
    std::vector<std::uint32_t> next_slot(S, 0);
    for (std::uint64_t i = 0; i < spec.n_events; ++i) {
        double u = rng.next_double() * total;
        std::uint32_t rank = static_cast<std::uint32_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        rank = std::min(rank, S - 1);
        const std::uint32_t set = by_rank[rank];
        const bool hot = rank < hot_count;
        const std::uint32_t pool = hot ? spec.working_lines_per_hot_set
                                       : spec.cold_lines_per_set;
        // round-robin over the set's pool: maximal conflict pressure
        const std::uint32_t slot = next_slot[set]++ % pool;

        AccessEvent e;
        e.tick = i;
        e.core = static_cast<std::uint32_t>(rng.next_below(spec.cores));
        e.addr = block_addr(set, slot);
        e.size = 8;
        switch (block_bias(set, slot)) {
        case Bias::Read: e.op = rng.next_double() < 0.95 ? OpKind::Read : OpKind::Write; break;
        case Bias::Write: e.op = rng.next_double() < 0.95 ? OpKind::Write : OpKind::Read; break;
        case Bias::None: e.op = rng.next_double() < spec.write_ratio ? OpKind::Write : OpKind::Read; break;
        }
        out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Block dominance classification: a block is read- (write-) dominated when
// at least 90% of its accesses are reads (writes).
// ---------------------------------------------------------------------------

struct BlockStats {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
};

struct DominanceReport {
    std::map<std::uint64_t, BlockStats> blocks; // line address -> counts
    std::uint64_t read_dominated = 0;
    std::uint64_t write_dominated = 0;
    std::uint64_t non_dominated = 0;

    double fraction_read() const { return blocks.empty() ? 0.0 : double(read_dominated) / double(blocks.size()); }
    double fraction_write() const { return blocks.empty() ? 0.0 : double(write_dominated) / double(blocks.size()); }
    double fraction_non() const { return blocks.empty() ? 0.0 : double(non_dominated) / double(blocks.size()); }
};

inline DominanceReport classify_blocks(const Trace& t, std::uint32_t line_bytes = 64) {
    if (t.empty())
        throw InputError("cannot classify an empty trace");
    DominanceReport rep;
    for (const auto& e : t) {
        auto& b = rep.blocks[line_address(e.addr, line_bytes)];
        (e.op == OpKind::Read ? b.reads : b.writes)++;
    }
    for (const auto& [addr, b] : rep.blocks) {
        (void)addr;
        const double n = double(b.reads + b.writes);
        if (double(b.reads) >= 0.9 * n)
            rep.read_dominated++;
        else if (double(b.writes) >= 0.9 * n)
            rep.write_dominated++;
        else
            rep.non_dominated++;
    }
    return rep;
}

inline void write_dominance_csv(const DominanceReport& rep, std::ostream& out) {
    out << "block_addr,reads,writes,class\n";
    for (const auto& [addr, b] : rep.blocks) {
        const double n = double(b.reads + b.writes);
        const char* cls = double(b.reads) >= 0.9 * n    ? "read_dominated"
                          : double(b.writes) >= 0.9 * n ? "write_dominated"
                                                        : "non_dominated";
        char buf[96];
        std::snprintf(buf, sizeof buf, "0x%llx,%llu,%llu,%s\n", (unsigned long long)addr,
                      (unsigned long long)b.reads, (unsigned long long)b.writes, cls);
        out << buf;
    }
}

} // namespace sttsim
