#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sttsim/cache.hpp"
#include "sttsim/device.hpp"
#include "sttsim/endurance.hpp"
#include "sttsim/geometry.hpp"
#include "sttsim/policy.hpp"
#include "sttsim/queues.hpp"

namespace sttsim {

enum class PolicyMode : std::uint8_t { Dynamic, Static, Off };
enum class MemModel : std::uint8_t { AlwaysMiss, FixedRatio };

struct UpperLevel {
    std::uint64_t bytes = 0;
    std::uint32_t ways = 0;
};

/// Fully resolved simulation configuration. The surface `policy` mode
/// resolves into the toggles below; reports echo only the resolved form.
struct SimConfig {
    DeviceProfile device;

    ArrayKind llc_array = ArrayKind::StrippedMlc;
    CacheGeometry llc; // defaults: 512 KB, 16-way, 64 B lines, 4 banks
    LineCostProfile llc_costs = stripped_line_costs();

    std::uint32_t cores = 1;
    UpperLevel l1{16 * 1024, 4};
    UpperLevel l2{64 * 1024, 8};
    cycles_t l1_hit_cycles = 1;
    cycles_t l2_hit_cycles = 10;
    cycles_t llc_link_cycles = 4;

    PolicyParams policy;
    PairMode initial_mode = PairMode::Slc;

    MemModel mem_model = MemModel::AlwaysMiss;
    double mem_row_hit_ns = 36.0;
    double mem_row_miss_ns = 66.0;
    double mem_hit_ratio = 0.0;

    QueueConfig queues;

    double endurance_sigma = 0.0;
    std::uint64_t seed = 1;
    double instructions_per_access = 4.0;
    bool stop_on_set_failure = false;

    void validate() const {
        device.validate();
        llc.validate(llc_array == ArrayKind::StrippedMlc);
        policy.validate();
        queues.validate();
        if (cores == 0)
            throw InputError("need at least one core");
        auto upper_ok = [&](const UpperLevel& u) {
            return u.bytes > 0 && u.ways > 0 && u.bytes % (std::uint64_t(llc.line_bytes) * u.ways) == 0 &&
                   is_pow2(u.bytes / (std::uint64_t(llc.line_bytes) * u.ways));
        };
        if (!upper_ok(l1) || !upper_ok(l2))
            throw InputError("L1/L2 sizes must give a power-of-two set count");
        if (mem_hit_ratio < 0.0 || mem_hit_ratio > 1.0)
            throw InputError("mem_hit_ratio must be in [0,1]");
        if (!(mem_row_hit_ns <= mem_row_miss_ns))
            throw InputError("row-hit latency must not exceed row-miss latency");
        if (instructions_per_access <= 0.0)
            throw InputError("instructions_per_access must be positive");
    }

    EnduranceConfig endurance_config() const {
        EnduranceConfig e;
        e.hard_limit = device.hard_endurance;
        e.soft_limit = device.soft_endurance;
        e.slc_limit = device.slc_endurance;
        e.variation_sigma = endurance_sigma;
        e.seed = seed;
        return e;
    }
};

// ---------------------------------------------------------------------------
// Flat key-value files: `key = value`, one per line, '#' comments. Unknown
// keys are rejected. CLI overrides arrive as the same key/value strings.
// ---------------------------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        auto eq = line.find('=');
        std::string key, value;
        if (eq == std::string::npos) {
            std::istringstream ls(line);
            if (!(ls >> key))
                continue;
            throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        key = trim(line.substr(0, eq));
        value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw InputError("config line " + std::to_string(line_no) + ": empty key or value");
        kv[key] = value;
    }
    return kv;
}

namespace detail {

inline double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("config key '" + k + "': bad number '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        // scientific shорthand like 1e12 is handy for endurance counts
        if (v.find_first_of("eE.") != std::string::npos) {
            double d = std::stod(v, &pos);
            if (pos != v.size() || d < 0 || d != std::floor(d))
                throw std::invalid_argument(v);
            return static_cast<std::uint64_t>(d);
        }
        std::uint64_t u = std::stoull(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw InputError("config key '" + k + "': bad count '" + v + "'");
    }
}

inline bool to_bool(const std::string& k, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw InputError("config key '" + k + "': bad bool '" + v + "'");
}

} // namespace detail

/// Named starting points. `desk` is a laptop-scale pair of iso-area LLCs;
/// `eight_core` is the full-size shared-LLC machine.
inline void apply_preset(SimConfig& cfg, const std::string& name) {
    if (name == "desk") {
        cfg = SimConfig{};
    } else if (name == "eight_core") {
        cfg = SimConfig{};
        cfg.cores = 8;
        cfg.l1 = {32 * 1024, 4};
        cfg.l2 = {2 * 1024 * 1024, 16};
        cfg.llc.total_bytes = 8 * 1024 * 1024;
        cfg.llc.banks = 8;
    } else {
        throw InputError("unknown preset '" + name + "' (want desk or eight_core)");
    }
}

/// Applies flat keys onto a config. Handles every public knob; the policy
/// mode and endurance preset resolve immediately into their effects.
inline SimConfig resolve_config(const KeyValues& kv) {
    SimConfig cfg;
    if (auto it = kv.find("preset"); it != kv.end())
        apply_preset(cfg, it->second);

    PolicyMode mode = PolicyMode::Dynamic;
    bool mode_set = false;
    bool assoc_set = false, swap_set = false, initial_set = false;
    bool costs_touched = false;

    using detail::to_bool;
    using detail::to_double;
    using detail::to_u64;

    for (const auto& [k, v] : kv) {
        if (k == "preset") {
            // handled above
        } else if (k == "clock_ghz") {
            cfg.device.clock_ghz = to_double(k, v);
        } else if (k == "soft_read_ns") { cfg.device.soft_read_ns = to_double(k, v);
        } else if (k == "hard_read_ns") { cfg.device.hard_read_ns = to_double(k, v);
        } else if (k == "slc_read_ns") { cfg.device.slc_read_ns = to_double(k, v);
        } else if (k == "soft_write_ns") { cfg.device.soft_write_ns = to_double(k, v);
        } else if (k == "hard_write_ns") { cfg.device.hard_write_ns = to_double(k, v);
        } else if (k == "slc_write_ns") { cfg.device.slc_write_ns = to_double(k, v);
        } else if (k == "soft_read_pj") { cfg.device.soft_read_pj = to_double(k, v);
        } else if (k == "hard_read_pj") { cfg.device.hard_read_pj = to_double(k, v);
        } else if (k == "slc_read_pj") { cfg.device.slc_read_pj = to_double(k, v);
        } else if (k == "soft_write_pj") { cfg.device.soft_write_pj = to_double(k, v);
        } else if (k == "hard_write_pj") { cfg.device.hard_write_pj = to_double(k, v);
        } else if (k == "slc_write_pj") { cfg.device.slc_write_pj = to_double(k, v);
        } else if (k == "soft_endurance") { cfg.device.soft_endurance = to_u64(k, v);
        } else if (k == "hard_endurance") { cfg.device.hard_endurance = to_u64(k, v);
        } else if (k == "slc_endurance") { cfg.device.slc_endurance = to_u64(k, v);
        } else if (k == "endurance_preset") {
            if (v == "mlc_derated")
                apply_endurance_preset(cfg.device, EndurancePreset::MlcDerated);
            else if (v == "cell_datasheet")
                apply_endurance_preset(cfg.device, EndurancePreset::CellDatasheet);
            else
                throw InputError("endurance_preset must be mlc_derated or cell_datasheet");
        } else if (k == "llc_array") {
            if (v == "stripped")
                cfg.llc_array = ArrayKind::StrippedMlc;
            else if (v == "stacked")
                cfg.llc_array = ArrayKind::StackedMlc;
            else if (v == "slc")
                cfg.llc_array = ArrayKind::SlcArray;
            else
                throw InputError("llc_array must be stripped, stacked, or slc");
        } else if (k == "llc_kb") { cfg.llc.total_bytes = to_u64(k, v) * 1024;
        } else if (k == "line_bytes") { cfg.llc.line_bytes = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "llc_max_ways") { cfg.llc.max_ways = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "llc_min_ways") { cfg.llc.min_ways = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "llc_banks") { cfg.llc.banks = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "llc_lookup_cycles") { cfg.llc_costs.lookup_cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_hard_read_cycles") { cfg.llc_costs.hard_read.cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_soft_read_cycles") { cfg.llc_costs.soft_read.cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_hard_write_cycles") { cfg.llc_costs.hard_write.cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_soft_write_cycles") { cfg.llc_costs.soft_write.cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_slc_read_cycles") { cfg.llc_costs.slc_read.cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_slc_write_cycles") { cfg.llc_costs.slc_write.cycles = static_cast<std::uint32_t>(to_u64(k, v)); costs_touched = true;
        } else if (k == "llc_hard_read_nj") { cfg.llc_costs.hard_read.nj = to_double(k, v); costs_touched = true;
        } else if (k == "llc_soft_read_nj") { cfg.llc_costs.soft_read.nj = to_double(k, v); costs_touched = true;
        } else if (k == "llc_hard_write_nj") { cfg.llc_costs.hard_write.nj = to_double(k, v); costs_touched = true;
        } else if (k == "llc_soft_write_nj") { cfg.llc_costs.soft_write.nj = to_double(k, v); costs_touched = true;
        } else if (k == "llc_slc_read_nj") { cfg.llc_costs.slc_read.nj = to_double(k, v); costs_touched = true;
        } else if (k == "llc_slc_write_nj") { cfg.llc_costs.slc_write.nj = to_double(k, v); costs_touched = true;
        } else if (k == "llc_leakage_w") { cfg.llc_costs.leakage_w = to_double(k, v); costs_touched = true;
        } else if (k == "cores") { cfg.cores = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "l1_kb") { cfg.l1.bytes = to_u64(k, v) * 1024;
        } else if (k == "l1_ways") { cfg.l1.ways = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "l2_kb") { cfg.l2.bytes = to_u64(k, v) * 1024;
        } else if (k == "l2_ways") { cfg.l2.ways = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "l1_hit_cycles") { cfg.l1_hit_cycles = to_u64(k, v);
        } else if (k == "l2_hit_cycles") { cfg.l2_hit_cycles = to_u64(k, v);
        } else if (k == "llc_link_cycles") { cfg.llc_link_cycles = to_u64(k, v);
        } else if (k == "policy") {
            mode_set = true;
            if (v == "dynamic")
                mode = PolicyMode::Dynamic;
            else if (v == "static")
                mode = PolicyMode::Static;
            else if (v == "off")
                mode = PolicyMode::Off;
            else
                throw InputError("policy must be dynamic, static, or off");
        } else if (k == "epoch_len") { cfg.policy.epoch_len = to_u64(k, v);
        } else if (k == "n_assoc") { cfg.policy.n_assoc = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "n_swap") { cfg.policy.n_swap = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "m_swap") { cfg.policy.m_swap = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "assoc_enabled") { cfg.policy.assoc_enabled = to_bool(k, v); assoc_set = true;
        } else if (k == "swap_enabled") { cfg.policy.swap_enabled = to_bool(k, v); swap_set = true;
        } else if (k == "initial_mode") {
            initial_set = true;
            if (v == "slc")
                cfg.initial_mode = PairMode::Slc;
            else if (v == "mlc")
                cfg.initial_mode = PairMode::Mlc;
            else
                throw InputError("initial_mode must be slc or mlc");
        } else if (k == "mem_model") {
            if (v == "always_miss")
                cfg.mem_model = MemModel::AlwaysMiss;
            else if (v == "fixed_ratio")
                cfg.mem_model = MemModel::FixedRatio;
            else
                throw InputError("mem_model must be always_miss or fixed_ratio");
        } else if (k == "mem_row_hit_ns") { cfg.mem_row_hit_ns = to_double(k, v);
        } else if (k == "mem_row_miss_ns") { cfg.mem_row_miss_ns = to_double(k, v);
        } else if (k == "mem_hit_ratio") { cfg.mem_hit_ratio = to_double(k, v);
        } else if (k == "rdq_capacity") { cfg.queues.rdq_capacity = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "wrq_capacity") { cfg.queues.wrq_capacity = static_cast<std::uint32_t>(to_u64(k, v));
        } else if (k == "endurance_sigma") { cfg.endurance_sigma = to_double(k, v);
        } else if (k == "seed") { cfg.seed = to_u64(k, v);
        } else if (k == "instructions_per_access") { cfg.instructions_per_access = to_double(k, v);
        } else if (k == "stop_on_set_failure") { cfg.stop_on_set_failure = to_bool(k, v);
        } else {
            throw InputError("unknown config key '" + k + "'");
        }
    }

    // The policy mode shorthand resolves last so explicit toggles win.
    if (mode_set) {
        if (mode == PolicyMode::Static) {
            if (!assoc_set)
                cfg.policy.assoc_enabled = false;
            if (!swap_set)
                cfg.policy.swap_enabled = false;
            if (!initial_set)
                cfg.initial_mode = PairMode::Mlc;
        } else if (mode == PolicyMode::Off) {
            if (!assoc_set)
                cfg.policy.assoc_enabled = false;
            if (!swap_set)
                cfg.policy.swap_enabled = false;
            if (!initial_set)
                cfg.initial_mode = PairMode::Slc;
        }
    }

    // A non-stripped array has no pairs to manage; pick the matching cost
    // table unless the user pinned their own numbers.
    if (!costs_touched) {
        switch (cfg.llc_array) {
        case ArrayKind::StrippedMlc: cfg.llc_costs = stripped_line_costs(); break;
        case ArrayKind::StackedMlc: cfg.llc_costs = stacked_line_costs(); break;
        case ArrayKind::SlcArray: cfg.llc_costs = slc_line_costs(); break;
        }
    }
    if (cfg.llc_array != ArrayKind::StrippedMlc) {
        cfg.policy.assoc_enabled = false;
        cfg.policy.swap_enabled = false;
        cfg.initial_mode = PairMode::Mlc;
    }

    cfg.validate();
    return cfg;
}

inline SimConfig load_config(const std::string& path, const KeyValues& overrides = {}) {
    KeyValues kv;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in)
            throw InputError("cannot open config file '" + path + "'");
        kv = parse_key_values(in);
    }
    for (const auto& [k, v] : overrides)
        kv[k] = v;
    return resolve_config(kv);
}

// ---------------------------------------------------------------------------
// Baseline derivation. All comparisons run on the same die area: the SLC
// array gets half the capacity and half the ways of the stripped MLC array;
// the stacked array matches the MLC capacity; the optional big SLC matches
// MLC capacity at double area.
// ---------------------------------------------------------------------------

inline SimConfig derive_iso_slc(const SimConfig& base) {
    SimConfig c = base;
    c.llc_array = ArrayKind::SlcArray;
    c.llc.total_bytes = base.llc.total_bytes / 2;
    c.llc.max_ways = base.llc.max_ways / 2;
    c.llc.min_ways = c.llc.max_ways;
    c.llc_costs = slc_line_costs();
    c.policy.assoc_enabled = false;
    c.policy.swap_enabled = false;
    c.initial_mode = PairMode::Mlc;
    c.validate();
    return c;
}

inline SimConfig derive_stacked(const SimConfig& base) {
    SimConfig c = base;
    c.llc_array = ArrayKind::StackedMlc;
    c.llc.min_ways = c.llc.max_ways;
    c.llc_costs = stacked_line_costs();
    c.policy.assoc_enabled = false;
    c.policy.swap_enabled = false;
    c.initial_mode = PairMode::Mlc;
    c.validate();
    return c;
}

inline SimConfig derive_stripped_static(const SimConfig& base) {
    SimConfig c = base;
    c.llc_array = ArrayKind::StrippedMlc;
    c.llc_costs = stripped_line_costs();
    c.policy.assoc_enabled = false;
    c.policy.swap_enabled = false;
    c.initial_mode = PairMode::Mlc;
    c.validate();
    return c;
}

inline SimConfig derive_stripped_dynamic(const SimConfig& base) {
    SimConfig c = base;
    c.llc_array = ArrayKind::StrippedMlc;
    c.llc_costs = stripped_line_costs();
    c.policy.assoc_enabled = true;
    c.policy.swap_enabled = true;
    c.initial_mode = PairMode::Slc;
    c.validate();
    return c;
}

inline SimConfig derive_slc_big(const SimConfig& base) {
    SimConfig c = base;
    c.llc_array = ArrayKind::SlcArray;
    c.llc.min_ways = c.llc.max_ways;
    c.llc_costs = slc_big_line_costs();
    c.policy.assoc_enabled = false;
    c.policy.swap_enabled = false;
    c.initial_mode = PairMode::Mlc;
    c.validate();
    return c;
}

} // namespace sttsim
