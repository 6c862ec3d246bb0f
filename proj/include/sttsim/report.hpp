#pragma once

#include <cstdio>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sttsim/config.hpp"
#include "sttsim/hierarchy.hpp"
#include "sttsim/trace.hpp"

namespace sttsim {

using json = nlohmann::json;

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
    return buf;
}

/// Resolved-config echo. Deliberately contains no surface shorthands
/// (presets, policy mode names): two configs that resolve to the same
/// machine produce the same echo and therefore the same report bytes.
inline json config_json(const SimConfig& c) {
    json j;
    j["device"] = {
        {"clock_ghz", c.device.clock_ghz},
        {"soft_read_ns", c.device.soft_read_ns},
        {"hard_read_ns", c.device.hard_read_ns},
        {"slc_read_ns", c.device.slc_read_ns},
        {"soft_write_ns", c.device.soft_write_ns},
        {"hard_write_ns", c.device.hard_write_ns},
        {"slc_write_ns", c.device.slc_write_ns},
        {"soft_read_pj", c.device.soft_read_pj},
        {"hard_read_pj", c.device.hard_read_pj},
        {"slc_read_pj", c.device.slc_read_pj},
        {"soft_write_pj", c.device.soft_write_pj},
        {"hard_write_pj", c.device.hard_write_pj},
        {"slc_write_pj", c.device.slc_write_pj},
        {"soft_endurance", c.device.soft_endurance},
        {"hard_endurance", c.device.hard_endurance},
        {"slc_endurance", c.device.slc_endurance},
    };
    j["llc"] = {
        {"array", to_string(c.llc_array)},
        {"total_bytes", c.llc.total_bytes},
        {"line_bytes", c.llc.line_bytes},
        {"min_ways", c.llc.min_ways},
        {"max_ways", c.llc.max_ways},
        {"banks", c.llc.banks},
        {"sets_per_bank", c.llc.sets_per_bank()},
        {"lookup_cycles", c.llc_costs.lookup_cycles},
        {"hard_read", {{"cycles", c.llc_costs.hard_read.cycles}, {"nj", c.llc_costs.hard_read.nj}}},
        {"soft_read", {{"cycles", c.llc_costs.soft_read.cycles}, {"nj", c.llc_costs.soft_read.nj}}},
        {"hard_write", {{"cycles", c.llc_costs.hard_write.cycles}, {"nj", c.llc_costs.hard_write.nj}}},
        {"soft_write", {{"cycles", c.llc_costs.soft_write.cycles}, {"nj", c.llc_costs.soft_write.nj}}},
        {"slc_read", {{"cycles", c.llc_costs.slc_read.cycles}, {"nj", c.llc_costs.slc_read.nj}}},
        {"slc_write", {{"cycles", c.llc_costs.slc_write.cycles}, {"nj", c.llc_costs.slc_write.nj}}},
        {"leakage_w", c.llc_costs.leakage_w},
    };
    j["hierarchy"] = {
        {"cores", c.cores},
        {"l1_bytes", c.l1.bytes},
        {"l1_ways", c.l1.ways},
        {"l2_bytes", c.l2.bytes},
        {"l2_ways", c.l2.ways},
        {"l1_hit_cycles", c.l1_hit_cycles},
        {"l2_hit_cycles", c.l2_hit_cycles},
        {"llc_link_cycles", c.llc_link_cycles},
    };
    j["policy"] = {
        {"epoch_len", c.policy.epoch_len},
        {"n_assoc", c.policy.n_assoc},
        {"n_swap", c.policy.n_swap},
        {"m_swap", c.policy.m_swap},
        {"assoc_enabled", c.policy.assoc_enabled},
        {"swap_enabled", c.policy.swap_enabled},
        {"initial_mode", c.initial_mode == PairMode::Slc ? "slc" : "mlc"},
    };
    j["memory"] = {
        {"model", c.mem_model == MemModel::AlwaysMiss ? "always_miss" : "fixed_ratio"},
        {"row_hit_ns", c.mem_row_hit_ns},
        {"row_miss_ns", c.mem_row_miss_ns},
        {"hit_ratio", c.mem_hit_ratio},
    };
    j["queues"] = {
        {"rdq_capacity", c.queues.rdq_capacity},
        {"wrq_capacity", c.queues.wrq_capacity},
    };
    j["endurance_sigma"] = c.endurance_sigma;
    j["seed"] = c.seed;
    j["instructions_per_access"] = c.instructions_per_access;
    j["stop_on_set_failure"] = c.stop_on_set_failure;
    return j;
}

/// Debug dump of the whole array: set -> pairs (or ways) -> line fields.
inline json dump_state(const CacheArray& a) {
    json sets = json::array();
    auto line_json = [](const LineState& l) {
        return json{{"valid", l.valid},   {"dirty", l.dirty},
                    {"dead", l.dead},     {"tag", l.tag},
                    {"last_touch", l.last_touch}, {"epoch_reads", l.epoch_reads},
                    {"epoch_writes", l.epoch_writes}};
    };
    for (std::uint32_t gs = 0; gs < a.num_sets(); ++gs) {
        const CacheSet& s = a.set(gs);
        json js;
        js["set"] = gs;
        js["active_ways"] = s.ctl.active_ways;
        js["mcnt"] = s.ctl.mcnt;
        js["wcnt"] = s.ctl.wcnt;
        js["grow_ptr"] = s.ctl.grow_ptr;
        if (a.kind() == ArrayKind::StrippedMlc) {
            json pairs = json::array();
            for (const auto& p : s.pairs) {
                pairs.push_back({{"mode", p.mode == PairMode::Mlc ? "mlc" : "slc"},
                                 {"frhe", line_json(p.frhe)},
                                 {"srle", line_json(p.srle)},
                                 {"scnt", p.scnt},
                                 {"swcnt", p.swcnt},
                                 {"hard_writes", p.hard_writes},
                                 {"soft_writes", p.soft_writes},
                                 {"activations", p.activations}});
            }
            js["pairs"] = std::move(pairs);
        } else {
            json ways = json::array();
            for (const auto& l : s.lines)
                ways.push_back(line_json(l));
            js["ways"] = std::move(ways);
        }
        sets.push_back(std::move(js));
    }
    return json{{"kind", to_string(a.kind())}, {"sets", std::move(sets)}};
}

struct SimReport {
    SimConfig cfg;
    std::uint64_t trace_events = 0;
    std::uint64_t trace_checksum_value = 0;

    LevelCounters l1, l2;
    LlcStats llc;
    std::array<std::uint64_t, 5> level_counts{}; // events serviced per level

    double amat_cycles = 0.0;
    double amat_ns = 0.0;
    double mpki = 0.0;
    double hpki = 0.0;

    double dynamic_energy_nj = 0.0;
    double leakage_energy_nj = 0.0;
    double sim_time_ns = 0.0;

    struct SetRow {
        std::uint64_t hits = 0, misses = 0, grows = 0, shrinks = 0, swaps = 0;
        std::uint32_t dead_ways = 0;
    };
    std::vector<SetRow> per_set;

    std::uint64_t dead_lines = 0;
    std::uint64_t failed_sets = 0;
    std::optional<double> first_failure_ns;
    std::optional<std::uint64_t> first_failure_writes;
    double lifetime_seconds = std::numeric_limits<double>::infinity();
    std::optional<std::uint32_t> lifetime_limiting_set;

    std::uint64_t total_domain_writes = 0;
};

/// Runs one simulation. Per-access records stream to `log` (CSV) when set.
inline SimReport run_simulation(const SimConfig& cfg, const Trace& trace,
                                std::ostream* log = nullptr) {
    if (trace.empty())
        throw InputError("trace is empty");
    Hierarchy h(cfg);
    if (log)
        *log << "tick,core,op,addr,level,latency_cycles,energy_nj\n";
    h.run(trace, [&](const AccessRecord& r) {
        if (log) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%llu,%u,%s,0x%llx,%s,%llu,%.9f\n",
                          (unsigned long long)r.tick, r.core, to_string(r.op),
                          (unsigned long long)r.addr, to_string(r.level),
                          (unsigned long long)r.latency_cycles, r.energy_nj);
            *log << buf;
        }
    });

    SimReport rep;
    rep.cfg = cfg;
    rep.trace_events = trace.size();
    rep.trace_checksum_value = trace_checksum(trace);
    rep.l1 = h.l1_totals();
    rep.l2 = h.l2_totals();
    rep.llc = h.llc().stats();
    rep.level_counts = h.level_counts();
    rep.amat_cycles = h.amat_cycles();
    rep.amat_ns = h.amat_ns();

    const double instructions = double(h.events()) * cfg.instructions_per_access;
    const auto& lc = h.level_counts();
    const double llc_demand_misses = double(lc[std::size_t(ServiceLevel::Mem)]);
    const double llc_demand_hits = double(lc[std::size_t(ServiceLevel::Llc)] +
                                          lc[std::size_t(ServiceLevel::Wrq)]);
    rep.mpki = llc_demand_misses * 1000.0 / instructions;
    rep.hpki = llc_demand_hits * 1000.0 / instructions;

    rep.sim_time_ns = h.llc().ns_of(h.end_cycles());
    rep.dynamic_energy_nj = h.llc().stats().dynamic_energy_nj;
    rep.leakage_energy_nj = leakage_energy_nj(cfg.llc_costs, rep.sim_time_ns);

    const auto& arr = h.llc().array();
    rep.per_set.resize(arr.num_sets());
    for (std::uint32_t gs = 0; gs < arr.num_sets(); ++gs) {
        const auto& st = arr.set(gs).stats;
        rep.per_set[gs] = {st.hits, st.misses, st.grows, st.shrinks, st.swaps,
                           h.llc().endurance().dead_ways_in_set(gs)};
    }

    const auto& fail = h.llc().endurance().failures();
    rep.dead_lines = fail.dead_lines;
    rep.failed_sets = fail.failed_sets.size();
    rep.first_failure_ns = fail.first_failure_ns;
    rep.first_failure_writes = fail.first_failure_write_count;
    auto est = h.llc().endurance().estimate_lifetime(rep.sim_time_ns * 1e-9);
    rep.lifetime_seconds = est.seconds;
    rep.lifetime_limiting_set = est.limiting_set;
    rep.total_domain_writes = h.llc().endurance().total_writes();
    return rep;
}

inline json report_json(const SimReport& r) {
    json j;
    j["config"] = config_json(r.cfg);
    j["trace"] = {{"events", r.trace_events}, {"checksum", hex64(r.trace_checksum_value)}};
    auto counters = [](const LevelCounters& c) {
        return json{{"read_hits", c.read_hits},
                    {"read_misses", c.read_misses},
                    {"write_hits", c.write_hits},
                    {"write_misses", c.write_misses}};
    };
    j["levels"] = {
        {"l1", counters(r.l1)},
        {"l2", counters(r.l2)},
        {"llc", counters(r.llc.counters)},
    };
    j["llc"] = {
        {"accesses", r.llc.accesses},
        {"forwards", r.llc.forwards},
        {"mem_reads", r.llc.mem_reads},
        {"mem_writes", r.llc.mem_writes},
        {"grows", r.llc.grows},
        {"shrinks", r.llc.shrinks},
        {"swaps", r.llc.swaps},
    };
    j["serviced"] = {
        {"l1", r.level_counts[0]}, {"l2", r.level_counts[1]}, {"llc", r.level_counts[2]},
        {"wrq", r.level_counts[3]}, {"mem", r.level_counts[4]},
    };
    j["amat"] = {{"cycles", r.amat_cycles}, {"ns", r.amat_ns}};
    j["mpki"] = r.mpki;
    j["hpki"] = r.hpki;
    j["energy"] = {
        {"dynamic_nj", r.dynamic_energy_nj},
        {"leakage_nj", r.leakage_energy_nj},
        {"sim_time_ns", r.sim_time_ns},
    };

    json hist = json::array();
    for (std::size_t gs = 0; gs < r.per_set.size(); ++gs) {
        const auto& row = r.per_set[gs];
        hist.push_back({{"set", gs},
                        {"hits", row.hits},
                        {"misses", row.misses},
                        {"grows", row.grows},
                        {"shrinks", row.shrinks},
                        {"swaps", row.swaps},
                        {"dead_ways", row.dead_ways}});
    }
    j["per_set"] = std::move(hist);

    json lifetime;
    lifetime["dead_lines"] = r.dead_lines;
    lifetime["failed_sets"] = r.failed_sets;
    lifetime["total_domain_writes"] = r.total_domain_writes;
    lifetime["first_failure_ns"] =
        r.first_failure_ns ? json(*r.first_failure_ns) : json(nullptr);
    lifetime["first_failure_writes"] =
        r.first_failure_writes ? json(*r.first_failure_writes) : json(nullptr);
    lifetime["projected_seconds"] = std::isinf(r.lifetime_seconds)
                                        ? json(nullptr)
                                        : json(r.lifetime_seconds);
    lifetime["limiting_set"] =
        r.lifetime_limiting_set ? json(*r.lifetime_limiting_set) : json(nullptr);
    j["lifetime"] = std::move(lifetime);
    return j;
}

inline void print_report_table(const SimReport& r, std::ostream& out) {
    char buf[256];
    auto row = [&](const char* k, const std::string& v) {
        std::snprintf(buf, sizeof buf, "  %-26s %s\n", k, v.c_str());
        out << buf;
    };
    out << "simulation summary\n";
    row("llc array", to_string(r.cfg.llc_array));
    row("trace events", std::to_string(r.trace_events));
    row("trace checksum", hex64(r.trace_checksum_value));
    row("l1 hits/misses", std::to_string(r.l1.hits()) + "/" + std::to_string(r.l1.misses()));
    row("l2 hits/misses", std::to_string(r.l2.hits()) + "/" + std::to_string(r.l2.misses()));
    row("llc hits/misses",
        std::to_string(r.llc.counters.hits()) + "/" + std::to_string(r.llc.counters.misses()));
    row("llc wrq forwards", std::to_string(r.llc.forwards));
    row("grows/shrinks/swaps", std::to_string(r.llc.grows) + "/" +
                                   std::to_string(r.llc.shrinks) + "/" +
                                   std::to_string(r.llc.swaps));
    std::snprintf(buf, sizeof buf, "%.4f cycles (%.4f ns)", r.amat_cycles, r.amat_ns);
    row("amat", buf);
    std::snprintf(buf, sizeof buf, "%.3f / %.3f", r.mpki, r.hpki);
    row("mpki / hpki", buf);
    std::snprintf(buf, sizeof buf, "%.3f uJ dynamic, %.3f uJ leakage", r.dynamic_energy_nj / 1000.0,
                  r.leakage_energy_nj / 1000.0);
    row("llc energy", buf);
    if (std::isinf(r.lifetime_seconds))
        row("projected lifetime", "unbounded (no wear observed)");
    else {
        std::snprintf(buf, sizeof buf, "%.6g s (limiting set %u)", r.lifetime_seconds,
                      r.lifetime_limiting_set ? *r.lifetime_limiting_set : 0);
        row("projected lifetime", buf);
    }
    row("dead lines / failed sets",
        std::to_string(r.dead_lines) + " / " + std::to_string(r.failed_sets));
}

// ---------------------------------------------------------------------------
// Baseline comparison: the same trace through the iso-area SLC array, the
// stacked-mapping MLC, the static stripped array and the adaptive stripped
// array. Metrics are reported raw and normalized to the SLC row.
// ---------------------------------------------------------------------------

struct ComparisonRow {
    std::string name;
    SimReport report;
    std::uint64_t misses = 0;
    double amat_cycles = 0.0;
    double llc_energy_nj = 0.0; // dynamic + leakage
    double lifetime_seconds = std::numeric_limits<double>::infinity();

    double norm_misses = 0.0;
    double norm_amat = 0.0;
    double norm_energy = 0.0;
    double norm_lifetime = 0.0; // 0 when either side is unbounded
};

inline SimConfig config_for_baseline(const SimConfig& base, const std::string& name) {
    if (name == "slc")
        return derive_iso_slc(base);
    if (name == "stacked_mlc")
        return derive_stacked(base);
    if (name == "stripped_static")
        return derive_stripped_static(base);
    if (name == "stripped_dynamic")
        return derive_stripped_dynamic(base);
    if (name == "slc_big")
        return derive_slc_big(base);
    throw InputError("unknown baseline '" + name + "'");
}

inline std::vector<ComparisonRow> run_comparison(const SimConfig& base, const Trace& trace,
                                                 std::vector<std::string> baselines,
                                                 unsigned jobs = 1) {
    if (baselines.empty())
        baselines = {"slc", "stacked_mlc", "stripped_static", "stripped_dynamic"};
    // the SLC row is the normalization base and always runs
    bool have_slc = false;
    for (const auto& b : baselines)
        have_slc |= b == "slc";
    if (!have_slc)
        baselines.insert(baselines.begin(), "slc");

    std::vector<ComparisonRow> rows(baselines.size());
    auto run_one = [&](std::size_t i) {
        rows[i].name = baselines[i];
        rows[i].report = run_simulation(config_for_baseline(base, baselines[i]), trace);
        rows[i].misses = rows[i].report.llc.counters.misses();
        rows[i].amat_cycles = rows[i].report.amat_cycles;
        rows[i].llc_energy_nj =
            rows[i].report.dynamic_energy_nj + rows[i].report.leakage_energy_nj;
        rows[i].lifetime_seconds = rows[i].report.lifetime_seconds;
    };
    if (jobs <= 1) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            run_one(i);
    } else {
        std::vector<std::future<void>> futs;
        for (std::size_t i = 0; i < rows.size(); ++i)
            futs.push_back(std::async(std::launch::async, run_one, i));
        for (auto& f : futs)
            f.get();
    }

    const ComparisonRow* slc = nullptr;
    for (const auto& r : rows)
        if (r.name == "slc")
            slc = &r;
    for (auto& r : rows) {
        r.norm_misses = slc->misses ? double(r.misses) / double(slc->misses) : 0.0;
        r.norm_amat = slc->amat_cycles != 0.0 ? r.amat_cycles / slc->amat_cycles : 0.0;
        r.norm_energy = slc->llc_energy_nj != 0.0 ? r.llc_energy_nj / slc->llc_energy_nj : 0.0;
        const bool defined =
            !std::isinf(r.lifetime_seconds) && !std::isinf(slc->lifetime_seconds) &&
            slc->lifetime_seconds > 0.0;
        r.norm_lifetime = defined ? r.lifetime_seconds / slc->lifetime_seconds : 0.0;
    }
    return rows;
}

inline json comparison_json(const std::vector<ComparisonRow>& rows) {
    json j = json::array();
    for (const auto& r : rows) {
        json row;
        row["baseline"] = r.name;
        row["trace_checksum"] = hex64(r.report.trace_checksum_value);
        row["misses"] = r.misses;
        row["amat_cycles"] = r.amat_cycles;
        row["llc_energy_nj"] = r.llc_energy_nj;
        row["lifetime_seconds"] =
            std::isinf(r.lifetime_seconds) ? json(nullptr) : json(r.lifetime_seconds);
        row["normalized"] = {{"misses", r.norm_misses},
                             {"amat", r.norm_amat},
                             {"energy", r.norm_energy},
                             {"lifetime", r.norm_lifetime}};
        j.push_back(std::move(row));
    }
    return j;
}

inline void print_comparison_table(const std::vector<ComparisonRow>& rows, std::ostream& out) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %12s %12s %14s %12s %8s %8s %8s\n", "baseline",
                  "misses", "amat[cyc]", "llc energy[uJ]", "lifetime[s]", "n.miss", "n.amat",
                  "n.energy");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-18s %12llu %12.3f %14.3f %12.4g %8.3f %8.3f %8.3f\n",
                      r.name.c_str(), (unsigned long long)r.misses, r.amat_cycles,
                      r.llc_energy_nj / 1000.0,
                      std::isinf(r.lifetime_seconds) ? 0.0 : r.lifetime_seconds, r.norm_misses,
                      r.norm_amat, r.norm_energy);
        out << buf;
    }
}

inline void write_histogram_csv(const SimReport& r, std::ostream& out) {
    out << "set,misses,hits,grows,shrinks,swaps,dead_ways\n";
    for (std::size_t gs = 0; gs < r.per_set.size(); ++gs) {
        const auto& row = r.per_set[gs];
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%llu,%llu,%llu,%llu,%llu,%u\n", gs,
                      (unsigned long long)row.misses, (unsigned long long)row.hits,
                      (unsigned long long)row.grows, (unsigned long long)row.shrinks,
                      (unsigned long long)row.swaps, row.dead_ways);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps over (epoch_len, n_assoc, n_swap). Points are
// independent simulations; report assembly keeps grid order.
// ---------------------------------------------------------------------------

struct SweepPoint {
    std::uint64_t epoch_len;
    std::uint32_t n_assoc;
    std::uint32_t n_swap;
    SimReport report;
};

inline std::vector<SweepPoint> run_sweep(const SimConfig& base, const Trace& trace,
                                         const std::vector<std::uint64_t>& epoch_lens,
                                         const std::vector<std::uint32_t>& n_assocs,
                                         const std::vector<std::uint32_t>& n_swaps,
                                         unsigned jobs = 1) {
    std::vector<SweepPoint> points;
    for (auto el : epoch_lens)
        for (auto na : n_assocs)
            for (auto ns : n_swaps)
                points.push_back({el, na, ns, {}});
    if (points.empty())
        throw InputError("sweep grid is empty");

    auto run_one = [&](std::size_t i) {
        SimConfig c = base;
        c.policy.epoch_len = points[i].epoch_len;
        c.policy.n_assoc = points[i].n_assoc;
        c.policy.n_swap = points[i].n_swap;
        c.validate();
        points[i].report = run_simulation(c, trace);
    };
    if (jobs <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i)
            run_one(i);
    } else {
        std::vector<std::future<void>> futs;
        for (std::size_t i = 0; i < points.size(); ++i)
            futs.push_back(std::async(std::launch::async, run_one, i));
        for (auto& f : futs)
            f.get();
    }
    return points;
}

inline json sweep_json(const std::vector<SweepPoint>& points) {
    json j = json::array();
    for (const auto& p : points) {
        j.push_back({{"epoch_len", p.epoch_len},
                     {"n_assoc", p.n_assoc},
                     {"n_swap", p.n_swap},
                     {"misses", p.report.llc.counters.misses()},
                     {"amat_cycles", p.report.amat_cycles},
                     {"dynamic_energy_nj", p.report.dynamic_energy_nj},
                     {"domain_writes", p.report.total_domain_writes},
                     {"grows", p.report.llc.grows},
                     {"shrinks", p.report.llc.shrinks},
                     {"swaps", p.report.llc.swaps}});
    }
    return j;
}

inline void write_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
    out << "epoch_len,n_assoc,n_swap,misses,amat_cycles,dynamic_energy_nj,domain_writes,"
           "grows,shrinks,swaps\n";
    for (const auto& p : points) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%llu,%u,%u,%llu,%.6f,%.6f,%llu,%llu,%llu,%llu\n",
                      (unsigned long long)p.epoch_len, p.n_assoc, p.n_swap,
                      (unsigned long long)p.report.llc.counters.misses(),
                      p.report.amat_cycles, p.report.dynamic_energy_nj,
                      (unsigned long long)p.report.total_domain_writes,
                      (unsigned long long)p.report.llc.grows,
                      (unsigned long long)p.report.llc.shrinks,
                      (unsigned long long)p.report.llc.swaps);
        out << buf;
    }
}

} // namespace sttsim
