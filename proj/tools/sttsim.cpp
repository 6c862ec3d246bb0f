// sttsim: trace-driven simulator for an MLC STT-RAM last-level cache with
// stripped data-to-cell mapping, on-demand associativity, swap policy, and
// endurance accounting. Subcommands: simulate, compare, histogram, sweep,
// generate, classify.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sttsim/sim.hpp"

using namespace sttsim;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string trace_path;
    std::string out_path;
    std::string format = "table";
    std::vector<std::string> sets; // raw key=value overrides
    // frequently swept knobs get first-class flags
    std::string policy;
    std::int64_t epoch_len = -1;
    int n_assoc = -1;
    int n_swap = -1;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_trace = true) {
    cmd->add_option("--config", o.config_path, "flat key-value config file");
    auto* t = cmd->add_option("--trace", o.trace_path, "input trace (text or binary)");
    if (needs_trace)
        t->required();
    cmd->add_option("--out", o.out_path, "write the report to this file");
    cmd->add_option("--format", o.format, "output format: json, csv, or table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    cmd->add_option("--set", o.sets, "extra config overrides as key=value")->take_all();
    cmd->add_option("--policy", o.policy, "policy mode: dynamic, static, or off");
    cmd->add_option("--epoch-len", o.epoch_len, "accesses per policy epoch");
    cmd->add_option("--n-assoc", o.n_assoc, "associativity threshold multiplier N");
    cmd->add_option("--n-swap", o.n_swap, "swap threshold multiplier N");
    cmd->add_option("--seed", o.seed, "simulation seed");
}

SimConfig build_config(const CommonOpts& o) {
    KeyValues kv;
    for (const auto& s : o.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw InputError("--set expects key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!o.policy.empty())
        kv["policy"] = o.policy;
    if (o.epoch_len >= 0)
        kv["epoch_len"] = std::to_string(o.epoch_len);
    if (o.n_assoc >= 0)
        kv["n_assoc"] = std::to_string(o.n_assoc);
    if (o.n_swap >= 0)
        kv["n_swap"] = std::to_string(o.n_swap);
    if (o.seed >= 0)
        kv["seed"] = std::to_string(o.seed);
    return load_config(o.config_path, kv);
}

Trace load_trace(const CommonOpts& o, const SimConfig& cfg) {
    std::ifstream in(o.trace_path, std::ios::binary);
    if (!in)
        throw InputError("cannot open trace '" + o.trace_path + "'");
    return read_trace_auto(in, cfg.llc.line_bytes);
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot open output '" + path + "'");
    out << text;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            v.push_back(item);
    return v;
}

int run_simulate(const CommonOpts& o, const std::string& access_log) {
    SimConfig cfg = build_config(o);
    Trace trace = load_trace(o, cfg);

    std::ofstream log;
    if (!access_log.empty()) {
        log.open(access_log);
        if (!log)
            throw InputError("cannot open access log '" + access_log + "'");
    }
    const auto t0 = std::chrono::steady_clock::now();
    SimReport rep = run_simulation(cfg, trace, access_log.empty() ? nullptr : &log);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (o.format == "json") {
        write_out(o.out_path, report_json(rep).dump(2) + "\n");
    } else if (o.format == "csv") {
        std::ostringstream os;
        write_histogram_csv(rep, os);
        write_out(o.out_path, os.str());
    } else {
        std::ostringstream os;
        print_report_table(rep, os);
        char buf[64];
        std::snprintf(buf, sizeof buf, "  %-26s %.3f s\n", "wall clock", wall);
        os << buf;
        write_out(o.out_path, os.str());
    }
    return 0;
}

int run_compare(const CommonOpts& o, const std::string& baselines, unsigned jobs) {
    SimConfig cfg = build_config(o);
    Trace trace = load_trace(o, cfg);
    auto rows = run_comparison(cfg, trace, split_list(baselines), jobs);
    if (o.format == "json") {
        write_out(o.out_path, comparison_json(rows).dump(2) + "\n");
    } else if (o.format == "csv") {
        std::ostringstream os;
        os << "baseline,misses,amat_cycles,llc_energy_nj,lifetime_seconds,norm_misses,"
              "norm_amat,norm_energy,norm_lifetime,trace_checksum\n";
        for (const auto& r : rows) {
            char buf[320];
            std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.6f,%.6g,%.6f,%.6f,%.6f,%.6f,%s\n",
                          r.name.c_str(), (unsigned long long)r.misses, r.amat_cycles,
                          r.llc_energy_nj,
                          std::isinf(r.lifetime_seconds) ? 0.0 : r.lifetime_seconds,
                          r.norm_misses, r.norm_amat, r.norm_energy, r.norm_lifetime,
                          hex64(r.report.trace_checksum_value).c_str());
            os << buf;
        }
        write_out(o.out_path, os.str());
    } else {
        std::ostringstream os;
        print_comparison_table(rows, os);
        write_out(o.out_path, os.str());
    }
    return 0;
}

int run_histogram(const CommonOpts& o) {
    SimConfig cfg = build_config(o);
    Trace trace = load_trace(o, cfg);
    SimReport rep = run_simulation(cfg, trace);
    std::ostringstream os;
    write_histogram_csv(rep, os);
    write_out(o.out_path, os.str());
    return 0;
}

int run_sweep(const CommonOpts& o, const std::string& epoch_grid, const std::string& assoc_grid,
              const std::string& swap_grid, unsigned jobs) {
    SimConfig cfg = build_config(o);
    Trace trace = load_trace(o, cfg);
    auto to_u64s = [](const std::string& s, std::uint64_t fallback) {
        std::vector<std::uint64_t> v;
        for (const auto& item : split_list(s))
            v.push_back(detail::to_u64("grid", item));
        if (v.empty())
            v.push_back(fallback);
        return v;
    };
    auto epochs = to_u64s(epoch_grid, cfg.policy.epoch_len);
    std::vector<std::uint32_t> assocs, swaps;
    for (auto v : to_u64s(assoc_grid, cfg.policy.n_assoc))
        assocs.push_back(static_cast<std::uint32_t>(v));
    for (auto v : to_u64s(swap_grid, cfg.policy.n_swap))
        swaps.push_back(static_cast<std::uint32_t>(v));

    auto points = run_sweep(cfg, trace, epochs, assocs, swaps, jobs);
    if (o.format == "json") {
        write_out(o.out_path, sweep_json(points).dump(2) + "\n");
    } else {
        std::ostringstream os;
        write_sweep_csv(points, os);
        write_out(o.out_path, os.str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MLC STT-RAM last-level cache simulator"};
    app.require_subcommand(1);

    CommonOpts sim_o, cmp_o, hist_o, sweep_o;
    std::string access_log, baselines;
    unsigned jobs = 1;
    std::string sweep_epochs, sweep_assocs, sweep_swaps;

    auto* sim = app.add_subcommand("simulate", "run one configuration over a trace");
    add_common(sim, sim_o);
    sim->add_option("--access-log", access_log, "write a per-access CSV log");

    auto* cmp = app.add_subcommand("compare", "run the iso-area baselines side by side");
    add_common(cmp, cmp_o);
    cmp->add_option("--baseline", baselines,
                    "comma list from slc,stacked_mlc,stripped_static,stripped_dynamic,slc_big");
    cmp->add_option("--jobs", jobs, "run baselines in parallel");

    auto* hist = app.add_subcommand("histogram", "per-set miss/grow/shrink CSV");
    add_common(hist, hist_o);

    auto* sweep = app.add_subcommand("sweep", "grid over epoch_len, n_assoc, n_swap");
    add_common(sweep, sweep_o);
    sweep->add_option("--epoch-len-grid", sweep_epochs, "comma list of epoch lengths");
    sweep->add_option("--n-assoc-grid", sweep_assocs, "comma list of N values");
    sweep->add_option("--n-swap-grid", sweep_swaps, "comma list of swap N values");
    sweep->add_option("--jobs", jobs, "points run in parallel");

    SynthSpec spec;
    std::string gen_out;
    bool gen_binary = false;
    auto* gen = app.add_subcommand("generate", "emit a synthetic trace");
    gen->add_option("--out", gen_out, "trace file to write")->required();
    gen->add_option("--events", spec.n_events, "number of accesses");
    gen->add_option("--sets", spec.n_sets, "global set count of the target LLC");
    gen->add_option("--line-bytes", spec.line_bytes, "line size");
    gen->add_option("--skew", spec.set_skew, "Zipf exponent over set ranks");
    gen->add_option("--hot-fraction", spec.hot_set_fraction, "fraction of sets that are hot");
    gen->add_option("--lines-per-hot-set", spec.working_lines_per_hot_set,
                    "distinct lines cycling in each hot set");
    gen->add_option("--cold-lines", spec.cold_lines_per_set, "distinct lines in cold sets");
    gen->add_option("--write-ratio", spec.write_ratio, "probability an access is a write");
    gen->add_option("--dominance", spec.dominance_fraction,
                    "fraction of blocks that are >=90% single-op");
    gen->add_option("--cores", spec.cores, "core ids to spread events over");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_flag("--binary", gen_binary, "write the length-prefixed binary format");

    std::string cls_trace, cls_out;
    auto* cls = app.add_subcommand("classify", "per-block read/write dominance CSV");
    cls->add_option("--trace", cls_trace, "input trace")->required();
    cls->add_option("--out", cls_out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // usage error
    }

    try {
        if (sim->parsed())
            return run_simulate(sim_o, access_log);
        if (cmp->parsed())
            return run_compare(cmp_o, baselines, jobs);
        if (hist->parsed())
            return run_histogram(hist_o);
        if (sweep->parsed())
            return run_sweep(sweep_o, sweep_epochs, sweep_assocs, sweep_swaps, jobs);
        if (gen->parsed()) {
            Trace t = generate_trace(spec);
            std::ofstream out(gen_out, std::ios::binary);
            if (!out)
                throw InputError("cannot open output '" + gen_out + "'");
            if (gen_binary)
                write_binary_trace(t, out);
            else
                emit_trace(t, out);
            std::cerr << "wrote " << t.size() << " events, checksum "
                      << hex64(trace_checksum(t)) << "\n";
            return 0;
        }
        if (cls->parsed()) {
            std::ifstream in(cls_trace, std::ios::binary);
            if (!in)
                throw InputError("cannot open trace '" + cls_trace + "'");
            Trace t = read_trace_auto(in);
            DominanceReport rep = classify_blocks(t);
            std::ostringstream os;
            write_dominance_csv(rep, os);
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "# blocks=%zu read_dominated=%.4f write_dominated=%.4f "
                          "non_dominated=%.4f\n",
                          rep.blocks.size(), rep.fraction_read(), rep.fraction_write(),
                          rep.fraction_non());
            write_out(cls_out, buf + os.str());
            return 0;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvariantError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
