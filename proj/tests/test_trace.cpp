#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "sttsim/trace.hpp"

using namespace sttsim;

TEST_CASE("text parse basics") {
    std::istringstream in("0 0 R 0x40 8\n"
                          "# a comment line\n"
                          "\n"
                          "3 1 W 0x80 4   # trailing comment\n");
    Trace t = parse_trace(in);
    REQUIRE(t.size() == 2);
    CHECK(t[0] == AccessEvent{0, 0, OpKind::Read, 0x40, 8});
    CHECK(t[1] == AccessEvent{3, 1, OpKind::Write, 0x80, 4});
}

TEST_CASE("parse errors carry line numbers") {
    auto expect_error = [](const char* text, const char* needle) {
        std::istringstream in(text);
        try {
            parse_trace(in);
            FAIL("expected a parse error for: " << text);
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_error("5 0 X 0x0 8\n", "line 1");
    expect_error("0 0 R 0x0 8\n1 0\n", "line 2");
    expect_error("2 0 R 0x0 8\n1 0 R 0x40 8\n", "nondecreasing");
    expect_error("0 0 R 0x3c 8\n", "crosses a line boundary");
    expect_error("0 0 R 0x0 80\n", "size");
    expect_error("0 0 R 0x0 8 junk\n", "trailing");
}

TEST_CASE("emit/parse round trip is the identity") {
    SynthSpec spec;
    spec.n_events = 3000;
    spec.n_sets = 64;
    spec.cores = 3;
    spec.seed = 11;
    Trace t = generate_trace(spec);

    std::ostringstream out;
    emit_trace(t, out);
    std::istringstream in(out.str());
    CHECK(parse_trace(in) == t);
}

TEST_CASE("binary round trip and format sniffing") {
    SynthSpec spec;
    spec.n_events = 2000;
    spec.n_sets = 32;
    spec.seed = 5;
    Trace t = generate_trace(spec);

    std::ostringstream out(std::ios::binary);
    write_binary_trace(t, out);
    std::istringstream in(out.str(), std::ios::binary);
    CHECK(read_binary_trace(in) == t);

    std::istringstream sniff(out.str(), std::ios::binary);
    CHECK(read_trace_auto(sniff) == t);

    std::istringstream bad("STTRACE1xxxx", std::ios::binary);
    CHECK_THROWS_AS(read_binary_trace(bad), InputError);
}

TEST_CASE("generator is deterministic under a fixed seed") {
    SynthSpec spec;
    spec.n_events = 5000;
    spec.seed = 42;
    Trace a = generate_trace(spec);
    Trace b = generate_trace(spec);
    CHECK(a == b);
    CHECK(trace_checksum(a) == trace_checksum(b));

    spec.seed = 43;
    CHECK(generate_trace(spec) != a);
}

TEST_CASE("zero skew spreads accesses evenly") {
    SynthSpec spec;
    spec.n_events = 200000;
    spec.n_sets = 64;
    spec.set_skew = 0.0;
    spec.hot_set_fraction = 0.0;
    spec.seed = 9;
    Trace t = generate_trace(spec);

    CacheGeometry g;
    g.total_bytes = std::uint64_t(64) * 64 * 16;
    g.line_bytes = 64;
    g.max_ways = 16;
    g.min_ways = 8;
    g.banks = 1;
    std::vector<std::uint64_t> counts(64, 0);
    for (const auto& e : t)
        counts[decompose(e.addr, g).global_set]++;
    // multinomial: mean n/64, sigma ~ sqrt(n*p*(1-p)); allow 4 sigma
    const double mean = double(spec.n_events) / 64.0;
    const double sigma = std::sqrt(double(spec.n_events) * (1.0 / 64.0) * (63.0 / 64.0));
    for (auto c : counts)
        CHECK(std::abs(double(c) - mean) < 4.0 * sigma);
}

TEST_CASE("hot sets cycle over the requested number of distinct lines") {
    SynthSpec spec;
    spec.n_events = 100000;
    spec.n_sets = 128;
    spec.set_skew = 1.2;
    spec.hot_set_fraction = 0.1;
    spec.working_lines_per_hot_set = 12;
    spec.cold_lines_per_set = 2;
    spec.seed = 3;
    Trace t = generate_trace(spec);

    std::map<std::uint64_t, std::set<std::uint64_t>> lines_per_set;
    const std::uint32_t offset_bits = 6, set_bits = 7;
    for (const auto& e : t)
        lines_per_set[(e.addr >> offset_bits) & 127].insert(e.addr >> (offset_bits + set_bits));
    std::size_t hot = 0;
    for (const auto& [set, lines] : lines_per_set) {
        (void)set;
        CHECK((lines.size() == 12 || lines.size() <= 2));
        if (lines.size() == 12)
            hot++;
    }
    // 10% of 128 sets, give or take sets too cold to show every line
    CHECK(hot >= 10);
    CHECK(hot <= 16);
}

TEST_CASE("classifier buckets and the generator loop") {
    SUBCASE("all-read trace") {
        Trace t;
        for (int i = 0; i < 50; ++i)
            t.push_back({std::uint64_t(i), 0, OpKind::Read, std::uint64_t(i % 5) * 64, 8});
        DominanceReport rep = classify_blocks(t);
        CHECK(rep.fraction_read() == 1.0);
        CHECK(rep.fraction_write() == 0.0);
    }
    SUBCASE("50/50 per block") {
        Trace t;
        for (int i = 0; i < 50; ++i)
            t.push_back({std::uint64_t(i), 0, i % 2 ? OpKind::Read : OpKind::Write,
                         std::uint64_t(i % 5) * 64, 8});
        DominanceReport rep = classify_blocks(t);
        CHECK(rep.fraction_non() == 1.0);
    }
    SUBCASE("fractions always sum to one") {
        SynthSpec spec;
        spec.n_events = 30000;
        spec.n_sets = 64;
        spec.dominance_fraction = 0.33;
        spec.seed = 17;
        DominanceReport rep = classify_blocks(generate_trace(spec));
        CHECK(rep.fraction_read() + rep.fraction_write() + rep.fraction_non() ==
              doctest::Approx(1.0));
        // generator promised ~33% dominated blocks
        CHECK(rep.fraction_read() + rep.fraction_write() == doctest::Approx(0.33).epsilon(0.25));
    }
    SUBCASE("empty trace is an error") {
        CHECK_THROWS_AS(classify_blocks(Trace{}), InputError);
    }
}

TEST_CASE("synth spec validation") {
    SynthSpec spec;
    spec.n_events = 0;
    CHECK_THROWS_AS(generate_trace(spec), InputError);
    spec = SynthSpec{};
    spec.write_ratio = 1.5;
    CHECK_THROWS_AS(generate_trace(spec), InputError);
    spec = SynthSpec{};
    spec.n_sets = 100; // not a power of two
    CHECK_THROWS_AS(generate_trace(spec), InputError);
}
