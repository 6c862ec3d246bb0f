#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sttsim {

using cycles_t = std::uint64_t;

/// Raised for bad user input: config files, traces, CLI argument values.
/// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when internal bookkeeping detects an impossible state
/// (conservation breaks, counter out of range). CLI exit code 3.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

inline void require_invariant(bool ok, const char* what) {
    if (!ok)
        throw InvariantError(what);
}

enum class OpKind : std::uint8_t { Read, Write };

inline const char* to_string(OpKind op) { return op == OpKind::Read ? "R" : "W"; }

/// Deterministic splitmix64 generator. Used everywhere randomness is
/// needed so results do not depend on the standard library's
/// distribution implementations.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }

    // uniform in [0, 1)
    double next_double() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }
};

/// FNV-1a over arbitrary bytes; used to fingerprint traces in reports.
struct Fnv1a {
    std::uint64_t hash = 0xcbf29ce484222325ULL;

    void update(const void* data, std::size_t len) {
        auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            hash ^= p[i];
            hash *= 0x100000001b3ULL;
        }
    }
    template <typename T>
    void update_value(const T& v) {
        update(&v, sizeof(v));
    }
};

} // namespace sttsim
