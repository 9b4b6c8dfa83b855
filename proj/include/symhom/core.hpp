#pragma once

// Core utilities shared by every module: small-vector helpers on the torus,
// deterministic RNG, the error taxonomy, the conventions manifest, and a
// thread-count-aware parallel map.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace symhom {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all failures raised by the laboratory.
class Error : public std::runtime_error {
public:
    explicit Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& msg) : Error("invalid-input", msg) {}
};

struct IntegrationFailure : Error {
    IntegrationFailure(const std::string& msg, long step)
        : Error("integration-failure", msg + " (step " + std::to_string(step) + ")"),
          step_index(step) {}
    long step_index;
};

struct NoCriticalPoint : Error {
    explicit NoCriticalPoint(const std::string& msg) : Error("no-critical-point", msg) {}
};

struct WindowExhaustion : Error {
    explicit WindowExhaustion(const std::string& msg) : Error("window-exhaustion", msg) {}
};

struct FeasibilityError : Error {
    explicit FeasibilityError(const std::string& msg) : Error("feasibility", msg) {}
};

struct AmbiguityError : Error {
    AmbiguityError(const std::string& msg, std::vector<double> branch_values)
        : Error("ambiguity", msg), branches(std::move(branch_values)) {}
    std::vector<double> branches;
};

struct SelectorInconsistency : Error {
    explicit SelectorInconsistency(const std::string& msg)
        : Error("selector-inconsistency", msg) {}
};

struct NotApplicable : Error {
    explicit NotApplicable(const std::string& msg) : Error("not-applicable", msg) {}
};

struct EscapeDetected : Error {
    explicit EscapeDetected(const std::string& msg) : Error("escape", msg) {}
};

struct PropertyFailure : Error {
    explicit PropertyFailure(const std::string& msg) : Error("property-failure", msg) {}
};

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

inline void check_dim(const Vec& v, std::size_t n, const char* what) {
    if (v.size() != n)
        throw InvalidInput(std::string(what) + ": expected dimension " + std::to_string(n) +
                           ", got " + std::to_string(v.size()));
}

inline Vec zeros(std::size_t n) { return Vec(n, 0.0); }

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
}

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double c, Vec a) {
    for (double& x : a) x *= c;
    return a;
}

inline void axpy(double c, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

/// Reduce a real to its torus representative in [0, 1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;  // guards the floor(1.0-eps) edge
    return r;
}

inline Vec wrap_unit(Vec q) {
    for (double& x : q) x = wrap_unit(x);
    return q;
}

/// Distance on the unit torus, componentwise max metric.
inline double torus_dist(const Vec& a, const Vec& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = std::abs(wrap_unit(a[i] - b[i]));
        t = std::min(t, 1.0 - t);
        d = std::max(d, t);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64; deterministic across platforms)
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Vec uniform_vec(std::size_t n, double lo, double hi) {
        Vec v(n);
        for (double& x : v) x = uniform(lo, hi);
        return v;
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Conventions manifest
// ---------------------------------------------------------------------------

/// The sign and normalization choices the whole pipeline commits to, written
/// into every output file so results stay comparable across runs.
struct Conventions {
    // +1: the action functional at class c is built from the shift by c.
    // -1: it is built from the shift by -c (detected by the linear fixture).
    int orientation = 0;  // 0 = not yet calibrated
    std::string liouville = "p.dq";
    std::string vector_field = "(dH/dp, -dH/dq)";
    std::string action = "int (H - p.qdot) dt";
    std::string battery_id = "battery-v1";
    std::string version = "0.1.0";
};

// ---------------------------------------------------------------------------
// Parallel map over an index range
// ---------------------------------------------------------------------------

/// Thread count comes from SYMHOM_THREADS only; defaults to 1. Results are
/// identical for any thread count (disjoint index writes).
inline unsigned thread_count() {
    if (const char* env = std::getenv("SYMHOM_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(std::min<long>(n, 64));
    }
    return 1;
}

template <typename F>
void parallel_for(std::size_t count, F&& body) {
    unsigned nt = std::min<std::size_t>(thread_count(), count);
    if (nt <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += nt) body(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace symhom
