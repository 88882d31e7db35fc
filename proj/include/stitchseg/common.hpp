#pragma once

// Shared primitives: error types, a dense row-major matrix, deterministic
// random helpers, and a slot-writing parallel_for whose results are
// independent of the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace stitchseg {

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  ParseError(std::string file_, std::size_t line_, const std::string& msg)
      : Error(file_ + ":" + std::to_string(line_) + ": " + msg),
        file(std::move(file_)),
        line(line_) {}
  std::string file;
  std::size_t line;
};

struct TopologyMismatch : Error { using Error::Error; };
struct DegenerateBone : Error { using Error::Error; };
struct TilingViolation : Error { using Error::Error; };
struct EmptyCandidateSet : Error { using Error::Error; };
struct ExhaustedCandidates : Error { using Error::Error; };
struct AdjacentDuplicateLabels : Error { using Error::Error; };
struct ImpossibleConstraint : Error { using Error::Error; };
struct NonUnitInput : Error { using Error::Error; };
struct NoPositives : Error { using Error::Error; };
struct NoForwardRecorded : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct InvalidThreshold : Error { using Error::Error; };
struct MissingPrediction : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct LabelOutOfRange : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles

struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {a.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {a.data() + r * cols, cols}; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const Mat& m) {
  for (double x : m.a)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Small vector helpers

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

// Cosine of the angle between x and y, clamped into [-1, 1]. Returns 0 when
// either vector is shorter than `eps` (direction undefined).
inline double safe_cosine(std::span<const double> x, std::span<const double> y,
                          double eps = 1e-12) {
  const double nx = norm2(x);
  const double ny = norm2(y);
  if (nx < eps || ny < eps) return 0.0;
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Deterministic randomness. Distribution helpers are hand-rolled so output
// streams do not depend on the standard library version.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Per-item seed for parallel generation: serial and parallel runs agree.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next() {
    // xorshift* over a splitmix-initialized state
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1Dull;
  }

  // Unbiased integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  double uniform() { return double(next() >> 11) * 0x1.0p-53; }  // [0, 1)

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean = 0.0, double sigma = 1.0) {
    // Box-Muller, no caching so the draw count is explicit
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + sigma * z;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Text formatting for the bit-exact file formats (9 significant digits).

inline std::string fmt_g9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string fmt_f4(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

// ---------------------------------------------------------------------------
// parallel_for: fn(i) writes only to slot i of preallocated output, so the
// result is identical for any thread count.

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  for (unsigned w = 0; w < nt; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += nt) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace stitchseg
