#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace depthgan {

// Error hierarchy. Everything we throw on purpose derives from Error so the
// CLI can map "our" failures to exit code 1 (or 2 for usage/config problems).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct MissingFileError : IoError {
  using IoError::IoError;
};
struct ChecksumError : IoError {
  using IoError::IoError;
};
struct SchemaVersionError : IoError {
  using IoError::IoError;
};
struct CheckpointError : IoError {
  using IoError::IoError;
};
struct NumericError : Error {
  using Error::Error;
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_mix(std::uint64_t h, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 plus hand-rolled value transforms: the
// std::uniform_* / std::normal_distribution algorithms are implementation
// defined, and we promise bit-identical runs for a given seed, so we do not
// use them. Streams for independent purposes are derived from a base seed and
// a tag; drawing from one stream never advances another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our n << 2^64.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // Box-Muller, cosine branch only so there is no hidden cached state.
  double normal() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Rng stream(std::string_view tag) const { return Rng(splitmix64(seed_ ^ fnv1a64(tag))); }
  Rng stream(std::string_view tag, std::uint64_t n) const {
    return Rng(splitmix64(splitmix64(seed_ ^ fnv1a64(tag)) + n));
  }

  std::string serialize() const {
    std::ostringstream os;
    os << seed_ << ' ' << eng_;
    return os.str();
  }
  static Rng deserialize(const std::string& s) {
    std::istringstream is(s);
    std::uint64_t seed = 0;
    is >> seed;
    Rng r(seed);
    is >> r.eng_;
    if (!is) throw CheckpointError("bad rng state string");
    return r;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

}  // namespace depthgan
