#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace appray {

inline constexpr const char* kVersion = "0.1.0";

// Failure classes shared across modules. The CLI maps these onto exit codes.
enum class ErrorKind {
  MalformedInput,
  MissingBounds,
  IoFailure,
  CorruptStore,
  DimensionMismatch,
  DeviceUnresponsive,
  UnparseableAction,
  BadTarget,
  DegenerateBounds,
  ZeroVector,
  NoNegativesAvailable,
  DivergenceDetected,
  UnsupportedType,
  QuotaUnsatisfiable,
  ClientFailure,
  BadArgs,
  Internal,
};

const char* error_kind_name(ErrorKind k);

class AppError : public std::runtime_error {
 public:
  AppError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg),
        kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Deterministic RNG. All randomness in the project flows through this type so
// seeded runs are byte-reproducible; std::uniform_* distributions are avoided
// because their draw sequences are not pinned by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) { s_ = seed ? seed : 0x9e3779b97f4a7c15ULL; }

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n) {
    // multiply-shift; bias is < 2^-53 for the n used here
    return static_cast<uint64_t>(next_double() * static_cast<double>(n)) %
           n;
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller (deterministic, no cached spare).
  double normal();

  // Derive an independent stream; used to decouple subsystem draw orders.
  Rng fork() { return Rng(next_u64()); }

 private:
  uint64_t s_;
};

// FNV-1a, used for config hashes and state digests.
uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL);
uint64_t fnv1a(const std::string& s);
std::string hex64(uint64_t v);

}  // namespace appray
