#pragma once

#include <cstdint>
#include <random>

namespace htbnn {

/// splitmix64 finalizer; used to derive independent seeds from (seed, stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64 with explicit transforms so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Child generator for a numbered stream.
  static Rng stream(std::uint64_t seed, std::uint64_t id) { return Rng(mix_seed(seed, id)); }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

  double normal();
  double cauchy();
  double chi_squared(double nu);
  double student(double nu);
  double gamma(double shape);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace htbnn
