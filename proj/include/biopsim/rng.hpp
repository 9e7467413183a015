#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace biopsim {

/// One SplitMix64 step; used to derive well-separated child seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for an independent stream identified by a key path under a master seed,
/// e.g. derive_seed(master, {operator_id, mode_index, station_index}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> key);

/// Portable random stream: mt19937_64 bits with in-house uniform/normal transforms so
/// that draws are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace biopsim
