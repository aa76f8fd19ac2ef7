#ifndef SVPF_RANDOM_HPP
#define SVPF_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string>

namespace svpf {

/// Seeded random stream shared by simulators and filters.
///
/// Distribution objects are constructed per draw, so the complete stream
/// state is the engine state. That keeps `state()` / `restore()` exact for
/// checkpoint and resume.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Independent child stream; advances this stream by one draw.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

  std::string state() const;
  void restore(const std::string& text);

  std::mt19937_64& engine() { return engine_; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace svpf

#endif  // SVPF_RANDOM_HPP
