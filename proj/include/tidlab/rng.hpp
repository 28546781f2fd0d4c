#pragma once

#include <array>
#include <cstdint>

namespace tidlab {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// A block of random bits is a pure function of (key, counter).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// Identifies the random stream of one path.
struct RngStreamSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

/// Sequential reader over the Philox stream of one RngStreamSpec.
/// Counter layout: (draw index lo, draw index hi, path lo, path hi);
/// key = master seed.
class RandomStream {
 public:
  explicit RandomStream(RngStreamSpec spec);

  /// Uniform on (0, 1), 53-bit resolution.
  double uniform();
  double normal();

 private:
  void refill();

  RngStreamSpec spec_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> bits_{};
  int next_word_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Source of standard normal increments consumed by the path simulators.
class NormalSource {
 public:
  virtual ~NormalSource() = default;
  virtual double next() = 0;
};

class StreamNormalSource final : public NormalSource {
 public:
  explicit StreamNormalSource(RngStreamSpec spec) : stream_(spec) {}
  double next() override { return stream_.normal(); }

 private:
  RandomStream stream_;
};

class ZeroNormalSource final : public NormalSource {
 public:
  double next() override { return 0.0; }
};

}  // namespace tidlab
