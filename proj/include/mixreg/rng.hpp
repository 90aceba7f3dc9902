#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace mixreg {

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for child `index` of `master`; distinct indices give unrelated seeds.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
  return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key is the seed; the upper half of the 128-bit counter holds a
/// stream id and the lower half the block index. Each (seed, stream) pair is
/// an independent sequence; extending a sequence keeps its prefix. Satisfies UniformRandomBitGenerator.
class Philox4x32
{
public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream = 0) noexcept
    : key_{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) }
    , stream_(stream)
  {
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept
  {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept
  {
    if (pos_ == 2) {
      refill();
    }
    const std::size_t i = pos_++;
    return (static_cast<std::uint64_t>(out_[2 * i + 1]) << 32) | out_[2 * i];
  }

  /// Position the generator at block `block` (two 64-bit outputs per block).
  void seek(std::uint64_t block) noexcept
  {
    block_ = block;
    pos_ = 2;
  }

private:
  static constexpr std::uint32_t kM0 = 0xD2511F53U;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57U;
  static constexpr std::uint32_t kW0 = 0x9E3779B9U;
  static constexpr std::uint32_t kW1 = 0xBB67AE85U;

  void refill() noexcept
  {
    std::array<std::uint32_t, 4> c{ static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32),
                                    static_cast<std::uint32_t>(stream_),
                                    static_cast<std::uint32_t>(stream_ >> 32) };
    std::uint32_t k0 = key_[0];
    std::uint32_t k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
      c = { static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0,
            static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1,
            static_cast<std::uint32_t>(p0) };
      k0 += kW0;
      k1 += kW1;
    }
    out_ = c;
    ++block_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> out_{};
  std::size_t pos_ = 2;
};

/// Variate generation on top of Philox with hand-written transforms; draws are
/// identical across standard library implementations.
class Rng
{
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
    : engine_(seed, stream)
  {
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept
  {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() noexcept
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * 3.14159265358979323846 * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Standard exponential (rate 1).
  double exponential() noexcept { return -std::log(uniform()); }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses the boosting identity.
  double gamma(double shape) noexcept
  {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double z;
      double v;
      do {
        z = normal();
        v = 1.0 + c * z;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * z * z * z * z) {
        return d * v;
      }
      if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  Philox4x32& engine() noexcept { return engine_; }

private:
  Philox4x32 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace mixreg
