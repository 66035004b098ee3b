#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rangekit {

/// Deterministic random stream. Wraps std::mt19937_64 (whose output
/// sequence is fixed by the standard) and keeps all real-valued
/// transformations explicit, so that results are bit-reproducible across
/// platforms and standard-library versions. Streams for parallel workers
/// are derived from (seed, stream index); replicas never share a stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{
        std::uint32_t(seed), std::uint32_t(seed >> 32),
        std::uint32_t(stream), std::uint32_t(stream >> 32),
        0x9e3779b9u};
    gen_.seed(seq);
    have_spare_ = false;
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1]: never returns 0, safe under log().
  double uniform_pos() { return double((gen_() >> 11) + 1) * 0x1.0p-53; }

  /// Standard exponential via inversion.
  double exponential() { return -std::log(uniform_pos()); }

  /// Standard normal (Box-Muller, trigonometric form; spare is cached).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double t = 6.283185307179586476925286766559 * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection-free enough for our n << 2^64; the modulo
    // bias at n ~ 10^9 is < 2^-34 and irrelevant next to MC error, but
    // we keep the widening-multiply trick anyway since it is cheap.
    unsigned __int128 m = (unsigned __int128)gen_() * n;
    return std::uint64_t(m >> 64);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rangekit
