#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace assocmem {

/// Philox4x32-10 counter-based generator.
/// Every output block is a pure function of (key, counter), so any draw can be
/// regenerated without storing state.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// Which family of draws a stream belongs to. Distinct roles never share a
/// counter, so e.g. inputs and outputs of one instance are independent.
enum class StreamRole : std::uint32_t {
  Input = 1,
  SharedOutput = 2,
  DecoupledOutput = 3,
  Init = 4,
  MonteCarlo = 5,
  SeedDerivation = 6,
};

/// Fill `out` with i.i.d. standard normals for stream (seed, role, a, b).
/// Box-Muller on 53-bit uniforms; the k-th pair comes from counter block k.
void fill_normals(std::uint64_t seed, StreamRole role, std::uint32_t a, std::uint32_t b,
                  std::span<double> out);

/// 64-bit value derived from (seed, role, a, b); used to split seeds.
std::uint64_t derive_seed(std::uint64_t seed, StreamRole role, std::uint64_t a,
                          std::uint64_t b = 0);

/// Uniform in [0, 1) built from two 32-bit words.
inline double uniform53(std::uint32_t hi, std::uint32_t lo) {
  return static_cast<double>((static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6)) *
         0x1.0p-53;
}

/// Sequential normal generator over a counter-based stream. Cheap to copy; two
/// copies with the same (seed, role, a) produce the same sequence.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, StreamRole role, std::uint32_t a = 0)
      : seed_(seed), role_(role), a_(a) {}

  double next();

 private:
  std::uint64_t seed_;
  StreamRole role_;
  std::uint32_t a_;
  std::uint32_t block_ = 0;
  std::uint32_t hi_word_ = 0;
  std::array<double, 2> cached_{};
  int cached_left_ = 0;
};

}  // namespace assocmem
