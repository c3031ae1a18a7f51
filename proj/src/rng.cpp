#include "assocmem/rng.hpp"

#include <cmath>
#include <numbers>

namespace assocmem {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

PhiloxKey split_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// Two normals from one Philox block.
inline void box_muller(const PhiloxCounter& r, double& z0, double& z1) {
  const double u1 = 1.0 - uniform53(r[0], r[1]);  // (0, 1]
  const double u2 = uniform53(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = radius * std::cos(angle);
  z1 = radius * std::sin(angle);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

void fill_normals(std::uint64_t seed, StreamRole role, std::uint32_t a, std::uint32_t b,
                  std::span<double> out) {
  const PhiloxKey key = split_key(seed);
  const auto role_word = static_cast<std::uint32_t>(role);
  std::size_t i = 0;
  for (std::uint32_t block = 0; i < out.size(); ++block) {
    double z0, z1;
    box_muller(philox4x32({block, b, a, role_word}, key), z0, z1);
    out[i++] = z0;
    if (i < out.size()) out[i++] = z1;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, StreamRole role, std::uint64_t a, std::uint64_t b) {
  const auto r = philox4x32({static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                             static_cast<std::uint32_t>(a),
                             static_cast<std::uint32_t>(role) ^
                                 (static_cast<std::uint32_t>(a >> 32) << 8)},
                            split_key(seed));
  return (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
}

double NormalStream::next() {
  if (cached_left_ == 0) {
    box_muller(philox4x32({block_, hi_word_, a_, static_cast<std::uint32_t>(role_)},
                          split_key(seed_)),
               cached_[0], cached_[1]);
    if (++block_ == 0) ++hi_word_;
    cached_left_ = 2;
  }
  return cached_[2 - cached_left_--];
}

}  // namespace assocmem
