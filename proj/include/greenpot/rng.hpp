#pragma once

#include <cmath>
#include <cstdint>

namespace greenpot {

// splitmix64; used for seeding and for deriving per-path seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fixed, documented per-path seed derivation: path i of a run with master
// seed s draws from Rng(derive_seed(s, i)). Keeping this a pure function of
// (seed, index) makes parallel schedules irrelevant to the output.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// xoshiro256++ (Blackman & Vigna, public domain). Hand-rolled so draw
// sequences are identical across standard libraries and platforms;
// std::normal_distribution makes no such guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0 so logs are safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double uniform_co() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  // Standard normal pair via Box-Muller: exactly two uniforms per pair, so
  // every sampler consumes a deterministic amount of entropy.
  void normal_pair(double& z0, double& z1) {
    const double u1 = uniform();
    const double u2 = uniform_co();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
  }

  // Fills n slots with standard normals, consuming ceil(n/2) pairs.
  void normals(double* out, int n) {
    int i = 0;
    for (; i + 1 < n; i += 2) normal_pair(out[i], out[i + 1]);
    if (i < n) {
      double z0, z1;
      normal_pair(z0, z1);
      out[i] = z0;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace greenpot
