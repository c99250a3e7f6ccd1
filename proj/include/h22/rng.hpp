#pragma once

#include <cmath>
#include <cstdint>

namespace h22 {

// Counter-free deterministic RNG. std::mt19937 would be bit-portable but the
// std:: distributions are not, so both the generator (xoshiro256++) and every
// distribution transform are spelled out here. Same (seed, stream) gives the
// same draw sequence on any platform.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over a seed/stream mix fills the state; distinct streams of
    // the same seed decorrelate after one mixing round.
    std::uint64_t x = seed;
    x ^= 0x9e3779b97f4a7c15ull + (stream << 1) + (stream >> 3);
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
    state_[3] |= 1;  // never all-zero
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform on [0,1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), safe inside logs
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // standard normal, Box-Muller (cosine branch only; no cached state)
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // Gamma(shape 1/2, scale 1): Z^2/2
  double gamma_half() {
    const double z = normal();
    return 0.5 * z * z;
  }

  // chi-square with one degree of freedom = Gamma(shape 1/2, scale 2)
  double chi_square_1() {
    const double z = normal();
    return z * z;
  }

  // Inverse Gaussian IG(mu, lambda), Michael-Schucany-Haas transform.
  double inverse_gaussian(double mu, double lambda) {
    const double z = normal();
    const double y = z * z;
    const double x = mu + mu * mu * y / (2.0 * lambda) -
                     mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
    return (uniform() <= mu / (mu + x)) ? x : mu * mu / x;
  }

  const std::uint64_t* state() const { return state_; }
  void set_state(const std::uint64_t s[4]) {
    for (int i = 0; i < 4; ++i) state_[i] = s[i];
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  std::uint64_t state_[4];
};

// Deterministic substream id for a work item, so parallel replicates draw the
// same numbers regardless of scheduling.
inline std::uint64_t substream(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace h22
