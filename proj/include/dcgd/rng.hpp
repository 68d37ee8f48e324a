#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

#include <Eigen/Core>

namespace dcgd {

// splitmix64 finalizer; full avalanche on 64 bits.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives the key of a named substream from a master seed. Streams are
// addressed by (name, a, b) -- e.g. ("noise", node, t) -- so adding a new
// stream name can never shift the samples of an existing one, and any two
// distinct addresses give unrelated sequences.
constexpr std::uint64_t stream_key(std::uint64_t master, std::string_view name,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t k = mix64(master ^ 0x9e3779b97f4a7c15ULL);
  k = mix64(k ^ fnv1a(name));
  k = mix64(k ^ (a + 0x9e3779b97f4a7c15ULL));
  k = mix64(k ^ (b + 0x632be59bd9b4e019ULL));
  return k;
}

// Counter-based stream (splitmix64). All randomness in the library flows
// through this class so runs are reproducible bit for bit.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi]; modulo bias is ~2^-64 per unit of range, irrelevant
  // at the range sizes used here.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // standard normal via Box-Muller; the cosine branch of the pair.
  double next_gaussian() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Fills with i.i.d. standard normals, consuming Box-Muller pairs.
  void fill_gaussian(Eigen::Ref<Eigen::VectorXd> out) {
    const Eigen::Index n = out.size();
    for (Eigen::Index i = 0; i + 1 < n; i += 2) {
      const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
      const double u2 = next_double();
      const double r = std::sqrt(-2.0 * std::log(u1));
      out[i] = r * std::cos(2.0 * M_PI * u2);
      out[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    if (n % 2 != 0) out[n - 1] = next_gaussian();
  }

 private:
  std::uint64_t state_;
};

}  // namespace dcgd
