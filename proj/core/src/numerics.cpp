#include "cfglab/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace cfglab {

namespace {

void check_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

double dot(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm(const Vec& v) { return std::sqrt(norm_sq(v)); }

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void axpy(double s, const Vec& x, Vec& y) {
  check_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Vec perp_component(const Vec& v, const Vec& r) {
  check_same_dim(v, r, "perp_component");
  const double rr = norm_sq(r);
  const double eps_den = 1e-12 * std::max(1.0, norm_sq(v));
  if (rr < eps_den) return v;
  const double coef = dot(v, r) / rr;
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - coef * r[i];
  return out;
}

std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_key(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + kGolden + (h << 6) + (h >> 2)));
}

std::uint64_t hash_key(std::uint64_t h, std::string_view s) {
  // FNV-1a over the bytes, then combined into the chain.
  std::uint64_t f = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    f ^= c;
    f *= 0x100000001B3ULL;
  }
  return hash_key(h, f);
}

std::uint64_t hash_key(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  __builtin_memcpy(&bits, &v, sizeof(bits));
  return hash_key(h, bits);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  // splitmix64 sequence expands the seed into the 256-bit state.
  std::uint64_t z = seed;
  for (auto& s : state_) {
    z += kGolden;
    std::uint64_t w = z;
    w = (w ^ (w >> 30)) * 0xBF58476D1CE4E5B9ULL;
    w = (w ^ (w >> 27)) * 0x94D049BB133111EBULL;
    s = w ^ (w >> 31);
  }
}

std::uint64_t Rng::next_u64() {
  // xoshiro256++
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

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps log() finite.
  const double u1 =
      static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Rng Rng::split(std::uint64_t key) const {
  return Rng(hash_key(seed_, key));
}

Vec gaussian_sample(Rng& rng, int dim) {
  if (dim < 1) throw std::invalid_argument("gaussian_sample: dim must be >= 1");
  Vec v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

}  // namespace cfglab
