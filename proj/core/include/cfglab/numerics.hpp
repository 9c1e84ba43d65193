#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace cfglab {

// Dense real vector, immutable by convention once handed out. Dimension is
// the runtime length; default experiments use d = 2.
using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm_sq(const Vec& v);
double norm(const Vec& v);
bool all_finite(const Vec& v);

// y += s * x
void axpy(double s, const Vec& x, Vec& y);

// Component of v perpendicular to r: v - (<v,r>/<r,r>) r.
// When <r,r> falls below 1e-12 * max(1, |v|^2) the reference is treated as
// zero and v is returned unchanged.
Vec perp_component(const Vec& v, const Vec& r);

// splitmix64 finalizer; also used to derive child seeds and cell seeds.
std::uint64_t mix64(std::uint64_t z);

// Order-sensitive key combiner built on mix64. Used to derive per-cell
// seeds from (seed, strategy, lambda, condition) tuples.
std::uint64_t hash_key(std::uint64_t h, std::uint64_t v);
std::uint64_t hash_key(std::uint64_t h, std::string_view s);
std::uint64_t hash_key(std::uint64_t h, double v);

// Deterministic stream generator: xoshiro256++ seeded via splitmix64.
// Same seed -> identical stream on every platform. Single-owner: parallel
// work must key-split via split(), never share one instance; split() derives
// a child seed without advancing the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Standard normal via Box-Muller (trig form, cached spare).
  double next_gaussian();

  // Child stream keyed by `key`; parent state is untouched. Nested splits
  // chain: a.split(k1).split(k2) is a pure function of (seed, k1, k2).
  Rng split(std::uint64_t key) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// d i.i.d. standard normal components.
Vec gaussian_sample(Rng& rng, int dim);

}  // namespace cfglab
