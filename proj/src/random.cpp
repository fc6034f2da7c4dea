#include "dcpo/random.hpp"

#include <stdexcept>

namespace dcpo {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  // FNV-1a over the tag keeps distinct streams distinct for the same base seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(base ^ h) + index);
}

Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Eigen::VectorXd random_unit(Rng& rng, Eigen::Index n) {
  for (;;) {
    Eigen::VectorXd v = standard_normal(rng, n);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

Eigen::VectorXd random_orthogonal_unit(Rng& rng, const Eigen::VectorXd& axis) {
  if (axis.size() < 2) throw std::invalid_argument("random_orthogonal_unit: dimension must be >= 2");
  for (;;) {
    Eigen::VectorXd v = standard_normal(rng, axis.size());
    v -= axis.dot(v) * axis;
    const double norm = v.norm();
    if (norm > 1e-8) {
      v /= norm;
      // One more projection pass removes the residual component left by rounding.
      v -= axis.dot(v) * axis;
      return v.normalized();
    }
  }
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace dcpo
