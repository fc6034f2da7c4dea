#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace dcpo {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream tag and an index into an independent seed.
/// Every consumer that needs its own stream (a record, a run, a sweep point)
/// derives one here so results do not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(base, tag, index));
}

Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n);

/// Uniformly distributed point on the unit sphere in R^n.
Eigen::VectorXd random_unit(Rng& rng, Eigen::Index n);

/// Random unit vector orthogonal to the unit vector `axis` (needs n >= 2).
Eigen::VectorXd random_orthogonal_unit(Rng& rng, const Eigen::VectorXd& axis);

double uniform(Rng& rng, double lo, double hi);

}  // namespace dcpo
