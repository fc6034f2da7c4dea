#include "dcpo/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dcpo {
namespace {

std::string describe(const std::vector<LevelName>& levels) {
  std::string out;
  for (LevelName l : levels) {
    if (!out.empty()) out += ", ";
    out += to_string(l);
  }
  return out;
}

}  // namespace

NoCandidateInBand::NoCandidateInBand(std::vector<LevelName> levels)
    : InfeasibleError("perturb", "no candidate in band for level(s): " + describe(levels)),
      levels_(std::move(levels)) {}

PerturbationPool::PerturbationPool(SemanticVector original, std::vector<PoolCandidate> candidates)
    : original_(std::move(original)), candidates_(std::move(candidates)) {
  std::stable_sort(candidates_.begin(), candidates_.end(),
                   [](const PoolCandidate& a, const PoolCandidate& b) { return a.similarity > b.similarity; });
  for (const auto& c : candidates_) {
    if (c.vector.size() != original_.size()) throw std::invalid_argument("perturb: candidate dimension mismatch");
    if (!(c.similarity < 100.0)) {
      throw std::invalid_argument("perturb: candidate must be strictly less similar than the original");
    }
  }
}

SemanticVector rotate_toward(const SemanticVector& z, const Eigen::VectorXd& toward, double degrees) {
  if (toward.size() != z.size()) throw std::invalid_argument("perturb: rotation direction dimension mismatch");
  const double radians = degrees * std::numbers::pi / 180.0;
  return SemanticVector::normalized(std::cos(radians) * z.vec() + std::sin(radians) * toward);
}

PerturbationPool build_pool(const SemanticVector& z, int pool_size, Rng& rng) {
  if (pool_size < 3) throw std::invalid_argument("perturb: pool_size must be >= 3");
  std::vector<PoolCandidate> candidates;
  candidates.reserve(static_cast<std::size_t>(pool_size));
  for (int j = 0; j < pool_size; ++j) {
    const double degrees =
        kPoolMinDegrees + (kPoolMaxDegrees - kPoolMinDegrees) * (j + 0.5) / static_cast<double>(pool_size);
    const Eigen::VectorXd dir = random_orthogonal_unit(rng, z.vec());
    SemanticVector candidate = rotate_toward(z, dir, degrees);
    const double sim = similarity(candidate, z);
    candidates.push_back({std::move(candidate), sim});
  }
  return PerturbationPool(z, std::move(candidates));
}

const PoolCandidate& select_level(const PerturbationPool& pool, const PerturbationLevel& level) {
  const PoolCandidate* best = nullptr;
  double best_distance = 0.0;
  const double mid = level.band.midpoint();
  for (const auto& c : pool.candidates()) {
    if (!level.band.contains(c.similarity)) continue;
    const double distance = std::abs(c.similarity - mid);
    if (best == nullptr || distance < best_distance) {
      best = &c;
      best_distance = distance;
    }
  }
  if (best == nullptr) throw NoCandidateInBand({level.name});
  return *best;
}

std::map<LevelName, SemanticVector> select_levels(const PerturbationPool& pool,
                                                  const PerturbationSettings& settings) {
  if (pool.candidates().empty()) throw std::invalid_argument("perturb: empty pool");
  std::map<LevelName, SemanticVector> out;
  std::vector<LevelName> missing;
  for (const auto& level : settings.levels) {
    try {
      out.emplace(level.name, select_level(pool, level).vector);
    } catch (const NoCandidateInBand&) {
      missing.push_back(level.name);
    }
  }
  if (!missing.empty()) throw NoCandidateInBand(std::move(missing));
  return out;
}

SemanticVector perturb(const SemanticVector& z, const PerturbationLevel& level, int pool_size, Rng& rng) {
  if (level.identity) return z;
  if (!(level.band.lo < level.band.hi)) throw std::invalid_argument("perturb: band must have lo < hi");
  const PerturbationPool pool = build_pool(z, pool_size, rng);
  return select_level(pool, level).vector;
}

}  // namespace dcpo
