#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dcpo/errors.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

class NoCandidateInBand : public InfeasibleError {
 public:
  explicit NoCandidateInBand(std::vector<LevelName> levels);
  const std::vector<LevelName>& levels() const noexcept { return levels_; }

 private:
  std::vector<LevelName> levels_;
};

struct PoolCandidate {
  SemanticVector vector;
  double similarity = 0.0;  // to the pool's original, x100
};

/// Candidates sorted by descending similarity; every similarity is strictly
/// below the original's self-similarity of 100.
class PerturbationPool {
 public:
  PerturbationPool(SemanticVector original, std::vector<PoolCandidate> candidates);

  const SemanticVector& original() const noexcept { return original_; }
  const std::vector<PoolCandidate>& candidates() const noexcept { return candidates_; }

 private:
  SemanticVector original_;
  std::vector<PoolCandidate> candidates_;
};

/// Rotates unit z by `degrees` inside the plane spanned by z and the unit
/// direction `toward` (which must be orthogonal to z).
SemanticVector rotate_toward(const SemanticVector& z, const Eigen::VectorXd& toward, double degrees);

inline constexpr double kPoolMinDegrees = 5.0;
inline constexpr double kPoolMaxDegrees = 85.0;

/// pool_size rotations of z over an even sweep of angles in (5, 85) degrees,
/// each toward its own seeded random orthogonal direction.
PerturbationPool build_pool(const SemanticVector& z, int pool_size, Rng& rng);

/// The in-band candidate nearest the band midpoint (first one wins on ties).
const PoolCandidate& select_level(const PerturbationPool& pool, const PerturbationLevel& level);

/// One vector per configured level. Throws NoCandidateInBand naming every
/// empty band.
std::map<LevelName, SemanticVector> select_levels(const PerturbationPool& pool,
                                                  const PerturbationSettings& settings = {});

SemanticVector perturb(const SemanticVector& z, const PerturbationLevel& level, int pool_size, Rng& rng);

}  // namespace dcpo
