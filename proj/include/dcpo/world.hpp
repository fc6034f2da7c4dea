#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "dcpo/random.hpp"

namespace dcpo {

/// Unit-norm embedding of a caption, prompt, or image's ground-truth content.
class SemanticVector {
 public:
  SemanticVector() = default;

  /// Normalizes `v`; throws on a (near) zero vector.
  static SemanticVector normalized(const Eigen::VectorXd& v);
  /// Adopts `v` as-is after checking |v| = 1 within 1e-9.
  static SemanticVector from_unit(const Eigen::VectorXd& v);

  const Eigen::VectorXd& vec() const noexcept { return v_; }
  Eigen::Index size() const noexcept { return v_.size(); }
  double operator[](Eigen::Index i) const { return v_[i]; }

  friend bool operator==(const SemanticVector& a, const SemanticVector& b) {
    return a.v_.size() == b.v_.size() && (a.v_.array() == b.v_.array()).all();
  }

 private:
  explicit SemanticVector(Eigen::VectorXd v) : v_(std::move(v)) {}
  Eigen::VectorXd v_;
};

struct ImageSample {
  Eigen::VectorXd latent;
  SemanticVector true_semantics;
};

struct PreferencePair {
  std::size_t id = 0;
  SemanticVector prompt;
  ImageSample preferred;
  ImageSample less_preferred;
};

enum class LevelName { Weak, Medium, Strong };

std::string to_string(LevelName level);
LevelName level_from_string(const std::string& name);

/// Where a record's captions came from. `level` is empty for perturbations
/// that are not one of the three named bands (continuous sweeps, identity).
struct Provenance {
  enum class Kind { Original, Captioned, Perturbed };
  Kind kind = Kind::Original;
  std::optional<LevelName> level;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

std::string to_string(const Provenance& provenance);
Provenance provenance_from_string(const std::string& tag);

struct DualCaptionPair {
  std::size_t id = 0;
  SemanticVector caption_w;
  SemanticVector caption_l;
  ImageSample preferred;
  ImageSample less_preferred;
  Provenance provenance;
};

/// Knobs of the synthetic world. `target_delta_mu` is the caption-image
/// similarity gap (x100 scale) the generator calibrates for captions produced
/// at fidelity `caption_fidelity_rho`; rho = 0 means the prompts themselves.
struct WorldConfig {
  int k = 4;
  int d = 8;
  int n_pairs = 2000;
  double caption_fidelity_rho = 0.0;
  double target_delta_mu = 1.3;
  double preference_gap = 0.002;
  double noise_scale = 0.05;
  std::uint64_t seed = 1;
  /// Range of the per-pair base similarity level (cosine scale) around which
  /// the preferred/less-preferred similarities are placed.
  double base_similarity_lo = 0.2;
  double base_similarity_hi = 0.4;
};

void validate(const WorldConfig& config);

/// Isotropic caption noise applied before renormalization.
inline constexpr double kCaptionNoise = 0.05;

/// Noise-free cosine between caption(image, prompt, rho) and the image
/// semantics, as a function of the prompt-image cosine m.
double caption_alignment(double prompt_cosine, double rho);

/// Inverse of caption_alignment on its increasing branch.
double inverse_caption_alignment(double alignment, double rho);

struct DeltaMuRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Targets (x100 scale) the generator can realize for this config's seed and
/// preference gap. Throws InfeasibleError when the range is empty.
DeltaMuRange feasible_delta_mu_range(const WorldConfig& config);

/// Seeded d x k linear map from semantic space to latent space.
Eigen::MatrixXd latent_map(const WorldConfig& config);

std::vector<PreferencePair> generate_world(const WorldConfig& config);

/// normalize(rho * s + (1 - rho) * c + noise * N(0, I)).
SemanticVector caption(const ImageSample& image, const SemanticVector& prompt, double rho, Rng& rng,
                       double noise = kCaptionNoise);

/// Cosine between z and the image's ground-truth semantics, x100.
double similarity(const SemanticVector& z, const ImageSample& image);
double similarity(const SemanticVector& a, const SemanticVector& b);

/// Closed similarity interval on the x100 scale, upper edge exclusive unless
/// lo == hi (the degenerate identity band).
struct SimilarityBand {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double s) const { return lo == hi ? s == lo : (s >= lo && s < hi); }
  double midpoint() const { return 0.5 * (lo + hi); }
};

struct PerturbationLevel {
  LevelName name = LevelName::Weak;
  SimilarityBand band;
  /// The identity level returns its input unperturbed.
  bool identity = false;

  static PerturbationLevel weak() { return {LevelName::Weak, {80.0, 95.0}, false}; }
  static PerturbationLevel medium() { return {LevelName::Medium, {55.0, 80.0}, false}; }
  static PerturbationLevel strong() { return {LevelName::Strong, {25.0, 55.0}, false}; }
  static PerturbationLevel identity_level() { return {LevelName::Weak, {100.0, 100.0}, true}; }
};

struct PerturbationSettings {
  std::array<PerturbationLevel, 3> levels{PerturbationLevel::weak(), PerturbationLevel::medium(),
                                          PerturbationLevel::strong()};
  int pool_size = 64;

  const PerturbationLevel& level(LevelName name) const { return levels[static_cast<int>(name)]; }
};

void validate(const PerturbationSettings& settings);

namespace mode {
struct Original {};
struct CaptionBoth {
  double rho = 0.9;
};
struct PerturbLess {
  PerturbationLevel level;
};
/// Which caption the perturbed less-preferred caption is derived from:
/// (z^w, perturb(z^l)) or (z^w, perturb(z^w)).
enum class Source { LessPreferred, Preferred };
struct Hybrid {
  double rho = 0.9;
  PerturbationLevel level;
  Source source = Source::LessPreferred;
};
}  // namespace mode

using DatasetMode = std::variant<mode::Original, mode::CaptionBoth, mode::PerturbLess, mode::Hybrid>;

struct DatasetOptions {
  PerturbationSettings perturbation;
  double caption_noise = kCaptionNoise;
};

std::vector<DualCaptionPair> build_dual_caption_dataset(const std::vector<PreferencePair>& pairs,
                                                        const DatasetMode& mode, Rng& rng,
                                                        const DatasetOptions& options = {});

inline constexpr int kHistogramBins = 20;

struct OverlapReport {
  double mu_w = 0.0;
  double mu_l = 0.0;
  double delta_mu = 0.0;
  std::array<std::size_t, kHistogramBins> histogram_w{};
  std::array<std::size_t, kHistogramBins> histogram_l{};
};

/// Bin index for a x100 similarity over [-100, 100] with 20 equal bins.
int histogram_bin(double similarity);

OverlapReport overlap_stats(const std::vector<DualCaptionPair>& dataset);

/// Splits off the trailing `test_fraction` of pairs as a held-out set.
struct WorldSplit {
  std::vector<PreferencePair> train;
  std::vector<PreferencePair> test;
};
WorldSplit split_world(std::vector<PreferencePair> pairs, double test_fraction);

}  // namespace dcpo
