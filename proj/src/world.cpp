#include "dcpo/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dcpo/errors.hpp"
#include "dcpo/perturb.hpp"

namespace dcpo {

SemanticVector SemanticVector::normalized(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!(norm > 1e-12) || !std::isfinite(norm)) throw std::invalid_argument("world: cannot normalize a zero vector");
  return SemanticVector(v / norm);
}

SemanticVector SemanticVector::from_unit(const Eigen::VectorXd& v) {
  if (!(std::abs(v.norm() - 1.0) <= 1e-9)) throw std::invalid_argument("world: vector is not unit-norm");
  return SemanticVector(v);
}

std::string to_string(LevelName level) {
  switch (level) {
    case LevelName::Weak:
      return "weak";
    case LevelName::Medium:
      return "medium";
    case LevelName::Strong:
      return "strong";
  }
  return "weak";
}

LevelName level_from_string(const std::string& name) {
  if (name == "weak") return LevelName::Weak;
  if (name == "medium") return LevelName::Medium;
  if (name == "strong") return LevelName::Strong;
  throw std::invalid_argument("world: unknown perturbation level '" + name + "'");
}

std::string to_string(const Provenance& p) {
  switch (p.kind) {
    case Provenance::Kind::Original:
      return "original";
    case Provenance::Kind::Captioned:
      return "captioned";
    case Provenance::Kind::Perturbed:
      return p.level ? "perturbed:" + to_string(*p.level) : "perturbed";
  }
  return "original";
}

Provenance provenance_from_string(const std::string& tag) {
  if (tag == "original") return {Provenance::Kind::Original, std::nullopt};
  if (tag == "captioned") return {Provenance::Kind::Captioned, std::nullopt};
  if (tag == "perturbed") return {Provenance::Kind::Perturbed, std::nullopt};
  const std::string prefix = "perturbed:";
  if (tag.rfind(prefix, 0) == 0) return {Provenance::Kind::Perturbed, level_from_string(tag.substr(prefix.size()))};
  throw std::invalid_argument("world: unknown provenance tag '" + tag + "'");
}

void validate(const WorldConfig& c) {
  if (c.k < 2) throw ConfigError("world", "k must be >= 2");
  if (c.d < 1) throw ConfigError("world", "d must be >= 1");
  if (c.n_pairs < 1) throw ConfigError("world", "n_pairs must be >= 1");
  if (!(c.caption_fidelity_rho >= 0.0 && c.caption_fidelity_rho <= 1.0)) {
    throw ConfigError("world", "caption_fidelity_rho must lie in [0, 1]");
  }
  if (!std::isfinite(c.target_delta_mu) || c.target_delta_mu < 0.0) {
    throw ConfigError("world", "target_delta_mu must be finite and >= 0");
  }
  if (!std::isfinite(c.preference_gap) || c.preference_gap < 0.0) {
    throw ConfigError("world", "preference_gap must be finite and >= 0");
  }
  if (!std::isfinite(c.noise_scale) || c.noise_scale < 0.0) throw ConfigError("world", "noise_scale must be >= 0");
  if (!(c.base_similarity_lo >= -1.0 && c.base_similarity_lo <= c.base_similarity_hi && c.base_similarity_hi <= 1.0)) {
    throw ConfigError("world", "base similarity range must satisfy -1 <= lo <= hi <= 1");
  }
}

double caption_alignment(double m, double rho) {
  const double a = rho;
  const double b = 1.0 - rho;
  const double norm2 = a * a + b * b + 2.0 * a * b * m;
  if (norm2 <= 0.0) return 0.0;
  return (a + b * m) / std::sqrt(norm2);
}

namespace {

// Lower end of the branch on which caption_alignment increases with m.
double branch_start(double rho) {
  if (rho <= 0.0) return -1.0;
  return std::max(-1.0, -(1.0 - rho) / rho);
}

struct PairDraw {
  Eigen::VectorXd prompt;
  double base = 0.0;
  Eigen::VectorXd dir_w;
  Eigen::VectorXd dir_l;
  Eigen::VectorXd noise_w;
  Eigen::VectorXd noise_l;
};

std::vector<PairDraw> draw_pairs(const WorldConfig& c) {
  std::vector<PairDraw> draws;
  draws.reserve(static_cast<std::size_t>(c.n_pairs));
  for (int i = 0; i < c.n_pairs; ++i) {
    Rng rng = make_rng(c.seed, "world-pair", static_cast<std::uint64_t>(i));
    PairDraw p;
    p.prompt = random_unit(rng, c.k);
    p.base = uniform(rng, c.base_similarity_lo, c.base_similarity_hi);
    p.dir_w = random_orthogonal_unit(rng, p.prompt);
    p.dir_l = random_orthogonal_unit(rng, p.prompt);
    p.noise_w = standard_normal(rng, c.d);
    p.noise_l = standard_normal(rng, c.d);
    draws.push_back(std::move(p));
  }
  return draws;
}

// Prompt cosines for the preferred and less-preferred image that put their
// caption alignments `gap` apart around the pair's base level.
std::pair<double, double> pair_cosines(double base, double gap, double rho) {
  const double centre = caption_alignment(base, rho);
  return {inverse_caption_alignment(centre + 0.5 * gap, rho), inverse_caption_alignment(centre - 0.5 * gap, rho)};
}

double max_gap_for(double base, double rho) {
  const double centre = caption_alignment(base, rho);
  const double floor = caption_alignment(branch_start(rho), rho);
  return std::max(0.0, 2.0 * std::min(1.0 - centre, centre - floor));
}

// Smallest caption-level gap whose prompt-level gap reaches preference_gap.
double min_gap_for(double base, double rho, double preference_gap, double hi) {
  auto cos_gap = [&](double g) {
    const auto [mw, ml] = pair_cosines(base, g, rho);
    return mw - ml;
  };
  if (preference_gap <= 0.0) return 0.0;
  if (cos_gap(hi) < preference_gap) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cos_gap(mid) >= preference_gap ? hi : lo) = mid;
  }
  return hi;
}

DeltaMuRange range_for(const WorldConfig& c, const std::vector<PairDraw>& draws) {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& p : draws) hi = std::min(hi, max_gap_for(p.base, c.caption_fidelity_rho));
  for (const auto& p : draws) lo = std::max(lo, min_gap_for(p.base, c.caption_fidelity_rho, c.preference_gap, hi));
  return {100.0 * lo, 100.0 * hi};
}

}  // namespace

double inverse_caption_alignment(double alignment, double rho) {
  if (rho <= 0.0) return std::clamp(alignment, -1.0, 1.0);
  double lo = branch_start(rho);
  double hi = 1.0;
  if (alignment <= caption_alignment(lo, rho)) return lo;
  if (alignment >= 1.0) return 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (caption_alignment(mid, rho) < alignment ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

DeltaMuRange feasible_delta_mu_range(const WorldConfig& config) {
  validate(config);
  const DeltaMuRange r = range_for(config, draw_pairs(config));
  if (!(r.lo <= r.hi)) throw InfeasibleError("world", "no feasible delta_mu for this preference_gap and rho");
  return r;
}

Eigen::MatrixXd latent_map(const WorldConfig& c) {
  Rng rng = make_rng(c.seed, "latent-map");
  Eigen::MatrixXd g(c.d, c.k);
  const Eigen::VectorXd entries = standard_normal(rng, static_cast<Eigen::Index>(c.d) * c.k);
  for (int j = 0; j < c.k; ++j)
    for (int i = 0; i < c.d; ++i) g(i, j) = entries[j * c.d + i];
  return g / std::sqrt(static_cast<double>(c.k));
}

std::vector<PreferencePair> generate_world(const WorldConfig& c) {
  validate(c);
  const std::vector<PairDraw> draws = draw_pairs(c);
  const double gap = c.target_delta_mu / 100.0;
  const double rho = c.caption_fidelity_rho;

  bool feasible = true;
  for (const auto& p : draws) {
    if (gap > max_gap_for(p.base, rho) + 1e-15) {
      feasible = false;
      break;
    }
    const auto [mw, ml] = pair_cosines(p.base, gap, rho);
    if (mw - ml < c.preference_gap) {
      feasible = false;
      break;
    }
  }
  if (!feasible) {
    const DeltaMuRange r = range_for(c, draws);
    std::ostringstream msg;
    msg << "target_delta_mu " << c.target_delta_mu << " infeasible at rho " << rho;
    if (r.lo <= r.hi) {
      msg << "; feasible range [" << r.lo << ", " << r.hi << "]";
    } else {
      msg << "; no feasible target for preference_gap " << c.preference_gap;
    }
    throw InfeasibleError("world", msg.str());
  }

  const Eigen::MatrixXd g = latent_map(c);
  std::vector<PreferencePair> pairs;
  pairs.reserve(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const PairDraw& p = draws[i];
    const auto [mw, ml] = pair_cosines(p.base, gap, rho);
    auto make_image = [&](double m, const Eigen::VectorXd& dir, const Eigen::VectorXd& noise) {
      const double m_clamped = std::clamp(m, -1.0, 1.0);
      SemanticVector s = SemanticVector::normalized(m_clamped * p.prompt + std::sqrt(1.0 - m_clamped * m_clamped) * dir);
      Eigen::VectorXd latent = g * s.vec() + c.noise_scale * noise;
      return ImageSample{std::move(latent), std::move(s)};
    };
    pairs.push_back({i, SemanticVector::from_unit(p.prompt), make_image(mw, p.dir_w, p.noise_w),
                     make_image(ml, p.dir_l, p.noise_l)});
  }
  return pairs;
}

SemanticVector caption(const ImageSample& image, const SemanticVector& prompt, double rho, Rng& rng, double noise) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("world: rho must lie in [0, 1]");
  if (image.true_semantics.size() != prompt.size()) throw std::invalid_argument("world: caption dimension mismatch");
  Eigen::VectorXd z = rho * image.true_semantics.vec() + (1.0 - rho) * prompt.vec();
  if (noise > 0.0) z += noise * standard_normal(rng, z.size());
  return SemanticVector::normalized(z);
}

double similarity(const SemanticVector& a, const SemanticVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("world: similarity dimension mismatch");
  return 100.0 * std::clamp(a.vec().dot(b.vec()), -1.0, 1.0);
}

double similarity(const SemanticVector& z, const ImageSample& image) { return similarity(z, image.true_semantics); }

void validate(const PerturbationSettings& s) {
  if (s.pool_size < 3) throw ConfigError("perturb", "pool_size must be >= 3");
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const auto& b = s.levels[i].band;
    if (!(b.lo < b.hi) || b.lo < -100.0 || b.hi > 100.0) {
      throw ConfigError("perturb", "band for " + to_string(s.levels[i].name) + " must satisfy -100 <= lo < hi <= 100");
    }
    if (i > 0 && !(b.hi <= s.levels[i - 1].band.lo)) {
      throw ConfigError("perturb", "bands must be disjoint and ordered weak > medium > strong");
    }
  }
}

std::vector<DualCaptionPair> build_dual_caption_dataset(const std::vector<PreferencePair>& pairs,
                                                        const DatasetMode& mode, Rng& rng,
                                                        const DatasetOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("world: cannot build a dataset from zero pairs");
  const std::uint64_t base_seed = rng();
  const int pool = options.perturbation.pool_size;
  const double noise = options.caption_noise;

  std::vector<DualCaptionPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    Rng r = make_rng(base_seed, "dataset-record", p.id);
    DualCaptionPair rec{p.id, p.prompt, p.prompt, p.preferred, p.less_preferred, {}};
    if (std::holds_alternative<mode::Original>(mode)) {
      rec.provenance = {Provenance::Kind::Original, std::nullopt};
    } else if (const auto* cb = std::get_if<mode::CaptionBoth>(&mode)) {
      rec.caption_w = caption(p.preferred, p.prompt, cb->rho, r, noise);
      rec.caption_l = caption(p.less_preferred, p.prompt, cb->rho, r, noise);
      rec.provenance = {Provenance::Kind::Captioned, std::nullopt};
    } else if (const auto* pl = std::get_if<mode::PerturbLess>(&mode)) {
      rec.caption_l = perturb(p.prompt, pl->level, pool, r);
      rec.provenance = {Provenance::Kind::Perturbed, pl->level.identity ? std::nullopt : std::optional(pl->level.name)};
    } else if (const auto* hy = std::get_if<mode::Hybrid>(&mode)) {
      rec.caption_w = caption(p.preferred, p.prompt, hy->rho, r, noise);
      const SemanticVector zl = caption(p.less_preferred, p.prompt, hy->rho, r, noise);
      const SemanticVector& source = hy->source == mode::Source::Preferred ? rec.caption_w : zl;
      rec.caption_l = perturb(source, hy->level, pool, r);
      rec.provenance = {Provenance::Kind::Perturbed, hy->level.identity ? std::nullopt : std::optional(hy->level.name)};
    }
    out.push_back(std::move(rec));
  }
  return out;
}

int histogram_bin(double s) {
  const int bin = static_cast<int>(std::floor((s + 100.0) / (200.0 / kHistogramBins)));
  return std::clamp(bin, 0, kHistogramBins - 1);
}

OverlapReport overlap_stats(const std::vector<DualCaptionPair>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("world: overlap_stats needs a nonempty dataset");
  OverlapReport r;
  double sum_w = 0.0;
  double sum_l = 0.0;
  for (const auto& rec : dataset) {
    const double sw = similarity(rec.caption_w, rec.preferred);
    const double sl = similarity(rec.caption_l, rec.less_preferred);
    sum_w += sw;
    sum_l += sl;
    ++r.histogram_w[static_cast<std::size_t>(histogram_bin(sw))];
    ++r.histogram_l[static_cast<std::size_t>(histogram_bin(sl))];
  }
  const double n = static_cast<double>(dataset.size());
  r.mu_w = sum_w / n;
  r.mu_l = sum_l / n;
  r.delta_mu = r.mu_w - r.mu_l;
  return r;
}

WorldSplit split_world(std::vector<PreferencePair> pairs, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("world: test_fraction must lie in (0, 1)");
  const auto n = pairs.size();
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n > 1 ? n - 1 : 1);
  if (n < 2) throw std::invalid_argument("world: need at least two pairs to split");
  WorldSplit s;
  s.train.assign(std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end() - static_cast<std::ptrdiff_t>(n_test)));
  s.test.assign(std::make_move_iterator(pairs.end() - static_cast<std::ptrdiff_t>(n_test)), std::make_move_iterator(pairs.end()));
  return s;
}

}  // namespace dcpo
