// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dcpo/eval.hpp"
#include "dcpo/perturb.hpp"
#include "dcpo/serialization.hpp"

using namespace dcpo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
  std::string table;  // printed after the verdict line when non-empty
};

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

// ---- 1-3: hard gates ----

Outcome lemma1() {
  const auto t0 = std::chrono::steady_clock::now();
  const GateResult r = lemma1_check(1000, 1);
  const GateResult sanity = lemma1_check(10, 1, true);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {r.passed && r.max_deviation <= 1e-12 && !sanity.passed && secs < 10.0,
          "1000 trials, max relative deviation " + fmt(r.max_deviation) + " (tol 1e-12); injected mismatch " +
              (sanity.passed ? "missed" : "detected") + "; " + fmt(secs, "%.2f") + " s (limit 10 s)",
          ""};
}

Outcome policy_reference() {
  const GateResult r = policy_reference_check(100, 1);
  return {r.passed && r.max_deviation <= 1e-12,
          "100 configurations, max |loss - ln 2| " + fmt(r.max_deviation) + " (tol 1e-12)", ""};
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (GradientTarget t : {GradientTarget::SFT, GradientTarget::DPO, GradientTarget::DCPO}) {
    const GateResult r = gradient_check(t, 10, 1, 1e-4, 1e-5);
    ok = ok && r.passed && r.max_deviation <= 1e-4;
    detail += to_string(t) + " " + fmt(r.max_deviation) + ", ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 60.0;
  return {ok, "max relative error " + detail + "tol 1e-4, h 1e-5; " + fmt(secs, "%.2f") + " s (limit 60 s)", ""};
}

// ---- 4: forward process ----

Outcome forward_process() {
  const NoiseSchedule s = build_linear_schedule(ScheduleConfig{});
  double identity_err = 0.0;
  for (int t = 0; t < s.steps; ++t) {
    identity_err = std::max(identity_err, std::abs(s.alpha[t] * s.alpha[t] + s.sigma[t] * s.sigma[t] - 1.0));
  }
  const int n = 10000;
  const int d = 8;
  Rng rng = make_rng(1, "acceptance-forward");
  const Eigen::VectorXd x0 = standard_normal(rng, d);
  double worst = 0.0;  // in standard errors
  for (int t : {0, s.steps / 2, s.steps - 1}) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = forward_sample(s, x0, t, standard_normal(rng, d));
      sum += x;
      sum_sq += x.cwiseProduct(x);
    }
    const double var_true = s.sigma[t] * s.sigma[t];
    for (int j = 0; j < d; ++j) {
      const double mean = sum[j] / n;
      const double var = (sum_sq[j] - n * mean * mean) / (n - 1);
      const double se_mean = std::sqrt(var_true / n);
      const double se_var = var_true * std::sqrt(2.0 / (n - 1));
      worst = std::max(worst, std::abs(mean - s.alpha[t] * x0[j]) / se_mean);
      worst = std::max(worst, std::abs(var - var_true) / se_var);
    }
  }
  return {worst <= 5.0 && identity_err <= 1e-12,
          "worst mean/variance deviation " + fmt(worst, "%.3f") + " SE (limit 5) at t in {0, T/2, T-1}; max |a^2+s^2-1| " +
              fmt(identity_err),
          ""};
}

// ---- 5: perturbation ordering ----

Outcome perturbation_ordering() {
  const PerturbationSettings settings;
  double sum_weak = 0.0;
  double sum_strong = 0.0;
  int violations = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    Rng rng = make_rng(1, "acceptance-caption", static_cast<std::uint64_t>(i));
    const SemanticVector z = SemanticVector::normalized(standard_normal(rng, 4));
    double sims[3];
    for (int l = 0; l < 3; ++l) {
      Rng pool_rng = make_rng(1, "acceptance-pool", static_cast<std::uint64_t>(i));
      sims[l] = similarity(perturb(z, settings.levels[l], settings.pool_size, pool_rng), z);
      if (!settings.levels[l].band.contains(sims[l])) ++violations;
    }
    if (!(sims[0] > sims[1] && sims[1] > sims[2])) ++violations;
    sum_weak += sims[0];
    sum_strong += sims[2];
  }
  const double gap = (sum_weak - sum_strong) / n;
  return {violations == 0 && gap >= 25.0,
          "200 captions, pool 64: " + std::to_string(violations) + " band/order violations; mean(weak) - mean(strong) " +
              fmt(gap, "%.2f") + " (limit >= 25)",
          ""};
}

// ---- 6: overlap targets ----

Outcome overlap_targets() {
  const auto t0 = std::chrono::steady_clock::now();
  const double rho = 0.5;
  bool ok = true;
  std::string detail = "calibrated rho " + fmt(rho) + ": ";
  for (double target : {1.3, 2.8, 4.3}) {
    WorldConfig w;
    w.caption_fidelity_rho = rho;
    w.target_delta_mu = target;
    Rng rng = make_rng(1, "acceptance-overlap");
    const double measured =
        overlap_stats(build_dual_caption_dataset(generate_world(w), mode::CaptionBoth{rho}, rng)).delta_mu;
    ok = ok && std::abs(measured - target) <= 0.5;
    detail += fmt(target) + " -> " + fmt(measured, "%.3f") + ", ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 30.0;
  return {ok, detail + "tol 0.5; " + fmt(secs, "%.2f") + " s (limit 30 s)", ""};
}

// ---- 7: margin monotonicity ----

Outcome margin_monotonicity() {
  double previous = INFINITY;
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    const double margin = -2.0 + 4.0 * i / 99.0;
    const double loss = breakdown_from_errors(0.0, 0.0, margin, 0.0, 1.0).loss;
    if (!(loss < previous)) ++violations;
    previous = loss;
  }
  return {violations == 0, "100 margins in [-2, 2], coefficient 1: " + std::to_string(violations) + " violations", ""};
}

// ---- 8: alignment improvement ----

TrainConfig suite_train_config() {
  TrainConfig c;
  c.steps = 2000;
  return c;
}

Outcome alignment() {
  const auto t0 = std::chrono::steady_clock::now();
  const WorldConfig world;
  const TrainConfig config = suite_train_config();
  const auto rows = alignment_compare(world, config, 0.9, kSeeds);
  const auto h2 = hypothesis2_compare(world, config, PerturbationLevel::medium(), kSeeds);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  double dpo = 0.0;
  double dcpo = 0.0;
  std::ostringstream table;
  table << "    (a) seed  dpo_accuracy  dcpo_c_accuracy  gap\n";
  for (const auto& r : rows) {
    dpo += r.dpo.preference_accuracy / rows.size();
    dcpo += r.dcpo.preference_accuracy / rows.size();
    table << "        " << r.seed << "     " << fmt(r.dpo.preference_accuracy, "%.4f") << "        "
          << fmt(r.dcpo.preference_accuracy, "%.4f") << "           "
          << fmt(r.dcpo.preference_accuracy - r.dpo.preference_accuracy, "%+.4f") << "\n";
  }
  const Hypothesis2Row m = mean_row(h2);
  table << "    (b) seed  (c,c_p)  (z^w,z^w_p)  (z^w,z^l_p)  gap_zl\n";
  for (const auto& r : h2) {
    table << "        " << r.seed << "     " << fmt(r.prompt_track, "%.4f") << "   " << fmt(r.caption_track_preferred, "%.4f")
          << "       " << fmt(r.caption_track_less, "%.4f") << "       " << fmt(r.gap_less(), "%+.4f") << "\n";
  }
  const bool a = dcpo - dpo >= 0.02;
  const bool b = m.caption_track_less > m.prompt_track;
  return {a && b,
          "(a) mean DCPO-c " + fmt(dcpo, "%.4f") + " vs DPO " + fmt(dpo, "%.4f") + ", gap " + fmt(dcpo - dpo, "%+.4f") +
              " (need >= 0.02): " + (a ? "pass" : "fail") + "; (b) mean rho=0.9 track " + fmt(m.caption_track_less, "%.4f") +
              " vs rho=0 track " + fmt(m.prompt_track, "%.4f") + ": " + (b ? "pass" : "fail") + "; " +
              fmt(secs, "%.1f") + " s",
          table.str()};
}

// ---- 9: overlap sweep shape ----

Outcome hypothesis1() {
  const auto t0 = std::chrono::steady_clock::now();
  const Hypothesis1Result r = hypothesis1_sweep({0.0, 2.0, 4.0, 8.0, 16.0}, WorldConfig{}, suite_train_config(), kSeeds);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const int interior = interior_maximum_count(r);
  std::ostringstream table;
  table << "    seed  accuracy by target {0, 2, 4, 8, 16}\n";
  for (std::uint64_t s : kSeeds) {
    table << "    " << s << "    ";
    for (const auto& run : r.seed_curve(s)) table << fmt(run.preference_accuracy, "%.4f") << " ";
    table << "\n";
  }
  table << "    mean ";
  for (const auto& p : r.curve.points) table << fmt(p.preference_accuracy, "%.4f") << "@" << fmt(p.delta_mu, "%.2f") << " ";
  table << "\n";
  return {interior >= 4,
          "interior maximum in " + std::to_string(interior) + " of 5 seeds (need >= 4); " + fmt(secs, "%.1f") + " s",
          table.str()};
}

// ---- 10: reproducibility ----

int run_lab(const std::string& args) {
  const std::string command = std::string(DCPO_LAB_PATH) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(command.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files[e.path().filename().string()] = read_text_file(e.path());
  }
  return files;
}

Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "dcpo_acceptance_rerun";
  fs::remove_all(root);
  write_text_file(root / "config.json", R"({
  "output_dir": "out",
  "world": {"n_pairs": 200},
  "dataset": {"mode": "caption_both"},
  "train": {"steps": 40, "sft_steps": 40},
  "eval": {"n_mc": 8},
  "sweep": {"kind": "hypothesis1", "targets": [0, 2, 4], "seeds": [1, 2, 3]},
  "check": {"lemma_trials": 50, "reference_trials": 10, "gradient_instances": 2}
})");
  const std::vector<std::string> sequence{"gen-data", "analyze-overlap", "perturb", "train",
                                          "eval",     "sweep",           "check",   "plot-data"};
  const fs::path run = root / "out" / "default";
  std::string detail;
  bool ok = true;
  for (const auto& name : sequence) {
    if (run_lab(name + " --config " + (root / "config.json").string()) != 0) {
      ok = false;
      detail += name + " failed; ";
    }
  }
  const auto first = snapshot(run);
  for (const auto& name : sequence) {
    if (run_lab(name + " --config " + (run / "config.json").string()) != 0) {
      ok = false;
      detail += name + " rerun failed; ";
    }
  }
  const auto second = snapshot(run);
  int differing = 0;
  for (const auto& [file, bytes] : first) {
    const auto it = second.find(file);
    if (it == second.end() || it->second != bytes) {
      ++differing;
      detail += file + " differs; ";
    }
  }
  ok = ok && differing == 0 && first.size() == second.size();
  fs::remove_all(root);
  return {ok,
          std::to_string(sequence.size()) + " subcommands rerun from the echoed config; " + std::to_string(first.size()) +
              " artifacts, " + std::to_string(differing) + " differing" + (detail.empty() ? "" : "; " + detail),
          ""};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"equal-caption gate", lemma1},
      {"policy-equals-reference gate", policy_reference},
      {"gradient gate", gradients},
      {"forward-process gate", forward_process},
      {"perturbation ordering gate", perturbation_ordering},
      {"overlap-target gate", overlap_targets},
      {"margin monotonicity", margin_monotonicity},
      {"alignment improvement", alignment},
      {"overlap sweep shape", hypothesis1},
      {"reproducibility gate", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what(), ""};
    }
    if (!o.passed) ++failed;
    std::printf("criterion %zu [%s] %s: %s\n", i + 1, o.passed ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    if (!o.table.empty()) std::printf("%s", o.table.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
