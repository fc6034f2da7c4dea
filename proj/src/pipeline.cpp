#include "dcpo/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "dcpo/errors.hpp"
#include "dcpo/perturb.hpp"
#include "dcpo/serialization.hpp"
#include "dcpo/trainer.hpp"

namespace dcpo {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error)) return static_cast<int>(e->kind());
  if (dynamic_cast<const std::invalid_argument*>(&error) || dynamic_cast<const std::out_of_range*>(&error)) return 1;
  if (dynamic_cast<const fs::filesystem_error*>(&error)) return 1;
  return 2;
}

std::string overlap_plot_data(const OverlapReport& r) {
  std::size_t total_w = 0;
  std::size_t total_l = 0;
  for (int b = 0; b < kHistogramBins; ++b) {
    total_w += r.histogram_w[b];
    total_l += r.histogram_l[b];
  }
  if (total_w == 0 || total_l == 0) throw ConfigError("plot", "overlap report has empty histograms");
  std::vector<std::vector<std::string>> rows;
  const double width = 200.0 / kHistogramBins;
  for (const auto& [series, hist] : {std::pair{"preferred", &r.histogram_w}, std::pair{"less_preferred", &r.histogram_l}}) {
    for (int b = 0; b < kHistogramBins; ++b) {
      rows.push_back({series, format_real(-100.0 + (b + 0.5) * width), std::to_string((*hist)[b]), ""});
    }
  }
  return csv_table({"series", "x", "y", "spread"}, rows);
}

std::string sweep_plot_data(const SweepCurve& curve) {
  if (curve.points.empty()) throw ConfigError("plot", "sweep curve has no points");
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : curve.points) {
    rows.push_back({"accuracy", format_real(p.delta_mu), format_real(p.preference_accuracy), format_real(p.spread)});
  }
  return csv_table({"series", "x", "y", "spread"}, rows);
}

std::vector<fs::path> emit_plot_data(const fs::path& run_dir) {
  std::vector<fs::path> written;
  if (fs::exists(run_dir / "overlap.csv")) {
    write_text_file(run_dir / "plot_overlap.csv",
                    overlap_plot_data(read_overlap_csv(read_text_file(run_dir / "overlap.csv"))));
    written.push_back(run_dir / "plot_overlap.csv");
  }
  if (fs::exists(run_dir / "sweep.csv")) {
    write_text_file(run_dir / "plot_sweep.csv", sweep_plot_data(read_sweep_csv(read_text_file(run_dir / "sweep.csv"))));
    written.push_back(run_dir / "plot_sweep.csv");
  }
  if (written.empty()) {
    throw ConfigError("plot", "no overlap.csv or sweep.csv in '" + run_dir.string() + "'");
  }
  return written;
}

namespace {

fs::path or_default(const fs::path& configured, const fs::path& fallback) {
  return configured.empty() ? fallback : configured;
}

void write_provenance(const RunConfig& config) {
  const fs::path dir = config.run_dir();
  write_text_file(dir / "config.json", dump_config(config));
  write_text_file(dir / "VERSION", std::string(kToolVersion) + "\n");
}

std::string train_report_csv(const TrainReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(report.records.size());
  for (const auto& r : report.records) {
    rows.push_back({std::to_string(r.step), format_real(r.loss), format_real(r.margin),
                    format_real(r.delta_preferred), format_real(r.delta_less_preferred)});
  }
  return csv_table({"step", "loss", "margin", "delta_pref", "delta_less"}, rows);
}

Checkpoint checkpoint_of(const DenoiserParams& params, const TrainConfig& config) {
  return {params, config.seed, config.steps};
}

int gen_data(const RunConfig& c, std::ostream& log) {
  const fs::path dir = c.run_dir();
  WorldSplit split = split_world(generate_world(c.world), c.dataset.test_fraction);
  Rng rng = make_rng(c.seed, "gen-data");
  const auto dataset = build_dual_caption_dataset(split.train, c.dataset_mode(), rng, c.dataset_options());
  write_dataset_file(dir / "world_train.txt", as_original_records(split.train));
  write_dataset_file(dir / "world_test.txt", as_original_records(split.test));
  write_dataset_file(dir / "dataset.txt", dataset);
  log << "gen-data: " << split.train.size() << " train / " << split.test.size() << " test pairs; dataset delta_mu "
      << format_real(overlap_stats(dataset).delta_mu) << "\n";
  return 0;
}

int analyze_overlap(const RunConfig& c, std::ostream& log) {
  const fs::path dir = c.run_dir();
  const OverlapReport report = overlap_stats(read_dataset_file(or_default(c.dataset.input, dir / "dataset.txt")));
  write_text_file(dir / "overlap.csv", overlap_csv(report));
  write_text_file(dir / "plot_overlap.csv", overlap_plot_data(report));
  log << "analyze-overlap: mu_w " << format_real(report.mu_w) << " mu_l " << format_real(report.mu_l) << " delta_mu "
      << format_real(report.delta_mu) << "\n";
  return 0;
}

int perturb_dataset(const RunConfig& c, std::ostream& log) {
  const fs::path dir = c.run_dir();
  auto records = read_dataset_file(or_default(c.perturb.input, dir / "dataset.txt"));
  const PerturbationLevel& level = c.perturbation.level(c.perturb.level);
  for (auto& r : records) {
    Rng rng = make_rng(c.seed, "perturb-record", r.id);
    SemanticVector& column = c.perturb.column == PerturbColumn::CaptionW ? r.caption_w : r.caption_l;
    column = perturb(column, level, c.perturbation.pool_size, rng);
    r.provenance = {Provenance::Kind::Perturbed, level.name};
  }
  write_dataset_file(dir / "perturbed.txt", records);
  log << "perturb: " << records.size() << " records at level " << to_string(level.name) << "; delta_mu "
      << format_real(overlap_stats(records).delta_mu) << "\n";
  return 0;
}

int train_run(const RunConfig& c, std::ostream& log) {
  const fs::path dir = c.run_dir();
  const auto dataset = read_dataset_file(or_default(c.train.dataset, dir / "dataset.txt"));
  const TrainConfig config = c.train_config();
  TrainReport report;
  if (config.method != Method::SFT && c.train.reference == ReferenceMode::Sft) {
    const AlignResult run = pretrain_then_align(sft_config_for(config, c.suite_options()), config, dataset);
    write_checkpoint_file(dir / "reference.json", checkpoint_of(run.reference, sft_config_for(config, c.suite_options())));
    write_checkpoint_file(dir / "policy.json", checkpoint_of(run.policy, config));
    write_text_file(dir / "sft_report.csv", train_report_csv(run.sft_report));
    report = run.report;
  } else {
    const TrainResult run = train(config, dataset);
    write_checkpoint_file(dir / "policy.json", checkpoint_of(run.params, config));
    if (config.method != Method::SFT) write_checkpoint_file(dir / "reference.json", {run.reference, config.seed, 0});
    report = run.report;
  }
  report.checkpoint_path = (dir / "policy.json").string();
  write_text_file(dir / "train_report.csv", train_report_csv(report));
  log << "train: " << to_string(config.method) << " " << config.steps << " steps";
  if (!report.records.empty()) log << "; final loss " << format_real(report.records.back().loss);
  log << "\n";
  return 0;
}

int eval_run(const RunConfig& c, std::ostream& log) {
  const fs::path dir = c.run_dir();
  const DenoiserParams policy = read_checkpoint_file(or_default(c.eval.policy, dir / "policy.json")).params;
  const DenoiserParams reference = read_checkpoint_file(or_default(c.eval.reference, dir / "reference.json")).params;
  const auto test = read_dataset_file(or_default(c.eval.test_set, dir / "world_test.txt"));
  const NoiseSchedule schedule = build_linear_schedule(c.schedule);
  const MarginReport margins = margin_report(policy, reference, test, schedule, c.eval.n_mc, c.eval.seed);
  const EvalReport report = summarize(margins.rows, c.eval.n_mc);
  write_text_file(dir / "eval.csv", eval_csv(report));
  write_text_file(dir / "margins.csv", margin_csv(margins));
  log << "eval: accuracy " << format_real(report.preference_accuracy) << " over " << report.n_pairs
      << " pairs; mean margin " << format_real(report.mean_margin) << "\n";
  return 0;
}

int sweep_run(const RunConfig& c, std::ostream& log) {
  const fs::path dir = c.run_dir();
  const TrainConfig config = c.train_config();
  const SuiteOptions options = c.suite_options();
  switch (c.sweep.kind) {
    case SweepKind::Hypothesis1: {
      TrainConfig dcpo = config;
      dcpo.method = Method::DCPO;
      const Hypothesis1Result r = hypothesis1_sweep(c.sweep.targets, c.world, dcpo, c.sweep.seeds, options);
      write_text_file(dir / "sweep.csv", sweep_csv(r.curve));
      write_text_file(dir / "sweep_runs.csv", sweep_runs_csv(r.runs));
      write_text_file(dir / "plot_sweep.csv", sweep_plot_data(r.curve));
      log << "sweep hypothesis1: interior maximum in " << interior_maximum_count(r) << " of " << c.sweep.seeds.size()
          << " seeds\n";
      return 0;
    }
    case SweepKind::Beta: {
      const SeedWorld w = seed_world(c.world, c.seed, options);
      Rng rng = make_rng(c.seed, "gen-data");
      const auto dataset = build_dual_caption_dataset(w.train, c.dataset_mode(), rng, c.dataset_options());
      TrainConfig base = config;
      if (base.method == Method::SFT) throw ConfigError("config", "train.method: beta sweep needs dpo or dcpo");
      const TrainResult sft = train(sft_config_for(base, options), dataset);
      const NoiseSchedule schedule = build_linear_schedule(c.schedule);
      const auto rows = beta_sweep(base, c.sweep.betas, dataset, sft.params,
                                   [&](const DenoiserParams& policy, const DenoiserParams& reference) {
                                     return preference_accuracy(policy, reference, w.test, schedule, options.n_mc,
                                                                options.eval_seed)
                                         .preference_accuracy;
                                   });
      std::vector<std::vector<std::string>> out;
      for (const auto& r : rows) {
        out.push_back({format_real(r.beta), std::to_string(r.seed), format_real(r.final_step.loss),
                       format_real(r.final_step.margin), format_real(r.final_step.delta_preferred),
                       format_real(r.final_step.delta_less_preferred), format_real(r.score.value_or(NAN))});
      }
      write_text_file(dir / "beta_sweep.csv",
                      csv_table({"beta", "seed", "loss", "margin", "delta_pref", "delta_less", "accuracy"}, out));
      log << "sweep beta: " << rows.size() << " runs\n";
      return 0;
    }
    case SweepKind::Hypothesis2: {
      TrainConfig dcpo = config;
      dcpo.method = Method::DCPO;
      const auto rows = hypothesis2_compare(c.world, dcpo, c.perturbation.level(c.sweep.level), c.sweep.seeds, options,
                                            c.sweep.rho);
      write_text_file(dir / "hypothesis2.csv", hypothesis2_csv(rows));
      const Hypothesis2Row m = mean_row(rows);
      log << "sweep hypothesis2: mean gap (z^w, z^w_p) " << format_real(m.gap_preferred()) << ", (z^w, z^l_p) "
          << format_real(m.gap_less()) << "\n";
      return 0;
    }
    case SweepKind::Alignment: {
      const auto rows = alignment_compare(c.world, config, c.sweep.rho, c.sweep.seeds, options);
      write_text_file(dir / "alignment.csv", alignment_csv(rows));
      log << "sweep alignment: " << rows.size() << " seeds\n";
      return 0;
    }
  }
  return 0;
}

int check_run(const RunConfig& c, std::ostream& log) {
  struct Row {
    std::string gate;
    GateResult result;
  };
  std::vector<Row> rows;
  rows.push_back({"equal_caption", lemma1_check(c.check.lemma_trials, c.check.seed)});
  rows.push_back({"policy_equals_reference", policy_reference_check(c.check.reference_trials, c.check.seed)});
  for (GradientTarget t : {GradientTarget::SFT, GradientTarget::DPO, GradientTarget::DCPO}) {
    rows.push_back({"gradient_" + to_string(t), gradient_check(t, c.check.gradient_instances, c.check.seed)});
  }
  rows.push_back({"schedule", schedule_check(build_linear_schedule(c.schedule))});

  std::vector<std::vector<std::string>> out;
  bool all = true;
  double max_gradient = 0.0;
  for (const auto& r : rows) {
    all = all && r.result.passed;
    if (r.gate.starts_with("gradient_")) max_gradient = std::max(max_gradient, r.result.max_deviation);
    out.push_back({r.gate, r.result.passed ? "pass" : "fail", format_real(r.result.max_deviation),
                   std::to_string(r.result.trials)});
    if (!r.result.passed) log << "check: gate " << r.gate << " FAILED (max deviation " << format_real(r.result.max_deviation) << ")\n";
  }
  write_text_file(c.run_dir() / "check.csv", csv_table({"gate", "status", "max_deviation", "trials"}, out));
  log << "check: max equal-caption deviation " << format_real(rows[0].result.max_deviation)
      << "; max gradient relative error " << format_real(max_gradient) << "\n";
  return all ? 0 : 2;
}

int plot_data(const RunConfig& c, std::ostream& log) {
  for (const auto& p : emit_plot_data(c.run_dir())) log << "plot-data: wrote " << p.string() << "\n";
  return 0;
}

}  // namespace

int run_subcommand(const std::string& name, const RunConfig& config, std::ostream& log) {
  int (*handler)(const RunConfig&, std::ostream&) = nullptr;
  if (name == "gen-data") handler = gen_data;
  else if (name == "analyze-overlap") handler = analyze_overlap;
  else if (name == "perturb") handler = perturb_dataset;
  else if (name == "train") handler = train_run;
  else if (name == "eval") handler = eval_run;
  else if (name == "sweep") handler = sweep_run;
  else if (name == "check") handler = check_run;
  else if (name == "plot-data") handler = plot_data;
  else throw ConfigError("cli", "unknown subcommand '" + name + "'");
  fs::create_directories(config.run_dir());
  write_provenance(config);
  return handler(config, log);
}

}  // namespace dcpo
