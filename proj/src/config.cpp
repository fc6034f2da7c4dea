#include "dcpo/config.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "json.hpp"

#include "dcpo/errors.hpp"
#include "dcpo/serialization.hpp"

namespace dcpo {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw ConfigError("config", key + ": " + msg);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Reads the keys of one JSON object, rejecting any key never asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  Section(const Section&) = delete;

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) fail(join(path_, key), "unknown key");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  std::string key(const std::string& k) const { return join(path_, k); }

  void real(const std::string& k, double& out) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_number()) fail(key(k), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const std::string& k, Int& out) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_number_integer()) fail(key(k), "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = v.get<Int>();
        return;
      }
      if (v.get<long long>() < 0) fail(key(k), "must be >= 0");
    }
    out = v.get<Int>();
  }

  void text(const std::string& k, std::string& out) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_string()) fail(key(k), "expected a string");
    out = v.get<std::string>();
  }

  void path(const std::string& k, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    text(k, s);
    if (!s.empty()) out = std::filesystem::path(s).is_absolute() || base.empty() ? std::filesystem::path(s) : base / s;
  }

  template <typename T>
  void reals(const std::string& k, std::vector<T>& out) {
    if (!has(k)) return;
    const json& v = node_.at(k);
    if (!v.is_array()) fail(key(k), "expected an array");
    out.clear();
    for (const auto& e : v) {
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer() || (!e.is_number_unsigned() && e.get<long long>() < 0)) {
          fail(key(k), "expected non-negative integers");
        }
      } else if (!e.is_number()) {
        fail(key(k), "expected numbers");
      }
      out.push_back(e.get<T>());
    }
  }

  template <typename Fn>
  void child(const std::string& k, Fn&& fn) {
    if (!has(k)) return;
    Section s(node_.at(k), key(k));
    fn(s);
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum>
Enum choose(const std::string& key, const std::string& value, std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string expected;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    expected += expected.empty() ? name : std::string(", ") + name;
  }
  fail(key, "unknown value '" + value + "' (expected " + expected + ")");
}

LevelName parse_level(const std::string& key, const std::string& value) {
  return choose<LevelName>(key, value,
                           {{"weak", LevelName::Weak}, {"medium", LevelName::Medium}, {"strong", LevelName::Strong}});
}

void read_band(Section& s, const std::string& k, SimilarityBand& band) {
  std::vector<double> edges;
  s.reals(k, edges);
  if (!s.has(k)) return;
  if (edges.size() != 2) fail(s.key(k), "expected [lo, hi]");
  band = {edges[0], edges[1]};
}

// Re-runs a module validator so its message is reported under `key`.
void checked(const std::string& key, const std::function<void()>& validate) {
  try {
    validate();
  } catch (const Error& e) {
    fail(key, e.what());
  }
}

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) fail(key, msg);
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

const char* mode_name(DatasetModeKind m) {
  switch (m) {
    case DatasetModeKind::Original:
      return "original";
    case DatasetModeKind::CaptionBoth:
      return "caption_both";
    case DatasetModeKind::PerturbLess:
      return "perturb_less";
    case DatasetModeKind::Hybrid:
      return "hybrid";
  }
  return "original";
}

const char* sweep_name(SweepKind k) {
  switch (k) {
    case SweepKind::Hypothesis1:
      return "hypothesis1";
    case SweepKind::Beta:
      return "beta";
    case SweepKind::Hypothesis2:
      return "hypothesis2";
    case SweepKind::Alignment:
      return "alignment";
  }
  return "hypothesis1";
}

const char* reference_name(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::Sft:
      return "sft";
    case ReferenceMode::Fresh:
      return "fresh";
    case ReferenceMode::Checkpoint:
      return "checkpoint";
  }
  return "sft";
}

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig c = train.config;
  c.beta = objective.beta;
  c.schedule = schedule;
  c.seed = seed;
  return c;
}

SuiteOptions RunConfig::suite_options() const {
  SuiteOptions o;
  o.test_fraction = dataset.test_fraction;
  o.n_mc = eval.n_mc;
  o.eval_seed = eval.seed;
  o.dataset = dataset_options();
  o.sft_steps = train.sft_steps;
  o.sft_learning_rate = train.sft_learning_rate;
  return o;
}

DatasetOptions RunConfig::dataset_options() const { return {perturbation, dataset.caption_noise}; }

DatasetMode RunConfig::dataset_mode() const {
  const PerturbationLevel& level = perturbation.level(dataset.level);
  switch (dataset.mode) {
    case DatasetModeKind::Original:
      return mode::Original{};
    case DatasetModeKind::CaptionBoth:
      return mode::CaptionBoth{dataset.rho};
    case DatasetModeKind::PerturbLess:
      return mode::PerturbLess{level};
    case DatasetModeKind::Hybrid:
      return mode::Hybrid{dataset.rho, level, dataset.source};
  }
  return mode::Original{};
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config", "parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                                    ": " + e.what());
  }

  RunConfig c;
  bool world_seed_set = false;
  {
    Section s(root, "");
    s.text("run_name", c.run_name);
    s.integer("seed", c.seed);
    s.path("output_dir", c.output_dir, base_dir);
    c.world.seed = c.seed;

    s.child("world", [&](Section& w) {
      w.integer("k", c.world.k);
      w.integer("d", c.world.d);
      w.integer("n_pairs", c.world.n_pairs);
      w.real("caption_fidelity_rho", c.world.caption_fidelity_rho);
      w.real("target_delta_mu", c.world.target_delta_mu);
      w.real("preference_gap", c.world.preference_gap);
      w.real("noise_scale", c.world.noise_scale);
      w.real("base_similarity_lo", c.world.base_similarity_lo);
      w.real("base_similarity_hi", c.world.base_similarity_hi);
      world_seed_set = w.has("seed");
      w.integer("seed", c.world.seed);
    });
    if (!world_seed_set) c.world.seed = c.seed;

    s.child("schedule", [&](Section& sc) {
      sc.integer("steps", c.schedule.steps);
      sc.real("beta_start", c.schedule.beta_start);
      sc.real("beta_end", c.schedule.beta_end);
    });

    s.child("objective", [&](Section& o) { o.real("beta", c.objective.beta); });

    s.child("perturbation", [&](Section& p) {
      read_band(p, "weak", c.perturbation.levels[0].band);
      read_band(p, "medium", c.perturbation.levels[1].band);
      read_band(p, "strong", c.perturbation.levels[2].band);
      p.integer("pool_size", c.perturbation.pool_size);
    });

    s.child("dataset", [&](Section& d) {
      std::string m = mode_name(c.dataset.mode);
      d.text("mode", m);
      c.dataset.mode = choose<DatasetModeKind>(d.key("mode"), m,
                                               {{"original", DatasetModeKind::Original},
                                                {"caption_both", DatasetModeKind::CaptionBoth},
                                                {"perturb_less", DatasetModeKind::PerturbLess},
                                                {"hybrid", DatasetModeKind::Hybrid}});
      d.real("rho", c.dataset.rho);
      std::string level = to_string(c.dataset.level);
      d.text("level", level);
      c.dataset.level = parse_level(d.key("level"), level);
      std::string source = c.dataset.source == mode::Source::Preferred ? "preferred" : "less_preferred";
      d.text("source", source);
      c.dataset.source = choose<mode::Source>(
          d.key("source"), source, {{"preferred", mode::Source::Preferred}, {"less_preferred", mode::Source::LessPreferred}});
      d.real("caption_noise", c.dataset.caption_noise);
      d.real("test_fraction", c.dataset.test_fraction);
      d.path("input", c.dataset.input, base_dir);
    });

    s.child("train", [&](Section& t) {
      std::string method = to_string(c.train.config.method);
      t.text("method", method);
      c.train.config.method =
          choose<Method>(t.key("method"), method, {{"sft", Method::SFT}, {"dpo", Method::DPO}, {"dcpo", Method::DCPO}});
      t.real("learning_rate", c.train.config.learning_rate);
      t.integer("steps", c.train.config.steps);
      t.integer("batch_size", c.train.config.batch_size);
      t.integer("hidden", c.train.config.hidden);
      std::string reference = reference_name(c.train.reference);
      t.text("reference", reference);
      c.train.reference =
          choose<ReferenceMode>(t.key("reference"), reference,
                                {{"sft", ReferenceMode::Sft}, {"fresh", ReferenceMode::Fresh},
                                 {"checkpoint", ReferenceMode::Checkpoint}});
      std::filesystem::path reference_path = c.train.config.reference_source.path;
      t.path("reference_path", reference_path, base_dir);
      c.train.config.reference_source.path = reference_path.string();
      if (t.has("sft_steps")) {
        int v = 0;
        t.integer("sft_steps", v);
        c.train.sft_steps = v;
      }
      if (t.has("sft_learning_rate")) {
        double v = 0;
        t.real("sft_learning_rate", v);
        c.train.sft_learning_rate = v;
      }
      t.path("dataset", c.train.dataset, base_dir);
    });

    s.child("perturb", [&](Section& p) {
      p.path("input", c.perturb.input, base_dir);
      std::string level = to_string(c.perturb.level);
      p.text("level", level);
      c.perturb.level = parse_level(p.key("level"), level);
      std::string column = c.perturb.column == PerturbColumn::CaptionW ? "caption_w" : "caption_l";
      p.text("column", column);
      c.perturb.column = choose<PerturbColumn>(p.key("column"), column,
                                               {{"caption_w", PerturbColumn::CaptionW},
                                                {"caption_l", PerturbColumn::CaptionL}});
    });

    s.child("eval", [&](Section& e) {
      e.integer("n_mc", c.eval.n_mc);
      e.integer("seed", c.eval.seed);
      e.path("policy", c.eval.policy, base_dir);
      e.path("reference", c.eval.reference, base_dir);
      e.path("test_set", c.eval.test_set, base_dir);
    });

    s.child("sweep", [&](Section& w) {
      std::string kind = sweep_name(c.sweep.kind);
      w.text("kind", kind);
      c.sweep.kind = choose<SweepKind>(w.key("kind"), kind,
                                       {{"hypothesis1", SweepKind::Hypothesis1}, {"beta", SweepKind::Beta},
                                        {"hypothesis2", SweepKind::Hypothesis2},
                                        {"alignment", SweepKind::Alignment}});
      w.reals("targets", c.sweep.targets);
      w.reals("seeds", c.sweep.seeds);
      w.reals("betas", c.sweep.betas);
      std::string level = to_string(c.sweep.level);
      w.text("level", level);
      c.sweep.level = parse_level(w.key("level"), level);
      w.real("rho", c.sweep.rho);
    });

    s.child("check", [&](Section& k) {
      k.integer("lemma_trials", c.check.lemma_trials);
      k.integer("reference_trials", c.check.reference_trials);
      k.integer("gradient_instances", c.check.gradient_instances);
      k.integer("seed", c.check.seed);
    });
  }

  // Value checks name the key they concern.
  require(!c.run_name.empty() && c.run_name.find('/') == std::string::npos, "run_name",
          "must be a non-empty name without '/'");
  require(!c.output_dir.empty(), "output_dir", "must not be empty");
  require(c.world.k >= 2, "world.k", "must be >= 2");
  require(c.world.d >= 1, "world.d", "must be >= 1");
  require(c.world.n_pairs >= 1, "world.n_pairs", "must be >= 1");
  require(c.world.caption_fidelity_rho >= 0.0 && c.world.caption_fidelity_rho <= 1.0, "world.caption_fidelity_rho",
          "must be in [0, 1]");
  require(c.world.target_delta_mu >= 0.0, "world.target_delta_mu", "must be >= 0");
  require(c.world.preference_gap >= 0.0, "world.preference_gap", "must be >= 0");
  require(c.world.noise_scale >= 0.0, "world.noise_scale", "must be >= 0");
  checked("world", [&] { validate(c.world); });
  require(c.schedule.steps >= 1, "schedule.steps", "must be >= 1");
  checked("schedule", [&] { build_linear_schedule(c.schedule); });
  require(c.objective.beta > 0.0, "objective.beta", "beta must be > 0");
  checked("perturbation", [&] { validate(c.perturbation); });
  require(c.dataset.rho >= 0.0 && c.dataset.rho <= 1.0, "dataset.rho", "must be in [0, 1]");
  require(c.dataset.caption_noise >= 0.0, "dataset.caption_noise", "must be >= 0");
  require(c.dataset.test_fraction > 0.0 && c.dataset.test_fraction < 1.0, "dataset.test_fraction",
          "must be in (0, 1)");
  require(c.train.config.learning_rate >= 0.0, "train.learning_rate", "must be >= 0");
  require(c.train.config.steps >= 0, "train.steps", "must be >= 0");
  require(c.train.config.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(c.train.config.hidden >= 1, "train.hidden", "must be >= 1");
  require(!c.train.sft_steps || *c.train.sft_steps >= 0, "train.sft_steps", "must be >= 0");
  require(!c.train.sft_learning_rate || *c.train.sft_learning_rate > 0.0, "train.sft_learning_rate", "must be > 0");
  if (c.train.reference == ReferenceMode::Checkpoint) {
    require(!c.train.config.reference_source.path.empty(), "train.reference_path",
            "required when train.reference is 'checkpoint'");
    c.train.config.reference_source.kind = ReferenceSource::Kind::FromCheckpoint;
  }
  require(c.eval.n_mc >= 1, "eval.n_mc", "must be >= 1");
  require(!c.sweep.seeds.empty(), "sweep.seeds", "must not be empty");
  require(!c.sweep.betas.empty(), "sweep.betas", "must not be empty");
  for (double b : c.sweep.betas) require(b > 0.0, "sweep.betas", "every beta must be > 0");
  require(c.sweep.rho >= 0.0 && c.sweep.rho <= 1.0, "sweep.rho", "must be in [0, 1]");
  require(c.check.lemma_trials >= 1, "check.lemma_trials", "must be >= 1");
  require(c.check.reference_trials >= 1, "check.reference_trials", "must be >= 1");
  require(c.check.gradient_instances >= 1, "check.gradient_instances", "must be >= 1");
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config", "file not found: " + path.string());
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  return parse_config_text(read_text_file(path), base);
}

std::string dump_config(const RunConfig& c) {
  auto band = [](const SimilarityBand& b) { return json::array({b.lo, b.hi}); };
  json j = json::object();
  j["run_name"] = c.run_name;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["world"] = {{"k", c.world.k},
                {"d", c.world.d},
                {"n_pairs", c.world.n_pairs},
                {"caption_fidelity_rho", c.world.caption_fidelity_rho},
                {"target_delta_mu", c.world.target_delta_mu},
                {"preference_gap", c.world.preference_gap},
                {"noise_scale", c.world.noise_scale},
                {"base_similarity_lo", c.world.base_similarity_lo},
                {"base_similarity_hi", c.world.base_similarity_hi},
                {"seed", c.world.seed}};
  j["schedule"] = {{"steps", c.schedule.steps}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}};
  j["objective"] = {{"beta", c.objective.beta}};
  j["perturbation"] = {{"weak", band(c.perturbation.levels[0].band)},
                       {"medium", band(c.perturbation.levels[1].band)},
                       {"strong", band(c.perturbation.levels[2].band)},
                       {"pool_size", c.perturbation.pool_size}};
  j["dataset"] = {{"mode", mode_name(c.dataset.mode)},
                  {"rho", c.dataset.rho},
                  {"level", to_string(c.dataset.level)},
                  {"source", c.dataset.source == mode::Source::Preferred ? "preferred" : "less_preferred"},
                  {"caption_noise", c.dataset.caption_noise},
                  {"test_fraction", c.dataset.test_fraction},
                  {"input", c.dataset.input.string()}};
  json train = {{"method", to_string(c.train.config.method)},
                {"learning_rate", c.train.config.learning_rate},
                {"steps", c.train.config.steps},
                {"batch_size", c.train.config.batch_size},
                {"hidden", c.train.config.hidden},
                {"reference", reference_name(c.train.reference)},
                {"reference_path", c.train.config.reference_source.path},
                {"dataset", c.train.dataset.string()}};
  if (c.train.sft_steps) train["sft_steps"] = *c.train.sft_steps;
  if (c.train.sft_learning_rate) train["sft_learning_rate"] = *c.train.sft_learning_rate;
  j["train"] = train;
  j["perturb"] = {{"input", c.perturb.input.string()},
                  {"level", to_string(c.perturb.level)},
                  {"column", c.perturb.column == PerturbColumn::CaptionW ? "caption_w" : "caption_l"}};
  j["eval"] = {{"n_mc", c.eval.n_mc},
               {"seed", c.eval.seed},
               {"policy", c.eval.policy.string()},
               {"reference", c.eval.reference.string()},
               {"test_set", c.eval.test_set.string()}};
  j["sweep"] = {{"kind", sweep_name(c.sweep.kind)},
                {"targets", c.sweep.targets},
                {"seeds", c.sweep.seeds},
                {"betas", c.sweep.betas},
                {"level", to_string(c.sweep.level)},
                {"rho", c.sweep.rho}};
  j["check"] = {{"lemma_trials", c.check.lemma_trials},
                {"reference_trials", c.check.reference_trials},
                {"gradient_instances", c.check.gradient_instances},
                {"seed", c.check.seed}};
  return j.dump(2) + "\n";
}

}  // namespace dcpo
