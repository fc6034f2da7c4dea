#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "dcpo/config.hpp"
#include "dcpo/pipeline.hpp"

namespace {

// DCPO_VERBOSITY: "quiet" silences progress lines; anything else keeps them.
bool quiet() {
  const char* v = std::getenv("DCPO_VERBOSITY");
  return v != nullptr && std::string(v) == "quiet";
}

const std::map<std::string, std::string> kDescriptions{
    {"gen-data", "generate the synthetic world and the configured dataset"},
    {"analyze-overlap", "measure caption/prompt overlap of a dataset"},
    {"perturb", "replace one caption column with perturbed captions"},
    {"train", "train an sft, dpo or dcpo policy"},
    {"eval", "score a policy against its reference on held-out pairs"},
    {"sweep", "run a seeded sweep and write sweep.csv"},
    {"check", "run the correctness gates"},
    {"plot-data", "convert run reports into long-format plot tables"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-caption preference optimization lab"};
  app.require_subcommand(1, 1);
  std::string config_path;
  for (const std::string& name : dcpo::subcommand_names()) {
    app.add_subcommand(name, kDescriptions.at(name))->add_option("--config,-c", config_path, "run configuration (JSON)")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  std::ostringstream sink;
  std::ostream& log = quiet() ? static_cast<std::ostream&>(sink) : std::cout;
  try {
    return dcpo::run_subcommand(name, dcpo::parse_config(config_path), log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dcpo::exit_code_for(e);
  }
}
