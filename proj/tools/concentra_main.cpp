#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "concentra/run.hpp"

namespace {

void emit_error(const std::string& type, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"type", type}, {"message", message}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concentra: concentration experiments for singularly "
               "perturbed divergence-form elliptic equations"};
  app.require_subcommand(1);

  const std::vector<std::string> names = {
      "limit-profile", "gamma-map", "frozen-sigma", "solve",
      "concentrate",   "reduce",    "multiplicity", "identity-check"};
  struct Args {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
  };
  std::vector<Args> args(names.size());
  for (size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i]);
    sub->add_option("--config", args[i].config, "configuration file")
        ->required();
    sub->add_option("--set", args[i].sets,
                    "override a config value (section.key=value)");
    sub->add_option("--out", args[i].out, "output directory");
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < names.size(); ++i) {
    if (!app.get_subcommand(names[i])->parsed()) continue;
    try {
      concentra::ExperimentConfig cfg = concentra::ExperimentConfig::load(
          args[i].config, args[i].sets, args[i].out);
      concentra::run_subcommand(names[i], cfg);
      return 0;
    } catch (const concentra::ConfigError& e) {
      emit_error("validation", e.what());
      return 2;
    } catch (const concentra::SolverError& e) {
      emit_error("non-convergence", e.what());
      return 3;
    } catch (const std::exception& e) {
      emit_error("internal", e.what());
      return 1;
    }
  }
  return 1;
}
