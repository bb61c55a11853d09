#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lgap/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw lgap::ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  bool exact_summation = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> max_iters;
  std::optional<double> beta;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("-c,--config", flags.config_path, "experiment config file")
      ->required();
  sub->add_option("--set", flags.overrides,
                  "override a config entry, section.key=value (repeatable)");
  sub->add_flag("--exact-summation", flags.exact_summation,
                "replace sampling with the deterministic full enumeration");
  sub->add_option("--seed", flags.seed, "override sampler.seed");
  sub->add_option("--out", flags.out_dir, "override output.dir");
  sub->add_option("--max-iters", flags.max_iters,
                  "override optimizer.max_iters");
  sub->add_option("--beta", flags.beta, "override optimizer.beta");
}

int run(const CommonFlags& flags, lgap::RunMode mode) {
  lgap::ExperimentConfig cfg = lgap::parse_config(read_file(flags.config_path));
  for (const std::string& ov : flags.overrides) {
    lgap::apply_override(cfg, ov);
  }
  if (flags.exact_summation) cfg.sampler.exact_summation = true;
  if (flags.seed) cfg.sampler.seed = *flags.seed;
  if (flags.out_dir) cfg.output.dir = *flags.out_dir;
  if (flags.max_iters) cfg.optimizer.max_iters = *flags.max_iters;
  if (flags.beta) cfg.optimizer.beta = *flags.beta;
  cfg.mode = mode;

  for (const std::string& w : lgap::validate_config(cfg, mode)) {
    std::cerr << "warning: " << w << "\n";
  }
  lgap::run_experiment(cfg, mode);
  std::cout << "artifacts written to " << cfg.output.dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Variational and exact solvers for the relaxation gap of dissipative "
      "spin lattices"};
  app.require_subcommand(1);

  struct SubDef {
    const char* name;
    const char* help;
    lgap::RunMode mode;
  };
  const SubDef defs[] = {
      {"rbm", "optimize the neural trial state and report the gap",
       lgap::RunMode::Rbm},
      {"ed", "dense spectrum, gap and decay-mode classification",
       lgap::RunMode::Ed},
      {"bethe", "magnon quasi-momenta and energies for the periodic chain",
       lgap::RunMode::Bethe},
      {"meanfield", "site-factorized steady state and phase boundary",
       lgap::RunMode::MeanField},
      {"compare", "run the optimizer and the matching oracle, report the "
                  "relative error",
       lgap::RunMode::Compare},
  };

  std::vector<std::pair<CLI::App*, CommonFlags>> subs;
  subs.reserve(std::size(defs));
  for (const SubDef& def : defs) {
    CLI::App* sub = app.add_subcommand(def.name, def.help);
    subs.emplace_back(sub, CommonFlags{});
    add_common(sub, subs.back().second);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i].first->parsed()) {
        return run(subs[i].second, defs[i].mode);
      }
    }
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const lgap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
