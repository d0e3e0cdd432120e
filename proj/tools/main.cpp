#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mida/experiment.hpp"

namespace {

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

std::filesystem::path data_root() {
  const char* env = std::getenv("MIDA_DATA_DIR");
  return env ? std::filesystem::path(env) : std::filesystem::path();
}

mida::ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mida::ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw mida::ConfigError(path + ": " + e.what());
  }
  return mida::ExperimentConfig::from_json(j);
}

std::vector<int> parse_sweep(const std::string& range) {
  // "a:b" or "a:b:step"
  std::vector<int> parts;
  std::size_t start = 0;
  while (start <= range.size()) {
    const std::size_t pos = range.find(':', start);
    const std::string tok =
        pos == std::string::npos ? range.substr(start) : range.substr(start, pos - start);
    try {
      parts.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw mida::ConfigError("bad sweep range \"" + range + "\"; expected first:last[:step]");
    }
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (parts.size() < 2 || parts.size() > 3)
    throw mida::ConfigError("bad sweep range \"" + range + "\"; expected first:last[:step]");
  const int step = parts.size() == 3 ? parts[2] : 1;
  if (step < 1 || parts[0] < 1 || parts[1] < parts[0])
    throw mida::ConfigError("bad sweep range \"" + range + "\"");
  std::vector<int> hs;
  for (int h = parts[0]; h <= parts[1]; h += step) hs.push_back(h);
  return hs;
}

void print_summary(const mida::RunReport& report) {
  for (const mida::TaskResult& r : report.results)
    std::cout << r.task << "  " << r.metric << " = " << r.value << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel subspace learning for domain adaptation"};
  app.require_subcommand(1);

  // synth: write a generated scenario to a CSV file.
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario as CSV");
  std::string scenario_name;
  int synth_n = 100;
  std::uint64_t synth_seed = 7;
  bool conditional = false;
  std::string synth_out = "synth.csv";
  synth->add_option("scenario", scenario_name,
                    "two-domain-shift | continuous-drift | label-mixing-3d | nonlinear-shift "
                    "(aliases fig1..fig4)")
      ->required();
  synth->add_option("--n", synth_n, "samples per class per domain");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_flag("--conditional-shift", conditional,
                  "two-domain-shift: shift the classes by different amounts");
  synth->add_option("--out", synth_out, "output CSV path");

  // fit-transform: embed one dataset.
  auto* fit = app.add_subcommand("fit-transform", "Fit a subspace and write the embedding");
  std::string fit_config;
  std::string fit_out = "out";
  std::uint64_t cli_seed = 0;
  bool fit_seed_set = false;
  fit->add_option("--config", fit_config, "experiment config JSON")->required();
  fit->add_option("--out", fit_out, "output directory");
  fit->add_option("--seed", cli_seed, "override the config seed")
      ->each([&](const std::string&) { fit_seed_set = true; });

  // experiment: run a full protocol with report.
  auto* exp = app.add_subcommand("experiment", "Run a transfer experiment");
  std::string exp_config;
  std::string exp_out;
  std::string exp_method;
  std::string exp_sweep;
  std::uint64_t exp_seed = 0;
  bool exp_seed_set = false;
  exp->add_option("--config", exp_config, "experiment config JSON")->required();
  exp->add_option("--out", exp_out, "output directory for report.json / report.csv");
  exp->add_option("--method", exp_method, "override: mida | smida | kpca | none");
  exp->add_option("--sweep-h", exp_sweep, "dimension sweep first:last[:step]");
  exp->add_option("--seed", exp_seed, "override the config seed")
      ->each([&](const std::string&) { exp_seed_set = true; });

  // import: convert raw distributions to the canonical CSV.
  auto* import = app.add_subcommand("import", "Convert raw datasets to canonical CSV");
  auto* gas = import->add_subcommand("gas", "Gas sensor drift batches (batch1.dat..batch10.dat)");
  std::string gas_dir;
  std::string gas_out = "gas.csv";
  gas->add_option("--dir", gas_dir, "directory with the batch files")->required();
  gas->add_option("--out", gas_out, "output CSV path");
  auto* corn = import->add_subcommand("corn", "Corn spectra (m5/mp5/mp6 + propvals)");
  std::string corn_dir;
  std::string corn_property = "moisture";
  std::string corn_out = "corn.csv";
  corn->add_option("--dir", corn_dir, "directory with m5spec.csv etc.")->required();
  corn->add_option("--property", corn_property, "moisture | oil | protein | starch");
  corn->add_option("--out", corn_out, "output CSV path");
  import->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (synth->parsed()) {
      mida::SynthScenario scenario;
      scenario.kind = mida::scenario_from_string(scenario_name);
      scenario.n_per_class_per_domain = synth_n;
      scenario.seed = synth_seed;
      scenario.conditional_shift = conditional;
      mida::save_csv(mida::to_table(mida::generate(scenario)), synth_out);
      std::cout << "wrote " << synth_out << '\n';
    } else if (fit->parsed()) {
      mida::RunOptions options;
      options.out_dir = fit_out;
      options.data_root = data_root();
      if (fit_seed_set) options.seed_override = cli_seed;
      const mida::RunReport report = mida::run_fit_transform(load_config(fit_config), options);
      print_summary(report);
      std::cout << "wrote " << (std::filesystem::path(fit_out) / "embedding.csv").string()
                << '\n';
    } else if (exp->parsed()) {
      mida::RunOptions options;
      options.out_dir = exp_out;
      options.data_root = data_root();
      if (!exp_method.empty())
        options.method_override = mida::pipeline_method_from_string(exp_method);
      if (!exp_sweep.empty()) options.sweep_h = parse_sweep(exp_sweep);
      if (exp_seed_set) options.seed_override = exp_seed;
      const mida::RunReport report = mida::run_experiment(load_config(exp_config), options);
      print_summary(report);
    } else if (gas->parsed()) {
      std::filesystem::path dir = gas_dir;
      if (dir.is_relative() && !data_root().empty()) dir = data_root() / dir;
      mida::save_csv(mida::import_gas_batches(dir), gas_out);
      std::cout << "wrote " << gas_out << '\n';
    } else if (corn->parsed()) {
      std::filesystem::path dir = corn_dir;
      if (dir.is_relative() && !data_root().empty()) dir = data_root() / dir;
      mida::save_csv(mida::import_corn(dir, corn_property), corn_out);
      std::cout << "wrote " << corn_out << '\n';
    }
  } catch (const mida::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
