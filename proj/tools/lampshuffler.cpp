// Command-line front end for the lampshuffler experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "lampshuffler/experiments.hpp"
#include "lampshuffler/parallel.hpp"

namespace fs = std::filesystem;
using namespace lampshuffler;

namespace {

struct Common {
  std::string config_file;
  std::string seed;
  unsigned threads = 0;
  std::string gate;
  std::string out = ".";
  std::map<std::string, std::string> overrides;
};

std::pair<double, double> parse_gate(const std::string& g) {
  const auto colon = g.find(':');
  if (colon == std::string::npos) throw ConfigError({"gate: expected LO:HI, got '" + g + "'"});
  try {
    const double lo = std::stod(g.substr(0, colon));
    const double hi = std::stod(g.substr(colon + 1));
    if (lo > hi) throw std::invalid_argument(g);
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError({"gate: expected LO:HI with LO <= HI, got '" + g + "'"});
  }
}

int run(const std::string& command, const Common& opts) {
  json config = json::object();
  if (!opts.config_file.empty()) {
    std::ifstream in(opts.config_file);
    if (!in) throw ConfigError({"config: cannot open " + opts.config_file});
    config = json::parse(in);
  }
  std::vector<std::string> problems;
  for (const auto& [key, value] : opts.overrides) {
    try {
      config[key] = parse_override(command, key, value);
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems.begin(), e.problems.end());
    }
  }
  if (!opts.seed.empty()) {
    try {
      config["seed"] = parse_count(opts.seed);
    } catch (const ConfigError&) {
      problems.push_back("seed: expected an unsigned 64-bit integer, got '" + opts.seed + "'");
    }
  }
  std::optional<std::pair<double, double>> gate;
  if (!opts.gate.empty()) {
    try {
      gate = parse_gate(opts.gate);
    } catch (const ConfigError& e) {
      problems.push_back(e.problems.front());
    }
  }
  if (!problems.empty()) {
    try {
      normalize_config(command, config);
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems.begin(), e.problems.end());
    }
    throw ConfigError(problems);
  }

  const unsigned threads = resolve_threads(opts.threads > 0 ? std::optional<unsigned>(opts.threads) : std::nullopt);
  const CommandResult result = run_command(command, config, threads);

  fs::create_directories(opts.out);
  for (const auto& f : result.files) {
    std::ofstream out(fs::path(opts.out) / f.name, std::ios::binary);
    out << f.content;
    if (!out) throw std::runtime_error("cannot write " + (fs::path(opts.out) / f.name).string());
  }
  std::cout << command << ": " << result.summary << "\n";
  if (!result.verdict) {
    std::cout << "check failed\n";
    return 2;
  }
  if (gate) {
    const double v = result.gate_value.value_or(NAN);
    const bool ok = v >= gate->first && v <= gate->second;
    std::cout << "gate " << v << " in [" << gate->first << ", " << gate->second << "]: " << (ok ? "pass" : "FAIL") << "\n";
    if (!ok) return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks on lampshuffler groups FSym(H) x H"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::map<std::string, Common> opts;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    subs[name] = sub;
    Common& o = opts[name];
    sub->add_option("--config", o.config_file, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--threads", o.threads, "worker threads (default: LAMPSHUFFLER_THREADS or all cores)");
    sub->add_option("--gate", o.gate, "LO:HI acceptance range for the command's gate statistic");
    sub->add_option("--out", o.out, "output directory");
    for (const auto& key : parameter_names(name)) {
      if (key == "seed") continue;
      sub->add_option("--" + key, o.overrides[key], "override '" + key + "'");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    Common o = opts[name];
    // Only options that were actually given count as overrides.
    std::map<std::string, std::string> given;
    for (const auto& [key, value] : o.overrides) {
      if (sub->count("--" + key) > 0) given[key] = value;
    }
    o.overrides = std::move(given);
    try {
      return run(name, o);
    } catch (const ConfigError& e) {
      std::cerr << "error: invalid configuration\n";
      for (const auto& p : e.problems) std::cerr << "  " << p << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
