#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "rwls/config.hpp"

// Exit codes: 0 ok, 2 missing config, 3 invalid config, 4 output failure,
// 5 engine failure.
int main(int argc, char** argv) {
  CLI::App app{"Interacting random walk loop soup engines"};
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool have_seed = false;
  app.add_option("--config", config_path, "Path to the JSON run configuration")->required();
  auto* seed_opt = app.add_option("--seed", seed_override, "Override the config seed");
  app.add_option("--out", out_override, "Override the output path");
  CLI11_PARSE(app, argc, argv);
  have_seed = seed_opt->count() > 0;

  if (!std::filesystem::exists(config_path)) {
    std::fprintf(stderr, "error: config file not found: %s\n", config_path.c_str());
    return 2;
  }

  rwls::RunConfig cfg;
  try {
    cfg = rwls::load_config(config_path);
  } catch (const rwls::ConfigError& e) {
    std::fprintf(stderr, "config error at '%s': %s\n", e.key.c_str(), e.message.c_str());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  if (have_seed) {
    cfg.seed = seed_override;
    cfg.seeds = {seed_override};
    cfg.config_hash = rwls::fnv1a_hex(cfg.resolved().dump());
  }
  if (!out_override.empty()) cfg.out_path = out_override;

  std::vector<rwls::ResultRecord> records;
  try {
    records = rwls::dispatch(cfg);
  } catch (const rwls::ConfigError& e) {
    std::fprintf(stderr, "config error at '%s': %s\n", e.key.c_str(), e.message.c_str());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "engine error: %s\n", e.what());
    return 5;
  }

  try {
    rwls::emit_results(records, cfg, cfg.out_path, cfg.format);
    std::ofstream resolved(cfg.out_path + ".config.json");
    if (!resolved) throw std::runtime_error("cannot write resolved config");
    auto j = cfg.resolved();
    j["config_hash"] = cfg.config_hash;
    resolved << j.dump(2) << "\n";
    if (!resolved) throw std::runtime_error("resolved config write failed");
    const char* ext = cfg.format == rwls::OutputFormat::csv ? ".csv" : ".jsonl";
    std::printf("wrote %zu records to %s%s\n", records.size(), cfg.out_path.c_str(), ext);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "output error: %s\n", e.what());
    return 4;
  }
  return 0;
}
