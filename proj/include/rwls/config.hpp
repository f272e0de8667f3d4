#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwls/graph.hpp"
#include "rwls/weights.hpp"

namespace rwls {

/// Validation failure; the key names the offending config entry.
struct ConfigError {
  std::string key;
  std::string message;
};

enum class EngineKind { exact, rpm_exact, mcmc, threshold, green };
enum class OutputFormat { jsonl, csv, both };

struct ObservableSpec {
  std::string name;                 // e.g. "partition", "rho:2", "connection:0,1"
  nlohmann::json raw;               // object form for structured observables
};

struct RunConfig {
  nlohmann::json graph_spec;
  nlohmann::json weight_spec;
  double n_par = 2.0;
  std::vector<double> betas;
  EngineKind engine = EngineKind::exact;
  std::uint64_t seed = 1;

  // exact / rpm
  int t_max = 20;
  int total_cap = 12;
  int per_edge_cap = -1;
  int track_len = 4;

  // mcmc
  int m_cap = 64;
  long long sweeps = 10000;
  long long burn_in = 1000;
  int thin = 0;  // 0: auto from the pilot autocorrelation
  int cycle_max_len = 4;
  std::vector<std::uint64_t> seeds;
  int cs_m = 2;

  // threshold
  int dim = 2;
  int k_max = 10;
  bool threshold_exact = true;
  long long samples = 100000;

  // green
  int box_side = 128;
  int r_min = 2;
  int r_max = 16;

  std::vector<ObservableSpec> observables;
  std::string out_path = "out";
  OutputFormat format = OutputFormat::jsonl;

  std::string config_hash;  // FNV-1a of the resolved config dump

  Graph build_graph() const;
  WeightFunction build_weight() const;
  nlohmann::json resolved() const;
};

/// Parses and validates; throws ConfigError on schema violations and
/// std::runtime_error when the file cannot be read.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);

struct ResultRecord {
  std::string quantity;
  std::string params;
  double beta = 0.0;
  double value = 0.0;
  double se = 0.0;
  long long n = 0;
  double n_eff = 0.0;
  int t_max = 0;
  double tail = 0.0;
  std::uint64_t seed = 0;
};

/// Runs the configured engine over the beta grid. Deterministic given
/// (config, seed). For the mcmc engine, writes one extra file per chain
/// seed next to out_path and returns the merged records.
std::vector<ResultRecord> dispatch(const RunConfig& cfg);

/// JSON-lines and/or CSV with a stable field order; every record carries the
/// seed and the resolved config hash. Throws std::runtime_error on I/O
/// failure or when records is empty.
void emit_results(const std::vector<ResultRecord>& records, const RunConfig& cfg,
                  const std::string& base_path, OutputFormat format);

std::string fnv1a_hex(const std::string& data);

}  // namespace rwls
