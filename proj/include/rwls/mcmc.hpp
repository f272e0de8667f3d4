#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "rwls/ewens.hpp"
#include "rwls/graph.hpp"
#include "rwls/rpm.hpp"
#include "rwls/weights.hpp"

namespace rwls {

struct MoveStats {
  long long repairs = 0;
  long long dl_proposed = 0, dl_accepted = 0, dl_cap_rejected = 0;
  long long cycle_proposed = 0, cycle_accepted = 0, cycle_cap_rejected = 0;
};

struct ChainOptions {
  int m_cap = 64;
  int cycle_max_len = 4;
  std::uint64_t seed = 1;
};

/// Reversible chain on fully-paired path-model configurations (links capped
/// at m_cap per edge) targeting mu. Three move families:
///  - per-vertex Ewens repairing: exact heat-bath resampling of the pairing,
///  - per-edge double-link insertion/deletion (Metropolis; direction by fair
///    coin, deletion only when the two top links form a mutual pair),
///  - per-cycle link insertion/deletion along the listed simple cycles.
/// Requires U(n) > 0 for all n: the Metropolis ratios divide by U values.
class Chain {
 public:
  Chain(const Graph& g, const WeightFunction& u, double n, double beta, ChainOptions opt);

  // the configuration references the chain's own graph copy
  Chain(const Chain&) = delete;
  Chain& operator=(const Chain&) = delete;

  /// One pass in fixed order: every vertex repaired, every edge proposed,
  /// every listed cycle proposed. Randomness only inside the proposals.
  void sweep();

  const Graph& graph() const { return g_; }
  const RpmConfig& config() const { return cfg_; }
  const CycleList& cycle_list() const { return cycles_; }
  bool cycle_basis_spanned() const { return basis_spanned_; }
  MoveStats& stats() { return stats_; }
  const MoveStats& stats() const { return stats_; }
  long long step() const { return step_; }
  double n_parameter() const { return n_par_; }
  int m_cap() const { return opt_.m_cap; }

  void ewens_repair(Vertex x);
  bool double_link_move(EdgeId e);
  bool cycle_move(const Cycle& c);

  struct HalfLoop {
    LinkRef a, b;  // the two x-endpoint links
    int length;    // number of links traversed
  };
  /// Half-loops at x: open strands from x back to x, determined by the
  /// pairings away from x only.
  std::vector<HalfLoop> half_loops(Vertex x) const;

  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& j);

 private:
  Graph g_;
  WeightFunction u_;
  double n_par_;
  double beta_;
  ChainOptions opt_;
  CycleList cycles_;
  bool basis_spanned_ = false;
  RpmConfig cfg_;
  MoveStats stats_;
  long long step_ = 0;
  Rng rng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};

  long double insertion_ratio_dl(EdgeId e) const;
  long double insertion_ratio_cycle(const Cycle& c) const;
};

struct StationarityReport {
  long double max_deviation = 0.0L;
  bool irreducible = false;
  bool positive_diagonals = false;
  int n_states = 0;
};

/// Builds the exact one-sweep transition kernel on the full truncated state
/// space by exhaustive proposal enumeration and checks that the normalized
/// mu vector is stationary. State spaces beyond max_states are rejected.
StationarityReport validate_stationarity(const Graph& g, const WeightFunction& u, double n,
                                         double beta, int m_cap, int cycle_max_len,
                                         int max_states = 4096);

}  // namespace rwls
