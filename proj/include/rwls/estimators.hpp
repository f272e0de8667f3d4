#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwls/graph.hpp"
#include "rwls/mcmc.hpp"
#include "rwls/weights.hpp"

namespace rwls {

struct EstimateReport {
  std::string observable;
  double estimate = 0.0;
  double se = 0.0;       // batch-mean standard error
  long long n = 0;       // samples
  double n_eff = 0.0;    // var(samples)/se^2
  std::uint64_t seed = 0;
};

struct BoundCheck {
  std::string quantity;
  double estimate = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool satisfied = false;
  double margin = 0.0;  // bound - (estimate - 3 se), or as documented per check
};

/// Batch means with at least min_batches batches (32 by default).
EstimateReport batch_mean_report(std::span<const double> samples, int min_batches = 32);

/// Integrated autocorrelation time via the initial positive sequence.
double integrated_autocorrelation(std::span<const double> samples);

struct MeasurementPlan {
  std::vector<int> cycle_lengths;                        // per-sample cycle counts
  std::vector<std::pair<Vertex, Vertex>> connection_pairs;
  std::vector<std::array<int, 2>> connection_displacements;  // torus-averaged
  int torus_side = 0;                                    // required for displacements
  std::vector<std::pair<Vertex, int>> local_time_moments;
  std::vector<int> edge_tail_thresholds;                 // P(k~_e >= a), pooled
  std::optional<std::pair<Vertex, Vertex>> spin_pair;    // middle functional
  int spin_cs_m = 2;                                     // Cauchy-Schwarz depth
  bool record_total_links = true;
};

struct ChainOutput {
  std::map<std::string, std::vector<double>> series;
  nlohmann::json final_checkpoint;
  MoveStats stats;
  double cap_hit_rate = 0.0;
  double tau_int_links = 0.0;
  int max_edge_links = 0;
  bool cycle_basis_spanned = false;
  std::uint64_t seed = 0;
  long long samples = 0;
};

/// Runs one chain: burn_in sweeps, then `sweeps` sweeps measuring every
/// `thin`-th. thin <= 0 selects ceil(tau_int) from a short pilot.
ChainOutput run_chain(const Graph& g, const WeightFunction& u, double n, double beta,
                      ChainOptions opt, long long sweeps, long long burn_in, int thin,
                      const MeasurementPlan& plan);

// series keys used by run_chain
std::string series_cycles(int len);
std::string series_connection(Vertex x, Vertex y);
std::string series_connection_avg(int dr, int dc);
std::string series_local_moment(Vertex o, int m);
std::string series_edge_tail(int a);
std::string series_middle();
std::string series_spin_connection();
std::string series_ntilde_pow(Vertex which);  // "x" places 0, "y" 1

/// rho(k) = (1/|V|) E[# cycles of length k].
EstimateReport estimate_rho(const ChainOutput& out, int k, int n_vertices);

/// Partial microscopic local time sum_{k<=K, k even} k rho(k).
EstimateReport micro_localtime_partial(const ChainOutput& out, int K, int n_vertices);

EstimateReport estimate_localtime_moment(const ChainOutput& out, Vertex o, int m);

EstimateReport estimate_connection(const ChainOutput& out, Vertex x, Vertex y);

struct DecayFit {
  double exponent = 0.0;  // c in P ~ d^{-c}
  double ci_low = 0.0;    // 95% interval
  double ci_high = 0.0;
};

/// Least-squares slope of log P against log d; needs >= 4 positive points.
DecayFit fit_decay(std::span<const double> distances, std::span<const EstimateReport> probs);

struct SandwichReport {
  EstimateReport middle;       // (1/2N) E[sum_j n_x n_y / (ntilde_x ntilde_y)]
  EstimateReport connection;   // P(x <-> y)
  double upper = 0.0;          // (1/2N) P-hat
  double lower = 0.0;          // c1-hat P-hat^{1 + 1/2^{m-1}}
  double c1 = 0.0;             // (1/2N) b-hat^{-1/2^{m-1}}, plug-in
};

SandwichReport spin_correlation_sandwich(const ChainOutput& out, double n_par, int m);

/// lambda(gamma) = (delta/J)(N/2) max{e^{N/2}, 2e/N}^{alpha/2}.
double poisson_lambda(int alpha, int delta, int multiplicity, double n_par);

/// Empirical P(k~_e >= a) against lambda^a / a! for a in [a_min, a_max].
std::vector<BoundCheck> poisson_tail_check(const ChainOutput& out, double n_par,
                                           int a_min, int a_max);

/// Beta-uniform ceiling N [Delta^2 max{e^{N/2}, 2e/N}]^{k/2} for rho(k).
double rho_upper_bound(int k, int max_degree, double n_par);

// ---------------------------------------------------------------------------
// Green function of the killed walk on the 2d box

/// Solves (I - P) u = e_x on the L x L box (walk killed outside), by
/// conjugate gradients on the implicit operator. Returns the column
/// g_L(., x) in row-major order.
std::vector<double> green_column(int box_side, int row, int col);

struct GreenGap {
  double gap = 0.0;        // g(x,x) - g(x,y)
  double model = 0.0;      // (2/pi) ln ||x-y|| + fitted constant
  double deviation = 0.0;  // gap - model
};

struct GreenFit {
  double constant = 0.0;       // fitted additive constant
  double max_residual = 0.0;   // over the fitted range
  std::vector<GreenGap> gaps;  // one per distance r = r_min..r_max
  double neighbor_gap = 0.0;   // r = 1 (potential-kernel value 1)
};

/// Center-column solve; distances along a lattice axis.
GreenFit green_log_fit(int box_side, int r_min, int r_max);

}  // namespace rwls
