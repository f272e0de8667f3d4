#pragma once

#include <vector>

#include "rwls/ewens.hpp"
#include "rwls/weights.hpp"

namespace rwls {

struct ChiEstimate {
  int k = 0;
  double value = 0.0;
  double se = 0.0;      // zero for exact values
  bool exact = false;
  int dim = 0;
};

/// chi_U(k) = E_o[prod_x U(n_x^{(k)}(X))] for the simple symmetric walk on
/// Z^d, visits counted at steps 1..k only. Exact enumeration over all
/// (2d)^k walks, with every prefix value chi(1..k_max) from one pass;
/// branches whose running product is exactly zero are pruned.
/// Requires U(0) = 1 and (2d)^{k_max} <= 1e9.
std::vector<ChiEstimate> chi_exact_series(const WeightFunction& u, int dim, int k_max);

/// Monte Carlo estimate of chi_U(k), standard error by batching.
ChiEstimate chi_mc(const WeightFunction& u, int dim, int k, long long samples, Rng& rng);

struct BetaBound {
  double rate_fit = 0.0;        // fitted slope of log chi over the last window
  double rate_conservative = 0.0;  // largest single-k slope
  double beta_fit = 0.0;        // e^{-rate}/(2d)
  double beta_conservative = 0.0;
  int window_from = 0, window_to = 0;
};

/// Finite-k surrogate of the inverse-connectivity bound: the limsup rate is
/// estimated from the series, beta = e^{-rate}/(2d). Both the last-window
/// fit and the conservative largest-slope variant are reported.
BetaBound beta_lower_bound(const std::vector<ChiEstimate>& series, int dim);

}  // namespace rwls
