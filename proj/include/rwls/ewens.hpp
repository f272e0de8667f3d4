#pragma once

#include <random>
#include <span>
#include <vector>

namespace rwls {

using Rng = std::mt19937_64;

/// Z(theta, n) = theta (theta+1) ... (theta+n-1); Z(theta, 0) = 1.
long double ewens_normalizer(double theta, int n);

/// Permutation of {0..n-1} with law theta^{c(sigma)} / Z(theta, n), sampled
/// by sequential insertion: element i opens a new cycle with probability
/// theta/(theta+i), otherwise it is inserted after a uniform earlier element.
std::vector<int> sample_ewens(double theta, int n, Rng& rng);

/// Cycles of a permutation, fixed points included.
int permutation_cycle_count(std::span<const int> sigma);

/// p(theta, n, v, a) = P(|FP(sigma) /\ A_j| = a_j for all j) under
/// Ewens(theta, n), for pairwise disjoint A_j with |A_j| = v_j. Exact:
/// P(T subset FP) depends only on |T|, so inclusion-exclusion over the
/// non-required slots collapses to a single alternating sum.
long double ewens_fixed_point_prob(double theta, int n, std::span<const int> v,
                                   std::span<const int> a);

/// Monte Carlo estimate of the same probability, for n beyond the reach of
/// the alternating sum.
double ewens_fixed_point_prob_mc(double theta, int n, std::span<const int> v,
                                 std::span<const int> a, long long samples, Rng& rng);

/// Tail q(theta, n, v, k) = P(|FP(sigma) /\ [v]| >= k).
long double ewens_fixed_point_tail(double theta, int n, int v, int k);

/// P(Y >= k) = min{1, sum_{j>=k} max{1, N/2}^j / j!}.
long double domination_tail(double n_par, int k);

}  // namespace rwls
