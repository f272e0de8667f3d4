#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rwls/graph.hpp"
#include "rwls/loops.hpp"
#include "rwls/weights.hpp"

namespace rwls {

struct ExactResult {
  long double value = 0.0L;
  int t_max = 0;
  long double tail = 0.0L;  // magnitude of the last two length shells
};

struct IdentityCheck {
  long double lhs = 0.0L;
  long double rhs = 0.0L;
  long double gap = 0.0L;
};

/// Exact truncated sums over equivalence classes of loop-soup configurations
/// (class multisets rho), weighted by
///
///   nu(rho) = prod_gamma (1/k_gamma!) (N beta^alpha(gamma) delta/(2J))^{k_gamma}
///             * prod_x U(n_x(rho) + base_x).
///
/// Multisets are enumerated with total loop length <= t_max. Summing the
/// quotient instead of raw ordered tuples collapses the |omega|! and
/// rooting/orientation symmetries.
class SoupEnumerator {
 public:
  SoupEnumerator(const Graph& g, const WeightFunction& u, double n, double beta,
                 int t_max, std::vector<int> base_local_time = {});

  const Graph& graph() const { return g_; }
  const std::vector<LoopClass>& classes() const { return classes_; }
  int t_max() const { return t_max_; }

  int class_index(const LoopClass& c) const;  // -1 when alpha > t_max
  int bounce_index(EdgeId e) const;           // index of the length-2 class on e

  struct Multiset {
    std::span<const std::pair<int, int>> counts;  // (class index, k), support only
    int total_length;
    long double weight;                 // nu-tilde including the U product
    std::span<const int> local_time;    // n_x(rho) + base
  };
  using Visitor = std::function<void(const Multiset&)>;

  /// Visits every multiset with total length <= t_max exactly once,
  /// including the empty one. Deterministic order.
  void for_each(const Visitor& visit) const;

  static long long count_of(const Multiset& ms, int class_idx);

 private:
  Graph g_;
  WeightFunction u_;
  double n_par_;
  double beta_;
  int t_max_;
  std::vector<int> base_;
  std::vector<LoopClass> classes_;
  std::vector<long double> class_weight_;  // N beta^alpha delta / (2J)
  std::vector<int> bounce_idx_;            // per edge
};

/// Truncated partition function; >= 1 whenever U(0) = 1 (empty multiset).
ExactResult partition_function(const Graph&, const WeightFunction&, double n,
                               double beta, int t_max);

/// Factorial moment mu_a(gamma) = E[k (k-1) ... (k-a+1)].
ExactResult class_moment(const Graph&, const WeightFunction&, double n, double beta,
                         int t_max, const LoopClass& gamma, int a);

/// Loop density rho(k) = (1/|V|) sum_{alpha(gamma)=k} E[k_gamma].
ExactResult density_rho(const Graph&, const WeightFunction&, double n, double beta,
                        int t_max, int k);

/// Two-point function Z(x,y)/Z: open walks from x to y weighted beta^{|walk|},
/// loop sum with local times shifted by the walk's visits. Truncated by
/// total local time: |walk| + 1 + total loop length <= t_max.
ExactResult two_point(const Graph&, const WeightFunction&, double n, double beta,
                      int t_max, Vertex x, Vertex y);

/// Loop decomposition identity: mu_a(gamma) against
/// psi^a E[prod_e prod_{i < a q_e(gamma)} (k_e - i)], psi = (delta/J)(2/N)^{k-1}.
/// Both sides are summed at the same truncation (the underlying injection
/// preserves total length), so the gap is float noise when the identity holds.
IdentityCheck verify_decomposition(const Graph&, const WeightFunction&, double n,
                                   double beta, int t_max, const LoopClass& gamma, int a);

/// Open-path variant on bipartite graphs (x and y in different parts):
/// Z(x,y)/Z against (1/beta) sum_walks (2/N)^{(|w|+1)/2} E[prod_e prod (k_e - i)]
/// with q_e the walk's odd-step counts.
IdentityCheck verify_open_decomposition(const Graph&, const WeightFunction&, double n,
                                        double beta, int t_max, Vertex x, Vertex y);

/// P(x <-> y): some loop visits both x and y.
long double exact_connection_probability(const Graph&, const WeightFunction&, double n,
                                         double beta, int t_max, Vertex x, Vertex y);

/// E[n_o^m].
long double exact_local_time_moment(const Graph&, const WeightFunction&, double n,
                                    double beta, int t_max, Vertex o, int m);

/// (1/2N) E[sum_j n_x(l_j) n_y(l_j) / (ntilde_x ntilde_y)], ntilde = n + N/2.
long double exact_spin_middle(const Graph&, const WeightFunction&, double n,
                              double beta, int t_max, Vertex x, Vertex y);

/// All walks x -> y (revisits allowed) of length <= max_len. Tiny graphs only.
std::vector<std::vector<Vertex>> enumerate_walks(const Graph&, Vertex x, Vertex y,
                                                 int max_len);

}  // namespace rwls
