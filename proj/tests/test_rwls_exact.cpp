#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>

#include "rwls/numeric.hpp"
#include "rwls/rwls_exact.hpp"

using namespace rwls;

namespace {

LoopClass bounce2(const Graph& g) { return bounce_class(g, 0); }

// Independent oracle: sum over multisets of rooted oriented loops with
// weight (N/2)^n / (prod multiplicities!) prod beta^{|l|}/|l| prod_x U(n_x),
// total length <= t_max. Enumerates rooted loops directly, no class logic.
long double brute_force_partition(const Graph& g, const WeightFunction& u, double n,
                                  double beta, int t_max,
                                  const std::vector<int>& base = {}) {
  // collect rooted loops up to t_max
  std::vector<std::vector<Vertex>> loops;
  std::vector<Vertex> walk;
  auto dfs = [&](auto&& self, Vertex root, Vertex cur) -> void {
    for (auto [w, id] : g.neighbors(cur)) {
      if (w == root && walk.size() >= 2) {
        auto l = walk;
        l.push_back(root);
        loops.push_back(l);
      }
      if (static_cast<int>(walk.size()) < t_max) {
        walk.push_back(w);
        self(self, root, w);
        walk.pop_back();
      }
    }
  };
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    walk = {v};
    dfs(dfs, v, v);
  }

  std::vector<int> base_lt = base.empty() ? std::vector<int>(g.vertex_count(), 0) : base;
  KahanSum total;
  std::vector<int> nloc = base_lt;
  // multisets of rooted loops: nondecreasing index sequences
  auto rec = [&](auto&& self, size_t start, int budget, long double w, int mult_run,
                 size_t last) -> void {
    long double uprod = 1.0L;
    for (Vertex v = 0; v < g.vertex_count(); ++v) uprod *= u.value(nloc[v]);
    total.add(w * uprod);
    for (size_t i = start; i < loops.size(); ++i) {
      const int len = static_cast<int>(loops[i].size()) - 1;
      if (len > budget) continue;
      const int run = (i == last) ? mult_run + 1 : 1;
      long double w2 = w * (n / 2.0L) * std::pow(static_cast<long double>(beta), len) /
                       len / run;
      for (size_t j = 0; j + 1 < loops[i].size(); ++j) ++nloc[loops[i][j]];
      self(self, i, budget - len, w2, run, i);
      for (size_t j = 0; j + 1 < loops[i].size(); ++j) --nloc[loops[i][j]];
    }
  };
  rec(rec, 0, t_max, 1.0L, 0, SIZE_MAX);
  return total.value();
}

}  // namespace

TEST_CASE("partition function closed form on the single edge") {
  const Graph g = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  // (1 - beta^2)^{-N/2} with N=2, beta=1/2
  const ExactResult z = partition_function(g, u, 2.0, 0.5, 40);
  CHECK(std::fabs(static_cast<double>(z.value) - 4.0 / 3.0) < 1e-10);
  CHECK(z.value >= 1.0L);

  // beta = 0: only the empty configuration
  CHECK(static_cast<double>(partition_function(g, u, 2.0, 0.0, 10).value) == 1.0);

  // geometric partial sums at beta = 1: 1 + 1 + ... (t_max/2 + 1 shells)
  const ExactResult z1 = partition_function(g, u, 2.0, 1.0, 8);
  CHECK(static_cast<double>(z1.value) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("partition matches the rooted-loop brute force") {
  for (const Graph& g : {Graph::single_edge(), Graph::path(3), Graph::cycle(4)}) {
    for (double n : {1.5, 2.0}) {
      const WeightFunction u = WeightFunction::factorial();
      const long double oracle = brute_force_partition(g, u, n, 0.3, 8);
      const long double engine = partition_function(g, u, n, 0.3, 8).value;
      CHECK(std::fabs(static_cast<double>(engine - oracle)) < 1e-12);
    }
  }
}

TEST_CASE("truncation monotonicity in t_max") {
  const Graph g = Graph::cycle(4);
  const WeightFunction u = WeightFunction::constant();
  long double prev = 0.0L;
  for (int t = 2; t <= 12; t += 2) {
    const long double z = partition_function(g, u, 2.0, 0.2, t).value;
    CHECK(z >= prev);
    prev = z;
  }
}

TEST_CASE("Poisson oracle for class moments at U == 1") {
  const Graph se = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  const double beta = 0.5;

  // k_gamma are independent Poisson with mean N beta^alpha delta / (2J)
  const ExactResult m1 = class_moment(se, u, 2.0, beta, 40, bounce2(se), 1);
  CHECK(std::fabs(static_cast<double>(m1.value) - 0.25) < 1e-10);
  const ExactResult m2 = class_moment(se, u, 2.0, beta, 40, bounce2(se), 2);
  CHECK(std::fabs(static_cast<double>(m2.value) - 0.0625) < 1e-10);

  // all classes alpha <= 6 on single_edge and cycle(4), one enumeration pass
  for (const Graph& g : {Graph::single_edge(), Graph::cycle(4)}) {
    const double b = 0.15;
    SoupEnumerator en(g, u, 2.0, b, 16);
    KahanSum z;
    std::vector<std::array<KahanSum, 3>> mom(en.classes().size());
    en.for_each([&](const SoupEnumerator::Multiset& ms) {
      z.add(ms.weight);
      for (auto& [idx, k] : ms.counts)
        for (int a = 1; a <= 3 && a <= k; ++a)
          mom[idx][a - 1].add(ms.weight * falling_factorial(k, a));
    });
    for (size_t i = 0; i < en.classes().size(); ++i) {
      const LoopClass& c = en.classes()[i];
      if (c.alpha() > 6) continue;
      const double mean = 2.0 * std::pow(b, c.alpha()) * c.stretch() /
                          (2.0 * c.multiplicity());
      for (int a = 1; a <= 3; ++a)
        CHECK(static_cast<double>(mom[i][a - 1].value() / z.value()) ==
              doctest::Approx(std::pow(mean, a)).epsilon(1e-6));
    }
  }
}

TEST_CASE("Poisson law of k_gamma at U == 1") {
  const Graph g = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  const double beta = 0.4;
  SoupEnumerator en(g, u, 2.0, beta, 30);
  const int bi = en.bounce_index(0);
  const double mean = 2.0 * beta * beta / 2.0;
  std::map<long long, KahanSum> dist;
  KahanSum z;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    dist[SoupEnumerator::count_of(ms, bi)].add(ms.weight);
  });
  for (int j = 0; j <= 4; ++j) {
    long double expect = std::exp(-mean) * std::pow(mean, j);
    for (int i = 2; i <= j; ++i) expect /= i;
    CHECK(static_cast<double>(dist[j].value() / z.value()) ==
          doctest::Approx(static_cast<double>(expect)).epsilon(1e-7));
  }
}

TEST_CASE("moment bound mu_a <= lambda^a on small graphs") {
  const WeightFunction u = WeightFunction::constant();
  for (const Graph& g : {Graph::single_edge(), Graph::cycle(4)}) {
    for (double beta : {0.2, 1.0}) {
      if (g.edge_count() == 4 && beta == 1.0) continue;  // truncation too coarse
      SoupEnumerator en(g, u, 2.0, beta, 16);
      KahanSum z;
      std::vector<std::array<KahanSum, 3>> mom(en.classes().size());
      en.for_each([&](const SoupEnumerator::Multiset& ms) {
        z.add(ms.weight);
        for (auto& [idx, k] : ms.counts)
          for (int a = 1; a <= 3 && a <= k; ++a)
            mom[idx][a - 1].add(ms.weight * falling_factorial(k, a));
      });
      for (size_t i = 0; i < en.classes().size(); ++i) {
        const LoopClass& c = en.classes()[i];
        if (c.alpha() > 6) continue;
        // lambda = (delta/J)(N/2) max{e^{N/2}, 2e/N}^{alpha/2}; at N=2 the base is e
        const double lambda = c.stretch() / static_cast<double>(c.multiplicity()) *
                              std::pow(std::exp(1.0), c.alpha() / 2.0);
        for (int a = 1; a <= 3; ++a)
          CHECK(static_cast<double>(mom[i][a - 1].value() / z.value()) <=
                std::pow(lambda, a) * (1 + 1e-9));
      }
    }
  }
}

TEST_CASE("tail bound P(k_gamma >= a) <= lambda^a/a! for interacting weights") {
  // the tail inequality, checked on interacting weights by enumeration
  const Graph c4 = Graph::cycle(4);
  for (const WeightFunction& u :
       {WeightFunction::factorial(), WeightFunction::spin(2), WeightFunction::pairwise(0.7)}) {
    SoupEnumerator en(c4, u, 2.0, 0.4, 12);
    KahanSum z;
    std::vector<std::array<KahanSum, 4>> tails(en.classes().size());
    en.for_each([&](const SoupEnumerator::Multiset& ms) {
      z.add(ms.weight);
      for (auto& [idx, k] : ms.counts)
        for (int a = 1; a <= 4 && a <= k; ++a) tails[idx][a - 1].add(ms.weight);
    });
    for (size_t i = 0; i < en.classes().size(); ++i) {
      const LoopClass& c = en.classes()[i];
      if (c.alpha() > 4) continue;
      const double lambda = c.stretch() / static_cast<double>(c.multiplicity()) *
                            std::pow(std::exp(1.0), c.alpha() / 2.0);
      for (int a = 1; a <= 4; ++a) {
        double bound = std::pow(lambda, a);
        for (int j = 2; j <= a; ++j) bound /= j;
        CHECK(static_cast<double>(tails[i][a - 1].value() / z.value()) <=
              bound * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("density rho") {
  const Graph se = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  CHECK(std::fabs(static_cast<double>(density_rho(se, u, 2.0, 0.5, 40, 2).value) - 0.125) <
        1e-10);
  CHECK(static_cast<double>(density_rho(se, u, 2.0, 0.0, 10, 2).value) == 0.0);

  // cycle(4): four bounce classes over four vertices, Poisson means N beta^2/2
  // (infinite-sum value; the truncated engine carries a ~(2 beta)^t tail)
  const Graph c4 = Graph::cycle(4);
  const double beta = 0.2;
  CHECK(static_cast<double>(density_rho(c4, u, 2.0, beta, 16, 2).value) ==
        doctest::Approx(2.0 * beta * beta / 2.0).epsilon(1e-6));
}

TEST_CASE("upper bound of the density at every exact run") {
  const WeightFunction u = WeightFunction::constant();
  const Graph c4 = Graph::cycle(4);
  for (double beta : {0.1, 0.2, 0.3}) {
    for (int k : {2, 4}) {
      const double rho = static_cast<double>(density_rho(c4, u, 2.0, beta, 12, k).value);
      const double bound = 2.0 * std::pow(4.0 * std::exp(1.0), k / 2.0);  // Delta=2
      CHECK(rho <= bound);
    }
  }
}

TEST_CASE("two-point function") {
  const Graph se = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  CHECK(static_cast<double>(two_point(se, u, 2.0, 0.0, 10, 0, 1).value) == 0.0);

  // brute-force cross-check: numerator via rooted-loop enumeration
  for (double n : {1.5, 2.0, 3.0}) {
    const double beta = 0.3;
    const int t = 10;
    KahanSum num;
    for (const auto& walk : enumerate_walks(se, 0, 1, t - 1)) {
      std::vector<int> base(se.vertex_count(), 0);
      for (Vertex v : walk) ++base[v];
      const int len = static_cast<int>(walk.size()) - 1;
      if (t - (len + 1) < 0) continue;
      num.add(std::pow(static_cast<long double>(beta), len) *
              brute_force_partition(se, u, n, beta, t - (len + 1), base));
    }
    const long double oracle = num.value() / brute_force_partition(se, u, n, beta, t);
    const long double engine = two_point(se, u, n, beta, t, 0, 1).value;
    CHECK(std::fabs(static_cast<double>(engine - oracle)) < 1e-12);
  }

  // symmetry under walk reversal
  const Graph p3 = Graph::path(3);
  const WeightFunction uf = WeightFunction::factorial();
  CHECK(static_cast<double>(two_point(p3, uf, 2.0, 0.3, 12, 0, 2).value) ==
        doctest::Approx(static_cast<double>(two_point(p3, uf, 2.0, 0.3, 12, 2, 0).value))
            .epsilon(1e-12));
}

TEST_CASE("loop decomposition identity (length-two expansion)") {
  const Graph c4 = Graph::cycle(4);
  RootedLoop sq;
  sq.seq = {0, 1, 2, 3, 0};
  const LoopClass square = canonicalize(c4, sq);

  for (const WeightFunction& u :
       {WeightFunction::constant(), WeightFunction::factorial()}) {
    for (int a : {1, 2}) {
      const IdentityCheck c = verify_decomposition(c4, u, 2.0, 0.3, 16, square, a);
      CHECK(static_cast<double>(c.gap) <= 1e-9);
      CHECK(c.lhs > 0.0L);
    }
  }

  // k = 1 case is tautological: psi = 1 and both sides coincide by definition
  const Graph se = Graph::single_edge();
  const IdentityCheck c =
      verify_decomposition(se, WeightFunction::constant(), 2.0, 0.4, 20, bounce2(se), 1);
  CHECK(static_cast<double>(c.gap) == 0.0);
}

TEST_CASE("open-path decomposition identity") {
  const WeightFunction u1 = WeightFunction::constant();
  const WeightFunction us = WeightFunction::spin(2);

  const Graph se = Graph::single_edge();
  for (const WeightFunction& u : {u1, us}) {
    const IdentityCheck c = verify_open_decomposition(se, u, 2.0, 0.3, 14, 0, 1);
    CHECK(static_cast<double>(c.gap) <= 1e-9);
    CHECK(c.lhs > 0.0L);
  }

  const Graph p3 = Graph::path(3);
  for (const WeightFunction& u : {u1, us}) {
    const IdentityCheck c = verify_open_decomposition(p3, u, 2.0, 0.3, 14, 0, 1);
    CHECK(static_cast<double>(c.gap) <= 1e-9);
  }

  // beta = 0: both sides vanish
  const IdentityCheck c0 = verify_open_decomposition(se, u1, 2.0, 0.0, 10, 0, 1);
  CHECK(static_cast<double>(c0.lhs) == 0.0);
  CHECK(static_cast<double>(c0.rhs) == 0.0);

  // same-part endpoints are rejected
  CHECK_THROWS_AS(verify_open_decomposition(p3, u1, 2.0, 0.3, 10, 0, 2),
                  std::invalid_argument);
}

TEST_CASE("connection probability closed form") {
  const Graph se = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  // every loop on the single edge visits both vertices, so
  // P(x <-> y) = 1 - 1/Z = 1 - (1 - beta^2)^{N/2}
  for (double n : {1.0, 2.0, 3.0}) {
    const double p = static_cast<double>(
        exact_connection_probability(se, u, n, 0.5, 40, 0, 1));
    CHECK(p == doctest::Approx(1.0 - std::pow(0.75, n / 2.0)).epsilon(1e-10));
  }
}

TEST_CASE("input validation") {
  const Graph se = Graph::single_edge();
  const WeightFunction u = WeightFunction::constant();
  CHECK_THROWS_AS(partition_function(se, u, 2.0, -0.5, 10), std::invalid_argument);
  CHECK_THROWS_AS(partition_function(se, u, 2.0, 0.5, 9), std::invalid_argument);
  CHECK_THROWS_AS(two_point(se, u, 2.0, 0.5, 10, 0, 0), std::invalid_argument);
}
