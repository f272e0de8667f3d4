#include "rwls/rwls_exact.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "rwls/numeric.hpp"

namespace rwls {

SoupEnumerator::SoupEnumerator(const Graph& g, const WeightFunction& u, double n,
                               double beta, int t_max, std::vector<int> base_local_time)
    : g_(g), u_(u), n_par_(n), beta_(beta), t_max_(t_max), base_(std::move(base_local_time)) {
  if (beta < 0.0) throw std::invalid_argument("soup: beta must be >= 0");
  if (t_max < 0) throw std::invalid_argument("soup: t_max must be >= 0");
  if (base_.empty()) base_.assign(g.vertex_count(), 0);
  if (static_cast<int>(base_.size()) != g.vertex_count())
    throw std::invalid_argument("soup: base local time size mismatch");
  if (t_max >= 2) classes_ = enumerate_classes(g, t_max);
  class_weight_.reserve(classes_.size());
  for (const LoopClass& c : classes_)
    class_weight_.push_back(static_cast<long double>(n) *
                            std::pow(static_cast<long double>(beta), c.alpha()) *
                            c.stretch() / (2.0L * c.multiplicity()));
  bounce_idx_.assign(g.edge_count(), -1);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (t_max < 2) continue;
    LoopClass b = bounce_class(g, e);
    for (size_t i = 0; i < classes_.size(); ++i)
      if (classes_[i] == b) {
        bounce_idx_[e] = static_cast<int>(i);
        break;
      }
  }
}

int SoupEnumerator::class_index(const LoopClass& c) const {
  for (size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == c) return static_cast<int>(i);
  return -1;
}

int SoupEnumerator::bounce_index(EdgeId e) const { return bounce_idx_[e]; }

long long SoupEnumerator::count_of(const Multiset& ms, int class_idx) {
  for (auto& [idx, k] : ms.counts)
    if (idx == class_idx) return k;
  return 0;
}

void SoupEnumerator::for_each(const Visitor& visit) const {
  const int nv = g_.vertex_count();
  std::vector<int> nloc = base_;
  std::vector<Vertex> active;
  for (Vertex v = 0; v < nv; ++v)
    if (nloc[v] > 0) active.push_back(v);

  // U(0)^j lookup for the untouched vertices
  std::vector<long double> u0pow(nv + 1, 1.0L);
  const long double u0 = u_.value(0);
  for (int j = 1; j <= nv; ++j) u0pow[j] = u0pow[j - 1] * u0;

  std::vector<std::pair<int, int>> stack;
  long double comb = 1.0L;
  int total_len = 0;

  auto u_product = [&]() {
    long double p = u0pow[nv - active.size()];
    for (Vertex v : active) p *= u_.value(nloc[v]);
    return p;
  };

  auto rec = [&](auto&& self, int start, int budget) -> void {
    visit(Multiset{std::span(stack), total_len, comb * u_product(), std::span(nloc)});
    for (int i = start; i < static_cast<int>(classes_.size()); ++i) {
      const LoopClass& c = classes_[i];
      if (c.alpha() > budget) break;  // sorted by alpha
      const bool fresh = stack.empty() || stack.back().first != i;
      if (fresh)
        stack.emplace_back(i, 1);
      else
        ++stack.back().second;
      const long double saved_comb = comb;
      comb *= class_weight_[i] / stack.back().second;  // builds 1/k! incrementally
      const size_t saved_active = active.size();
      for (auto [v, cnt] : c.visits()) {
        if (nloc[v] == 0) active.push_back(v);
        nloc[v] += cnt;
      }
      total_len += c.alpha();
      self(self, i, budget - c.alpha());
      total_len -= c.alpha();
      for (auto [v, cnt] : c.visits()) nloc[v] -= cnt;
      active.resize(saved_active);
      comb = saved_comb;
      if (fresh)
        stack.pop_back();
      else
        --stack.back().second;
    }
  };
  rec(rec, 0, t_max_);
}

namespace {

void require_even_t(int t_max) {
  if (t_max % 2 != 0) throw std::invalid_argument("t_max must be even");
}

}  // namespace

ExactResult partition_function(const Graph& g, const WeightFunction& u, double n,
                               double beta, int t_max) {
  require_even_t(t_max);
  SoupEnumerator en(g, u, n, beta, t_max);
  KahanSum z, tail;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    if (ms.total_length > t_max - 2) tail.add(std::fabs(ms.weight));
  });
  return {z.value(), t_max, tail.value()};
}

ExactResult class_moment(const Graph& g, const WeightFunction& u, double n, double beta,
                         int t_max, const LoopClass& gamma, int a) {
  require_even_t(t_max);
  if (a < 1) throw std::invalid_argument("class_moment: a must be >= 1");
  SoupEnumerator en(g, u, n, beta, t_max);
  const int gi = en.class_index(gamma);
  KahanSum z, num;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    if (gi >= 0) {
      long long k = SoupEnumerator::count_of(ms, gi);
      if (k >= a) num.add(ms.weight * falling_factorial(k, a));
    }
  });
  return {num.value() / z.value(), t_max, 0.0L};
}

ExactResult density_rho(const Graph& g, const WeightFunction& u, double n, double beta,
                        int t_max, int k) {
  require_even_t(t_max);
  if (k < 2) throw std::invalid_argument("density_rho: k must be >= 2");
  SoupEnumerator en(g, u, n, beta, t_max);
  KahanSum z, num;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    long long loops_k = 0;
    for (auto& [idx, cnt] : ms.counts)
      if (en.classes()[idx].alpha() == k) loops_k += cnt;
    if (loops_k) num.add(ms.weight * loops_k);
  });
  return {num.value() / z.value() / g.vertex_count(), t_max, 0.0L};
}

std::vector<std::vector<Vertex>> enumerate_walks(const Graph& g, Vertex x, Vertex y,
                                                 int max_len) {
  std::vector<std::vector<Vertex>> out;
  std::vector<Vertex> walk{x};
  auto dfs = [&](auto&& self, Vertex cur) -> void {
    if (cur == y && walk.size() >= 2) out.push_back(walk);
    if (static_cast<int>(walk.size()) - 1 >= max_len) return;
    for (auto [w, id] : g.neighbors(cur)) {
      walk.push_back(w);
      self(self, w);
      walk.pop_back();
    }
  };
  if (max_len >= 1) dfs(dfs, x);
  return out;
}

namespace {

// Sum of nu-tilde over multisets at the given budget with local times
// shifted by the walk's visit counts.
long double walk_soup_sum(const Graph& g, const WeightFunction& u, double n, double beta,
                          int budget, const std::vector<Vertex>& walk) {
  std::vector<int> base(g.vertex_count(), 0);
  for (Vertex v : walk) ++base[v];
  SoupEnumerator en(g, u, n, beta, budget, std::move(base));
  KahanSum s;
  en.for_each([&](const SoupEnumerator::Multiset& ms) { s.add(ms.weight); });
  return s.value();
}

}  // namespace

ExactResult two_point(const Graph& g, const WeightFunction& u, double n, double beta,
                      int t_max, Vertex x, Vertex y) {
  require_even_t(t_max);
  if (x == y) throw std::invalid_argument("two_point: x != y required");
  if (beta == 0.0) return {0.0L, t_max, 0.0L};
  KahanSum num;
  for (const auto& walk : enumerate_walks(g, x, y, t_max - 1)) {
    const int len = static_cast<int>(walk.size()) - 1;
    const int budget = t_max - (len + 1);
    if (budget < 0) continue;
    num.add(std::pow(static_cast<long double>(beta), len) *
            walk_soup_sum(g, u, n, beta, budget, walk));
  }
  const long double z = partition_function(g, u, n, beta, t_max).value;
  return {num.value() / z, t_max, 0.0L};
}

IdentityCheck verify_decomposition(const Graph& g, const WeightFunction& u, double n,
                                   double beta, int t_max, const LoopClass& gamma, int a) {
  require_even_t(t_max);
  if (a < 1) throw std::invalid_argument("verify_decomposition: a must be >= 1");
  if (gamma.alpha() % 2 != 0)
    throw std::invalid_argument("verify_decomposition: gamma must have even length");
  const int k = gamma.alpha() / 2;

  SoupEnumerator en(g, u, n, beta, t_max);
  const int gi = en.class_index(gamma);
  std::vector<std::pair<int, int>> orders;  // (bounce class index, a*q_e)
  for (auto& [e, q] : gamma.even_steps())
    if (q > 0) orders.emplace_back(en.bounce_index(e), a * q);

  KahanSum z, lhs_num, rhs_num;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    if (gi >= 0) {
      long long kc = SoupEnumerator::count_of(ms, gi);
      if (kc >= a) lhs_num.add(ms.weight * falling_factorial(kc, a));
    }
    long double prod = 1.0L;
    for (auto& [bi, ord] : orders) {
      long long ke = SoupEnumerator::count_of(ms, bi);
      if (ke < ord) {
        prod = 0.0L;
        break;
      }
      prod *= falling_factorial(ke, ord);
    }
    if (prod != 0.0L) rhs_num.add(ms.weight * prod);
  });

  const long double psi = static_cast<long double>(gamma.stretch()) / gamma.multiplicity() *
                          std::pow(2.0L / n, k - 1);
  IdentityCheck out;
  out.lhs = lhs_num.value() / z.value();
  out.rhs = std::pow(psi, a) * rhs_num.value() / z.value();
  out.gap = std::fabs(out.lhs - out.rhs);
  return out;
}

IdentityCheck verify_open_decomposition(const Graph& g, const WeightFunction& u, double n,
                                        double beta, int t_max, Vertex x, Vertex y) {
  require_even_t(t_max);
  if (!g.bipartite()) throw std::invalid_argument("open decomposition: graph must be bipartite");
  if (g.part_of(x) == g.part_of(y))
    throw std::invalid_argument("open decomposition: x and y must lie in different parts");
  if (beta == 0.0) return {0.0L, 0.0L, 0.0L};

  const auto walks = enumerate_walks(g, x, y, t_max - 1);

  // lhs: Z(x,y)/Z at the shared total-local-time budget
  KahanSum lhs_num;
  for (const auto& walk : walks) {
    const int len = static_cast<int>(walk.size()) - 1;
    const int budget = t_max - (len + 1);
    if (budget < 0) continue;
    lhs_num.add(std::pow(static_cast<long double>(beta), len) *
                walk_soup_sum(g, u, n, beta, budget, walk));
  }

  // rhs: per-walk falling-factorial expectations at the full budget. The
  // walk's odd steps are the pairs {walk[2i], walk[2i+1]}.
  std::vector<std::vector<std::pair<int, int>>> orders(walks.size());
  SoupEnumerator en(g, u, n, beta, t_max);
  for (size_t wi = 0; wi < walks.size(); ++wi) {
    std::map<int, int> q;
    const auto& walk = walks[wi];
    for (size_t i = 0; 2 * i + 1 < walk.size(); ++i)
      ++q[en.bounce_index(g.edge_between(walk[2 * i], walk[2 * i + 1]))];
    orders[wi].assign(q.begin(), q.end());
  }
  KahanSum z;
  std::vector<KahanSum> walk_sums(walks.size());
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    for (size_t wi = 0; wi < walks.size(); ++wi) {
      long double prod = 1.0L;
      for (auto& [bi, ord] : orders[wi]) {
        long long ke = SoupEnumerator::count_of(ms, bi);
        if (ke < ord) {
          prod = 0.0L;
          break;
        }
        prod *= falling_factorial(ke, ord);
      }
      if (prod != 0.0L) walk_sums[wi].add(ms.weight * prod);
    }
  });
  KahanSum rhs_num;
  for (size_t wi = 0; wi < walks.size(); ++wi) {
    const int len = static_cast<int>(walks[wi].size()) - 1;
    rhs_num.add(std::pow(2.0L / n, (len + 1) / 2) * walk_sums[wi].value());
  }

  IdentityCheck out;
  out.lhs = lhs_num.value() / z.value();
  out.rhs = rhs_num.value() / z.value() / beta;
  out.gap = std::fabs(out.lhs - out.rhs);
  return out;
}

long double exact_connection_probability(const Graph& g, const WeightFunction& u, double n,
                                         double beta, int t_max, Vertex x, Vertex y) {
  SoupEnumerator en(g, u, n, beta, t_max);
  std::vector<char> connects(en.classes().size(), 0);
  for (size_t i = 0; i < en.classes().size(); ++i)
    connects[i] = en.classes()[i].n_at(x) > 0 && en.classes()[i].n_at(y) > 0;
  KahanSum z, num;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    for (auto& [idx, cnt] : ms.counts)
      if (connects[idx]) {
        num.add(ms.weight);
        break;
      }
  });
  return num.value() / z.value();
}

long double exact_local_time_moment(const Graph& g, const WeightFunction& u, double n,
                                    double beta, int t_max, Vertex o, int m) {
  SoupEnumerator en(g, u, n, beta, t_max);
  KahanSum z, num;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    if (ms.local_time[o] > 0)
      num.add(ms.weight * std::pow(static_cast<long double>(ms.local_time[o]), m));
  });
  return num.value() / z.value();
}

long double exact_spin_middle(const Graph& g, const WeightFunction& u, double n,
                              double beta, int t_max, Vertex x, Vertex y) {
  SoupEnumerator en(g, u, n, beta, t_max);
  std::vector<long long> nxny(en.classes().size());
  for (size_t i = 0; i < en.classes().size(); ++i)
    nxny[i] = static_cast<long long>(en.classes()[i].n_at(x)) * en.classes()[i].n_at(y);
  KahanSum z, num;
  const long double half_n = 0.5L * n;
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    long long s = 0;
    for (auto& [idx, cnt] : ms.counts) s += cnt * nxny[idx];
    if (s)
      num.add(ms.weight * s /
              ((ms.local_time[x] + half_n) * (ms.local_time[y] + half_n)));
  });
  return num.value() / z.value() / (2.0L * n);
}

}  // namespace rwls
