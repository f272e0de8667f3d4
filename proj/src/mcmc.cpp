#include "rwls/mcmc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "rwls/numeric.hpp"

namespace rwls {

Chain::Chain(const Graph& g, const WeightFunction& u, double n, double beta,
             ChainOptions opt)
    : g_(g), u_(u), n_par_(n), beta_(beta), opt_(opt), cfg_(g_), rng_(opt.seed) {
  if (!u.positive())
    throw std::invalid_argument("mcmc: weight must be strictly positive (hard-core weights are exact-engine only)");
  if (n <= 0.0 || beta < 0.0) throw std::invalid_argument("mcmc: need N > 0, beta >= 0");
  if (opt.m_cap < 2) throw std::invalid_argument("mcmc: m_cap must be >= 2");
  if (opt.cycle_max_len >= 3) {
    cycles_ = enumerate_cycles(g, opt.cycle_max_len);
    basis_spanned_ = spans_cycle_space(g, cycles_);
  } else {
    basis_spanned_ = spans_cycle_space(g, cycles_);  // true only for forests
  }
}

std::vector<Chain::HalfLoop> Chain::half_loops(Vertex x) const {
  std::vector<HalfLoop> out;
  // visited marks per slot at x, in the canonical slot order
  std::vector<std::pair<EdgeId, int>> slots;
  for (auto [w, e] : g_.neighbors(x))
    for (int p = 0; p < cfg_.links(e); ++p) slots.emplace_back(e, p);
  std::map<std::pair<EdgeId, int>, int> slot_index;
  for (size_t i = 0; i < slots.size(); ++i) slot_index[slots[i]] = static_cast<int>(i);
  std::vector<char> used(slots.size(), 0);

  for (size_t i = 0; i < slots.size(); ++i) {
    if (used[i]) continue;
    used[i] = 1;
    LinkRef start{slots[i].first, slots[i].second};
    LinkRef cur = start;
    Vertex at = x;
    int len = 0;
    // cross the current link, then follow pairings until back at x
    for (;;) {
      at = g_.other_end(cur.e, at);
      ++len;
      if (at == x) break;
      cur = cfg_.partner_at(at, cur);
    }
    used[slot_index.at({cur.e, cur.p})] = 1;
    out.push_back({start, cur, len});
  }
  return out;
}

void Chain::ewens_repair(Vertex x) {
  ++stats_.repairs;
  auto hls = half_loops(x);
  const int n = static_cast<int>(hls.size());
  if (n == 0) return;
  auto sigma = sample_ewens(n_par_ / 2.0, n, rng_);
  std::vector<char> flip(n);
  for (int i = 0; i < n; ++i) flip[i] = unif_(rng_) < 0.5;
  // outgoing end of half-loop i paired with ingoing end of half-loop
  // sigma^{-1}(i); equivalently in(i) with out(sigma(i)).
  for (int i = 0; i < n; ++i) {
    const LinkRef in_i = flip[i] ? hls[i].a : hls[i].b;
    const int j = sigma[i];
    const LinkRef out_j = flip[j] ? hls[j].b : hls[j].a;
    cfg_.pair_at(x, in_i, out_j);
  }
  assert(cfg_.consistent());
}

long double Chain::insertion_ratio_dl(EdgeId e) const {
  const int m = cfg_.links(e);
  const Vertex u = g_.edge(e).u, v = g_.edge(e).v;
  return static_cast<long double>(n_par_) * beta_ * beta_ /
         (static_cast<long double>(m + 1) * (m + 2)) *
         u_.ratio(cfg_.pairing_count(u) + 1) * u_.ratio(cfg_.pairing_count(v) + 1);
}

bool Chain::double_link_move(EdgeId e) {
  ++stats_.dl_proposed;
  const Vertex u = g_.edge(e).u, v = g_.edge(e).v;
  const bool insert = unif_(rng_) < 0.5;
  if (insert) {
    const int m = cfg_.links(e);
    if (m + 2 > opt_.m_cap) {
      ++stats_.dl_cap_rejected;
      return false;
    }
    const long double r = insertion_ratio_dl(e);
    if (unif_(rng_) >= r) return false;
    cfg_.push_link(e);
    cfg_.push_link(e);
    cfg_.pair_at(u, {e, m}, {e, m + 1});
    cfg_.pair_at(v, {e, m}, {e, m + 1});
    ++stats_.dl_accepted;
    assert(cfg_.consistent());
    return true;
  }
  const int m = cfg_.links(e);
  if (m < 2) return false;
  const LinkRef top{e, m - 1}, below{e, m - 2};
  if (!(cfg_.partner_at(u, top) == below) || !(cfg_.partner_at(v, top) == below))
    return false;  // top two links are not a mutual pair
  cfg_.pop_link(e);
  cfg_.pop_link(e);
  const long double rins = insertion_ratio_dl(e);  // inverse move's ratio
  const long double acc = rins >= 1.0L ? 1.0L / rins : 1.0L;
  if (unif_(rng_) >= acc) {
    cfg_.push_link(e);
    cfg_.push_link(e);
    cfg_.pair_at(u, {e, m - 2}, {e, m - 1});
    cfg_.pair_at(v, {e, m - 2}, {e, m - 1});
    return false;
  }
  ++stats_.dl_accepted;
  assert(cfg_.consistent());
  return true;
}

long double Chain::insertion_ratio_cycle(const Cycle& c) const {
  long double r = n_par_;
  for (EdgeId e : c.edges) r *= beta_ / (cfg_.links(e) + 1);
  for (Vertex x : c.vertices) r *= u_.ratio(cfg_.pairing_count(x) + 1);
  return r;
}

bool Chain::cycle_move(const Cycle& c) {
  ++stats_.cycle_proposed;
  const int len = c.length();
  const bool insert = unif_(rng_) < 0.5;
  if (insert) {
    for (EdgeId e : c.edges)
      if (cfg_.links(e) + 1 > opt_.m_cap) {
        ++stats_.cycle_cap_rejected;
        return false;
      }
    const long double r = insertion_ratio_cycle(c);
    if (unif_(rng_) >= r) return false;
    for (EdgeId e : c.edges) cfg_.push_link(e);
    for (int i = 0; i < len; ++i) {
      const EdgeId in_e = c.edges[(i + len - 1) % len], out_e = c.edges[i];
      cfg_.pair_at(c.vertices[i], {in_e, cfg_.links(in_e) - 1},
                   {out_e, cfg_.links(out_e) - 1});
    }
    ++stats_.cycle_accepted;
    assert(cfg_.consistent());
    return true;
  }
  // deletion: top links along c must be paired in exactly the insertion pattern
  for (EdgeId e : c.edges)
    if (cfg_.links(e) < 1) return false;
  for (int i = 0; i < len; ++i) {
    const EdgeId in_e = c.edges[(i + len - 1) % len], out_e = c.edges[i];
    const LinkRef in_top{in_e, cfg_.links(in_e) - 1}, out_top{out_e, cfg_.links(out_e) - 1};
    if (!(cfg_.partner_at(c.vertices[i], in_top) == out_top)) return false;
  }
  for (EdgeId e : c.edges) cfg_.pop_link(e);
  const long double rins = insertion_ratio_cycle(c);
  const long double acc = rins >= 1.0L ? 1.0L / rins : 1.0L;
  if (unif_(rng_) >= acc) {
    for (EdgeId e : c.edges) cfg_.push_link(e);
    for (int i = 0; i < len; ++i) {
      const EdgeId in_e = c.edges[(i + len - 1) % len], out_e = c.edges[i];
      cfg_.pair_at(c.vertices[i], {in_e, cfg_.links(in_e) - 1},
                   {out_e, cfg_.links(out_e) - 1});
    }
    return false;
  }
  ++stats_.cycle_accepted;
  return true;
}

void Chain::sweep() {
  for (Vertex x = 0; x < g_.vertex_count(); ++x) ewens_repair(x);
  for (EdgeId e = 0; e < g_.edge_count(); ++e) double_link_move(e);
  for (const Cycle& c : cycles_.cycles) cycle_move(c);
  ++step_;
  assert(cfg_.consistent());
}

nlohmann::json Chain::checkpoint() const {
  nlohmann::json j;
  j["config"] = cfg_.snapshot();
  std::ostringstream os;
  os << rng_;
  j["rng"] = os.str();
  j["step"] = step_;
  j["stats"] = {{"repairs", stats_.repairs},
                {"dl_proposed", stats_.dl_proposed},
                {"dl_accepted", stats_.dl_accepted},
                {"dl_cap_rejected", stats_.dl_cap_rejected},
                {"cycle_proposed", stats_.cycle_proposed},
                {"cycle_accepted", stats_.cycle_accepted},
                {"cycle_cap_rejected", stats_.cycle_cap_rejected}};
  return j;
}

void Chain::restore(const nlohmann::json& j) {
  cfg_ = RpmConfig::restore(g_, j.at("config"));
  std::istringstream is(j.at("rng").get<std::string>());
  is >> rng_;
  step_ = j.at("step").get<long long>();
  const auto& s = j.at("stats");
  stats_.repairs = s.at("repairs").get<long long>();
  stats_.dl_proposed = s.at("dl_proposed").get<long long>();
  stats_.dl_accepted = s.at("dl_accepted").get<long long>();
  stats_.dl_cap_rejected = s.at("dl_cap_rejected").get<long long>();
  stats_.cycle_proposed = s.at("cycle_proposed").get<long long>();
  stats_.cycle_accepted = s.at("cycle_accepted").get<long long>();
  stats_.cycle_cap_rejected = s.at("cycle_cap_rejected").get<long long>();
}

// ---------------------------------------------------------------------------
// exact kernel validation on tiny spaces

namespace {

using Kernel = std::vector<std::vector<long double>>;

std::string state_key(const RpmConfig& w) {
  std::ostringstream os;
  const Graph& g = w.graph();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    os << w.links(e) << ";";
    for (int side = 0; side < 2; ++side) {
      const Vertex x = side == 0 ? g.edge(e).u : g.edge(e).v;
      for (int p = 0; p < w.links(e); ++p) {
        LinkRef q = w.partner_at(x, {e, p});
        os << q.e << "," << q.p << "|";
      }
    }
  }
  return os.str();
}

struct StateSpace {
  std::vector<RpmConfig> states;
  std::map<std::string, int> index;

  int find(const RpmConfig& w) const {
    auto it = index.find(state_key(w));
    return it == index.end() ? -1 : it->second;
  }
};

StateSpace enumerate_states(const Graph& g, int m_cap, int max_states) {
  StateSpace sp;
  std::vector<int> m(g.edge_count(), 0);

  auto all_pairings = [&](auto&& self, RpmConfig& cfg,
                          std::vector<std::vector<std::pair<EdgeId, int>>>& slots,
                          std::vector<std::vector<int>>& pair_of, Vertex x) -> void {
    if (x == g.vertex_count()) {
      for (Vertex v = 0; v < g.vertex_count(); ++v)
        for (size_t i = 0; i < slots[v].size(); ++i) {
          const int j = pair_of[v][i];
          if (j >= 0 && static_cast<int>(i) < j)
            cfg.pair_at(v, {slots[v][i].first, slots[v][i].second},
                        {slots[v][j].first, slots[v][j].second});
        }
      if (static_cast<int>(sp.states.size()) >= max_states)
        throw std::runtime_error("validate_stationarity: state space too large");
      sp.index[state_key(cfg)] = static_cast<int>(sp.states.size());
      sp.states.push_back(cfg);
      return;
    }
    // matchings of the slots at x
    auto match = [&](auto&& mself, int) -> void {
      int first = -1;
      for (size_t i = 0; i < slots[x].size(); ++i)
        if (pair_of[x][i] < 0) {
          first = static_cast<int>(i);
          break;
        }
      if (first < 0) {
        self(self, cfg, slots, pair_of, x + 1);
        return;
      }
      for (size_t j = first + 1; j < slots[x].size(); ++j) {
        if (pair_of[x][j] >= 0) continue;
        pair_of[x][first] = static_cast<int>(j);
        pair_of[x][j] = first;
        mself(mself, 0);
        pair_of[x][first] = -1;
        pair_of[x][j] = -1;
      }
    };
    match(match, 0);
  };

  auto process_m = [&]() {
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      int t = 0;
      for (auto [w, e] : g.neighbors(x)) t += m[e];
      if (t % 2) return;
    }
    RpmConfig cfg(g);
    std::vector<std::vector<std::pair<EdgeId, int>>> slots(g.vertex_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      for (int p = 0; p < m[e]; ++p) {
        cfg.push_link(e);
        slots[g.edge(e).u].emplace_back(e, p);
        slots[g.edge(e).v].emplace_back(e, p);
      }
    std::vector<std::vector<int>> pair_of(g.vertex_count());
    for (Vertex x = 0; x < g.vertex_count(); ++x) pair_of[x].assign(slots[x].size(), -1);
    all_pairings(all_pairings, cfg, slots, pair_of, 0);
  };

  auto enum_m = [&](auto&& self, EdgeId e) -> void {
    if (e == g.edge_count()) {
      process_m();
      return;
    }
    for (int v = 0; v <= m_cap; ++v) {
      m[e] = v;
      self(self, e + 1);
    }
    m[e] = 0;
  };
  enum_m(enum_m, 0);
  return sp;
}

Kernel identity_kernel(int n) {
  Kernel k(n, std::vector<long double>(n, 0.0L));
  for (int i = 0; i < n; ++i) k[i][i] = 1.0L;
  return k;
}

Kernel multiply(const Kernel& a, const Kernel& b) {
  const int n = static_cast<int>(a.size());
  Kernel c(n, std::vector<long double>(n, 0.0L));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      if (a[i][k] == 0.0L) continue;
      for (int j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

}  // namespace

StationarityReport validate_stationarity(const Graph& g, const WeightFunction& u, double n,
                                         double beta, int m_cap, int cycle_max_len,
                                         int max_states) {
  StateSpace sp = enumerate_states(g, m_cap, max_states);
  const int ns = static_cast<int>(sp.states.size());

  std::vector<long double> mu(ns);
  long double mu_total = 0.0L;
  for (int s = 0; s < ns; ++s) {
    mu[s] = rpm_weight(sp.states[s], u, n, beta);
    mu_total += mu[s];
  }
  for (auto& v : mu) v /= mu_total;

  CycleList cycles;
  if (cycle_max_len >= 3) cycles = enumerate_cycles(g, cycle_max_len);

  std::vector<Kernel> kernels;

  // Ewens repair at x: heat bath over all pairings at x, law N^{#cycles}.
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    Kernel k(ns, std::vector<long double>(ns, 0.0L));
    for (int s = 0; s < ns; ++s) {
      RpmConfig cfg = sp.states[s];
      std::vector<std::pair<EdgeId, int>> slots;
      for (auto [w, e] : g.neighbors(x))
        for (int p = 0; p < cfg.links(e); ++p) slots.emplace_back(e, p);
      if (slots.empty()) {
        k[s][s] = 1.0L;
        continue;
      }
      std::vector<int> pair_of(slots.size(), -1);
      std::vector<std::pair<int, long double>> targets;  // (state, N^cycles)
      long double norm = 0.0L;
      auto match = [&](auto&& self) -> void {
        int first = -1;
        for (size_t i = 0; i < slots.size(); ++i)
          if (pair_of[i] < 0) {
            first = static_cast<int>(i);
            break;
          }
        if (first < 0) {
          for (size_t i = 0; i < slots.size(); ++i) {
            const int j = pair_of[i];
            if (j >= 0 && static_cast<int>(i) < j)
              cfg.pair_at(x, {slots[i].first, slots[i].second},
                          {slots[j].first, slots[j].second});
          }
          const long double w =
              std::pow(static_cast<long double>(n),
                       static_cast<long double>(extract_cycles(cfg).size()));
          targets.emplace_back(sp.find(cfg), w);
          norm += w;
          return;
        }
        for (size_t j = first + 1; j < slots.size(); ++j) {
          if (pair_of[j] >= 0) continue;
          pair_of[first] = static_cast<int>(j);
          pair_of[j] = first;
          self(self);
          pair_of[first] = -1;
          pair_of[j] = -1;
        }
      };
      match(match);
      for (auto& [t, w] : targets) k[s][t] += w / norm;
    }
    kernels.push_back(std::move(k));
  }

  // Double-link kernels: coin flip between insertion and deletion.
  auto dl_ratio = [&](const RpmConfig& cfg, EdgeId e) {
    const Vertex a = g.edge(e).u, b = g.edge(e).v;
    return static_cast<long double>(n) * beta * beta /
           (static_cast<long double>(cfg.links(e) + 1) * (cfg.links(e) + 2)) *
           u.ratio(cfg.pairing_count(a) + 1) * u.ratio(cfg.pairing_count(b) + 1);
  };
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    Kernel k(ns, std::vector<long double>(ns, 0.0L));
    const Vertex a = g.edge(e).u, b = g.edge(e).v;
    for (int s = 0; s < ns; ++s) {
      const RpmConfig& w0 = sp.states[s];
      long double stay = 0.0L;
      // insertion branch
      if (w0.links(e) + 2 <= m_cap) {
        const long double r = std::min(1.0L, dl_ratio(w0, e));
        if (r > 0.0L) {
          RpmConfig w1 = w0;
          const int m = w1.links(e);
          w1.push_link(e);
          w1.push_link(e);
          w1.pair_at(a, {e, m}, {e, m + 1});
          w1.pair_at(b, {e, m}, {e, m + 1});
          k[s][sp.find(w1)] += 0.5L * r;
        }
        stay += 0.5L * (1.0L - r);
      } else {
        stay += 0.5L;
      }
      // deletion branch
      const int m = w0.links(e);
      bool can_delete = m >= 2;
      if (can_delete) {
        const LinkRef top{e, m - 1}, below{e, m - 2};
        can_delete = w0.partner_at(a, top) == below && w0.partner_at(b, top) == below;
      }
      if (can_delete) {
        RpmConfig w1 = w0;
        w1.pop_link(e);
        w1.pop_link(e);
        const long double rins = dl_ratio(w1, e);
        const long double r = rins >= 1.0L ? 1.0L / rins : 1.0L;
        k[s][sp.find(w1)] += 0.5L * r;
        stay += 0.5L * (1.0L - r);
      } else {
        stay += 0.5L;
      }
      k[s][s] += stay;
    }
    kernels.push_back(std::move(k));
  }

  // Cycle kernels.
  auto cycle_ratio = [&](const RpmConfig& cfg, const Cycle& c) {
    long double r = n;
    for (EdgeId e : c.edges) r *= beta / (cfg.links(e) + 1);
    for (Vertex x : c.vertices) r *= u.ratio(cfg.pairing_count(x) + 1);
    return r;
  };
  for (const Cycle& c : cycles.cycles) {
    Kernel k(ns, std::vector<long double>(ns, 0.0L));
    const int len = c.length();
    for (int s = 0; s < ns; ++s) {
      const RpmConfig& w0 = sp.states[s];
      long double stay = 0.0L;
      bool cap_ok = true;
      for (EdgeId e : c.edges) cap_ok &= w0.links(e) + 1 <= m_cap;
      if (cap_ok) {
        const long double r = std::min(1.0L, cycle_ratio(w0, c));
        if (r > 0.0L) {
          RpmConfig w1 = w0;
          for (EdgeId e : c.edges) w1.push_link(e);
          for (int i = 0; i < len; ++i) {
            const EdgeId in_e = c.edges[(i + len - 1) % len], out_e = c.edges[i];
            w1.pair_at(c.vertices[i], {in_e, w1.links(in_e) - 1},
                       {out_e, w1.links(out_e) - 1});
          }
          k[s][sp.find(w1)] += 0.5L * r;
        }
        stay += 0.5L * (1.0L - r);
      } else {
        stay += 0.5L;
      }
      bool can_delete = true;
      for (EdgeId e : c.edges) can_delete &= w0.links(e) >= 1;
      if (can_delete)
        for (int i = 0; i < len && can_delete; ++i) {
          const EdgeId in_e = c.edges[(i + len - 1) % len], out_e = c.edges[i];
          can_delete = w0.partner_at(c.vertices[i], {in_e, w0.links(in_e) - 1}) ==
                       LinkRef{out_e, w0.links(out_e) - 1};
        }
      if (can_delete) {
        RpmConfig w1 = w0;
        for (EdgeId e : c.edges) w1.pop_link(e);
        const long double rins = cycle_ratio(w1, c);
        const long double r = rins >= 1.0L ? 1.0L / rins : 1.0L;
        k[s][sp.find(w1)] += 0.5L * r;
        stay += 0.5L * (1.0L - r);
      } else {
        stay += 0.5L;
      }
      k[s][s] += stay;
    }
    kernels.push_back(std::move(k));
  }

  StationarityReport rep;
  rep.n_states = ns;

  rep.positive_diagonals = true;
  for (const Kernel& k : kernels)
    for (int s = 0; s < ns; ++s)
      if (k[s][s] <= 0.0L) rep.positive_diagonals = false;

  Kernel sweep = identity_kernel(ns);
  for (const Kernel& k : kernels) sweep = multiply(sweep, k);

  for (int j = 0; j < ns; ++j) {
    KahanSum col;
    for (int i = 0; i < ns; ++i) col.add(mu[i] * sweep[i][j]);
    rep.max_deviation = std::max(rep.max_deviation, std::fabs(col.value() - mu[j]));
  }

  // reachability over the union of single-move transitions, both directions
  std::vector<std::vector<char>> adj(ns, std::vector<char>(ns, 0));
  for (const Kernel& k : kernels)
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < ns; ++j)
        if (i != j && k[i][j] > 0.0L) adj[i][j] = 1;
  auto reaches_all = [&](bool forward) {
    std::vector<char> seen(ns, 0);
    std::deque<int> q{0};
    seen[0] = 1;
    int cnt = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int w = 0; w < ns; ++w)
        if (!seen[w] && (forward ? adj[v][w] : adj[w][v])) {
          seen[w] = 1;
          ++cnt;
          q.push_back(w);
        }
    }
    return cnt == ns;
  };
  rep.irreducible = reaches_all(true) && reaches_all(false) && rep.positive_diagonals;
  return rep;
}

}  // namespace rwls
