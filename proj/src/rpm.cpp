#include "rwls/rpm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rwls/numeric.hpp"
#include "rwls/rwls_exact.hpp"

namespace rwls {

RpmConfig::RpmConfig(const Graph& g) : g_(&g), partner_(g.edge_count()) {}

std::vector<int> RpmConfig::link_counts() const {
  std::vector<int> m(g_->edge_count());
  for (EdgeId e = 0; e < g_->edge_count(); ++e) m[e] = links(e);
  return m;
}

int RpmConfig::total_links() const {
  int t = 0;
  for (EdgeId e = 0; e < g_->edge_count(); ++e) t += links(e);
  return t;
}

int RpmConfig::pairing_count(Vertex x) const {
  int t = 0;
  for (auto [w, e] : g_->neighbors(x)) t += links(e);
  return t / 2;
}

void RpmConfig::pair_at(Vertex x, LinkRef a, LinkRef b) {
  partner_[a.e][side_of(a.e, x)][a.p] = b;
  partner_[b.e][side_of(b.e, x)][b.p] = a;
}

void RpmConfig::push_link(EdgeId e) {
  partner_[e][0].push_back({});
  partner_[e][1].push_back({});
}

void RpmConfig::pop_link(EdgeId e) {
  partner_[e][0].pop_back();
  partner_[e][1].pop_back();
}

bool RpmConfig::consistent() const {
  for (EdgeId e = 0; e < g_->edge_count(); ++e) {
    for (int side = 0; side < 2; ++side) {
      const Vertex x = side == 0 ? g_->edge(e).u : g_->edge(e).v;
      for (int p = 0; p < links(e); ++p) {
        LinkRef q = partner_[e][side][p];
        if (!q.valid() || q.e >= g_->edge_count() || q.p >= links(q.e)) return false;
        const Edge& qe = g_->edge(q.e);
        if (qe.u != x && qe.v != x) return false;
        if (!(partner_[q.e][side_of(q.e, x)][q.p] == LinkRef{e, p})) return false;
        if (q.e == e && q.p == p) return false;  // no self-pairing
      }
    }
  }
  return true;
}

nlohmann::json RpmConfig::snapshot() const {
  nlohmann::json j;
  j["m"] = link_counts();
  nlohmann::json pairings = nlohmann::json::array();
  for (Vertex x = 0; x < g_->vertex_count(); ++x) {
    nlohmann::json at_x = nlohmann::json::array();
    for (auto [w, e] : g_->neighbors(x)) {
      const int side = side_of(e, x);
      for (int p = 0; p < links(e); ++p) {
        LinkRef q = partner_[e][side][p];
        // emit each pair once, from its smaller endpoint
        if (std::pair(e, p) < std::pair(q.e, q.p))
          at_x.push_back({{e, p}, {q.e, q.p}});
      }
    }
    pairings.push_back(at_x);
  }
  j["pairings"] = pairings;
  return j;
}

RpmConfig RpmConfig::restore(const Graph& g, const nlohmann::json& j) {
  RpmConfig w(g);
  const auto m = j.at("m").get<std::vector<int>>();
  if (static_cast<int>(m.size()) != g.edge_count())
    throw std::invalid_argument("rpm snapshot: bad edge count");
  for (EdgeId e = 0; e < g.edge_count(); ++e)
    for (int p = 0; p < m[e]; ++p) w.push_link(e);
  const auto& pairings = j.at("pairings");
  if (static_cast<int>(pairings.size()) != g.vertex_count())
    throw std::invalid_argument("rpm snapshot: bad vertex count");
  for (Vertex x = 0; x < g.vertex_count(); ++x)
    for (const auto& pr : pairings[x]) {
      LinkRef a{pr[0][0].get<int>(), pr[0][1].get<int>()};
      LinkRef b{pr[1][0].get<int>(), pr[1][1].get<int>()};
      w.pair_at(x, a, b);
    }
  if (!w.consistent()) throw std::invalid_argument("rpm snapshot: inconsistent pairing");
  return w;
}

std::vector<CycleRecord> extract_cycles(const RpmConfig& w) {
  const Graph& g = w.graph();
  std::vector<std::vector<char>> seen(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) seen[e].assign(w.links(e), 0);

  std::vector<CycleRecord> out;
  for (EdgeId e0 = 0; e0 < g.edge_count(); ++e0)
    for (int p0 = 0; p0 < w.links(e0); ++p0) {
      if (seen[e0][p0]) continue;
      CycleRecord rec;
      Vertex x = g.edge(e0).u;  // root at the u-endpoint of the start link
      LinkRef cur{e0, p0};
      do {
        seen[cur.e][cur.p] = 1;
        rec.vertices.push_back(x);
        rec.links.push_back(cur);
        x = g.other_end(cur.e, x);    // cross the link
        cur = w.partner_at(x, cur);   // continue along the pairing at x
      } while (!(cur == LinkRef{e0, p0}));
      out.push_back(std::move(rec));
    }
  return out;
}

LoopClass project_cycle(const Graph& g, const CycleRecord& c) {
  RootedLoop l;
  l.seq = c.vertices;
  l.seq.push_back(c.vertices.front());
  return canonicalize(g, l);
}

long double rpm_weight(const RpmConfig& w, const WeightFunction& u, double n, double beta) {
  const Graph& g = w.graph();
  const auto cycles = extract_cycles(w);
  long double val = std::pow(static_cast<long double>(n),
                             static_cast<long double>(cycles.size()));
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const int m = w.links(e);
    val *= std::pow(static_cast<long double>(beta), m);
    for (int i = 2; i <= m; ++i) val /= i;
  }
  for (Vertex x = 0; x < g.vertex_count(); ++x) val *= u.value(w.pairing_count(x));
  return val;
}

// ---------------------------------------------------------------------------
// exhaustive enumeration

namespace {

struct SlotKey {
  EdgeId e;
  int p;
};

// Enumerates perfect matchings of the given slots, invoking body() with
// `pair_of` filled (indices into slots).
void for_each_matching(int n_slots, std::vector<int>& pair_of,
                       const std::function<void()>& body) {
  int first = -1;
  for (int i = 0; i < n_slots; ++i)
    if (pair_of[i] < 0) {
      first = i;
      break;
    }
  if (first < 0) {
    body();
    return;
  }
  for (int j = first + 1; j < n_slots; ++j) {
    if (pair_of[j] >= 0) continue;
    pair_of[first] = j;
    pair_of[j] = first;
    for_each_matching(n_slots, pair_of, body);
    pair_of[first] = -1;
    pair_of[j] = -1;
  }
}

}  // namespace

RpmTable::RpmTable(const Graph& graph_in, RpmCaps caps, RpmTrackOptions opt)
    : g_(graph_in), pairs_(opt.pairs) {
  const Graph& g = g_;
  if (caps.per_edge < 0 && caps.total < 0)
    throw std::invalid_argument("rpm table: need a finite cap");
  if (opt.pairs.size() > 32) throw std::invalid_argument("rpm table: too many tracked pairs");
  const int total_cap = caps.total >= 0 ? caps.total
                                        : caps.per_edge * g.edge_count();
  const int edge_cap = caps.per_edge >= 0 ? caps.per_edge : caps.total;

  if (opt.track_len >= 2) tracked_ = enumerate_classes(g, opt.track_len);
  bounce_idx_.assign(g.edge_count(), -1);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    LoopClass b = bounce_class(g, e);
    for (size_t i = 0; i < tracked_.size(); ++i)
      if (tracked_[i] == b) bounce_idx_[e] = static_cast<int>(i);
  }
  std::map<std::vector<Vertex>, int> tracked_by_word;
  for (size_t i = 0; i < tracked_.size(); ++i)
    tracked_by_word[tracked_[i].word()] = static_cast<int>(i);

  std::map<std::vector<int>, long long> sig_count;

  std::vector<int> m(g.edge_count(), 0);

  // slot bookkeeping per vertex, rebuilt for each m
  auto process_m = [&]() {
    // evenness at every vertex
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      int deg_links = 0;
      for (auto [w, e] : g.neighbors(x)) deg_links += m[e];
      if (deg_links % 2) return;
    }
    std::vector<std::vector<SlotKey>> slots(g.vertex_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      for (int p = 0; p < m[e]; ++p) {
        slots[g.edge(e).u].push_back({e, p});
        slots[g.edge(e).v].push_back({e, p});
      }

    RpmConfig cfg(g);
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      for (int p = 0; p < m[e]; ++p) cfg.push_link(e);

    std::vector<std::vector<int>> pair_of(g.vertex_count());
    for (Vertex x = 0; x < g.vertex_count(); ++x)
      pair_of[x].assign(slots[x].size(), -1);

    auto complete = [&]() {
      for (Vertex x = 0; x < g.vertex_count(); ++x)
        for (size_t i = 0; i < slots[x].size(); ++i) {
          const int j = pair_of[x][i];
          if (j >= 0 && static_cast<int>(i) < j)
            cfg.pair_at(x, {slots[x][i].e, slots[x][i].p}, {slots[x][j].e, slots[x][j].p});
        }
      const auto cycles = extract_cycles(cfg);
      std::vector<int> k_tracked(tracked_.size(), 0);
      unsigned pair_mask = 0;
      for (const CycleRecord& c : cycles) {
        if (c.length() <= static_cast<int>(opt.track_len)) {
          auto it = tracked_by_word.find(project_cycle(g, c).word());
          if (it != tracked_by_word.end()) ++k_tracked[it->second];
        }
        for (size_t pi = 0; pi < opt.pairs.size(); ++pi) {
          if (pair_mask >> pi & 1) continue;
          bool has_x = false, has_y = false;
          for (Vertex v : c.vertices) {
            has_x |= v == opt.pairs[pi].first;
            has_y |= v == opt.pairs[pi].second;
          }
          if (has_x && has_y) pair_mask |= 1u << pi;
        }
      }
      std::vector<int> key = m;
      key.push_back(static_cast<int>(cycles.size()));
      key.insert(key.end(), k_tracked.begin(), k_tracked.end());
      key.push_back(static_cast<int>(pair_mask));
      ++sig_count[key];
      ++config_count_;
    };

    auto match_vertices = [&](auto&& self, Vertex x) -> void {
      if (x == g.vertex_count()) {
        complete();
        return;
      }
      for_each_matching(static_cast<int>(slots[x].size()), pair_of[x],
                        [&]() { self(self, x + 1); });
    };
    match_vertices(match_vertices, 0);
  };

  auto enum_m = [&](auto&& self, EdgeId e, int total_left) -> void {
    if (e == g.edge_count()) {
      process_m();
      return;
    }
    const int hi = std::min(edge_cap, total_left);
    for (int v = 0; v <= hi; ++v) {
      m[e] = v;
      self(self, e + 1, total_left - v);
    }
    m[e] = 0;
  };
  enum_m(enum_m, 0, total_cap);

  rows_.reserve(sig_count.size());
  const int ne = g.edge_count();
  const int nt = static_cast<int>(tracked_.size());
  for (auto& [key, count] : sig_count) {
    Row r;
    r.m.assign(key.begin(), key.begin() + ne);
    r.cycles = key[ne];
    r.k_tracked.assign(key.begin() + ne + 1, key.begin() + ne + 1 + nt);
    r.pair_mask = static_cast<unsigned>(key[ne + 1 + nt]);
    r.count = count;
    rows_.push_back(std::move(r));
  }
}

int RpmTable::tracked_index(const LoopClass& c) const {
  for (size_t i = 0; i < tracked_.size(); ++i)
    if (tracked_[i] == c) return static_cast<int>(i);
  return -1;
}

namespace {

long double row_weight(const RpmTable::Row& r, const Graph& g, const WeightFunction& u,
                       double n, double beta) {
  long double val = r.count *
                    std::pow(static_cast<long double>(n), static_cast<long double>(r.cycles));
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    val *= std::pow(static_cast<long double>(beta), r.m[e]);
    for (int i = 2; i <= r.m[e]; ++i) val /= i;
  }
  for (Vertex x = 0; x < g.vertex_count(); ++x) {
    int t = 0;
    for (auto [w, e] : g.neighbors(x)) t += r.m[e];
    val *= u.value(t / 2);
  }
  return val;
}

}  // namespace

RpmMoments rpm_evaluate(const RpmTable& table, const WeightFunction& u, double n,
                        double beta) {
  const Graph& g = table.graph();
  RpmMoments out;
  KahanSum z;
  std::vector<KahanSum> cls(table.tracked().size()), nx(g.vertex_count());
  std::vector<KahanSum> pp(table.pairs().size());
  for (const auto& r : table.rows()) {
    const long double w = row_weight(r, g, u, n, beta);
    z.add(w);
    for (size_t i = 0; i < cls.size(); ++i)
      if (r.k_tracked[i]) cls[i].add(w * r.k_tracked[i]);
    for (Vertex x = 0; x < g.vertex_count(); ++x) {
      int t = 0;
      for (auto [wv, e] : g.neighbors(x)) t += r.m[e];
      if (t) nx[x].add(w * (t / 2));
    }
    for (size_t pi = 0; pi < pp.size(); ++pi)
      if (r.pair_mask >> pi & 1) pp[pi].add(w);
  }
  out.z = z.value();
  for (auto& s : cls) out.class_mean.push_back(s.value() / out.z);
  for (auto& s : nx) out.nx_mean.push_back(s.value() / out.z);
  for (auto& s : pp) out.pair_prob.push_back(s.value() / out.z);
  return out;
}

long double rpm_partition(const RpmTable& table, const WeightFunction& u, double n,
                          double beta) {
  KahanSum z;
  for (const auto& r : table.rows()) z.add(row_weight(r, table.graph(), u, n, beta));
  return z.value();
}

long double rpm_product_expectation(
    const RpmTable& table, const WeightFunction& u, double n, double beta,
    const std::vector<std::pair<EdgeId, std::function<double(int)>>>& factors) {
  KahanSum z, num;
  for (const auto& r : table.rows()) {
    const long double w = row_weight(r, table.graph(), u, n, beta);
    z.add(w);
    long double prod = 1.0L;
    for (const auto& [e, f] : factors) {
      const int bi = table.bounce_index(e);
      prod *= f(bi >= 0 ? r.k_tracked[bi] : 0);
    }
    if (prod != 0.0L) num.add(w * prod);
  }
  return num.value() / z.value();
}

long double rpm_partition_single_edge(const WeightFunction& u, double n, double beta,
                                      int m_cap) {
  KahanSum z;
  for (int k = 0; 2 * k <= m_cap; ++k) {
    long double term = u.value(k) * u.value(k);
    for (int i = 1; i <= 2 * k; ++i) term *= beta / i;  // beta^{2k} / (2k)!
    for (int i = 1; i <= 2 * k; i += 2) term *= i;      // (2k-1)!!
    for (int i = 0; i < k; ++i) term *= n + 2 * i;      // strand closure product
    z.add(term);
  }
  return z.value();
}

EquivalenceGap crosscheck_equivalence(
    const Graph& g, const WeightFunction& u, double n, double beta, int total_cap,
    int track_len,
    const std::vector<std::vector<std::pair<EdgeId, std::function<double(int)>>>>&
        product_specs) {
  // path-model side
  RpmTable table(g, {.per_edge = -1, .total = total_cap}, {.track_len = track_len, .pairs = {}});
  RpmMoments rpm = rpm_evaluate(table, u, n, beta);

  // loop-soup side: same total budget; tracked classes are the alpha <=
  // track_len prefix of the soup's class list, in identical order.
  SoupEnumerator en(g, u, n, beta, total_cap);
  const size_t nt = table.tracked().size();
  for (size_t i = 0; i < nt; ++i)
    if (!(en.classes()[i] == table.tracked()[i]))
      throw std::logic_error("crosscheck: class order mismatch");
  KahanSum z;
  std::vector<KahanSum> cls(nt);
  std::vector<std::vector<std::pair<int, std::function<double(int)>>>> specs_by_idx;
  for (const auto& spec : product_specs) {
    std::vector<std::pair<int, std::function<double(int)>>> s;
    for (const auto& [e, f] : spec) s.emplace_back(en.bounce_index(e), f);
    specs_by_idx.push_back(std::move(s));
  }
  std::vector<KahanSum> prods(product_specs.size());
  en.for_each([&](const SoupEnumerator::Multiset& ms) {
    z.add(ms.weight);
    for (auto& [idx, cnt] : ms.counts)
      if (idx < static_cast<int>(nt)) cls[idx].add(ms.weight * cnt);
    for (size_t si = 0; si < specs_by_idx.size(); ++si) {
      long double prod = 1.0L;
      for (auto& [bi, f] : specs_by_idx[si])
        prod *= f(bi >= 0 ? static_cast<int>(SoupEnumerator::count_of(ms, bi)) : 0);
      if (prod != 0.0L) prods[si].add(ms.weight * prod);
    }
  });

  EquivalenceGap gap;
  for (size_t i = 0; i < nt; ++i) {
    // identical class order on both sides (enumerate_classes is canonical)
    const long double soup = cls[i].value() / z.value();
    gap.max_class_gap = std::max(gap.max_class_gap, std::fabs(soup - rpm.class_mean[i]));
  }
  for (size_t si = 0; si < product_specs.size(); ++si) {
    const long double soup = prods[si].value() / z.value();
    const long double path = rpm_product_expectation(table, u, n, beta, product_specs[si]);
    gap.max_product_gap = std::max(gap.max_product_gap, std::fabs(soup - path));
  }
  return gap;
}

}  // namespace rwls
