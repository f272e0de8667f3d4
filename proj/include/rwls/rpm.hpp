#pragma once

#include <array>
#include <functional>
#include <vector>

#include <json.hpp>

#include "rwls/graph.hpp"
#include "rwls/loops.hpp"
#include "rwls/weights.hpp"

namespace rwls {

/// A specific link: the p-th link (0-based) on edge e.
struct LinkRef {
  EdgeId e = -1;
  int p = -1;
  bool operator==(const LinkRef&) const = default;
  bool valid() const { return e >= 0 && p >= 0; }
};

/// Random path model configuration: link counts m_e plus a pairing of link
/// endpoints at every vertex. Only fully paired configurations (no unpaired
/// links) are representable; moves keep it that way.
///
/// Links on an edge carry dense labels 0..m_e-1; insertions append at the
/// top, deletions pop from the top.
class RpmConfig {
 public:
  explicit RpmConfig(const Graph& g);

  const Graph& graph() const { return *g_; }
  int links(EdgeId e) const { return static_cast<int>(partner_[e][0].size()); }
  std::vector<int> link_counts() const;
  int total_links() const;
  int pairing_count(Vertex x) const;  // n_x = (links touching x) / 2

  int side_of(EdgeId e, Vertex x) const { return g_->edge(e).u == x ? 0 : 1; }
  LinkRef partner_at(Vertex x, LinkRef l) const {
    return partner_[l.e][side_of(l.e, x)][l.p];
  }
  void pair_at(Vertex x, LinkRef a, LinkRef b);

  void push_link(EdgeId e);  // appended with unset partners
  void pop_link(EdgeId e);

  /// Full structural check: partners set, mutual, and label ranges valid.
  bool consistent() const;

  nlohmann::json snapshot() const;
  static RpmConfig restore(const Graph& g, const nlohmann::json& j);

 private:
  const Graph* g_;
  // partner_[e][side][p]: pairing partner of link (e,p) at endpoint side
  // (side 0 = edge.u, side 1 = edge.v)
  std::vector<std::array<std::vector<LinkRef>, 2>> partner_;
};

struct CycleRecord {
  std::vector<Vertex> vertices;  // cyclic word, one entry per link
  std::vector<LinkRef> links;
  int length() const { return static_cast<int>(links.size()); }
};

/// Unique decomposition into cycles; traversal starts at the smallest
/// unvisited link, so the output is independent of history.
std::vector<CycleRecord> extract_cycles(const RpmConfig& w);

/// Class of the projected rooted loop ("forgetting the links").
LoopClass project_cycle(const Graph& g, const CycleRecord& c);

/// mu(w) = N^{#cycles} prod_e beta^{m_e}/m_e! prod_x U(n_x).
long double rpm_weight(const RpmConfig& w, const WeightFunction& u, double n, double beta);

struct RpmCaps {
  int per_edge = -1;  // -1: unbounded (total must then be set)
  int total = -1;
};

struct RpmTrackOptions {
  int track_len = 4;
  std::vector<std::pair<Vertex, Vertex>> pairs;
};

/// Exhaustive enumeration of configurations under the caps, compressed to
/// signatures (m, cycle count, tracked class counts, tracked pair
/// connectivity). Built once per graph and caps; evaluation for a given
/// (U, N, beta) is then a cheap pass over the rows.
class RpmTable {
 public:
  RpmTable(const Graph& g, RpmCaps caps, RpmTrackOptions opt = {});

  struct Row {
    std::vector<int> m;
    int cycles;
    std::vector<int> k_tracked;
    unsigned pair_mask;
    long long count;
  };

  const Graph& graph() const { return g_; }
  const std::vector<LoopClass>& tracked() const { return tracked_; }
  int tracked_index(const LoopClass&) const;  // -1 if not tracked
  int bounce_index(EdgeId e) const { return bounce_idx_[e]; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<std::pair<Vertex, Vertex>>& pairs() const { return pairs_; }
  long long config_count() const { return config_count_; }

 private:
  Graph g_;
  std::vector<LoopClass> tracked_;
  std::vector<std::pair<Vertex, Vertex>> pairs_;
  std::vector<int> bounce_idx_;
  std::vector<Row> rows_;
  long long config_count_ = 0;
};

struct RpmMoments {
  long double z = 0.0L;
  std::vector<long double> class_mean;  // E[k~_gamma], tracked order
  std::vector<long double> nx_mean;     // E[n_x]
  std::vector<long double> pair_prob;   // P(x <-> y), tracked pairs
};

RpmMoments rpm_evaluate(const RpmTable& table, const WeightFunction& u, double n, double beta);

long double rpm_partition(const RpmTable& table, const WeightFunction& u, double n, double beta);

/// E[prod f_e(k~_e)] over the given (edge, function) factors.
long double rpm_product_expectation(
    const RpmTable& table, const WeightFunction& u, double n, double beta,
    const std::vector<std::pair<EdgeId, std::function<double(int)>>>& factors);

/// Closed evaluation of the truncated partition function on the single-edge
/// graph, m <= m_cap. Sums shells m = 2k directly: (2k-1)!! pairings on one
/// side; closing the strands at the other side one endpoint at a time gives
/// the factor prod_{i<k} (N + 2i) (own end closes a cycle: N; any of the
/// 2(s-1) foreign ends merges two strands).
long double rpm_partition_single_edge(const WeightFunction& u, double n, double beta,
                                      int m_cap);

struct EquivalenceGap {
  long double max_class_gap = 0.0L;
  long double max_product_gap = 0.0L;
};

/// Loop-soup vs path-model expectations at matched truncation (both engines
/// capped by the same total link/length budget). Compares E[k_gamma] with
/// E[k~_gamma] for every class of length <= track_len, and E[prod f_e(k_e)]
/// with the path-model counterpart for each product spec.
EquivalenceGap crosscheck_equivalence(
    const Graph& g, const WeightFunction& u, double n, double beta, int total_cap,
    int track_len,
    const std::vector<std::vector<std::pair<EdgeId, std::function<double(int)>>>>&
        product_specs = {});

}  // namespace rwls
