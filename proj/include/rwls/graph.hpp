#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rwls {

using Vertex = int;
using EdgeId = int;

struct Edge {
  Vertex u;
  Vertex v;
};

/// Finite simple undirected graph with dense vertex and edge ids.
/// Immutable after construction; safe to share across threads.
class Graph {
 public:
  static Graph from_edges(int n_vertices, std::vector<Edge> edges);

  /// d-dimensional torus with side L and nearest-neighbour wrap-around
  /// edges. L = 2 is rejected: the wrap edge would duplicate the direct one.
  static Graph torus(int side, int dim);

  static Graph single_edge();
  static Graph path(int n_vertices);   // n_vertices >= 2
  static Graph cycle(int n_vertices);  // n_vertices >= 3
  static Graph box(int side, int dim); // finite box, no wrap-around

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  /// (neighbour, edge id) pairs in construction order.
  const std::vector<std::pair<Vertex, EdgeId>>& neighbors(Vertex v) const {
    return adj_[v];
  }
  int degree(Vertex v) const { return static_cast<int>(adj_[v].size()); }
  int max_degree() const { return max_degree_; }

  EdgeId edge_between(Vertex u, Vertex v) const;  // -1 if not adjacent
  Vertex other_end(EdgeId e, Vertex v) const {
    return edges_[e].u == v ? edges_[e].v : edges_[e].u;
  }

  bool bipartite() const { return bipartite_; }
  /// Two-coloring class (0 or 1) when bipartite, -1 otherwise.
  int part_of(Vertex v) const { return bipartite_ ? color_[v] : -1; }

  /// Edge-list text dump: header "#vertices N", then one "u v" per line.
  void write_edge_list(std::ostream& os) const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::pair<Vertex, EdgeId>>> adj_;
  std::vector<int> color_;
  bool bipartite_ = false;
  int max_degree_ = 0;
};

/// A simple cycle: vertices[i] -- vertices[i+1] (cyclically) are the edges,
/// edges[i] joining vertices[i] and vertices[(i+1) % len].
struct Cycle {
  std::vector<Vertex> vertices;
  std::vector<EdgeId> edges;
  int length() const { return static_cast<int>(vertices.size()); }
};

struct CycleList {
  std::vector<Cycle> cycles;
  int max_len = 0;
};

/// All simple cycles of length 3..max_len, each exactly once up to rotation
/// and reflection.
CycleList enumerate_cycles(const Graph& g, int max_len);

/// True when the listed cycles span the graph's cycle space over GF(2),
/// i.e. the move set built from them can change link parity along any cycle.
bool spans_cycle_space(const Graph& g, const CycleList& cycles);

}  // namespace rwls
