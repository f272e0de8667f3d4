#include "rwls/graph.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <set>
#include <stdexcept>

namespace rwls {

Graph Graph::from_edges(int n_vertices, std::vector<Edge> edges) {
  if (n_vertices <= 0) throw std::invalid_argument("graph: need at least one vertex");
  Graph g;
  g.n_ = n_vertices;
  g.adj_.resize(n_vertices);
  std::set<std::pair<Vertex, Vertex>> seen;
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= n_vertices || e.v < 0 || e.v >= n_vertices)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("graph: self-loop");
    auto key = std::minmax(e.u, e.v);
    if (!seen.insert(key).second) throw std::invalid_argument("graph: duplicate edge");
    EdgeId id = static_cast<EdgeId>(g.edges_.size());
    g.edges_.push_back({key.first, key.second});
    g.adj_[e.u].emplace_back(e.v, id);
    g.adj_[e.v].emplace_back(e.u, id);
  }
  for (Vertex v = 0; v < n_vertices; ++v)
    g.max_degree_ = std::max(g.max_degree_, g.degree(v));

  // two-color by BFS, then verify with a full edge scan
  g.color_.assign(n_vertices, -1);
  for (Vertex s = 0; s < n_vertices; ++s) {
    if (g.color_[s] != -1) continue;
    g.color_[s] = 0;
    std::deque<Vertex> q{s};
    while (!q.empty()) {
      Vertex v = q.front();
      q.pop_front();
      for (auto [w, id] : g.adj_[v]) {
        if (g.color_[w] == -1) {
          g.color_[w] = 1 - g.color_[v];
          q.push_back(w);
        }
      }
    }
  }
  g.bipartite_ = true;
  for (const Edge& e : g.edges_)
    if (g.color_[e.u] == g.color_[e.v]) {
      g.bipartite_ = false;
      break;
    }
  if (!g.bipartite_) g.color_.assign(n_vertices, -1);
  return g;
}

Graph Graph::torus(int side, int dim) {
  if (dim < 1) throw std::invalid_argument("torus: dimension must be >= 1");
  if (side < 3) throw std::invalid_argument("torus: side must be >= 3 (wrap-around would duplicate edges)");
  long long n = 1;
  for (int i = 0; i < dim; ++i) {
    n *= side;
    if (n > 1'000'000) throw std::invalid_argument("torus: too many vertices");
  }
  std::vector<Edge> edges;
  std::vector<int> coord(dim, 0);
  for (int v = 0; v < static_cast<int>(n); ++v) {
    int rem = v;
    for (int i = 0; i < dim; ++i) {
      coord[i] = rem % side;
      rem /= side;
    }
    long long stride = 1;
    for (int i = 0; i < dim; ++i) {
      int w = v + static_cast<int>(((coord[i] + 1) % side - coord[i]) * stride);
      edges.push_back({v, w});
      stride *= side;
    }
  }
  return from_edges(static_cast<int>(n), std::move(edges));
}

Graph Graph::single_edge() { return from_edges(2, {{0, 1}}); }

Graph Graph::path(int n_vertices) {
  if (n_vertices < 2) throw std::invalid_argument("path: need >= 2 vertices");
  std::vector<Edge> edges;
  for (int v = 0; v + 1 < n_vertices; ++v) edges.push_back({v, v + 1});
  return from_edges(n_vertices, std::move(edges));
}

Graph Graph::cycle(int n_vertices) {
  if (n_vertices < 3) throw std::invalid_argument("cycle: need >= 3 vertices");
  std::vector<Edge> edges;
  for (int v = 0; v < n_vertices; ++v) edges.push_back({v, (v + 1) % n_vertices});
  return from_edges(n_vertices, std::move(edges));
}

Graph Graph::box(int side, int dim) {
  if (dim < 1 || side < 1) throw std::invalid_argument("box: parameters must be positive");
  long long n = 1;
  for (int i = 0; i < dim; ++i) {
    n *= side;
    if (n > 1'000'000) throw std::invalid_argument("box: too many vertices");
  }
  std::vector<Edge> edges;
  std::vector<int> coord(dim, 0);
  for (int v = 0; v < static_cast<int>(n); ++v) {
    int rem = v;
    for (int i = 0; i < dim; ++i) {
      coord[i] = rem % side;
      rem /= side;
    }
    long long stride = 1;
    for (int i = 0; i < dim; ++i) {
      if (coord[i] + 1 < side) edges.push_back({v, v + static_cast<int>(stride)});
      stride *= side;
    }
  }
  return from_edges(static_cast<int>(n), std::move(edges));
}

EdgeId Graph::edge_between(Vertex u, Vertex v) const {
  for (auto [w, id] : adj_[u])
    if (w == v) return id;
  return -1;
}

void Graph::write_edge_list(std::ostream& os) const {
  os << "#vertices " << n_ << "\n";
  for (const Edge& e : edges_) os << e.u << " " << e.v << "\n";
}

CycleList enumerate_cycles(const Graph& g, int max_len) {
  if (max_len < 3) throw std::invalid_argument("enumerate_cycles: max_len must be >= 3");
  CycleList out;
  out.max_len = max_len;
  std::vector<char> on_path(g.vertex_count(), 0);
  std::vector<Vertex> path;
  std::vector<EdgeId> path_edges;

  // Rooted at its minimal vertex, traversed with second vertex < last
  // vertex: each simple cycle appears exactly once.
  auto dfs = [&](auto&& self, Vertex root, Vertex cur) -> void {
    for (auto [w, id] : g.neighbors(cur)) {
      if (w == root && static_cast<int>(path.size()) >= 3) {
        if (path[1] < path.back()) {
          Cycle c;
          c.vertices = path;
          c.edges = path_edges;
          c.edges.push_back(id);
          out.cycles.push_back(std::move(c));
        }
        continue;
      }
      if (w <= root || on_path[w]) continue;
      if (static_cast<int>(path.size()) >= max_len) continue;
      on_path[w] = 1;
      path.push_back(w);
      path_edges.push_back(id);
      self(self, root, w);
      path_edges.pop_back();
      path.pop_back();
      on_path[w] = 0;
    }
  };

  for (Vertex root = 0; root < g.vertex_count(); ++root) {
    path = {root};
    path_edges.clear();
    on_path[root] = 1;
    dfs(dfs, root, root);
    on_path[root] = 0;
  }
  return out;
}

bool spans_cycle_space(const Graph& g, const CycleList& cycles) {
  // Gaussian elimination over GF(2) on edge indicator vectors.
  const int m = g.edge_count();
  std::vector<std::vector<uint64_t>> basis;
  const int words = (m + 63) / 64;
  int rank = 0;
  std::vector<int> pivot_word, pivot_bit;
  for (const Cycle& c : cycles.cycles) {
    std::vector<uint64_t> row(words, 0);
    for (EdgeId e : c.edges) row[e / 64] ^= (1ull << (e % 64));
    for (size_t r = 0; r < basis.size(); ++r) {
      if (row[pivot_word[r]] >> pivot_bit[r] & 1)
        for (int w = 0; w < words; ++w) row[w] ^= basis[r][w];
    }
    int pw = -1, pb = -1;
    for (int w = 0; w < words && pw < 0; ++w)
      if (row[w])
        for (int b = 0; b < 64; ++b)
          if (row[w] >> b & 1) {
            pw = w;
            pb = b;
            break;
          }
    if (pw >= 0) {
      basis.push_back(std::move(row));
      pivot_word.push_back(pw);
      pivot_bit.push_back(pb);
      ++rank;
    }
  }

  // cycle space dimension = |E| - |V| + #components
  int components = 0;
  std::vector<char> seen(g.vertex_count(), 0);
  for (Vertex s = 0; s < g.vertex_count(); ++s) {
    if (seen[s]) continue;
    ++components;
    std::deque<Vertex> q{s};
    seen[s] = 1;
    while (!q.empty()) {
      Vertex v = q.front();
      q.pop_front();
      for (auto [w, id] : g.neighbors(v))
        if (!seen[w]) {
          seen[w] = 1;
          q.push_back(w);
        }
    }
  }
  return rank == m - g.vertex_count() + components;
}

}  // namespace rwls
