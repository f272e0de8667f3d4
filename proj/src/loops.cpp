#include "rwls/loops.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace rwls {

namespace {

std::vector<Vertex> rotate(const std::vector<Vertex>& w, int r) {
  const int n = static_cast<int>(w.size());
  std::vector<Vertex> out(n);
  for (int i = 0; i < n; ++i) out[i] = w[(i + r) % n];
  return out;
}

// Time-reversal as a cyclic word: the reversed loop visits
// w[0], w[n-1], ..., w[1].
std::vector<Vertex> reverse_word(const std::vector<Vertex>& w) {
  std::vector<Vertex> out;
  out.reserve(w.size());
  out.push_back(w[0]);
  for (int i = static_cast<int>(w.size()) - 1; i >= 1; --i) out.push_back(w[i]);
  return out;
}

}  // namespace

LoopClass canonicalize(const Graph& g, const RootedLoop& loop) {
  const int k = loop.length();
  if (k < 2) throw std::invalid_argument("loop: length must be >= 2");
  if (loop.seq.front() != loop.seq.back())
    throw std::invalid_argument("loop: sequence must be closed");
  for (int i = 0; i < k; ++i) {
    Vertex a = loop.seq[i], b = loop.seq[i + 1];
    if (a < 0 || a >= g.vertex_count() || g.edge_between(a, b) < 0)
      throw std::invalid_argument("loop: step is not a graph edge");
  }

  std::vector<Vertex> w(loop.seq.begin(), loop.seq.end() - 1);
  const std::vector<Vertex> rw = reverse_word(w);
  std::vector<Vertex> best = w;
  for (int r = 0; r < k; ++r) {
    best = std::min(best, rotate(w, r));
    best = std::min(best, rotate(rw, r));
  }

  LoopClass c;
  c.word_ = best;
  c.alpha_ = k;

  // J: alpha / (minimal rotation period)
  int period = k;
  for (int p = 1; p < k; ++p) {
    if (k % p != 0) continue;
    if (rotate(best, p) == best) {
      period = p;
      break;
    }
  }
  c.J_ = k / period;

  // delta: stretched (some rotation equals the reversal) or not
  const std::vector<Vertex> rbest = reverse_word(best);
  c.delta_ = 2;
  for (int r = 0; r < k; ++r)
    if (rotate(rbest, r) == best) {
      c.delta_ = 1;
      break;
    }

  std::map<Vertex, int> visits;
  std::map<EdgeId, int> uses;
  for (int i = 0; i < k; ++i) {
    ++visits[best[i]];
    ++uses[g.edge_between(best[i], best[(i + 1) % k])];
  }
  c.visits_.assign(visits.begin(), visits.end());
  c.edge_uses_.assign(uses.begin(), uses.end());

  if (k % 2 == 0) {
    std::map<EdgeId, int> even;
    for (int j = 0; j < k / 2; ++j)
      ++even[g.edge_between(best[2 * j], best[2 * j + 1])];
    c.even_steps_.assign(even.begin(), even.end());
  }
  return c;
}

RootedLoop LoopClass::representative() const {
  RootedLoop l;
  l.seq = word_;
  l.seq.push_back(word_.front());
  return l;
}

int LoopClass::n_at(Vertex x) const {
  for (auto& [v, n] : visits_)
    if (v == x) return n;
  return 0;
}

int LoopClass::m_at(EdgeId e) const {
  for (auto& [id, n] : edge_uses_)
    if (id == e) return n;
  return 0;
}

int LoopClass::q_at(EdgeId e) const {
  if (alpha_ % 2 != 0) throw std::logic_error("q_e: defined for even-length classes only");
  for (auto& [id, n] : even_steps_)
    if (id == e) return n;
  return 0;
}

std::vector<Vertex> LoopClass::support() const {
  std::vector<Vertex> s;
  s.reserve(visits_.size());
  for (auto& [v, n] : visits_) s.push_back(v);
  return s;
}

LoopClass bounce_class(const Graph& g, EdgeId e) {
  RootedLoop l;
  l.seq = {g.edge(e).u, g.edge(e).v, g.edge(e).u};
  return canonicalize(g, l);
}

std::vector<LoopClass> enumerate_classes(const Graph& g, int max_len) {
  if (max_len < 2) throw std::invalid_argument("enumerate_classes: max_len must be >= 2");
  std::set<std::vector<Vertex>> seen;
  std::vector<LoopClass> out;
  std::vector<Vertex> walk;

  // walk.size() <= max_len throughout; closing at the root yields a loop of
  // length walk.size(). Walks through a vertex below the root are skipped:
  // that class is reached from its own minimal vertex.
  auto dfs = [&](auto&& self, Vertex root, Vertex cur) -> void {
    for (auto [w, id] : g.neighbors(cur)) {
      if (w < root) continue;
      if (w == root && static_cast<int>(walk.size()) >= 2) {
        RootedLoop l;
        l.seq = walk;
        l.seq.push_back(root);
        LoopClass c = canonicalize(g, l);
        if (seen.insert(c.word()).second) out.push_back(std::move(c));
      }
      if (static_cast<int>(walk.size()) < max_len) {
        walk.push_back(w);
        self(self, root, w);
        walk.pop_back();
      }
    }
  };

  for (Vertex root = 0; root < g.vertex_count(); ++root) {
    walk = {root};
    dfs(dfs, root, root);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rwls
