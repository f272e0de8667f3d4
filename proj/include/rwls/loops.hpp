#pragma once

#include <vector>

#include "rwls/graph.hpp"

namespace rwls {

/// Rooted oriented loop: vertex sequence with seq.front() == seq.back(),
/// consecutive vertices adjacent, length >= 2.
struct RootedLoop {
  std::vector<Vertex> seq;
  int length() const { return static_cast<int>(seq.size()) - 1; }
};

/// Equivalence class of rooted oriented loops under rotation and
/// time-reversal, together with the statistics the identities are phrased
/// in. All fields are derived from the canonical representative: the
/// lexicographically minimal rotation over both orientations.
class LoopClass {
 public:
  int alpha() const { return alpha_; }            // loop length
  int multiplicity() const { return J_; }         // J: maximal concatenation power
  int stretch() const { return delta_; }          // delta: 1 stretched, 2 unstretched
  long long class_size() const {                  // |gamma| = delta * alpha / J
    return static_cast<long long>(delta_) * alpha_ / J_;
  }

  /// Canonical cyclic word (alpha vertices, closing step implicit).
  const std::vector<Vertex>& word() const { return word_; }
  /// Canonical rooted representative, with the closing vertex repeated.
  RootedLoop representative() const;

  int n_at(Vertex x) const;                       // visit count n_x
  int m_at(EdgeId e) const;                       // edge usage count m_e
  /// Even-step count q_e of the canonical representative; defined for even
  /// alpha (sum_e q_e = alpha/2). Throws for odd alpha.
  int q_at(EdgeId e) const;
  bool has_even_steps() const { return alpha_ % 2 == 0; }

  const std::vector<std::pair<Vertex, int>>& visits() const { return visits_; }
  const std::vector<std::pair<EdgeId, int>>& edge_uses() const { return edge_uses_; }
  const std::vector<std::pair<EdgeId, int>>& even_steps() const { return even_steps_; }
  std::vector<Vertex> support() const;

  bool operator==(const LoopClass& o) const { return word_ == o.word_; }
  bool operator<(const LoopClass& o) const {
    if (alpha_ != o.alpha_) return alpha_ < o.alpha_;
    return word_ < o.word_;
  }

  friend LoopClass canonicalize(const Graph& g, const RootedLoop& loop);

 private:
  std::vector<Vertex> word_;
  int alpha_ = 0;
  int J_ = 1;
  int delta_ = 1;
  std::vector<std::pair<Vertex, int>> visits_;
  std::vector<std::pair<EdgeId, int>> edge_uses_;
  std::vector<std::pair<EdgeId, int>> even_steps_;
};

/// Class of a rooted oriented loop; throws on malformed input.
LoopClass canonicalize(const Graph& g, const RootedLoop& loop);

/// Convenience: the length-two class on edge e.
LoopClass bounce_class(const Graph& g, EdgeId e);

/// All classes with alpha <= max_len, each exactly once, sorted by
/// (alpha, canonical word).
std::vector<LoopClass> enumerate_classes(const Graph& g, int max_len);

}  // namespace rwls
