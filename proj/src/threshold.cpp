#include "rwls/threshold.hpp"

#include <cmath>
#include <stdexcept>

#include "rwls/numeric.hpp"

namespace rwls {

namespace {

// dense visit grid centred at the origin, side 2*k_max+1 per dimension
struct VisitGrid {
  int k_max;
  int dim;
  int side;
  std::vector<int> counts;
  std::vector<int> pos;  // current coordinates, offset by k_max

  VisitGrid(int k, int d) : k_max(k), dim(d), side(2 * k + 1) {
    long long cells = 1;
    for (int i = 0; i < d; ++i) cells *= side;
    counts.assign(cells, 0);
    pos.assign(d, k);
  }
  int index() const {
    int idx = 0;
    for (int i = 0; i < dim; ++i) idx = idx * side + pos[i];
    return idx;
  }
};

}  // namespace

std::vector<ChiEstimate> chi_exact_series(const WeightFunction& u, int dim, int k_max) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("chi_exact: dim in 1..3");
  if (k_max < 1) throw std::invalid_argument("chi_exact: k_max >= 1");
  double budget = std::pow(2.0 * dim, k_max);
  if (budget > 1e9) throw std::invalid_argument("chi_exact: enumeration budget exceeded");
  if (std::fabs(static_cast<double>(u.value(0)) - 1.0) > 1e-15)
    throw std::invalid_argument("chi_exact: needs U(0) = 1");

  VisitGrid grid(k_max, dim);
  std::vector<KahanSum> acc(k_max + 1);

  // product over visited sites, updated one ratio at a time
  auto dfs = [&](auto&& self, int depth, long double prod) -> void {
    if (depth > 0) acc[depth].add(prod);
    if (depth == k_max) return;
    for (int axis = 0; axis < dim; ++axis)
      for (int dir = -1; dir <= 1; dir += 2) {
        grid.pos[axis] += dir;
        const int idx = grid.index();
        const int n = ++grid.counts[idx];
        const long double p2 = prod * u.ratio(n);
        if (p2 != 0.0L) self(self, depth + 1, p2);
        --grid.counts[idx];
        grid.pos[axis] -= dir;
      }
  };
  dfs(dfs, 0, 1.0L);

  std::vector<ChiEstimate> out;
  long double norm = 1.0L;
  for (int k = 1; k <= k_max; ++k) {
    norm *= 2.0L * dim;
    out.push_back({k, static_cast<double>(acc[k].value() / norm), 0.0, true, dim});
  }
  return out;
}

ChiEstimate chi_mc(const WeightFunction& u, int dim, int k, long long samples, Rng& rng) {
  if (samples < 10000) throw std::invalid_argument("chi_mc: need >= 1e4 samples");
  if (std::fabs(static_cast<double>(u.value(0)) - 1.0) > 1e-15)
    throw std::invalid_argument("chi_mc: needs U(0) = 1");
  VisitGrid grid(k, dim);
  std::uniform_int_distribution<int> step(0, 2 * dim - 1);
  std::vector<int> touched;
  touched.reserve(k);

  const int n_batches = 32;
  std::vector<long double> batch(n_batches, 0.0L);
  const long long bs = samples / n_batches;

  for (int b = 0; b < n_batches; ++b) {
    KahanSum s;
    for (long long i = 0; i < bs; ++i) {
      long double prod = 1.0L;
      std::fill(grid.pos.begin(), grid.pos.end(), grid.k_max);
      touched.clear();
      for (int t = 0; t < k; ++t) {
        const int mv = step(rng);
        grid.pos[mv / 2] += mv % 2 ? 1 : -1;
        const int idx = grid.index();
        prod *= u.ratio(++grid.counts[idx]);
        touched.push_back(idx);
      }
      for (int idx : touched) grid.counts[idx] = 0;
      s.add(prod);
    }
    batch[b] = s.value() / bs;
  }
  long double mean = 0.0L;
  for (auto v : batch) mean += v;
  mean /= n_batches;
  long double var = 0.0L;
  for (auto v : batch) var += (v - mean) * (v - mean);
  var /= n_batches * (n_batches - 1.0L);
  return {k, static_cast<double>(mean), static_cast<double>(std::sqrt(var)), false, dim};
}

BetaBound beta_lower_bound(const std::vector<ChiEstimate>& series, int dim) {
  if (series.size() < 4) throw std::invalid_argument("beta_lower_bound: need >= 4 points");
  std::vector<double> ks, logchi;
  for (const auto& c : series) {
    if (c.value <= 0.0) throw std::invalid_argument("beta_lower_bound: chi must be positive");
    ks.push_back(c.k);
    logchi.push_back(std::log(c.value));
  }
  BetaBound out;
  const size_t win = std::max<size_t>(4, series.size() / 2);
  const size_t from = series.size() - win;
  out.window_from = series[from].k;
  out.window_to = series.back().k;
  LinearFit f = linear_fit(std::span(ks).subspan(from), std::span(logchi).subspan(from));
  out.rate_fit = f.slope;

  // largest single-k slope inside the window (short-k slopes vanish for any
  // weight with U(1) = 1 and would make the variant vacuous)
  out.rate_conservative = -1e300;
  for (size_t i = std::max<size_t>(from, 1); i < series.size(); ++i)
    out.rate_conservative = std::max(
        out.rate_conservative, (logchi[i] - logchi[i - 1]) / (ks[i] - ks[i - 1]));

  out.beta_fit = std::exp(-out.rate_fit) / (2.0 * dim);
  out.beta_conservative = std::exp(-out.rate_conservative) / (2.0 * dim);
  return out;
}

}  // namespace rwls
