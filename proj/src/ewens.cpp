#include "rwls/ewens.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rwls/numeric.hpp"

namespace rwls {

long double ewens_normalizer(double theta, int n) {
  if (theta <= 0.0) throw std::invalid_argument("ewens: theta must be > 0");
  if (n < 0) throw std::invalid_argument("ewens: n must be >= 0");
  return rising_factorial(theta, n);
}

std::vector<int> sample_ewens(double theta, int n, Rng& rng) {
  if (theta <= 0.0 || n < 1) throw std::invalid_argument("ewens sampler: bad args");
  std::vector<int> sigma(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    if (i == 0 || unif(rng) < theta / (theta + i)) {
      sigma[i] = i;  // new cycle
    } else {
      std::uniform_int_distribution<int> pick(0, i - 1);
      int j = pick(rng);
      sigma[i] = sigma[j];
      sigma[j] = i;
    }
  }
  return sigma;
}

int permutation_cycle_count(std::span<const int> sigma) {
  const int n = static_cast<int>(sigma.size());
  std::vector<char> seen(n, 0);
  int cycles = 0;
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    ++cycles;
    for (int j = i; !seen[j]; j = sigma[j]) seen[j] = 1;
  }
  return cycles;
}

long double ewens_fixed_point_prob(double theta, int n, std::span<const int> v,
                                   std::span<const int> a) {
  if (v.size() != a.size()) throw std::invalid_argument("ewens p: v/a size mismatch");
  int req = 0, total_v = 0;
  long double choose = 1.0L;
  for (size_t j = 0; j < v.size(); ++j) {
    if (v[j] < 0 || a[j] < 0) throw std::invalid_argument("ewens p: negative arg");
    if (a[j] > v[j]) return 0.0L;  // infeasible
    req += a[j];
    total_v += v[j];
    choose *= binomial(v[j], a[j]);
  }
  if (total_v > n) throw std::invalid_argument("ewens p: sum v_j > n");

  // P(T subset FP) = theta^{|T|} Z(theta, n-|T|) / Z(theta, n)
  const long double z_n = ewens_normalizer(theta, n);
  auto fix_prob = [&](int t) {
    return std::pow(static_cast<long double>(theta), t) * ewens_normalizer(theta, n - t) /
           z_n;
  };
  const int spare = total_v - req;  // slots that must end up non-fixed
  KahanSum s;
  for (int k = 0; k <= spare; ++k) {
    long double term = binomial(spare, k) * fix_prob(req + k);
    s.add(k % 2 == 0 ? term : -term);
  }
  return choose * s.value();
}

double ewens_fixed_point_prob_mc(double theta, int n, std::span<const int> v,
                                 std::span<const int> a, long long samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("ewens p mc: need samples >= 1");
  // blocks A_j laid out consecutively in [n]
  std::vector<int> block_of(n, -1);
  int pos = 0;
  for (size_t j = 0; j < v.size(); ++j)
    for (int i = 0; i < v[j]; ++i) block_of[pos++] = static_cast<int>(j);
  long long hits = 0;
  std::vector<int> fp(v.size());
  for (long long s = 0; s < samples; ++s) {
    auto sigma = sample_ewens(theta, n, rng);
    std::fill(fp.begin(), fp.end(), 0);
    for (int i = 0; i < n; ++i)
      if (sigma[i] == i && block_of[i] >= 0) ++fp[block_of[i]];
    bool ok = true;
    for (size_t j = 0; j < v.size(); ++j) ok &= fp[j] == a[j];
    hits += ok;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

long double ewens_fixed_point_tail(double theta, int n, int v, int k) {
  if (k <= 0) return 1.0L;
  if (k > v || k > n) return 0.0L;
  KahanSum s;
  for (int a = k; a <= v; ++a) {
    const int vv[1] = {v}, aa[1] = {a};
    s.add(ewens_fixed_point_prob(theta, n, vv, aa));
  }
  return s.value();
}

long double domination_tail(double n_par, int k) {
  if (k < 0) throw std::invalid_argument("domination_tail: k must be >= 0");
  if (k == 0) return 1.0L;
  const long double c = std::max(1.0L, static_cast<long double>(n_par) / 2.0L);
  KahanSum s;
  long double term = std::pow(c, k);
  for (int i = 2; i <= k; ++i) term /= i;  // c^k / k!
  for (int j = k; j < k + 400; ++j) {
    s.add(term);
    term *= c / (j + 1);
    if (term < 1e-30L) break;
  }
  return std::min(1.0L, s.value());
}

}  // namespace rwls
