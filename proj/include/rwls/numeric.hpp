#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rwls {

/// Neumaier-compensated accumulator. Long double plus compensation gives
/// roughly 80+ effective mantissa bits, enough headroom for the 1e-9/1e-10
/// identity checks in the exact engines.
struct KahanSum {
  long double sum = 0.0L;
  long double comp = 0.0L;

  void add(long double x) {
    long double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  long double value() const { return sum + comp; }
};

inline long double falling_factorial(long long k, int a) {
  long double r = 1.0L;
  for (int i = 0; i < a; ++i) r *= static_cast<long double>(k - i);
  return r;
}

/// Rising factorial theta*(theta+1)*...*(theta+n-1); empty product = 1.
inline long double rising_factorial(long double theta, int n) {
  long double r = 1.0L;
  for (int i = 0; i < n; ++i) r *= theta + i;
  return r;
}

inline long double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Regularized upper incomplete gamma Q(a, x), for chi-square p-values.
long double incomplete_gamma_q(long double a, long double x);

/// P(chi2_dof >= stat).
double chi_square_pvalue(double stat, int dof);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Weighted least squares y ~ a + b x; weights w_i = 1/sigma_i^2 (pass
/// empty sigmas for an unweighted fit). slope_se is the usual WLS formula.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma = {});

}  // namespace rwls
