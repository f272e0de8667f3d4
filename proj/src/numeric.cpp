#include "rwls/numeric.hpp"

namespace rwls {

namespace {

// Series expansion of P(a,x), valid for x < a+1.
long double gamma_p_series(long double a, long double x) {
  long double ap = a;
  long double sum = 1.0L / a;
  long double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0L;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-18L) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(static_cast<double>(a)));
}

// Lentz continued fraction for Q(a,x), valid for x >= a+1.
long double gamma_q_cf(long double a, long double x) {
  const long double tiny = 1e-300L;
  long double b = x + 1.0L - a;
  long double c = 1.0L / tiny;
  long double d = 1.0L / b;
  long double h = d;
  for (int i = 1; i < 500; ++i) {
    long double an = -static_cast<long double>(i) * (i - a);
    b += 2.0L;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    long double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0L) < 1e-18L) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(static_cast<double>(a)));
}

}  // namespace

long double incomplete_gamma_q(long double a, long double x) {
  if (x < 0.0L || a <= 0.0L) throw std::invalid_argument("incomplete_gamma_q: bad args");
  if (x == 0.0L) return 1.0L;
  if (x < a + 1.0L) return 1.0L - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_pvalue(double stat, int dof) {
  if (dof <= 0) throw std::invalid_argument("chi_square_pvalue: dof must be positive");
  if (stat <= 0.0) return 1.0;
  return static_cast<double>(incomplete_gamma_q(dof / 2.0L, stat / 2.0L));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 matching points");
  const size_t n = x.size();
  long double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (size_t i = 0; i < n; ++i) {
    long double w = 1.0L;
    if (!sigma.empty()) {
      if (sigma[i] <= 0.0) throw std::invalid_argument("linear_fit: sigma must be positive");
      w = 1.0L / (static_cast<long double>(sigma[i]) * sigma[i]);
    }
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  const long double det = sw * swxx - swx * swx;
  if (det <= 0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = static_cast<double>((sw * swxy - swx * swy) / det);
  f.intercept = static_cast<double>((swxx * swy - swx * swxy) / det);
  long double var_slope = sw / det;
  if (sigma.empty()) {
    // scale by residual variance when no per-point errors are given
    long double ss = 0;
    for (size_t i = 0; i < n; ++i) {
      long double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    if (n > 2) var_slope *= ss / (n - 2);
    else var_slope = 0;
  }
  f.slope_se = static_cast<double>(std::sqrt(std::max(var_slope, 0.0L)));
  return f;
}

}  // namespace rwls
