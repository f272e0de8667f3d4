#include "rwls/weights.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rwls {

namespace {
constexpr int kPrefill = 256;
constexpr long double kInf = std::numeric_limits<long double>::infinity();
}  // namespace

WeightFunction WeightFunction::constant() {
  WeightFunction u;
  u.kind_ = WeightKind::constant;
  u.cache_.assign(kPrefill, 1.0L);
  return u;
}

WeightFunction WeightFunction::spin(int N) {
  if (N < 1) throw std::invalid_argument("weight spin: N must be an integer >= 1");
  WeightFunction u;
  u.kind_ = WeightKind::spin;
  u.spin_n_ = N;
  u.cache_.resize(kPrefill);
  for (int n = 0; n < kPrefill; ++n) u.cache_[n] = u.compute(n);
  return u;
}

WeightFunction WeightFunction::factorial() {
  WeightFunction u;
  u.kind_ = WeightKind::factorial;
  u.cache_.resize(kPrefill);
  for (int n = 0; n < kPrefill; ++n) u.cache_[n] = u.compute(n);
  return u;
}

WeightFunction WeightFunction::pairwise(double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("weight pairwise: alpha must be >= 0");
  WeightFunction u;
  u.kind_ = WeightKind::pairwise;
  u.alpha_ = alpha;
  u.cache_.resize(kPrefill);
  for (int n = 0; n < kPrefill; ++n) u.cache_[n] = u.compute(n);
  return u;
}

WeightFunction WeightFunction::table(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("weight table: empty table");
  for (double v : values)
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("weight table: entries must be finite and >= 0");
  WeightFunction u;
  u.kind_ = WeightKind::table;
  u.table_ = std::move(values);
  u.positive_ = false;  // zero tail beyond the table
  return u;
}

long double WeightFunction::compute(int n) const {
  switch (kind_) {
    case WeightKind::constant:
      return 1.0L;
    case WeightKind::spin: {
      const long double half = 0.5L * spin_n_;
      // long double exponential: spin weights underflow double past n ~ 130
      const long double logv = static_cast<long double>(std::lgamma(static_cast<double>(half))) -
                               n * std::log(2.0L) -
                               static_cast<long double>(std::lgamma(static_cast<double>(n + half)));
      return std::exp(logv);
    }
    case WeightKind::factorial:
      return std::exp(-static_cast<long double>(std::lgamma(static_cast<double>(n) + 1.0)));
    case WeightKind::pairwise:
      return std::exp(-static_cast<long double>(alpha_) * n * (n - 1) / 2.0L);
    case WeightKind::table:
      return n < static_cast<int>(table_.size()) ? static_cast<long double>(table_[n]) : 0.0L;
  }
  return 0.0L;
}

long double WeightFunction::value(int n) const {
  if (n < 0) throw std::invalid_argument("weight: n must be >= 0");
  if (n < static_cast<int>(cache_.size())) return cache_[n];
  return compute(n);
}

long double WeightFunction::log_value(int n) const {
  switch (kind_) {
    case WeightKind::constant:
      return 0.0L;
    case WeightKind::spin: {
      const long double half = 0.5L * spin_n_;
      return std::lgamma(static_cast<double>(half)) - n * std::log(2.0L) -
             std::lgamma(static_cast<double>(n + half));
    }
    case WeightKind::factorial:
      return -std::lgamma(static_cast<double>(n) + 1.0);
    case WeightKind::pairwise:
      return -static_cast<long double>(alpha_) * n * (n - 1) / 2.0L;
    case WeightKind::table: {
      long double v = value(n);
      return v > 0.0L ? std::log(v) : -kInf;
    }
  }
  return -kInf;
}

long double WeightFunction::ratio(int n) const {
  if (n < 1) throw std::invalid_argument("weight ratio: n must be >= 1");
  switch (kind_) {
    case WeightKind::constant:
      return 1.0L;
    case WeightKind::spin:
      return 1.0L / (2.0L * (n - 1) + spin_n_);
    case WeightKind::factorial:
      return 1.0L / n;
    case WeightKind::pairwise:
      return std::exp(-static_cast<long double>(alpha_) * (n - 1));
    case WeightKind::table: {
      long double prev = value(n - 1), cur = value(n);
      if (prev > 0.0L) return cur / prev;
      return cur > 0.0L ? kInf : 0.0L;
    }
  }
  return 0.0L;
}

std::string WeightFunction::describe() const {
  switch (kind_) {
    case WeightKind::constant: return "constant";
    case WeightKind::spin: return "spin(" + std::to_string(spin_n_) + ")";
    case WeightKind::factorial: return "factorial";
    case WeightKind::pairwise: return "pairwise(" + std::to_string(alpha_) + ")";
    case WeightKind::table: return "table[" + std::to_string(table_.size()) + "]";
  }
  return "?";
}

GoodCheck check_m_good(const WeightFunction& u, int M, int n_max) {
  if (M < 1 || n_max < 1) throw std::invalid_argument("check_m_good: M, n_max must be >= 1");
  for (int n = 1; n <= n_max; ++n) {
    long double r = u.ratio(n);
    if (r == 0.0L) continue;
    // exact equality (factorial with M = 1) must pass
    if (r * n > M * (1.0L + 1e-12L)) return {false, n};
  }
  return {true, -1};
}

NiceCheck check_nice(const WeightFunction& u, int M, int n_max) {
  NiceCheck res;
  GoodCheck good = check_m_good(u, M, n_max);
  if (!good.ok) {
    res.ok = false;
    res.reason = "not " + std::to_string(M) + "-good";
    res.n = good.first_violation;
    return res;
  }
  const long double lu0 = u.log_value(0);
  for (int n = 1; n <= n_max; ++n) {
    if (u.log_value(n) > lu0 + 1e-12L) {
      res.ok = false;
      res.reason = "U(n) > U(0)";
      res.n = n;
      return res;
    }
  }
  for (int n = 1; n <= n_max; ++n)
    for (int n2 = n; n + n2 <= n_max; ++n2) {
      long double lhs = u.log_value(n + n2);
      long double rhs = u.log_value(n) + u.log_value(n2);
      if (lhs == -std::numeric_limits<long double>::infinity()) continue;
      if (lhs > rhs + 1e-12L) {
        res.ok = false;
        res.reason = "not submultiplicative";
        res.n = n;
        res.n2 = n2;
        return res;
      }
    }
  return res;
}

}  // namespace rwls
