#pragma once

#include <string>
#include <vector>

namespace rwls {

enum class WeightKind { constant, spin, factorial, pairwise, table };

/// On-site weight function U : N0 -> R0+. Immutable after construction.
/// Values for the built-in families are evaluated in log space (log-gamma),
/// ratios U(n)/U(n-1) come from the exact per-family formulas.
class WeightFunction {
 public:
  static WeightFunction constant();            // U == 1
  static WeightFunction spin(int N);           // Gamma(N/2) / (2^n Gamma(n + N/2))
  static WeightFunction factorial();           // 1/n!
  static WeightFunction pairwise(double alpha); // exp(-alpha * C(n,2))
  /// Finite table, zero beyond the last entry. Accepted by the exact
  /// engines only (the sampler requires strictly positive weights).
  static WeightFunction table(std::vector<double> values);

  long double value(int n) const;
  long double log_value(int n) const;  // -inf where U(n) = 0
  /// U(n)/U(n-1), n >= 1. Returns +inf when U(n-1)=0 < U(n).
  long double ratio(int n) const;

  bool positive() const { return positive_; }
  WeightKind kind() const { return kind_; }
  int spin_n() const { return spin_n_; }
  double pairwise_alpha() const { return alpha_; }
  std::string describe() const;

 private:
  WeightFunction() = default;
  WeightKind kind_ = WeightKind::constant;
  int spin_n_ = 0;
  double alpha_ = 0.0;
  std::vector<double> table_;
  bool positive_ = true;
  std::vector<long double> cache_;  // prefilled at construction
  long double compute(int n) const;
};

struct GoodCheck {
  bool ok = true;
  int first_violation = -1;  // smallest n with U(n) > (M/n) U(n-1)
};

/// U is M-good when U(n) <= (M/n) U(n-1) for all n (checked up to n_max).
GoodCheck check_m_good(const WeightFunction& u, int M, int n_max);

struct NiceCheck {
  bool ok = true;
  std::string reason;  // empty on success
  int n = -1, n2 = -1; // witness of the violated condition
};

/// Nice = M-good, U(n) <= U(0), and submultiplicative
/// U(n + n') <= U(n) U(n') on the grid n + n' <= n_max.
NiceCheck check_nice(const WeightFunction& u, int M, int n_max);

}  // namespace rwls
