#include "rwls/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "rwls/numeric.hpp"

namespace rwls {

EstimateReport batch_mean_report(std::span<const double> samples, int min_batches) {
  EstimateReport rep;
  rep.n = static_cast<long long>(samples.size());
  if (samples.empty()) throw std::invalid_argument("batch_mean_report: empty series");
  KahanSum tot;
  for (double v : samples) tot.add(v);
  rep.estimate = static_cast<double>(tot.value() / samples.size());
  if (samples.size() < 2) return rep;

  const int n_batches = std::max(2, std::min<int>(min_batches, static_cast<int>(samples.size() / 2)));
  const size_t bs = samples.size() / n_batches;
  KahanSum sq;
  for (int b = 0; b < n_batches; ++b) {
    KahanSum bm;
    for (size_t i = b * bs; i < (b + 1) * bs; ++i) bm.add(samples[i]);
    const long double d = bm.value() / bs - rep.estimate;
    sq.add(d * d);
  }
  rep.se = static_cast<double>(
      std::sqrt(std::max(0.0L, sq.value() / (n_batches * (n_batches - 1.0L)))));

  KahanSum var;
  for (double v : samples) {
    const long double d = v - rep.estimate;
    var.add(d * d);
  }
  const double sample_var = static_cast<double>(var.value() / (samples.size() - 1));
  rep.n_eff = rep.se > 0 ? sample_var / (rep.se * rep.se)
                         : static_cast<double>(samples.size());
  return rep;
}

double integrated_autocorrelation(std::span<const double> samples) {
  const size_t n = samples.size();
  if (n < 8) return 1.0;
  long double mean = 0;
  for (double v : samples) mean += v;
  mean /= n;
  long double c0 = 0;
  for (double v : samples) c0 += (v - mean) * (v - mean);
  c0 /= n;
  if (c0 <= 0) return 1.0;
  long double tau = 0.5L;
  for (size_t t = 1; t < n / 2; ++t) {
    long double ct = 0;
    for (size_t i = 0; i + t < n; ++i) ct += (samples[i] - mean) * (samples[i + t] - mean);
    ct /= n - t;
    if (ct <= 0) break;  // initial positive sequence cutoff
    tau += ct / c0;
  }
  return static_cast<double>(2.0L * tau);
}

std::string series_cycles(int len) { return "cycles_len:" + std::to_string(len); }
std::string series_connection(Vertex x, Vertex y) {
  return "conn:" + std::to_string(x) + "," + std::to_string(y);
}
std::string series_connection_avg(int dr, int dc) {
  return "conn_avg:" + std::to_string(dr) + "," + std::to_string(dc);
}
std::string series_local_moment(Vertex o, int m) {
  return "nloc:" + std::to_string(o) + "^" + std::to_string(m);
}
std::string series_edge_tail(int a) { return "edge_tail:" + std::to_string(a); }
std::string series_middle() { return "spin_middle"; }
std::string series_spin_connection() { return "spin_conn"; }
std::string series_ntilde_pow(Vertex which) {
  return which == 0 ? "ntilde_pow_x" : "ntilde_pow_y";
}

namespace {

void measure(const Chain& chain, const MeasurementPlan& plan,
             std::map<std::string, std::vector<double>>& series, int& max_edge_links) {
  const Graph& g = chain.graph();
  const RpmConfig& cfg = chain.config();
  const auto cycles = extract_cycles(cfg);

  for (EdgeId e = 0; e < g.edge_count(); ++e)
    max_edge_links = std::max(max_edge_links, cfg.links(e));

  if (!plan.cycle_lengths.empty()) {
    for (int len : plan.cycle_lengths) {
      int count = 0;
      for (const auto& c : cycles) count += c.length() == len;
      series[series_cycles(len)].push_back(count);
    }
  }

  // one vertex-set per cycle, reused by the connection observables
  std::vector<std::set<Vertex>> supports;
  if (!plan.connection_pairs.empty() || !plan.connection_displacements.empty() ||
      plan.spin_pair) {
    supports.reserve(cycles.size());
    for (const auto& c : cycles)
      supports.emplace_back(c.vertices.begin(), c.vertices.end());
  }

  for (auto [x, y] : plan.connection_pairs) {
    double hit = 0;
    for (const auto& s : supports)
      if (s.count(x) && s.count(y)) {
        hit = 1;
        break;
      }
    series[series_connection(x, y)].push_back(hit);
  }

  if (!plan.connection_displacements.empty()) {
    if (plan.torus_side <= 0)
      throw std::invalid_argument("measurement: torus_side required for displacements");
    const int L = plan.torus_side;
    for (auto [dr, dc] : plan.connection_displacements) {
      std::set<Vertex> satisfied;
      for (const auto& s : supports)
        for (Vertex v : s) {
          const int r = v / L, c = v % L;
          const Vertex w = ((r + dr) % L + L) % L * L + ((c + dc) % L + L) % L;
          if (s.count(w)) satisfied.insert(v);
        }
      series[series_connection_avg(dr, dc)].push_back(
          static_cast<double>(satisfied.size()) / g.vertex_count());
    }
  }

  for (auto [o, m] : plan.local_time_moments)
    series[series_local_moment(o, m)].push_back(
        std::pow(static_cast<double>(cfg.pairing_count(o)), m));

  if (!plan.edge_tail_thresholds.empty()) {
    std::vector<int> k_e(g.edge_count(), 0);
    for (const auto& c : cycles)
      if (c.length() == 2) ++k_e[c.links[0].e];
    for (int a : plan.edge_tail_thresholds) {
      int cnt = 0;
      for (EdgeId e = 0; e < g.edge_count(); ++e) cnt += k_e[e] >= a;
      series[series_edge_tail(a)].push_back(static_cast<double>(cnt) / g.edge_count());
    }
  }

  if (plan.spin_pair) {
    const auto [x, y] = *plan.spin_pair;
    const double half_n = chain.n_parameter() / 2.0;
    const double ntx = cfg.pairing_count(x) + half_n;
    const double nty = cfg.pairing_count(y) + half_n;
    double s = 0;
    for (size_t i = 0; i < cycles.size(); ++i) {
      int nx = 0, ny = 0;
      for (Vertex v : cycles[i].vertices) {
        nx += v == x;
        ny += v == y;
      }
      s += static_cast<double>(nx) * ny;
    }
    series[series_middle()].push_back(s / (2.0 * chain.n_parameter() * ntx * nty));
    const double p = static_cast<double>(1 << plan.spin_cs_m);  // 2^m
    series[series_ntilde_pow(0)].push_back(std::pow(ntx, p));
    series[series_ntilde_pow(1)].push_back(std::pow(nty, p));
    double hit = 0;
    for (const auto& s2 : supports)
      if (s2.count(x) && s2.count(y)) {
        hit = 1;
        break;
      }
    series[series_spin_connection()].push_back(hit);
  }

  if (plan.record_total_links)
    series["total_links"].push_back(cfg.total_links());
}

}  // namespace

ChainOutput run_chain(const Graph& g, const WeightFunction& u, double n, double beta,
                      ChainOptions opt, long long sweeps, long long burn_in, int thin,
                      const MeasurementPlan& plan) {
  if (plan.spin_pair && u.kind() != WeightKind::spin)
    throw std::invalid_argument(
        "spin correlation functional: requires the spin weight family");
  ChainOutput out;
  out.seed = opt.seed;
  Chain chain(g, u, n, beta, opt);
  out.cycle_basis_spanned = chain.cycle_basis_spanned();

  for (long long i = 0; i < burn_in; ++i) chain.sweep();

  if (thin <= 0) {
    // pilot: integrated autocorrelation of the total link count
    std::vector<double> pilot;
    const long long pilot_n = std::min<long long>(1000, std::max<long long>(200, sweeps / 10));
    pilot.reserve(pilot_n);
    for (long long i = 0; i < pilot_n; ++i) {
      chain.sweep();
      pilot.push_back(chain.config().total_links());
    }
    thin = std::max(1, static_cast<int>(std::ceil(integrated_autocorrelation(pilot))));
  }

  for (long long i = 0; i < sweeps; ++i) {
    chain.sweep();
    if (i % thin == 0) measure(chain, plan, out.series, out.max_edge_links);
  }

  out.final_checkpoint = chain.checkpoint();
  out.stats = chain.stats();
  const long long cap_rej = out.stats.dl_cap_rejected + out.stats.cycle_cap_rejected;
  const long long props = out.stats.dl_proposed + out.stats.cycle_proposed;
  out.cap_hit_rate = props > 0 ? static_cast<double>(cap_rej) / props : 0.0;
  auto it = out.series.find("total_links");
  if (it != out.series.end()) out.tau_int_links = integrated_autocorrelation(it->second);
  if (!out.series.empty()) out.samples = static_cast<long long>(out.series.begin()->second.size());
  return out;
}

namespace {

const std::vector<double>& need_series(const ChainOutput& out, const std::string& key) {
  auto it = out.series.find(key);
  if (it == out.series.end())
    throw std::invalid_argument("estimator: series '" + key + "' was not measured");
  return it->second;
}

}  // namespace

EstimateReport estimate_rho(const ChainOutput& out, int k, int n_vertices) {
  const auto& s = need_series(out, series_cycles(k));
  std::vector<double> scaled(s.size());
  for (size_t i = 0; i < s.size(); ++i) scaled[i] = s[i] / n_vertices;
  EstimateReport rep = batch_mean_report(scaled);
  rep.observable = "rho:" + std::to_string(k);
  rep.seed = out.seed;
  return rep;
}

EstimateReport micro_localtime_partial(const ChainOutput& out, int K, int n_vertices) {
  if (K < 2) throw std::invalid_argument("micro_localtime_partial: K must be >= 2");
  std::vector<double> combined;
  for (int k = 2; k <= K; k += 2) {
    const auto& s = need_series(out, series_cycles(k));
    if (combined.empty()) combined.assign(s.size(), 0.0);
    for (size_t i = 0; i < s.size(); ++i) combined[i] += k * s[i] / n_vertices;
  }
  EstimateReport rep = batch_mean_report(combined);
  rep.observable = "micro_localtime:K=" + std::to_string(K);
  rep.seed = out.seed;
  return rep;
}

EstimateReport estimate_localtime_moment(const ChainOutput& out, Vertex o, int m) {
  if (m > 8) throw std::invalid_argument("localtime moment: m <= 8");
  EstimateReport rep = batch_mean_report(need_series(out, series_local_moment(o, m)));
  rep.observable = series_local_moment(o, m);
  rep.seed = out.seed;
  return rep;
}

EstimateReport estimate_connection(const ChainOutput& out, Vertex x, Vertex y) {
  if (x == y) throw std::invalid_argument("connection: x != y required");
  EstimateReport rep = batch_mean_report(need_series(out, series_connection(x, y)));
  rep.observable = series_connection(x, y);
  rep.seed = out.seed;
  return rep;
}

DecayFit fit_decay(std::span<const double> distances, std::span<const EstimateReport> probs) {
  if (distances.size() != probs.size())
    throw std::invalid_argument("fit_decay: size mismatch");
  std::vector<double> lx, ly, sig;
  for (size_t i = 0; i < distances.size(); ++i) {
    if (probs[i].estimate <= 0.0) continue;
    lx.push_back(std::log(distances[i]));
    ly.push_back(std::log(probs[i].estimate));
    sig.push_back(probs[i].se > 0 ? probs[i].se / probs[i].estimate : 1e-12);
  }
  if (lx.size() < 4) throw std::invalid_argument("fit_decay: need >= 4 positive estimates");
  LinearFit f = linear_fit(lx, ly, sig);
  DecayFit out;
  out.exponent = -f.slope;
  out.ci_low = -f.slope - 1.96 * f.slope_se;
  out.ci_high = -f.slope + 1.96 * f.slope_se;
  return out;
}

SandwichReport spin_correlation_sandwich(const ChainOutput& out, double n_par, int m) {
  SandwichReport rep;
  rep.middle = batch_mean_report(need_series(out, series_middle()));
  rep.middle.observable = "spin_middle";
  rep.middle.seed = out.seed;

  rep.connection = batch_mean_report(need_series(out, series_spin_connection()));
  rep.connection.observable = series_spin_connection();
  rep.connection.seed = out.seed;

  rep.upper = rep.connection.estimate / (2.0 * n_par);
  const auto bx = batch_mean_report(need_series(out, series_ntilde_pow(0)));
  const auto by = batch_mean_report(need_series(out, series_ntilde_pow(1)));
  const double b_hat = std::max(bx.estimate, by.estimate);
  rep.c1 = 1.0 / (2.0 * n_par) * std::pow(b_hat, -1.0 / (1 << (m - 1)));
  rep.lower = rep.c1 * std::pow(rep.connection.estimate, 1.0 + 1.0 / (1 << (m - 1)));
  return rep;
}

double poisson_lambda(int alpha, int delta, int multiplicity, double n_par) {
  const double base = std::max(std::exp(n_par / 2.0), 2.0 * std::numbers::e / n_par);
  return static_cast<double>(delta) / multiplicity * (n_par / 2.0) *
         std::pow(base, alpha / 2.0);
}

std::vector<BoundCheck> poisson_tail_check(const ChainOutput& out, double n_par,
                                           int a_min, int a_max) {
  const double lambda = poisson_lambda(2, 1, 1, n_par);
  std::vector<BoundCheck> checks;
  for (int a = a_min; a <= a_max; ++a) {
    const auto rep = batch_mean_report(need_series(out, series_edge_tail(a)));
    BoundCheck c;
    c.quantity = "P(k_e >= " + std::to_string(a) + ")";
    c.estimate = rep.estimate;
    c.se = rep.se;
    double bound = std::pow(lambda, a);
    for (int i = 2; i <= a; ++i) bound /= i;
    c.bound = bound;
    c.satisfied = c.estimate <= c.bound + 3.0 * c.se;
    c.margin = c.bound + 3.0 * c.se - c.estimate;
    checks.push_back(c);
  }
  return checks;
}

double rho_upper_bound(int k, int max_degree, double n_par) {
  const double base = std::max(std::exp(n_par / 2.0), 2.0 * std::numbers::e / n_par);
  return n_par * std::pow(static_cast<double>(max_degree) * max_degree * base, k / 2.0);
}

// ---------------------------------------------------------------------------
// Green function on the killed box

namespace {

// y = (I - P) x with P the one-step kernel of the walk killed outside the box
void apply_killed(int L, const std::vector<double>& x, std::vector<double>& y) {
  for (int r = 0; r < L; ++r)
    for (int c = 0; c < L; ++c) {
      double nb = 0.0;
      if (r > 0) nb += x[(r - 1) * L + c];
      if (r + 1 < L) nb += x[(r + 1) * L + c];
      if (c > 0) nb += x[r * L + c - 1];
      if (c + 1 < L) nb += x[r * L + c + 1];
      y[r * L + c] = x[r * L + c] - 0.25 * nb;
    }
}

}  // namespace

std::vector<double> green_column(int box_side, int row, int col) {
  const int L = box_side;
  if (L < 2 || row < 0 || row >= L || col < 0 || col >= L)
    throw std::invalid_argument("green_column: bad arguments");
  const int n = L * L;
  std::vector<double> b(n, 0.0), x(n, 0.0), r(n), p(n), ap(n);
  b[row * L + col] = 1.0;
  r = b;
  p = r;
  double rs = 0.0;
  for (double v : r) rs += v * v;
  for (int it = 0; it < 20 * L && rs > 1e-26; ++it) {
    apply_killed(L, p, ap);
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    const double alpha = rs / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    double rs2 = 0.0;
    for (double v : r) rs2 += v * v;
    const double beta = rs2 / rs;
    rs = rs2;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return x;
}

GreenFit green_log_fit(int box_side, int r_min, int r_max) {
  const int L = box_side;
  if (r_min < 1 || r_max <= r_min || r_max >= L / 2)
    throw std::invalid_argument("green_log_fit: bad range");
  const int cr = L / 2, cc = L / 2;
  const auto col = green_column(L, cr, cc);
  const double gxx = col[cr * L + cc];

  GreenFit fit;
  fit.neighbor_gap = gxx - col[cr * L + cc + 1];

  // fit the additive constant with the slope pinned at 2/pi
  std::vector<double> gaps;
  KahanSum csum;
  for (int r = r_min; r <= r_max; ++r) {
    const double gap = gxx - col[cr * L + cc + r];
    gaps.push_back(gap);
    csum.add(gap - 2.0 / std::numbers::pi * std::log(r));
  }
  fit.constant = static_cast<double>(csum.value()) / (r_max - r_min + 1);
  for (int r = r_min; r <= r_max; ++r) {
    GreenGap g;
    g.gap = gaps[r - r_min];
    g.model = 2.0 / std::numbers::pi * std::log(r) + fit.constant;
    g.deviation = g.gap - g.model;
    fit.max_residual = std::max(fit.max_residual, std::fabs(g.deviation));
    fit.gaps.push_back(g);
  }
  return fit;
}

}  // namespace rwls
