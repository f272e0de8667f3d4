#include "rwls/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <thread>

#include "rwls/estimators.hpp"
#include "rwls/rpm.hpp"
#include "rwls/rwls_exact.hpp"
#include "rwls/threshold.hpp"

namespace rwls {

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

namespace {

using nlohmann::json;

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (...) {
    throw ConfigError{key, "wrong type"};
  }
}

template <class T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError{key, "missing"};
  try {
    return j.at(key).get<T>();
  } catch (...) {
    throw ConfigError{key, "wrong type"};
  }
}

}  // namespace

Graph RunConfig::build_graph() const {
  const std::string kind = require<std::string>(graph_spec, "kind");
  if (kind == "single_edge") return Graph::single_edge();
  if (kind == "path") return Graph::path(require<int>(graph_spec, "n"));
  if (kind == "cycle") return Graph::cycle(require<int>(graph_spec, "n"));
  if (kind == "torus")
    return Graph::torus(require<int>(graph_spec, "L"), get_or<int>(graph_spec, "d", 2));
  if (kind == "box")
    return Graph::box(require<int>(graph_spec, "L"), get_or<int>(graph_spec, "d", 2));
  throw ConfigError{"graph.kind", "unknown graph kind '" + kind + "'"};
}

WeightFunction RunConfig::build_weight() const {
  const std::string kind = require<std::string>(weight_spec, "kind");
  if (kind == "constant") return WeightFunction::constant();
  if (kind == "spin") return WeightFunction::spin(require<int>(weight_spec, "N"));
  if (kind == "factorial") return WeightFunction::factorial();
  if (kind == "pairwise")
    return WeightFunction::pairwise(require<double>(weight_spec, "alpha"));
  if (kind == "table")
    return WeightFunction::table(require<std::vector<double>>(weight_spec, "values"));
  throw ConfigError{"weight.kind", "unknown weight kind '" + kind + "'"};
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  if (!j.is_object()) throw ConfigError{"<root>", "config must be a JSON object"};
  cfg.graph_spec = j.contains("graph") ? j.at("graph") : json{{"kind", "single_edge"}};
  cfg.weight_spec = j.contains("weight") ? j.at("weight") : json{{"kind", "constant"}};
  cfg.n_par = get_or<double>(j, "N", 2.0);
  if (cfg.n_par <= 0.0) throw ConfigError{"N", "must be > 0"};

  if (j.contains("beta_grid"))
    cfg.betas = require<std::vector<double>>(j, "beta_grid");
  else
    cfg.betas = {get_or<double>(j, "beta", 0.5)};
  if (cfg.betas.empty()) throw ConfigError{"beta_grid", "must be nonempty"};
  for (double b : cfg.betas)
    if (b < 0.0) throw ConfigError{"beta", "must be >= 0"};

  const std::string engine = get_or<std::string>(j, "engine", "exact");
  if (engine == "exact") cfg.engine = EngineKind::exact;
  else if (engine == "rpm_exact") cfg.engine = EngineKind::rpm_exact;
  else if (engine == "mcmc") cfg.engine = EngineKind::mcmc;
  else if (engine == "threshold") cfg.engine = EngineKind::threshold;
  else if (engine == "green") cfg.engine = EngineKind::green;
  else throw ConfigError{"engine", "unknown engine '" + engine + "'"};

  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);

  const json exact = j.contains("exact") ? j.at("exact") : json::object();
  cfg.t_max = get_or<int>(exact, "t_max", 20);
  if (cfg.t_max < 0 || cfg.t_max % 2) throw ConfigError{"exact.t_max", "must be even and >= 0"};

  const json rpm = j.contains("rpm") ? j.at("rpm") : json::object();
  cfg.total_cap = get_or<int>(rpm, "total_cap", 12);
  cfg.per_edge_cap = get_or<int>(rpm, "per_edge_cap", -1);
  cfg.track_len = get_or<int>(rpm, "track_len", 4);

  const json mcmc = j.contains("mcmc") ? j.at("mcmc") : json::object();
  cfg.m_cap = get_or<int>(mcmc, "m_cap", 64);
  if (cfg.m_cap < 2) throw ConfigError{"mcmc.m_cap", "must be >= 2"};
  cfg.sweeps = get_or<long long>(mcmc, "sweeps", 10000);
  if (cfg.sweeps < 1) throw ConfigError{"mcmc.sweeps", "must be >= 1"};
  cfg.burn_in = get_or<long long>(mcmc, "burn_in", 1000);
  if (cfg.burn_in < 0) throw ConfigError{"mcmc.burn_in", "must be >= 0"};
  cfg.thin = get_or<int>(mcmc, "thin", 0);
  cfg.cycle_max_len = get_or<int>(mcmc, "cycle_max_len", 4);
  cfg.seeds = get_or<std::vector<std::uint64_t>>(mcmc, "seeds", {cfg.seed});
  if (cfg.seeds.empty()) throw ConfigError{"mcmc.seeds", "must be nonempty"};
  cfg.cs_m = get_or<int>(mcmc, "cs_m", 2);

  const json thr = j.contains("threshold") ? j.at("threshold") : json::object();
  cfg.dim = get_or<int>(thr, "dim", 2);
  if (cfg.dim < 1 || cfg.dim > 3) throw ConfigError{"threshold.dim", "must be 1..3"};
  cfg.k_max = get_or<int>(thr, "k_max", 10);
  const std::string method = get_or<std::string>(thr, "method", "exact");
  if (method == "exact") cfg.threshold_exact = true;
  else if (method == "mc") cfg.threshold_exact = false;
  else throw ConfigError{"threshold.method", "must be 'exact' or 'mc'"};
  cfg.samples = get_or<long long>(thr, "samples", 100000);

  const json green = j.contains("green") ? j.at("green") : json::object();
  cfg.box_side = get_or<int>(green, "L", 128);
  cfg.r_min = get_or<int>(green, "r_min", 2);
  cfg.r_max = get_or<int>(green, "r_max", 16);

  if (j.contains("observables"))
    for (const auto& o : j.at("observables")) {
      if (o.is_string())
        cfg.observables.push_back({o.get<std::string>(), json{}});
      else if (o.is_object())
        cfg.observables.push_back({require<std::string>(o, "op"), o});
      else
        throw ConfigError{"observables", "entries must be strings or objects"};
    }

  const json out = j.contains("output") ? j.at("output") : json::object();
  cfg.out_path = get_or<std::string>(out, "path", "out");
  const std::string fmt = get_or<std::string>(out, "format", "jsonl");
  if (fmt == "jsonl") cfg.format = OutputFormat::jsonl;
  else if (fmt == "csv") cfg.format = OutputFormat::csv;
  else if (fmt == "both") cfg.format = OutputFormat::both;
  else throw ConfigError{"output.format", "must be jsonl, csv or both"};

  // fail early on bad graph/weight parameters
  try {
    cfg.build_graph();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError{"graph", e.what()};
  }
  try {
    cfg.build_weight();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError{"weight", e.what()};
  }

  cfg.config_hash = fnv1a_hex(cfg.resolved().dump());
  return cfg;
}

nlohmann::json RunConfig::resolved() const {
  nlohmann::ordered_json j;
  j["graph"] = graph_spec;
  j["weight"] = weight_spec;
  j["N"] = n_par;
  j["beta_grid"] = betas;
  j["engine"] = static_cast<int>(engine);
  j["seed"] = seed;
  j["exact"] = {{"t_max", t_max}};
  j["rpm"] = {{"total_cap", total_cap}, {"per_edge_cap", per_edge_cap}, {"track_len", track_len}};
  j["mcmc"] = {{"m_cap", m_cap},     {"sweeps", sweeps},
               {"burn_in", burn_in}, {"thin", thin},
               {"cycle_max_len", cycle_max_len}, {"seeds", seeds},
               {"cs_m", cs_m}};
  j["threshold"] = {{"dim", dim}, {"k_max", k_max}, {"exact", threshold_exact}, {"samples", samples}};
  j["green"] = {{"L", box_side}, {"r_min", r_min}, {"r_max", r_max}};
  std::vector<std::string> obs;
  for (const auto& o : observables) obs.push_back(o.raw.is_null() ? o.name : o.raw.dump());
  j["observables"] = obs;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError{"<parse>", e.what()};
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// dispatch

namespace {

std::pair<int, int> parse_pair(const std::string& s, const std::string& key) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError{key, "expected 'a,b'"};
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (...) {
    throw ConfigError{key, "expected integers 'a,b'"};
  }
}

std::vector<ResultRecord> run_exact(const RunConfig& cfg) {
  const Graph g = cfg.build_graph();
  const WeightFunction u = cfg.build_weight();
  std::vector<ResultRecord> records;
  for (double beta : cfg.betas) {
    for (const auto& obs : cfg.observables) {
      ResultRecord r;
      r.beta = beta;
      r.t_max = cfg.t_max;
      r.seed = cfg.seed;
      if (obs.name == "partition") {
        auto res = partition_function(g, u, cfg.n_par, beta, cfg.t_max);
        r.quantity = "partition";
        r.value = static_cast<double>(res.value);
        r.tail = static_cast<double>(res.tail);
      } else if (obs.name.rfind("rho:", 0) == 0) {
        const int k = std::stoi(obs.name.substr(4));
        auto res = density_rho(g, u, cfg.n_par, beta, cfg.t_max, k);
        r.quantity = obs.name;
        r.value = static_cast<double>(res.value);
      } else if (obs.name.rfind("two_point:", 0) == 0) {
        auto [x, y] = parse_pair(obs.name.substr(10), "observables");
        auto res = two_point(g, u, cfg.n_par, beta, cfg.t_max, x, y);
        r.quantity = obs.name;
        r.value = static_cast<double>(res.value);
      } else if (obs.name.rfind("connection:", 0) == 0) {
        auto [x, y] = parse_pair(obs.name.substr(11), "observables");
        r.quantity = obs.name;
        r.value = static_cast<double>(
            exact_connection_probability(g, u, cfg.n_par, beta, cfg.t_max, x, y));
      } else if (obs.name == "class_moment") {
        const auto verts = obs.raw.at("loop").get<std::vector<int>>();
        const int a = obs.raw.value("a", 1);
        RootedLoop loop;
        loop.seq = verts;
        auto res = class_moment(g, u, cfg.n_par, beta, cfg.t_max, canonicalize(g, loop), a);
        r.quantity = "class_moment:a=" + std::to_string(a);
        r.params = obs.raw.at("loop").dump();
        r.value = static_cast<double>(res.value);
      } else {
        throw ConfigError{"observables", "unknown exact observable '" + obs.name + "'"};
      }
      records.push_back(r);
    }
  }
  return records;
}

std::vector<ResultRecord> run_rpm_exact(const RunConfig& cfg) {
  const Graph g = cfg.build_graph();
  const WeightFunction u = cfg.build_weight();
  std::vector<ResultRecord> records;
  const bool single_edge = g.edge_count() == 1;
  const int cap = cfg.total_cap;
  for (double beta : cfg.betas) {
    ResultRecord r;
    r.beta = beta;
    r.t_max = cap;
    r.seed = cfg.seed;
    r.quantity = "rpm_partition";
    if (single_edge && cap > 16) {
      r.value = static_cast<double>(rpm_partition_single_edge(u, cfg.n_par, beta, cap));
      records.push_back(r);
      continue;
    }
    RpmTable table(g, {.per_edge = cfg.per_edge_cap, .total = cap},
                   {.track_len = cfg.track_len, .pairs = {}});
    auto mom = rpm_evaluate(table, u, cfg.n_par, beta);
    r.value = static_cast<double>(mom.z);
    records.push_back(r);
    for (size_t i = 0; i < table.tracked().size(); ++i) {
      ResultRecord c = r;
      c.quantity = "rpm_class_mean";
      std::string w;
      for (Vertex v : table.tracked()[i].word()) w += std::to_string(v) + ",";
      c.params = w;
      c.value = static_cast<double>(mom.class_mean[i]);
      records.push_back(c);
    }
  }
  return records;
}

std::vector<ResultRecord> run_mcmc(const RunConfig& cfg) {
  const Graph g = cfg.build_graph();
  const WeightFunction u = cfg.build_weight();

  MeasurementPlan plan;
  for (const auto& obs : cfg.observables) {
    if (obs.name.rfind("rho:", 0) == 0)
      plan.cycle_lengths.push_back(std::stoi(obs.name.substr(4)));
    else if (obs.name.rfind("connection:", 0) == 0) {
      auto [x, y] = parse_pair(obs.name.substr(11), "observables");
      plan.connection_pairs.emplace_back(x, y);
    } else if (obs.name == "edge_tails")
      plan.edge_tail_thresholds = {3, 4, 5, 6, 7, 8};
    else if (obs.name.rfind("local_moment:", 0) == 0) {
      auto [o, m] = parse_pair(obs.name.substr(13), "observables");
      plan.local_time_moments.emplace_back(o, m);
    } else if (obs.name.rfind("sandwich:", 0) == 0) {
      auto [x, y] = parse_pair(obs.name.substr(9), "observables");
      plan.spin_pair = {x, y};
      plan.spin_cs_m = cfg.cs_m;
    } else if (obs.name.rfind("micro_localtime:", 0) == 0) {
      const int K = std::stoi(obs.name.substr(16));
      for (int k = 2; k <= K; k += 2) plan.cycle_lengths.push_back(k);
    } else {
      throw ConfigError{"observables", "unknown mcmc observable '" + obs.name + "'"};
    }
  }
  std::sort(plan.cycle_lengths.begin(), plan.cycle_lengths.end());
  plan.cycle_lengths.erase(
      std::unique(plan.cycle_lengths.begin(), plan.cycle_lengths.end()),
      plan.cycle_lengths.end());

  std::vector<int> micro_K;
  for (const auto& obs : cfg.observables)
    if (obs.name.rfind("micro_localtime:", 0) == 0)
      micro_K.push_back(std::stoi(obs.name.substr(16)));

  std::vector<ResultRecord> merged;
  for (double beta : cfg.betas) {
    std::vector<ChainOutput> outs(cfg.seeds.size());
    std::vector<std::thread> workers;
    for (size_t i = 0; i < cfg.seeds.size(); ++i)
      workers.emplace_back([&, i]() {
        ChainOptions opt;
        opt.m_cap = cfg.m_cap;
        opt.cycle_max_len = cfg.cycle_max_len;
        opt.seed = cfg.seeds[i];
        outs[i] = run_chain(g, u, cfg.n_par, beta, opt, cfg.sweeps, cfg.burn_in, cfg.thin, plan);
      });
    for (auto& w : workers) w.join();

    // per-chain records in seed order, then inverse-variance merge
    std::vector<std::vector<ResultRecord>> per_chain(outs.size());
    for (size_t i = 0; i < outs.size(); ++i) {
      const ChainOutput& out = outs[i];
      auto push = [&](const EstimateReport& rep) {
        ResultRecord r;
        r.quantity = rep.observable;
        r.beta = beta;
        r.value = rep.estimate;
        r.se = rep.se;
        r.n = rep.n;
        r.n_eff = rep.n_eff;
        r.seed = out.seed;
        per_chain[i].push_back(r);
      };
      for (int k : plan.cycle_lengths) push(estimate_rho(out, k, g.vertex_count()));
      for (int K : micro_K) push(micro_localtime_partial(out, K, g.vertex_count()));
      for (auto [x, y] : plan.connection_pairs) push(estimate_connection(out, x, y));
      for (auto [o, m] : plan.local_time_moments) push(estimate_localtime_moment(out, o, m));
      for (int a : plan.edge_tail_thresholds) {
        auto rep = batch_mean_report(out.series.at(series_edge_tail(a)));
        rep.observable = series_edge_tail(a);
        rep.seed = out.seed;
        push(rep);
      }
      if (plan.spin_pair) {
        auto rep = batch_mean_report(out.series.at(series_middle()));
        rep.observable = series_middle();
        rep.seed = out.seed;
        push(rep);
        auto conn = batch_mean_report(out.series.at(series_spin_connection()));
        conn.observable = series_spin_connection();
        conn.seed = out.seed;
        push(conn);
      }
      ResultRecord meta;
      meta.quantity = "chain_meta";
      meta.params = "cap_hit_rate=" + std::to_string(out.cap_hit_rate) +
                    ";tau_int=" + std::to_string(out.tau_int_links) +
                    ";cycle_basis=" + (out.cycle_basis_spanned ? "1" : "0");
      meta.beta = beta;
      meta.n = out.samples;
      meta.seed = out.seed;
      per_chain[i].push_back(meta);
    }

    for (size_t i = 0; i < outs.size(); ++i) {
      // each chain's records also land in a per-seed sidecar file, with the
      // final configuration + rng state for restarts
      std::string base = cfg.out_path + "_chain" + std::to_string(outs[i].seed);
      emit_results(per_chain[i], cfg, base, OutputFormat::jsonl);
      std::ofstream ck(base + ".checkpoint.json");
      if (!ck) throw std::runtime_error("cannot write checkpoint for chain");
      ck << outs[i].final_checkpoint.dump(2) << "\n";
    }

    for (size_t q = 0; q < per_chain[0].size(); ++q) {
      if (per_chain[0][q].quantity == "chain_meta") continue;
      double wsum = 0, vsum = 0;
      long long n = 0;
      double n_eff = 0;
      for (size_t i = 0; i < per_chain.size(); ++i) {
        const auto& r = per_chain[i][q];
        const double w = r.se > 0 ? 1.0 / (r.se * r.se) : 1e12;
        wsum += w;
        vsum += w * r.value;
        n += r.n;
        n_eff += r.n_eff;
      }
      ResultRecord m = per_chain[0][q];
      m.value = vsum / wsum;
      m.se = std::sqrt(1.0 / wsum);
      m.n = n;
      m.n_eff = n_eff;
      m.seed = cfg.seed;
      merged.push_back(m);
    }
  }
  return merged;
}

std::vector<ResultRecord> run_threshold(const RunConfig& cfg) {
  const WeightFunction u = cfg.build_weight();
  std::vector<ResultRecord> records;
  std::vector<ChiEstimate> series;
  if (cfg.threshold_exact) {
    series = chi_exact_series(u, cfg.dim, cfg.k_max);
  } else {
    Rng rng(cfg.seed);
    for (int k = 1; k <= cfg.k_max; ++k)
      series.push_back(chi_mc(u, cfg.dim, k, cfg.samples, rng));
  }
  for (const auto& c : series) {
    ResultRecord r;
    r.quantity = "chi:" + std::to_string(c.k);
    r.params = c.exact ? "exact" : "mc";
    r.value = c.value;
    r.se = c.se;
    r.seed = cfg.seed;
    records.push_back(r);
  }
  const BetaBound bound = beta_lower_bound(series, cfg.dim);
  ResultRecord r;
  r.quantity = "beta_tilde";
  // finite-k surrogate of the inverse-connectivity lower bound
  r.params = "finite_k_surrogate;window=" + std::to_string(bound.window_from) + ".." +
             std::to_string(bound.window_to) +
             ";conservative=" + std::to_string(bound.beta_conservative);
  r.value = bound.beta_fit;
  r.seed = cfg.seed;
  records.push_back(r);
  return records;
}

std::vector<ResultRecord> run_green(const RunConfig& cfg) {
  const GreenFit fit = green_log_fit(cfg.box_side, cfg.r_min, cfg.r_max);
  std::vector<ResultRecord> records;
  for (size_t i = 0; i < fit.gaps.size(); ++i) {
    ResultRecord r;
    r.quantity = "green_gap:r=" + std::to_string(cfg.r_min + static_cast<int>(i));
    r.value = fit.gaps[i].gap;
    r.params = "model=" + std::to_string(fit.gaps[i].model);
    r.seed = cfg.seed;
    records.push_back(r);
  }
  ResultRecord r;
  r.quantity = "green_neighbor_gap";
  r.value = fit.neighbor_gap;
  r.seed = cfg.seed;
  records.push_back(r);
  r.quantity = "green_fit_constant";
  r.value = fit.constant;
  r.params = "max_residual=" + std::to_string(fit.max_residual);
  records.push_back(r);
  return records;
}

}  // namespace

std::vector<ResultRecord> dispatch(const RunConfig& cfg) {
  if (cfg.graph_spec.contains("dump")) {
    const std::string path = cfg.graph_spec.at("dump").get<std::string>();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open graph dump path: " + path);
    cfg.build_graph().write_edge_list(out);
  }
  switch (cfg.engine) {
    case EngineKind::exact: return run_exact(cfg);
    case EngineKind::rpm_exact: return run_rpm_exact(cfg);
    case EngineKind::mcmc: return run_mcmc(cfg);
    case EngineKind::threshold: return run_threshold(cfg);
    case EngineKind::green: return run_green(cfg);
  }
  throw std::logic_error("dispatch: unreachable");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void emit_results(const std::vector<ResultRecord>& records, const RunConfig& cfg,
                  const std::string& base_path, OutputFormat format) {
  if (records.empty()) throw std::runtime_error("emit_results: no records to write");
  if (format == OutputFormat::jsonl || format == OutputFormat::both) {
    const std::string path = base_path + ".jsonl";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot open " + path);
    for (const auto& r : records) {
      nlohmann::ordered_json j;
      j["quantity"] = r.quantity;
      j["params"] = r.params;
      j["beta"] = r.beta;
      j["value"] = r.value;
      j["se"] = r.se;
      j["n"] = r.n;
      j["n_eff"] = r.n_eff;
      j["t_max"] = r.t_max;
      j["tail"] = r.tail;
      j["seed"] = r.seed;
      j["config_hash"] = cfg.config_hash;
      out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error("emit_results: write failed: " + path);
  }
  if (format == OutputFormat::csv || format == OutputFormat::both) {
    const std::string csv_path = base_path + ".csv";
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("emit_results: cannot open " + csv_path);
    out << "quantity,params,beta,value,se,n,n_eff,t_max,tail,seed,config_hash\n";
    for (const auto& r : records) {
      out << r.quantity << "," << '"' << r.params << '"' << "," << fmt_double(r.beta)
          << "," << fmt_double(r.value) << "," << fmt_double(r.se) << "," << r.n << ","
          << fmt_double(r.n_eff) << "," << r.t_max << "," << fmt_double(r.tail) << ","
          << r.seed << "," << cfg.config_hash << "\n";
    }
    if (!out) throw std::runtime_error("emit_results: write failed: " + csv_path);
  }
}

}  // namespace rwls
