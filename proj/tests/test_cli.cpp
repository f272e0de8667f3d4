#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rwls/config.hpp"

using namespace rwls;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "rwls_cli_test";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
  fs::path p = temp_dir() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RWLS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("missing config exits 2") {
  CHECK(run_cli("--config /nonexistent/nothing.json") == 2);
}

TEST_CASE("invalid config exits 3 and names the key") {
  const auto p = write_config("bad_beta.json",
                              {{"graph", {{"kind", "single_edge"}}}, {"beta", -1.0}});
  const std::string cmd =
      std::string(RWLS_CLI_PATH) + " --config " + p.string() + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[512];
  std::string output;
  while (fgets(buf, sizeof buf, pipe)) output += buf;
  const int rc = WEXITSTATUS(pclose(pipe));
  CHECK(rc == 3);
  CHECK(output.find("beta") != std::string::npos);
}

TEST_CASE("defaults are filled for a minimal config") {
  const RunConfig cfg = parse_config({{"engine", "mcmc"}});
  CHECK(cfg.m_cap == 64);
  CHECK(cfg.burn_in == 1000);
  CHECK(cfg.betas.size() == 1);
  CHECK_FALSE(cfg.config_hash.empty());
}

TEST_CASE("exact engine run produces the closed-form record") {
  nlohmann::json j = {
      {"graph", {{"kind", "single_edge"}}},
      {"weight", {{"kind", "constant"}}},
      {"N", 2.0},
      {"beta", 0.5},
      {"engine", "exact"},
      {"exact", {{"t_max", 40}}},
      {"observables", {"partition"}},
  };
  const auto cfgfile = write_config("exact.json", j);
  const fs::path out = temp_dir() / "exact_out";
  CHECK(run_cli("--config " + cfgfile.string() + " --out " + out.string()) == 0);
  const std::string content = slurp(out.string() + ".jsonl");
  REQUIRE_FALSE(content.empty());
  const auto rec = nlohmann::json::parse(content.substr(0, content.find('\n')));
  CHECK(rec.at("quantity") == "partition");
  CHECK(std::fabs(rec.at("value").get<double>() - 4.0 / 3.0) < 1e-10);
  CHECK(rec.contains("config_hash"));

  // the resolved config is serialized next to the records, hash included
  REQUIRE(fs::exists(out.string() + ".config.json"));
  std::ifstream cfg_in(out.string() + ".config.json");
  nlohmann::json resolved;
  cfg_in >> resolved;
  CHECK(resolved.at("config_hash") == rec.at("config_hash"));
}

TEST_CASE("structured class_moment observable") {
  nlohmann::json j = {
      {"graph", {{"kind", "single_edge"}}},
      {"weight", {{"kind", "constant"}}},
      {"N", 2.0},
      {"beta", 0.5},
      {"engine", "exact"},
      {"exact", {{"t_max", 40}}},
      {"observables",
       nlohmann::json::array(
           {nlohmann::json{{"op", "class_moment"}, {"loop", {0, 1, 0}}, {"a", 1}}})},
  };
  const auto records = dispatch(parse_config(j));
  REQUIRE(records.size() == 1);
  // Poisson mean N beta^2 / 2 of the length-two class
  CHECK(std::fabs(records[0].value - 0.25) < 1e-10);
  CHECK(records[0].params == "[0,1,0]");
}

TEST_CASE("threshold engine reports the non-interacting beta") {
  nlohmann::json j = {
      {"weight", {{"kind", "constant"}}},
      {"engine", "threshold"},
      {"threshold", {{"dim", 2}, {"k_max", 6}}},
  };
  const RunConfig cfg = parse_config(j);
  const auto records = dispatch(cfg);
  bool found = false;
  for (const auto& r : records)
    if (r.quantity == "beta_tilde") {
      found = true;
      CHECK(r.value == doctest::Approx(0.25).epsilon(1e-12));
    }
  CHECK(found);
}

TEST_CASE("mcmc engine writes one file per chain plus the merged report") {
  nlohmann::json j = {
      {"graph", {{"kind", "single_edge"}}},
      {"weight", {{"kind", "constant"}}},
      {"beta", 0.5},
      {"engine", "mcmc"},
      {"mcmc",
       {{"m_cap", 20}, {"sweeps", 2000}, {"burn_in", 100}, {"thin", 1}, {"seeds", {1, 2}}}},
      {"observables", {"rho:2"}},
      {"output", {{"path", (temp_dir() / "mc_out").string()}}},
  };
  RunConfig cfg = parse_config(j);
  const auto records = dispatch(cfg);
  emit_results(records, cfg, (temp_dir() / "mc_out").string(), OutputFormat::jsonl);
  CHECK(fs::exists(temp_dir() / "mc_out_chain1.jsonl"));
  CHECK(fs::exists(temp_dir() / "mc_out_chain2.jsonl"));
  CHECK(fs::exists(temp_dir() / "mc_out.jsonl"));
  REQUIRE_FALSE(records.empty());
  CHECK(records[0].quantity == "rho:2");
  CHECK(std::fabs(records[0].value - 0.125) < 5.0 * records[0].se + 0.02);
}

TEST_CASE("determinism: identical config and seed give identical bytes") {
  nlohmann::json j = {
      {"graph", {{"kind", "path"}, {"n", 3}}},
      {"weight", {{"kind", "factorial"}}},
      {"beta", 0.4},
      {"engine", "mcmc"},
      {"mcmc", {{"m_cap", 10}, {"sweeps", 500}, {"burn_in", 50}, {"thin", 1}, {"seeds", {9}}}},
      {"observables", {"rho:2"}},
      {"output", {{"path", (temp_dir() / "det_a").string()}, {"format", "both"}}},
  };
  RunConfig cfg = parse_config(j);
  auto rec1 = dispatch(cfg);
  emit_results(rec1, cfg, (temp_dir() / "det_a").string(), OutputFormat::both);
  cfg.out_path = (temp_dir() / "det_b").string();
  auto rec2 = dispatch(cfg);
  emit_results(rec2, cfg, (temp_dir() / "det_b").string(), OutputFormat::both);
  CHECK(slurp(temp_dir() / "det_a.jsonl") == slurp(temp_dir() / "det_b.jsonl"));
  CHECK(slurp(temp_dir() / "det_a.csv") == slurp(temp_dir() / "det_b.csv"));
}

TEST_CASE("csv has the stable header and one line per record") {
  std::vector<ResultRecord> records(1);
  records[0].quantity = "partition";
  records[0].value = 1.25;
  RunConfig cfg = parse_config({{"engine", "exact"}});
  emit_results(records, cfg, (temp_dir() / "one").string(), OutputFormat::csv);
  std::ifstream in(temp_dir() / "one.csv");
  std::string header, line, extra;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "quantity,params,beta,value,se,n,n_eff,t_max,tail,seed,config_hash");
  CHECK(line.find("partition") == 0);
  CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("empty records are an output failure") {
  RunConfig cfg = parse_config({{"engine", "exact"}});
  CHECK_THROWS_AS(emit_results({}, cfg, (temp_dir() / "x").string(), OutputFormat::csv),
                  std::runtime_error);
}

TEST_CASE("engine failure exits 5") {
  // enumeration budget guard trips inside the engine, not in validation
  const auto p = write_config(
      "huge.json", {{"weight", {{"kind", "constant"}}},
                    {"engine", "threshold"},
                    {"threshold", {{"dim", 3}, {"k_max", 14}}}});
  CHECK(run_cli("--config " + p.string()) == 5);
}

TEST_CASE("seed override changes the resolved hash") {
  nlohmann::json j = {{"engine", "exact"}, {"observables", {"partition"}}};
  RunConfig a = parse_config(j);
  RunConfig b = parse_config(j);
  b.seed = 99;
  b.seeds = {99};
  b.config_hash = fnv1a_hex(b.resolved().dump());
  CHECK(a.config_hash != b.config_hash);
}

TEST_CASE("rpm engine partition record") {
  nlohmann::json j = {
      {"graph", {{"kind", "single_edge"}}},
      {"weight", {{"kind", "constant"}}},
      {"N", 2.0},
      {"beta", 0.5},
      {"engine", "rpm_exact"},
      {"rpm", {{"total_cap", 40}}},
  };
  const auto records = dispatch(parse_config(j));
  REQUIRE_FALSE(records.empty());
  CHECK(records[0].quantity == "rpm_partition");
  CHECK(std::fabs(records[0].value - 4.0 / 3.0) < 1e-10);
}
