#include "pssm/cli/commands.hpp"
#include "pssm/cli/config.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pssm_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PSSM_QML_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_config(const fs::path& dir, const std::string& command, const json& cfg, const std::string& extra = "") {
  write_file(dir / "config.json", cfg.dump(2));
  return run(command + " --config " + (dir / "config.json").string() + " --out " + (dir / "out").string() + " " + extra,
             dir / (command + ".log"));
}

json iid_config(long T, std::uint64_t seed) {
  return {{"model", {{"id", "iid-gaussian"}, {"params", {0.4}}, {"sigma2", 1.0}}},
          {"data", {{"simulate", {{"T", T}, {"seed", seed}}}}}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("version") {
    const fs::path dir = scratch("version");
    CHECK(run("--version", dir / "v.log") == 0);
    const std::string v = read_file(dir / "v.log");
    CHECK(v.find("xoshiro256**") != std::string::npos);
    CHECK(v.find("no-2pi") != std::string::npos);
  }

  TEST_CASE("simulate writes a deterministic path") {
    const fs::path dir = scratch("simulate");
    json cfg = {{"model", {{"id", "heston"}}}, {"data", {{"simulate", {{"T", 100}, {"seed", 3}, {"latent", true}}}}}};
    REQUIRE(run_config(dir, "simulate", cfg) == 0);
    const pssm::Mat obs = pssm::cli::read_csv((dir / "out" / "obs.csv").string());
    CHECK(obs.rows() == 100);
    CHECK(obs.cols() == 2);
    CHECK(pssm::cli::read_csv((dir / "out" / "latent.csv").string()).cols() == 3);
    const std::string first = read_file(dir / "out" / "obs.csv");
    CHECK(first.rfind("t,", 0) == 0);
    const json manifest = json::parse(read_file(dir / "out" / "manifest.json"));
    CHECK(manifest["seed"] == 3);
    CHECK(manifest["rng"] == "xoshiro256**");
    REQUIRE(run_config(dir, "simulate", cfg) == 0);
    CHECK(read_file(dir / "out" / "obs.csv") == first);
    REQUIRE(run_config(dir, "simulate", cfg, "--seed 4") == 0);
    CHECK(read_file(dir / "out" / "obs.csv") != first);
  }

  TEST_CASE("input errors exit with 2") {
    const fs::path dir = scratch("input");
    CHECK(run_config(dir, "simulate", {{"model", {{"id", "heston"}}}, {"data", {{"simulate", {{"T", 10}}}}}}) == 2);
    CHECK(run_config(dir, "simulate", {{"model", {{"id", "nope"}}}, {"data", {{"simulate", {{"T", 10}, {"seed", 1}}}}}}) == 2);
    CHECK(run_config(dir, "simulate", {{"model", {{"id", "heston"}}}, {"bogus", 1}}) == 2);
    write_file(dir / "bad.csv", "t,x\n1,0.5\n2,abc\n");
    CHECK(run_config(dir, "estimate", {{"model", {{"id", "iid-gaussian"}}}, {"data", {{"path", (dir / "bad.csv").string()}}}}) == 2);
    CHECK(run("estimate --config " + (dir / "missing.json").string(), dir / "m.log") == 2);
    CHECK(run("frobnicate", dir / "f.log") == 2);
  }

  TEST_CASE("estimate on i.i.d. data returns the sample mean") {
    const fs::path dir = scratch("estimate");
    json cfg = iid_config(200, 5);
    cfg["estimate"] = {{"path_grid", {50, 100, 200}}};
    REQUIRE(run_config(dir, "simulate", cfg) == 0);
    const pssm::Mat obs = pssm::cli::read_csv((dir / "out" / "obs.csv").string());
    json est_cfg = cfg;
    est_cfg["data"] = {{"path", (dir / "out" / "obs.csv").string()}};
    REQUIRE(run_config(dir, "estimate", est_cfg) == 0);
    const json est = json::parse(read_file(dir / "out" / "estimate.json"));
    CHECK(est["theta_hat"]["mu"].get<double>() == doctest::Approx(obs.mean()).epsilon(1e-8));
    CHECK(est["converged"] == true);
    const pssm::Mat path = pssm::cli::read_csv((dir / "out" / "path.csv").string());
    REQUIRE(path.rows() == 3);
    CHECK(path(0, 0) == doctest::Approx(obs.topRows(50).mean()).epsilon(1e-8));
  }

  TEST_CASE("Heston estimate converges") {
    const fs::path dir = scratch("heston");
    json cfg = {{"model", {{"id", "heston"}}},
                {"data", {{"simulate", {{"T", 2000}, {"seed", 7}}}}},
                {"estimate", {{"starts", 2}}}};
    REQUIRE(run_config(dir, "estimate", cfg) == 0);
    const json est = json::parse(read_file(dir / "out" / "estimate.json"));
    CHECK(est["converged"] == true);
    CHECK(est["grad_norm"].get<double>() < 1e-6);
  }

  TEST_CASE("asymptotics") {
    const fs::path dir = scratch("asymptotics");
    json cfg = {{"model", {{"id", "heston"}, {"free", {"sigma"}}}}, {"asymptotics", {{"theta", {0.3}}}}};
    REQUIRE(run_config(dir, "asymptotics", cfg) == 0);
    const json cov = json::parse(read_file(dir / "out" / "covariance.json"));
    CHECK(cov["std"]["sigma"].get<double>() == doctest::Approx(3.2871).epsilon(1e-4));
    CHECK(cov["diagnostics"]["poisson_alpha_residual"].get<double>() < 1e-10);

    json emp = iid_config(500, 9);
    emp["asymptotics"] = {{"method", "empirical"}};
    REQUIRE(run_config(dir, "asymptotics", emp) == 0);
    const json e = json::parse(read_file(dir / "out" / "covariance.json"));
    CHECK(e["std"]["mu"].get<double>() == doctest::Approx(1.0).epsilon(0.2));
  }

  TEST_CASE("hypothesis tests") {
    const fs::path dir = scratch("test");
    json cfg = iid_config(400, 11);
    cfg["model"]["estimate_variance"] = true;
    cfg["model"]["params"] = {0.0, 1.0};
    cfg["test"] = {{"pin", {{"mu", 0.0}}}};
    REQUIRE(run_config(dir, "test", cfg) == 0);
    const json t = json::parse(read_file(dir / "out" / "test.json"));
    REQUIRE(t["results"].size() == 3);
    for (const auto& r : t["results"]) {
      CHECK(r["df"] == 1);
      CHECK(r["p_value"].get<double>() >= 0.0);
      CHECK(r["p_value"].get<double>() <= 1.0);
    }
    json rank = cfg;
    rank["test"] = {{"R", {{1.0, 0.0}, {2.0, 0.0}}}, {"r", {0.0, 0.0}}};
    CHECK(run_config(dir, "test", rank) == 4);
  }
}
