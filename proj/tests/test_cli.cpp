#include "aris/report.hpp"

#include <doctest.h>
#include <json.hpp>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static int counter = 0;
  fs::path d = fs::temp_directory_path() /
               ("ariscli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
  fs::create_directories(d);
  return d;
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt";
  const fs::path e = dir / "stderr.txt";
  const std::string cmd = std::string(ARISCLI_PATH) + " " + args + " > " +
                          o.string() + " 2> " + e.string();
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "scenario.cfg";
  std::ofstream(p) << body;
  return p;
}

// small instance so the process-level tests stay fast
const char* kSmallCfg =
    "M = 4\nK = 2\nN = 4\n"
    "gamma = 10 dB\n"
    "p_max = 10 mW\n";

}  // namespace

TEST_CASE("malformed configs exit 1 with a field-level message") {
  const fs::path dir = scratch_dir();

  SUBCASE("missing required field M") {
    const fs::path cfg = write_config(dir, "K = 2\nN = 4\n");
    const CmdResult r = run_cli("solve " + cfg.string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("M") != std::string::npos);
  }
  SUBCASE("unknown field") {
    const fs::path cfg = write_config(dir, "M = 4\nK = 2\nN = 4\nbogus = 1\n");
    const CmdResult r = run_cli("solve " + cfg.string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("bogus") != std::string::npos);
  }
  SUBCASE("non-numeric value") {
    const fs::path cfg = write_config(dir, "M = four\nK = 2\nN = 4\n");
    const CmdResult r = run_cli("solve " + cfg.string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("M") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("solve writes a JSON report with a non-increasing power trace") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = write_config(dir, kSmallCfg);
  const fs::path out = dir / "report.json";
  const CmdResult r =
      run_cli("solve " + cfg.string() + " --seed 7 --scheme active --out " +
                  out.string(),
              dir);
  REQUIRE(r.code == 0);

  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["schema_version"] == aris::kSchemaVersion);
  CHECK(j["scheme"] == "active");
  CHECK(j["converged"].get<bool>());
  // the dB threshold in the file becomes a linear ratio in the snapshot
  CHECK(j["scenario"]["gamma"][0].get<double>() == doctest::Approx(10.0));
  CHECK(j["scenario"]["p_max_w"].get<double>() == doctest::Approx(0.01));

  const auto& iters = j["iters"];
  REQUIRE(iters.size() >= 1);
  double prev = iters[0]["f1_W"].get<double>();
  for (const auto& it : iters) {
    const double f1 = it["f1_W"].get<double>();
    CHECK(f1 <= prev * (1.0 + 1e-6));
    CHECK(it["audit_ok"].get<bool>());
    prev = f1;
  }
  CHECK(j["f1_W"].get<double>() ==
        doctest::Approx(iters.back()["f1_W"].get<double>()));
  fs::remove_all(dir);
}

TEST_CASE("solve without --out streams the report to stdout") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = write_config(dir, kSmallCfg);
  const CmdResult r = run_cli("solve " + cfg.string() + " --seed 3", dir);
  CHECK(r.code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j["seed"] == 3);
  fs::remove_all(dir);
}

TEST_CASE("solve reports infeasible instances with exit code 2") {
  // one BS antenna cannot give two users 10 dB each: interference-limited
  const fs::path dir = scratch_dir();
  const fs::path cfg =
      write_config(dir, "M = 1\nK = 2\nN = 0\ngamma = 10 dB\n");
  const CmdResult r = run_cli("solve " + cfg.string() + " --seed 1", dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("infeasible") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("sweep CSV layout and row count") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = write_config(dir, kSmallCfg);
  const fs::path out = dir / "sweep.csv";
  const CmdResult r = run_cli(
      "sweep " + cfg.string() +
          " --axis N --values 4 --trials 1 --schemes active,no_ris --seed 5 "
          "--out " +
          out.string(),
      dir);
  REQUIRE(r.code == 0);

  std::istringstream csv(slurp(out));
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line ==
        "schema_version,scheme,axis,axis_value,trial,seed,converged,iterations,"
        "f1_W,reflect_W,total_W,min_sinr_margin,min_eh_margin,wall_ms");
  int rows = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);  // schemes x values x trials

  // the summary lands next to the CSV with per-cell means
  const nlohmann::json s =
      nlohmann::json::parse(slurp(out.string() + ".summary.json"));
  CHECK(s["cells"].size() == 2);
  for (const auto& c : s["cells"]) {
    CHECK(c["trials"] == 1);
    CHECK(c["mean_total_W"].get<double>() > 0.0);
  }
  fs::remove_all(dir);
}

TEST_CASE("sweep output is byte-identical across reruns") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = write_config(dir, kSmallCfg);
  const fs::path out1 = dir / "a.csv";
  const fs::path out2 = dir / "b.csv";
  const std::string args =
      "sweep " + cfg.string() +
      " --axis p_max --values 0.01,0.015 --trials 2 --schemes active --seed 9 ";
  REQUIRE(run_cli(args + "--out " + out1.string(), dir).code == 0);
  REQUIRE(run_cli(args + "--out " + out2.string(), dir).code == 0);
  const std::string a = slurp(out1);
  CHECK(a == slurp(out2));
  CHECK(!a.empty());
  CHECK(slurp(out1.string() + ".summary.json") ==
        slurp(out2.string() + ".summary.json"));
  fs::remove_all(dir);
}

TEST_CASE("convergence trajectories are per-cell and non-increasing") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = write_config(dir, kSmallCfg);
  const fs::path out = dir / "conv.csv";
  const CmdResult r = run_cli("convergence " + cfg.string() +
                                  " --seeds 1,2 --pmax-list 0.01,0.015 --out " +
                                  out.string(),
                              dir);
  REQUIRE(r.code == 0);

  std::istringstream csv(slurp(out));
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "schema_version,seed,p_max_W,iter,f1_W");
  std::string prev_cell;
  double prev_f1 = 0.0;
  int cells = 0, rows = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream fields(line);
    std::string ver, seed, pmax, iter, f1;
    std::getline(fields, ver, ',');
    std::getline(fields, seed, ',');
    std::getline(fields, pmax, ',');
    std::getline(fields, iter, ',');
    std::getline(fields, f1, ',');
    const std::string cell = seed + "/" + pmax;
    const double v = std::stod(f1);
    if (cell != prev_cell) {
      ++cells;
      CHECK(iter == "0");
    } else {
      CHECK(v <= prev_f1 * (1.0 + 1e-6));
    }
    prev_cell = cell;
    prev_f1 = v;
  }
  CHECK(cells == 4);  // seeds x budgets
  CHECK(rows >= cells);
  fs::remove_all(dir);
}
