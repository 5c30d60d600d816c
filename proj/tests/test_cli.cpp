#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cpfind/simulate.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string cli_path() {
  const char* env = std::getenv("CPFIND_BIN");
  REQUIRE_MESSAGE(env != nullptr, "CPFIND_BIN must point at the cli binary");
  return env;
}

RunResult run_cli(const std::string& args) {
  const fs::path out_file =
      fs::temp_directory_path() / "cpfind_cli_stdout.txt";
  const std::string cmd =
      cli_path() + " " + args + " > " + out_file.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream is(out_file);
  std::stringstream ss;
  ss << is.rdbuf();
  result.out = ss.str();
  fs::remove(out_file);
  return result;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// A csv with induced mean-only level shifts (same variance everywhere).
// Shifts are moderate: a time-constant level shift adds its square to
// Var(Y|x) over windows mixing two regimes, so a large one would honestly
// read as a variance break too. Drivers place breaks at dyadic positions
// the midpoint recursion actually visits.
fs::path write_mean_break_csv(const std::string& name, std::uint64_t seed,
                              Eigen::Index n, Eigen::Index b1,
                              Eigen::Index b2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream os(path);
  os << "t,y,x\n";
  os.precision(12);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double x = normal(rng);
    double level = 0.0;
    if (t >= b1) level += 0.5;
    if (b2 > 0 && t >= b2) level += 0.5;
    const double y = level + 0.4 * std::sin(x) + 0.6 * normal(rng);
    os << t << ',' << y << ',' << x << '\n';
  }
  return path;
}

fs::path write_null_csv(const std::string& name, std::uint64_t seed,
                        Eigen::Index n) {
  return write_mean_break_csv(name, seed, n, n + 1, 0);
}

}  // namespace

TEST_CASE("missing required input is a usage error") {
  CHECK(run_cli("detect --target mean").exit_code == 2);
  CHECK(run_cli("test --input nope.csv").exit_code == 2);  // missing --split
  CHECK(run_cli("bogus").exit_code == 2);
}

TEST_CASE("invalid split is a usage error") {
  const auto csv = write_null_csv("cli_null_split.csv", 1, 200);
  const std::string base =
      "test --input " + csv.string() + " --time-col t --y-col y --x-col x";
  CHECK(run_cli(base + " --split 0").exit_code == 2);
  CHECK(run_cli(base + " --split 200").exit_code == 2);
  CHECK(run_cli(base + " --split 100").exit_code == 0);
  fs::remove(csv);
}

TEST_CASE("zero reps is a usage error") {
  CHECK(run_cli("simulate size-power --reps 0").exit_code == 2);
}

TEST_CASE("detect finds the two induced mean breaks and no variance breaks") {
  const auto csv =
      write_mean_break_csv("cli_two_breaks.csv", 99, 1200, 600, 900);
  const fs::path report_path =
      fs::temp_directory_path() / "cli_two_breaks.json";
  const std::string base = "detect --input " + csv.string() +
                           " --time-col t --y-col y --x-col x --lag 0 "
                           "--lmin 200 --seed 7 --output " +
                           report_path.string();
  const auto mean_run = run_cli(base + " --target mean");
  CHECK(mean_run.exit_code == 0);
  const auto report = nlohmann::json::parse(read_file(report_path));
  REQUIRE(report.contains("breaks"));
  REQUIRE(report["breaks"].size() == 2);
  CHECK(std::abs(report["breaks"][0]["index"].get<int>() - 600) <= 60);
  CHECK(std::abs(report["breaks"][1]["index"].get<int>() - 900) <= 60);
  for (const auto& b : report["breaks"]) CHECK(b["confirmed"].get<bool>());

  const auto var_run = run_cli(base + " --target variance");
  CHECK(var_run.exit_code == 0);
  const auto var_report = nlohmann::json::parse(read_file(report_path));
  CHECK(var_report["breaks"].empty());

  fs::remove(csv);
  fs::remove(report_path);
}

TEST_CASE("test subcommand rarely rejects on null data") {
  int fail_to_reject = 0;
  for (int r = 0; r < 10; ++r) {
    const auto csv =
        write_null_csv("cli_null_" + std::to_string(r) + ".csv", 3000 + r,
                       1000);
    const auto run = run_cli("test --input " + csv.string() +
                             " --time-col t --y-col y --x-col x --split 500");
    CHECK(run.exit_code == 0);
    if (run.out.find("decision=fail to reject") != std::string::npos) {
      ++fail_to_reject;
    }
    fs::remove(csv);
  }
  CHECK(fail_to_reject >= 9);
}

TEST_CASE("alpha monotonicity through the cli") {
  const auto csv = write_mean_break_csv("cli_alpha.csv", 8, 800, 400, 0);
  const std::string base = "test --input " + csv.string() +
                           " --time-col t --y-col y --x-col x --split 400";
  const auto strict = run_cli(base + " --alpha 0.01");
  const auto loose = run_cli(base + " --alpha 0.5");
  CHECK(strict.exit_code == 0);
  CHECK(loose.exit_code == 0);
  const bool strict_rejects =
      strict.out.find("decision=reject") != std::string::npos;
  if (strict_rejects) {
    CHECK(loose.out.find("decision=reject") != std::string::npos);
  }
  fs::remove(csv);
}

TEST_CASE("bands subcommand writes a well-formed csv") {
  const auto csv = write_null_csv("cli_bands.csv", 21, 600);
  const fs::path band_path = fs::temp_directory_path() / "cli_band_out.csv";
  const fs::path report_path = fs::temp_directory_path() / "cli_band.json";
  const auto run = run_cli("bands --input " + csv.string() +
                           " --time-col t --y-col y --x-col x --split 300 "
                           "--target mean --bands-out " +
                           band_path.string() + " --output " +
                           report_path.string());
  CHECK(run.exit_code == 0);

  const auto report = nlohmann::json::parse(read_file(report_path));
  REQUIRE(report["bands"].size() == 1);
  const int rows = report["bands"][0]["rows"].get<int>();

  std::ifstream is(band_path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,center,lower,upper");
  int count = 0;
  double prev_x = -1e300;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    double x, c, lo, hi;
    char comma;
    ls >> x >> comma >> c >> comma >> lo >> comma >> hi;
    CHECK(x > prev_x);  // monotone in x
    CHECK(lo <= c);
    CHECK(c <= hi);
    prev_x = x;
    ++count;
  }
  CHECK(count == rows);
  fs::remove(csv);
  fs::remove(band_path);
  fs::remove(report_path);
}

TEST_CASE("reports are byte-identical across reruns") {
  const auto csv = write_mean_break_csv("cli_det.csv", 5, 900, 450, 0);
  const fs::path r1 = fs::temp_directory_path() / "cli_det1.json";
  const fs::path r2 = fs::temp_directory_path() / "cli_det2.json";

  SUBCASE("detect") {
    const std::string base = "detect --input " + csv.string() +
                             " --time-col t --y-col y --x-col x --lag 0 "
                             "--lmin 200 --seed 42 --output ";
    CHECK(run_cli(base + r1.string()).exit_code == 0);
    CHECK(run_cli(base + r2.string()).exit_code == 0);
    CHECK(read_file(r1) == read_file(r2));
    CHECK(!read_file(r1).empty());
  }
  SUBCASE("simulate") {
    const std::string base =
        "simulate size-power --dgp white --noise normal --n 500 --reps 5 "
        "--target mean --seed 11 --output ";
    CHECK(run_cli(base + r1.string()).exit_code == 0);
    CHECK(run_cli(base + r2.string()).exit_code == 0);
    CHECK(read_file(r1) == read_file(r2));
  }
  fs::remove(csv);
  fs::remove(r1);
  fs::remove(r2);
}

TEST_CASE("simulate bench emits a parseable row and report") {
  const fs::path report_path = fs::temp_directory_path() / "cli_bench.json";
  const auto run =
      run_cli("simulate bench --dgp white --noise normal --n 500 --reps 3 "
              "--seed 7 --output " +
              report_path.string());
  CHECK(run.exit_code == 0);
  CHECK(run.out.find("amd=") != std::string::npos);
  CHECK(run.out.find("adn=") != std::string::npos);
  const auto report = nlohmann::json::parse(read_file(report_path));
  CHECK(report["tests"][0]["amd"].get<double>() >= 0.0);
  CHECK(report["tests"][0]["adn"].get<double>() >= 0.0);
  fs::remove(report_path);
}

TEST_CASE("CPFIND_THREADS does not change simulation results") {
  const fs::path r1 = fs::temp_directory_path() / "cli_thr1.json";
  const fs::path r2 = fs::temp_directory_path() / "cli_thr2.json";
  const std::string base =
      "simulate size-power --dgp white --noise t --n 400 --reps 8 "
      "--target mean --seed 5 --output ";
  const std::string env1 = "CPFIND_THREADS=1 ";
  const std::string env2 = "CPFIND_THREADS=2 ";
  const fs::path out = fs::temp_directory_path() / "cli_thr_stdout.txt";
  REQUIRE(std::system((env1 + cli_path() + " " + base + r1.string() + " > " +
                       out.string() + " 2>/dev/null")
                          .c_str()) == 0);
  REQUIRE(std::system((env2 + cli_path() + " " + base + r2.string() + " > " +
                       out.string() + " 2>/dev/null")
                          .c_str()) == 0);
  CHECK(read_file(r1) == read_file(r2));
  CHECK(!read_file(r1).empty());
  fs::remove(r1);
  fs::remove(r2);
  fs::remove(out);
}

TEST_CASE("size-power row for the tar/powerlaw variance cell") {
  const fs::path report_path = fs::temp_directory_path() / "cli_sp_cell.json";
  const auto run = run_cli(
      "simulate size-power --dgp tar --noise powerlaw --n 1000 "
      "--target variance --reps 100 --seed 7 --output " +
      report_path.string());
  CHECK(run.exit_code == 0);
  const auto report = nlohmann::json::parse(read_file(report_path));
  const double power = report["tests"][0]["power"].get<double>();
  const double size = report["tests"][0]["size"].get<double>();
  CHECK(power >= 0.75);  // 0.91 +- 0.16
  CHECK(power <= 1.0);
  CHECK(size <= 0.10);
  fs::remove(report_path);
}
