#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cpfind/break_tests.hpp"
#include "cpfind/detect.hpp"
#include "cpfind/errors.hpp"
#include "cpfind/io.hpp"
#include "cpfind/simulate.hpp"
#include "cpfind/version.hpp"

namespace {

using cpfind::Json;

struct DataOptions {
  std::string input;
  std::string time_col = "time";
  std::string y_col = "y";
  std::string x_col;
  int lag = 1;
  bool log_response = false;
};

struct CommonOptions {
  std::string target = "mean";
  double alpha = 0.05;
  std::string bandwidth = "rot";
  std::uint64_t seed = 1;
  std::string output;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--input", d.input, "input csv path")->required();
  cmd->add_option("--time-col", d.time_col, "time column name");
  cmd->add_option("--y-col", d.y_col, "response column name");
  cmd->add_option("--x-col", d.x_col,
                  "covariate column name (default: lagged response)");
  cmd->add_option("--lag", d.lag, "covariate lag")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--log-response", d.log_response, "log-transform the response");
}

void add_common_options(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--target", c.target, "mean|variance|joint")
      ->check(CLI::IsMember({"mean", "variance", "joint"}));
  cmd->add_option("--alpha", c.alpha, "significance level");
  cmd->add_option("--bandwidth", c.bandwidth, "rot|cv|<fixed value>");
  cmd->add_option("--seed", c.seed, "rng seed echoed in the report");
  cmd->add_option("--output", c.output, "report path (default: stdout)");
}

cpfind::TestTarget parse_target(const std::string& s) {
  if (s == "mean") return cpfind::TestTarget::mean;
  if (s == "variance") return cpfind::TestTarget::variance;
  if (s == "joint") return cpfind::TestTarget::joint;
  throw cpfind::DomainError("unknown target: " + s);
}

cpfind::BandwidthConfig parse_bandwidth(const std::string& s) {
  cpfind::BandwidthConfig bw;
  if (s == "rot") {
    bw.mode = cpfind::BandwidthMode::rule_of_thumb;
  } else if (s == "cv") {
    bw.mode = cpfind::BandwidthMode::cross_validation;
  } else {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (!end || end != s.c_str() + s.size() || !(v > 0.0)) {
      throw cpfind::DomainError("bandwidth must be rot, cv or a positive number");
    }
    bw.mode = cpfind::BandwidthMode::fixed;
    bw.fixed_value = v;
  }
  return bw;
}

cpfind::IngestSchema make_schema(const DataOptions& d) {
  cpfind::IngestSchema schema;
  schema.time_column = d.time_col;
  schema.response_column = d.y_col;
  if (!d.x_col.empty()) schema.covariate_column = d.x_col;
  schema.lag = d.lag;
  schema.transform = d.log_response ? cpfind::IngestSchema::Transform::log
                                    : cpfind::IngestSchema::Transform::none;
  return schema;
}

Json config_echo(const std::string& command, const DataOptions* d,
                 const CommonOptions& c) {
  Json cfg;
  cfg["command"] = command;
  if (d) {
    cfg["input"] = d->input;
    cfg["time_col"] = d->time_col;
    cfg["y_col"] = d->y_col;
    cfg["x_col"] = d->x_col.empty() ? Json(nullptr) : Json(d->x_col);
    cfg["lag"] = d->lag;
    cfg["log_response"] = d->log_response;
  }
  cfg["target"] = c.target;
  cfg["alpha"] = c.alpha;
  cfg["bandwidth"] = c.bandwidth;
  return cfg;
}

void emit_report(const Json& report, const std::string& output) {
  if (output.empty()) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  std::ofstream os(output, std::ios::binary);
  if (!os) throw cpfind::IoError("cannot write report: " + output);
  os << report.dump(2) << '\n';
}

Json confirmation_tests(const cpfind::TimeSeriesSample& sample,
                        const cpfind::BreakSet& found,
                        const cpfind::DetectConfig& cfg) {
  Json tests = Json::array();
  cpfind::TestConfig tc;
  tc.alpha = cfg.alpha;
  tc.bandwidth = cfg.bandwidth;
  tc.variance_assumption = cfg.variance_assumption;
  tc.target = cfg.target;
  const Eigen::Index n = sample.size();
  for (std::size_t j = 0; j < found.size(); ++j) {
    const Eigen::Index lo = j == 0 ? 0 : found.breaks[j - 1];
    const Eigen::Index hi = j + 1 == found.size() ? n : found.breaks[j + 1];
    Json entry;
    entry["break_index"] = found.breaks[j];
    entry["window"] = {lo, hi};
    try {
      const auto window = sample.slice(lo, hi);
      const Eigen::Index split = found.breaks[j] - lo;
      if (cfg.target == cpfind::TestTarget::joint) {
        entry["outcome"] = cpfind::to_json(cpfind::test_joint(window, split, tc));
      } else if (cfg.target == cpfind::TestTarget::variance) {
        entry["outcome"] = cpfind::to_json(cpfind::test_variance(window, split, tc));
      } else {
        entry["outcome"] = cpfind::to_json(cpfind::test_mean(window, split, tc));
      }
    } catch (const cpfind::EstimationError& e) {
      entry["outcome"] = {{"error", e.what()}};
    }
    tests.push_back(std::move(entry));
  }
  return tests;
}

int run_detect(const DataOptions& data, const CommonOptions& common,
               int lmin, std::optional<int> min_gap, bool preset_bitcoin) {
  const auto loaded = cpfind::load_csv(data.input, make_schema(data));

  cpfind::DetectConfig cfg;
  cfg.l_min = lmin;
  cfg.alpha = common.alpha;
  cfg.target = parse_target(common.target);
  cfg.min_gap = min_gap;
  cfg.bandwidth = parse_bandwidth(common.bandwidth);

  const cpfind::BreakSet found = cpfind::cpfind(loaded.sample, cfg);

  Json cfg_json = config_echo("detect", &data, common);
  cfg_json["l_min"] = cfg.l_min;
  cfg_json["min_gap"] = cfg.effective_min_gap();
  cfg_json["preset"] = preset_bitcoin ? "bitcoin" : "";
  cfg_json["dropped_rows"] = loaded.dropped_rows;
  cfg_json["n"] = loaded.sample.size();

  Json report = cpfind::make_report(std::move(cfg_json), common.seed);
  Json breaks = cpfind::to_json(found, loaded.sample, loaded.time_labels);
  for (auto& b : breaks) b["target"] = common.target;
  report["breaks"] = std::move(breaks);
  report["tests"] = confirmation_tests(loaded.sample, found, cfg);

  if (preset_bitcoin && cfg.target == cpfind::TestTarget::mean) {
    // Secondary check on the conditional variance.
    cpfind::DetectConfig var_cfg = cfg;
    var_cfg.target = cpfind::TestTarget::variance;
    const cpfind::BreakSet var_found = cpfind::cpfind(loaded.sample, var_cfg);
    Json var_breaks =
        cpfind::to_json(var_found, loaded.sample, loaded.time_labels);
    for (auto& b : var_breaks) {
      b["target"] = "variance";
      report["breaks"].push_back(std::move(b));
    }
  }

  emit_report(report, common.output);
  return 0;
}

int run_test(const DataOptions& data, const CommonOptions& common,
             Eigen::Index split) {
  const auto loaded = cpfind::load_csv(data.input, make_schema(data));
  if (split <= 0 || split >= loaded.sample.size()) {
    std::cerr << "error: --split must lie strictly inside the data (n="
              << loaded.sample.size() << ")\n";
    return 2;
  }
  cpfind::TestConfig tc;
  tc.alpha = common.alpha;
  tc.bandwidth = parse_bandwidth(common.bandwidth);
  tc.target = parse_target(common.target);

  Json cfg_json = config_echo("test", &data, common);
  cfg_json["split"] = split;
  cfg_json["dropped_rows"] = loaded.dropped_rows;
  cfg_json["n"] = loaded.sample.size();
  Json report = cpfind::make_report(std::move(cfg_json), common.seed);

  Json entry;
  entry["target"] = common.target;
  entry["split"] = split;
  std::string decision;
  const auto print_outcome = [](const char* name,
                                const cpfind::TestOutcome& outcome) {
    std::cout << name << ": statistic=" << outcome.statistic
              << " m=" << outcome.m
              << " critical_value=" << outcome.critical_value
              << " decision="
              << (outcome.reject ? "reject" : "fail to reject") << '\n';
  };
  if (tc.target == cpfind::TestTarget::joint) {
    const auto joint = cpfind::test_joint(loaded.sample, split, tc);
    entry["outcome"] = cpfind::to_json(joint);
    decision = joint.reject_any ? "reject" : "fail to reject";
    print_outcome("mean", joint.mean);
    print_outcome("variance", joint.variance);
    std::cout << "joint decision=" << decision << '\n';
  } else {
    const auto outcome = tc.target == cpfind::TestTarget::variance
                             ? cpfind::test_variance(loaded.sample, split, tc)
                             : cpfind::test_mean(loaded.sample, split, tc);
    entry["outcome"] = cpfind::to_json(outcome);
    decision = outcome.reject ? "reject" : "fail to reject";
    std::cout << "statistic=" << outcome.statistic << " m=" << outcome.m
              << " critical_value=" << outcome.critical_value
              << " decision=" << decision << '\n';
  }
  entry["decision"] = decision;
  report["tests"].push_back(std::move(entry));
  emit_report(report, common.output);
  return 0;
}

int run_bands(const DataOptions& data, const CommonOptions& common,
              Eigen::Index split, const std::string& bands_out) {
  const auto loaded = cpfind::load_csv(data.input, make_schema(data));
  if (split <= 0 || split >= loaded.sample.size()) {
    std::cerr << "error: --split must lie strictly inside the data (n="
              << loaded.sample.size() << ")\n";
    return 2;
  }
  cpfind::TestConfig tc;
  tc.alpha = common.alpha;
  tc.bandwidth = parse_bandwidth(common.bandwidth);
  tc.target = parse_target(common.target);

  Json cfg_json = config_echo("bands", &data, common);
  cfg_json["split"] = split;
  cfg_json["n"] = loaded.sample.size();
  Json report = cpfind::make_report(std::move(cfg_json), common.seed);

  const std::filesystem::path base(bands_out);
  const auto band_path = [&base](const std::string& which) {
    std::filesystem::path p = base;
    p.replace_extension();
    p += "." + which + ".csv";
    return p;
  };
  const auto write_one = [&](const cpfind::ConfidenceBand& band,
                             const std::string& which) {
    const std::filesystem::path path =
        tc.target == cpfind::TestTarget::joint ? band_path(which) : base;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw cpfind::IoError("cannot write band file: " + path.string());
    cpfind::write_band_csv(os, band);
    Json ref;
    ref["target"] = which;
    ref["path"] = path.string();
    ref["rows"] = band.x.size();
    ref["level"] = band.level;
    report["bands"].push_back(std::move(ref));
  };

  if (tc.target != cpfind::TestTarget::variance) {
    write_one(cpfind::confidence_band_mean_diff(loaded.sample, split, tc),
              "mean");
  }
  if (tc.target != cpfind::TestTarget::mean) {
    write_one(cpfind::confidence_band_variance_diff(loaded.sample, split, tc),
              "variance");
  }
  emit_report(report, common.output);
  return 0;
}

cpfind::DgpSpec parse_dgp(const std::string& s) {
  cpfind::DgpSpec dgp;
  if (s == "white") {
    dgp.kind = cpfind::DgpKind::white_noise;
  } else if (s == "armagarch") {
    dgp.kind = cpfind::DgpKind::arma_garch;
  } else if (s == "tar") {
    dgp.kind = cpfind::DgpKind::tar;
  } else {
    throw cpfind::DomainError("unknown dgp: " + s);
  }
  return dgp;
}

cpfind::NoiseSpec parse_noise(const std::string& s) {
  cpfind::NoiseSpec noise;
  if (s == "normal") {
    noise.kind = cpfind::NoiseKind::normal;
  } else if (s == "t") {
    noise.kind = cpfind::NoiseKind::student_t;
  } else if (s == "powerlaw") {
    noise.kind = cpfind::NoiseKind::power_law;
  } else {
    throw cpfind::DomainError("unknown noise: " + s);
  }
  return noise;
}

int run_simulate_size_power(const std::string& dgp, const std::string& noise,
                            Eigen::Index n, int reps,
                            const CommonOptions& common) {
  const auto result =
      cpfind::run_size_power(parse_dgp(dgp), parse_noise(noise), n,
                             parse_target(common.target), reps, common.seed);
  char row[160];
  std::snprintf(row, sizeof(row),
                "%-10s %-8s n=%-6lld %-8s size=%.2f power=%.2f", dgp.c_str(),
                noise.c_str(), static_cast<long long>(n),
                common.target.c_str(), result.size, result.power);
  std::cout << row << '\n';

  Json cfg = config_echo("simulate size-power", nullptr, common);
  cfg["dgp"] = dgp;
  cfg["noise"] = noise;
  cfg["n"] = n;
  cfg["reps"] = reps;
  Json report = cpfind::make_report(std::move(cfg), common.seed);
  Json entry;
  entry["kind"] = "size_power";
  entry["size"] = result.size;
  entry["power"] = result.power;
  report["tests"].push_back(std::move(entry));
  if (!common.output.empty()) emit_report(report, common.output);
  return 0;
}

int run_simulate_bench(const std::string& dgp, const std::string& noise,
                       Eigen::Index n, int reps, const CommonOptions& common) {
  const auto metrics = cpfind::run_detection_benchmark(
      parse_dgp(dgp), parse_noise(noise), n, reps, common.seed);
  char row[160];
  std::snprintf(row, sizeof(row), "%-10s %-8s n=%-6lld amd=%.2f adn=%.2f",
                dgp.c_str(), noise.c_str(), static_cast<long long>(n),
                metrics.amd, metrics.adn);
  std::cout << row << '\n';

  Json cfg = config_echo("simulate bench", nullptr, common);
  cfg["dgp"] = dgp;
  cfg["noise"] = noise;
  cfg["n"] = n;
  cfg["reps"] = reps;
  Json report = cpfind::make_report(std::move(cfg), common.seed);
  Json entry;
  entry["kind"] = "detection_benchmark";
  entry["amd"] = metrics.amd;
  entry["adn"] = metrics.adn;
  report["tests"].push_back(std::move(entry));
  if (!common.output.empty()) emit_report(report, common.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonparametric structural break tests and detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cpfind::kVersion);

  DataOptions detect_data, test_data, bands_data;
  CommonOptions detect_common, test_common, bands_common, sp_common,
      bench_common;

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "multi-break detection");
  add_data_options(detect_cmd, detect_data);
  add_common_options(detect_cmd, detect_common);
  int lmin = 200;
  int min_gap_flag = -1;
  std::string preset_name;
  detect_cmd->add_option("--lmin", lmin, "minimum segment length");
  detect_cmd->add_option("--min-gap", min_gap_flag,
                         "minimum spacing between reported breaks");
  detect_cmd->add_option("--preset", preset_name, "named preset (bitcoin)")
      ->check(CLI::IsMember({"bitcoin"}));

  // test
  auto* test_cmd = app.add_subcommand("test", "single split-point test");
  add_data_options(test_cmd, test_data);
  add_common_options(test_cmd, test_common);
  Eigen::Index test_split = 0;
  test_cmd->add_option("--split", test_split, "left segment length")->required();

  // bands
  auto* bands_cmd = app.add_subcommand("bands", "confidence band export");
  add_data_options(bands_cmd, bands_data);
  add_common_options(bands_cmd, bands_common);
  Eigen::Index bands_split = 0;
  std::string bands_out;
  bands_cmd->add_option("--split", bands_split, "left segment length")
      ->required();
  bands_cmd->add_option("--bands-out", bands_out, "band csv path")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "simulation harness");
  sim_cmd->require_subcommand(1);
  auto* sp_cmd = sim_cmd->add_subcommand("size-power", "size/power of a cell");
  auto* bench_cmd = sim_cmd->add_subcommand("bench", "detection benchmark");
  std::string sp_dgp = "white", sp_noise = "normal";
  std::string bench_dgp = "white", bench_noise = "normal";
  Eigen::Index sp_n = 1000, bench_n = 1000;
  int sp_reps = 100, bench_reps = 50;
  const auto add_sim_options = [](CLI::App* cmd, std::string& dgp,
                                  std::string& noise, Eigen::Index& n,
                                  int& reps, CommonOptions& common) {
    cmd->add_option("--dgp", dgp, "white|armagarch|tar")
        ->check(CLI::IsMember({"white", "armagarch", "tar"}));
    cmd->add_option("--noise", noise, "normal|t|powerlaw")
        ->check(CLI::IsMember({"normal", "t", "powerlaw"}));
    cmd->add_option("--n", n, "sample size");
    cmd->add_option("--reps", reps, "replications")
        ->check(CLI::PositiveNumber);
    add_common_options(cmd, common);
  };
  add_sim_options(sp_cmd, sp_dgp, sp_noise, sp_n, sp_reps, sp_common);
  add_sim_options(bench_cmd, bench_dgp, bench_noise, bench_n, bench_reps,
                  bench_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (detect_cmd->parsed()) {
      const bool preset_bitcoin = preset_name == "bitcoin";
      if (preset_bitcoin) {
        if (!detect_cmd->get_option("--lag")->count()) detect_data.lag = 1;
        detect_data.log_response = true;
        if (!detect_cmd->get_option("--lmin")->count()) lmin = 200;
        if (!detect_cmd->get_option("--alpha")->count()) {
          detect_common.alpha = 0.05;
        }
        if (!detect_cmd->get_option("--target")->count()) {
          detect_common.target = "mean";
        }
      }
      std::optional<int> min_gap;
      if (min_gap_flag >= 0) min_gap = min_gap_flag;
      return run_detect(detect_data, detect_common, lmin, min_gap,
                        preset_bitcoin);
    }
    if (test_cmd->parsed()) {
      return run_test(test_data, test_common, test_split);
    }
    if (bands_cmd->parsed()) {
      return run_bands(bands_data, bands_common, bands_split, bands_out);
    }
    if (sp_cmd->parsed()) {
      return run_simulate_size_power(sp_dgp, sp_noise, sp_n, sp_reps,
                                     sp_common);
    }
    if (bench_cmd->parsed()) {
      return run_simulate_bench(bench_dgp, bench_noise, bench_n, bench_reps,
                                bench_common);
    }
  } catch (const cpfind::DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
