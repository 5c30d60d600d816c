#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpfind/break_tests.hpp"
#include "cpfind/detect.hpp"
#include "cpfind/sample.hpp"

namespace cpfind {

struct IngestSchema {
  std::string time_column;
  std::string response_column;
  std::optional<std::string> covariate_column;  // absent: X_t = Y_{t-lag}
  int lag = 1;
  enum class Transform { none, log } transform = Transform::none;

  void validate() const;
};

struct LoadedSeries {
  TimeSeriesSample sample;
  std::vector<std::string> time_labels;  // original time strings, post-lag
  int dropped_rows = 0;
};

//! RFC-4180 CSV with a header row. Rows are sorted by the time column;
//! rows with missing or non-numeric required cells are dropped and
//! counted. Times parse as numbers or ISO-8601 dates (days since epoch).
LoadedSeries load_csv(const std::filesystem::path& path,
                      const IngestSchema& schema);

using Json = nlohmann::ordered_json;

Json to_json(const TestOutcome& outcome);
Json to_json(const JointOutcome& outcome);
Json to_json(const BreakSet& breaks, const TimeSeriesSample& sample,
             const std::vector<std::string>& time_labels);

//! x,center,lower,upper rows, one per valid grid point.
void write_band_csv(std::ostream& os, const ConfidenceBand& band);

//! Report skeleton with the fixed top-level key order:
//! config, tests, breaks, bands, version, seed.
Json make_report(Json config, std::uint64_t seed);

}  // namespace cpfind
