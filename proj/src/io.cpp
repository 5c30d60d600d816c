#include "cpfind/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "cpfind/errors.hpp"
#include "cpfind/version.hpp"

namespace cpfind {

void IngestSchema::validate() const {
  if (time_column.empty() || response_column.empty()) {
    throw DomainError("time and response column names are required");
  }
  if (lag < 0) throw DomainError("lag must be >= 0");
  if (time_column == response_column ||
      (covariate_column && (*covariate_column == time_column ||
                            *covariate_column == response_column))) {
    throw DomainError("schema column names must be distinct");
  }
}

namespace {

// RFC-4180: quoted fields may contain commas, newlines and doubled quotes.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        break;
      default:
        field.push_back(ch);
    }
  }
  if (any && (!field.empty() || !row.empty())) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Days since 1970-01-01 of a proleptic Gregorian date.
long days_from_civil(long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned long>(y - era * 400);
  const unsigned long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::optional<double> parse_time(const std::string& s) {
  if (const auto num = parse_number(s)) return num;
  // ISO-8601 calendar date YYYY-MM-DD.
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    const auto digits = [&](std::size_t from, std::size_t len) -> long {
      long v = 0;
      for (std::size_t i = from; i < from + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return -1;
        v = v * 10 + (s[i] - '0');
      }
      return v;
    };
    const long y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (y >= 0 && m >= 1 && m <= 12 && d >= 1 && d <= 31) {
      return static_cast<double>(
          days_from_civil(y, static_cast<unsigned>(m),
                          static_cast<unsigned>(d)));
    }
  }
  return std::nullopt;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw IoError("missing column '" + name + "' in csv header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

LoadedSeries load_csv(const std::filesystem::path& path,
                      const IngestSchema& schema) {
  schema.validate();
  std::ifstream file(path);
  if (!file) throw IoError("cannot open file: " + path.string());
  const auto rows = parse_csv(file);
  if (rows.empty()) throw IoError("empty csv: " + path.string());

  const std::vector<std::string>& header = rows.front();
  const std::size_t t_col = column_index(header, schema.time_column);
  const std::size_t y_col = column_index(header, schema.response_column);
  std::optional<std::size_t> x_col;
  if (schema.covariate_column) {
    x_col = column_index(header, *schema.covariate_column);
  }

  struct Row {
    double t;
    double y;
    double x;
    std::string label;
  };
  std::vector<Row> data;
  data.reserve(rows.size() - 1);
  int dropped = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::size_t needed =
        std::max({t_col, y_col, x_col.value_or(0)}) + 1;
    if (cells.size() < needed) {
      ++dropped;
      continue;
    }
    const auto t = parse_time(cells[t_col]);
    auto y = parse_number(cells[y_col]);
    std::optional<double> x = 0.0;
    if (x_col) x = parse_number(cells[*x_col]);
    if (y && schema.transform == IngestSchema::Transform::log) {
      y = *y > 0.0 ? std::optional<double>(std::log(*y)) : std::nullopt;
    }
    if (!t || !y || !x) {
      ++dropped;
      continue;
    }
    data.push_back({*t, *y, *x, cells[t_col]});
  }

  std::stable_sort(data.begin(), data.end(),
                   [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (data[i].t == data[i - 1].t) {
      throw IoError("duplicate time value: " + data[i].label);
    }
  }

  const auto lag = static_cast<std::size_t>(schema.lag);
  if (data.size() < lag + static_cast<std::size_t>(kMinSegmentN)) {
    throw IoError("fewer than min_segment_n usable rows");
  }
  const std::size_t n = data.size() - lag;
  LoadedSeries out;
  out.dropped_rows = dropped;
  out.sample.times.resize(static_cast<Eigen::Index>(n));
  out.sample.y.resize(static_cast<Eigen::Index>(n));
  out.sample.x.resize(static_cast<Eigen::Index>(n));
  out.time_labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Row& row = data[i + lag];
    const Row& lagged = data[i];
    out.sample.times[static_cast<Eigen::Index>(i)] = row.t;
    out.sample.y[static_cast<Eigen::Index>(i)] = row.y;
    // With no covariate column the model is the nonlinear-AR special case
    // X_t = Y_{t-lag}.
    out.sample.x[static_cast<Eigen::Index>(i)] =
        x_col ? lagged.x : lagged.y;
    out.time_labels.push_back(row.label);
  }
  out.sample.validate();
  return out;
}

Json to_json(const TestOutcome& outcome) {
  Json j;
  j["statistic"] = outcome.statistic;
  j["m"] = outcome.m;
  j["critical_value"] = outcome.critical_value;
  j["reject"] = outcome.reject;
  j["argmax_x"] = outcome.argmax_x;
  if (outcome.nu_epsilon) {
    j["nu_epsilon"] = {{"value", outcome.nu_epsilon->value},
                       {"count", outcome.nu_epsilon->count}};
  } else {
    j["nu_epsilon"] = nullptr;
  }
  return j;
}

Json to_json(const JointOutcome& outcome) {
  Json j;
  j["mean"] = to_json(outcome.mean);
  j["variance"] = to_json(outcome.variance);
  j["critical_value_half"] = outcome.critical_value_half;
  j["reject_any"] = outcome.reject_any;
  j["reject_mean"] = outcome.reject_mean;
  j["reject_variance"] = outcome.reject_variance;
  j["reject_both_printed"] = outcome.reject_both_printed;
  return j;
}

Json to_json(const BreakSet& breaks, const TimeSeriesSample& sample,
             const std::vector<std::string>& time_labels) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    const Eigen::Index idx = breaks.breaks[i];
    Json b;
    b["index"] = idx;
    b["time"] = sample.times[idx];
    if (idx >= 0 && static_cast<std::size_t>(idx) < time_labels.size()) {
      b["label"] = time_labels[static_cast<std::size_t>(idx)];
    }
    b["score"] = breaks.scores[i];
    b["confirmed"] = static_cast<bool>(breaks.confirmed[i]);
    arr.push_back(std::move(b));
  }
  return arr;
}

void write_band_csv(std::ostream& os, const ConfidenceBand& band) {
  os << "x,center,lower,upper\n";
  os.precision(17);
  for (Eigen::Index j = 0; j < band.x.size(); ++j) {
    os << band.x[j] << ',' << band.center[j] << ','
       << band.center[j] - band.half_width[j] << ','
       << band.center[j] + band.half_width[j] << '\n';
  }
}

Json make_report(Json config, std::uint64_t seed) {
  Json report;
  report["config"] = std::move(config);
  report["tests"] = Json::array();
  report["breaks"] = Json::array();
  report["bands"] = Json::array();
  report["version"] = kVersion;
  report["seed"] = seed;
  return report;
}

}  // namespace cpfind
