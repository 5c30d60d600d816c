#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "cpfind/break_tests.hpp"
#include "cpfind/sample.hpp"

namespace cpfind {

struct DetectConfig {
  int l_min = 200;
  double alpha = 0.05;
  TestTarget target = TestTarget::mean;
  std::optional<int> min_gap;  // defaults to l_min
  BandwidthConfig bandwidth{};
  VarianceAssumption variance_assumption = VarianceAssumption::separate;
  int min_segment_n = kMinSegmentN;
  // Relocate each confirmed break to the disparity argmax inside its
  // confirmation window. Midpoint recursion only ever proposes dyadic
  // positions; the argmax recovers the actual location.
  bool refine_locations = true;

  int effective_min_gap() const { return min_gap.value_or(l_min); }
  void validate() const;  // l_min >= 2*min_segment_n, alpha in (0,1)
};

struct BreakSet {
  std::vector<Eigen::Index> breaks;  // index of the first post-break row
  std::vector<bool> confirmed;
  std::vector<double> scores;        // cp disparity at the break

  std::size_t size() const { return breaks.size(); }
};

struct DetectDiagnostics {
  std::vector<Eigen::Index> stage1_candidates;
};

//! Sup disparity of the two sides of `t`: (sup|mu_left - mu_right|,
//! sup|sigma2_left - sigma2_right|) over the jointly valid grid points.
std::pair<double, double> cp_disparity(const TimeSeriesSample& series,
                                       Eigen::Index t,
                                       const DetectConfig& cfg);

//! Two-stage multi-break detector: recursive midpoint testing (binary
//! segmentation) followed by a confirmatory re-test of every candidate
//! against its surviving neighbours, swept to a fixed point. Breaks closer
//! than min_gap are merged keeping the higher-score one.
BreakSet cpfind(const TimeSeriesSample& series, const DetectConfig& cfg,
                DetectDiagnostics* diag = nullptr);

//! Single-break estimator: argmax of the cp disparity over the coarse time
//! partition, ties broken by the earliest index. Returns (index, score).
std::pair<Eigen::Index, double> argmax_single_break(
    const TimeSeriesSample& series, const DetectConfig& cfg);

}  // namespace cpfind
