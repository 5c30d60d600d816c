#include "cpfind/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpfind/errors.hpp"

namespace cpfind {

void DetectConfig::validate() const {
  if (l_min < 2 * min_segment_n) {
    throw DomainError("l_min must be at least 2 * min_segment_n");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1)");
  }
  if (min_gap && *min_gap < 0) throw DomainError("min_gap must be >= 0");
  bandwidth.validate();
}

namespace {

TestConfig to_test_config(const DetectConfig& cfg) {
  TestConfig tc;
  tc.alpha = cfg.alpha;
  tc.variance_assumption = cfg.variance_assumption;
  tc.bandwidth = cfg.bandwidth;
  tc.target = cfg.target;
  tc.min_segment_n = cfg.min_segment_n;
  return tc;
}

// Estimation failures mean the window cannot support the test; that is the
// same data-scarcity condition L_min guards against, so the test counts as
// not rejected.
bool rejected(const TimeSeriesSample& window, Eigen::Index split,
              const TestConfig& tc) {
  try {
    switch (tc.target) {
      case TestTarget::mean:
        return test_mean(window, split, tc).reject;
      case TestTarget::variance:
        return test_variance(window, split, tc).reject;
      case TestTarget::joint:
        return test_joint(window, split, tc).reject_any;
    }
  } catch (const EstimationError&) {
    return false;
  }
  return false;
}

void stage1(const TimeSeriesSample& series, Eigen::Index first,
            Eigen::Index last, const DetectConfig& cfg, const TestConfig& tc,
            std::vector<Eigen::Index>& candidates) {
  const Eigen::Index len = last - first;
  if (len < cfg.l_min) return;
  const Eigen::Index mid = len / 2;
  if (!rejected(series.slice(first, last), mid, tc)) return;
  candidates.push_back(first + mid);
  stage1(series, first, first + mid, cfg, tc, candidates);
  stage1(series, first + mid, last, cfg, tc, candidates);
}

double break_score(const TimeSeriesSample& series, Eigen::Index lo,
                   Eigen::Index hi, Eigen::Index at, const DetectConfig& cfg) {
  try {
    const auto [mu_cp, sigma_cp] =
        cp_disparity(series.slice(lo, hi), at - lo, cfg);
    switch (cfg.target) {
      case TestTarget::mean:
        return mu_cp;
      case TestTarget::variance:
        return sigma_cp;
      case TestTarget::joint:
        return std::max(mu_cp, sigma_cp);
    }
  } catch (const EstimationError&) {
  }
  return 0.0;
}

// Studentized break statistic at an arbitrary split; -inf when the window
// cannot support the fit. The raw disparity sup is attracted to short-side
// noise, so refinement scans this ratio instead.
double studentized_score(const TimeSeriesSample& window, Eigen::Index split,
                         const TestConfig& tc) {
  try {
    const auto fit = detail::fit_split(window, split, tc);
    switch (tc.target) {
      case TestTarget::mean:
        return detail::mean_sup_statistic(fit, tc);
      case TestTarget::variance:
        return detail::variance_sup_statistic(fit);
      case TestTarget::joint:
        return std::max(detail::mean_sup_statistic(fit, tc),
                        detail::variance_sup_statistic(fit));
    }
  } catch (const EstimationError&) {
  }
  return -std::numeric_limits<double>::infinity();
}

// Argmax of the studentized statistic over the admissible positions of
// (lo, hi): a coarse uniform scan followed by one zoom-in.
Eigen::Index refine_break(const TimeSeriesSample& series, Eigen::Index lo,
                          Eigen::Index hi, Eigen::Index current,
                          const DetectConfig& cfg, const TestConfig& tc) {
  const Eigen::Index min_pos = lo + cfg.min_segment_n;
  const Eigen::Index max_pos = hi - cfg.min_segment_n;
  if (min_pos > max_pos) return current;

  const auto window = series.slice(lo, hi);
  Eigen::Index best = current;
  double best_score = studentized_score(window, current - lo, tc);
  const auto scan_range = [&](Eigen::Index from, Eigen::Index to,
                              Eigen::Index step) {
    for (Eigen::Index t = from; t <= to; t += step) {
      const double score = studentized_score(window, t - lo, tc);
      if (score > best_score) {
        best_score = score;
        best = t;
      }
    }
  };
  const Eigen::Index coarse =
      std::max<Eigen::Index>(1, (max_pos - min_pos) / 24);
  scan_range(min_pos, max_pos, coarse);
  if (coarse > 1) {
    const Eigen::Index fine = std::max<Eigen::Index>(1, coarse / 8);
    scan_range(std::max(min_pos, best - coarse),
               std::min(max_pos, best + coarse), fine);
  }
  return best;
}

}  // namespace

std::pair<double, double> cp_disparity(const TimeSeriesSample& series,
                                       Eigen::Index t,
                                       const DetectConfig& cfg) {
  const Eigen::Index n = series.size();
  if (t < cfg.min_segment_n || n - t < cfg.min_segment_n) {
    throw SegmentTooSmallError("a side of the split is below min_segment_n");
  }
  const double b = resolve_bandwidth(cfg.bandwidth, series);
  const double lambda1 = series.x.minCoeff();
  const double lambda2 = series.x.maxCoeff();
  if (!(lambda1 < lambda2)) {
    throw DegenerateWindowError("covariate is constant over the window");
  }
  const EvaluationGrid grid = build_grid(lambda1, lambda2, b);
  const SegmentEstimate left =
      estimate_segment(series.slice(0, t), grid, b, cfg.min_segment_n);
  const SegmentEstimate right =
      estimate_segment(series.slice(t, n), grid, b, cfg.min_segment_n);
  const ArrayXb valid = left.valid_mask && right.valid_mask;
  if (!valid.any()) {
    throw AllPointsInvalidError("the two sides share no valid grid points");
  }
  double mu_cp = 0.0, sigma_cp = 0.0;
  for (Eigen::Index j = 0; j < grid.m; ++j) {
    if (!valid[j]) continue;
    mu_cp = std::max(mu_cp, std::abs(left.mean_bc[j] - right.mean_bc[j]));
    sigma_cp = std::max(sigma_cp, std::abs(left.var_bc[j] - right.var_bc[j]));
  }
  return {mu_cp, sigma_cp};
}

BreakSet cpfind(const TimeSeriesSample& series, const DetectConfig& cfg,
                DetectDiagnostics* diag) {
  cfg.validate();
  BreakSet out;
  const Eigen::Index n = series.size();
  if (n == 0) return out;
  series.validate();
  const TestConfig tc = to_test_config(cfg);

  std::vector<Eigen::Index> cands;
  stage1(series, 0, n, cfg, tc, cands);
  std::sort(cands.begin(), cands.end());
  if (diag) diag->stage1_candidates = cands;

  // Confirmation stage, swept to a fixed point: each candidate is re-tested
  // between its surviving neighbours; removals within a sweep apply at the
  // end of the sweep so the result does not depend on iteration order. The
  // stage exists to prevent over-counting, so the k simultaneous
  // confirmations share the level alpha Bonferroni-style; as candidates
  // drop out the level relaxes, Holm fashion.
  bool removed = true;
  while (removed && !cands.empty()) {
    removed = false;
    TestConfig confirm_tc = tc;
    confirm_tc.alpha = cfg.alpha / static_cast<double>(cands.size());
    std::vector<Eigen::Index> keep;
    keep.reserve(cands.size());
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const Eigen::Index lo = j == 0 ? 0 : cands[j - 1];
      const Eigen::Index hi = j + 1 == cands.size() ? n : cands[j + 1];
      if (rejected(series.slice(lo, hi), cands[j] - lo, confirm_tc)) {
        keep.push_back(cands[j]);
      } else {
        removed = true;
      }
    }
    cands.swap(keep);
  }

  if (cfg.refine_locations && !cands.empty()) {
    std::vector<Eigen::Index> refined(cands.size());
    for (std::size_t j = 0; j < cands.size(); ++j) {
      const Eigen::Index lo = j == 0 ? 0 : cands[j - 1];
      const Eigen::Index hi = j + 1 == cands.size() ? n : cands[j + 1];
      refined[j] = refine_break(series, lo, hi, cands[j], cfg, tc);
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());
    cands.swap(refined);
  }

  std::vector<double> scores(cands.size());
  for (std::size_t j = 0; j < cands.size(); ++j) {
    const Eigen::Index lo = j == 0 ? 0 : cands[j - 1];
    const Eigen::Index hi = j + 1 == cands.size() ? n : cands[j + 1];
    scores[j] = break_score(series, lo, hi, cands[j], cfg);
  }

  // Merge breaks closer than min_gap, keeping the higher-score one.
  const Eigen::Index gap = cfg.effective_min_gap();
  bool merged = true;
  while (merged && cands.size() > 1) {
    merged = false;
    for (std::size_t j = 0; j + 1 < cands.size(); ++j) {
      if (cands[j + 1] - cands[j] >= gap) continue;
      const std::size_t drop = scores[j + 1] > scores[j] ? j : j + 1;
      cands.erase(cands.begin() + drop);
      scores.erase(scores.begin() + drop);
      merged = true;
      break;
    }
  }

  out.breaks = std::move(cands);
  out.scores = std::move(scores);
  out.confirmed.assign(out.breaks.size(), true);
  return out;
}

std::pair<Eigen::Index, double> argmax_single_break(
    const TimeSeriesSample& series, const DetectConfig& cfg) {
  cfg.validate();
  series.validate();
  const Eigen::Index n = series.size();

  // The partition spacing follows the theory's per-segment sample-size
  // convention; the smoothing bandwidth inside cp_disparity stays
  // window-based.
  double b_part;
  if (cfg.bandwidth.mode == BandwidthMode::rule_of_thumb) {
    b_part = rule_of_thumb_bandwidth(std::max<Eigen::Index>(n / 2, 1),
                                     cfg.bandwidth.exponent);
  } else {
    b_part = resolve_bandwidth(cfg.bandwidth, series);
  }
  const auto k_n = static_cast<Eigen::Index>(
      std::ceil(1.0 / (2.0 * b_part) - 1e-12));

  bool found = false;
  Eigen::Index best_idx = 0;
  double best_score = -1.0;
  for (Eigen::Index j = 0; j < k_n; ++j) {
    const auto idx = static_cast<Eigen::Index>(
        std::llround(2.0 * static_cast<double>(j) * b_part *
                     static_cast<double>(n)));
    if (idx < cfg.min_segment_n || n - idx < cfg.min_segment_n) continue;
    double score;
    try {
      const auto [mu_cp, sigma_cp] = cp_disparity(series, idx, cfg);
      switch (cfg.target) {
        case TestTarget::mean:
          score = mu_cp;
          break;
        case TestTarget::variance:
          score = sigma_cp;
          break;
        default:
          score = std::max(mu_cp, sigma_cp);
      }
    } catch (const EstimationError&) {
      continue;
    }
    if (score > best_score) {
      best_score = score;
      best_idx = idx;
      found = true;
    }
  }
  if (!found) {
    throw NoAdmissibleCandidateError(
        "no partition point has enough data on both sides");
  }
  return {best_idx, best_score};
}

}  // namespace cpfind
