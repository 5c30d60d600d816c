#include "cpfind/break_tests.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpfind/errors.hpp"

namespace cpfind {

void TestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1)");
  }
  if (min_segment_n < 1) throw DomainError("min_segment_n must be >= 1");
  bandwidth.validate();
}

double gumbel_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in (0, 1)");
  }
  // Solves e^{-2 e^{-z}} = 1 - alpha.
  return -std::log(-std::log1p(-alpha) / 2.0);
}

double critical_value(Eigen::Index m, double z) {
  if (m < 2) throw DomainError("critical value requires m >= 2");
  const double log_m = std::log(static_cast<double>(m));
  const double s = std::sqrt(2.0 * log_m);
  const double centering =
      (std::log(log_m) + std::log(2.0 * std::sqrt(std::numbers::pi))) / s;
  return s - centering + z / s;
}

namespace detail {

SplitFit fit_split(const TimeSeriesSample& window, Eigen::Index split,
                   const TestConfig& cfg) {
  cfg.validate();
  window.validate();
  const Eigen::Index n = window.size();
  if (split <= 0 || split >= n) {
    throw DomainError("split must be strictly inside the window");
  }
  SplitFit fit;
  fit.n1 = split;
  fit.n2 = n - split;
  if (fit.n1 < cfg.min_segment_n || fit.n2 < cfg.min_segment_n) {
    throw SegmentTooSmallError("a half of the window is below min_segment_n");
  }
  fit.b = resolve_bandwidth(cfg.bandwidth, window);

  const double lambda1 = window.x.minCoeff();
  const double lambda2 = window.x.maxCoeff();
  if (!(lambda1 < lambda2)) {
    throw DegenerateWindowError("covariate is constant over the window");
  }
  fit.grid = build_grid(lambda1, lambda2, fit.b);
  if (fit.grid.m < 2) {
    throw DegenerateWindowError("covariate range narrower than one grid cell");
  }

  fit.seg1 = window.slice(0, split);
  fit.seg2 = window.slice(split, n);
  fit.left = estimate_segment(fit.seg1, fit.grid, fit.b, cfg.min_segment_n);
  fit.right = estimate_segment(fit.seg2, fit.grid, fit.b, cfg.min_segment_n);

  const KernelSpec& base = kernel_spec(KernelKind::parabolic);
  fit.pooled_density = density_estimate(fit.grid.points, window.x, fit.b, base);
  fit.valid = fit.left.valid_mask && fit.right.valid_mask;

  if (cfg.variance_assumption == VarianceAssumption::common) {
    const KernelSpec& star = kernel_spec(KernelKind::jackknife);
    const auto fitted = nw_fit(window.x, window.x, window.y, fit.b, star);
    const Eigen::ArrayXd resid_sq =
        fitted.ok.select((window.y - fitted.value).square(),
                         Eigen::ArrayXd::Zero(n));
    const auto var_fit =
        nw_fit(fit.grid.points, window.x, resid_sq, fit.b, star);
    fit.pooled_variance = var_fit.value.max(kVarianceFloor);
    fit.valid = fit.valid && var_fit.ok;
  }
  if (!fit.valid.any()) {
    throw AllPointsInvalidError(
        "the two segments share no valid grid points");
  }
  return fit;
}

namespace {

// Guards exact-zero sandwich sums (noiseless or duplicated data); a zero
// difference over a zero denominator must read as "no evidence".
constexpr double kDenomFloor = 1e-300;

}  // namespace

Eigen::ArrayXd mean_denom_sq(const SplitFit& fit, const TestConfig& cfg) {
  if (cfg.variance_assumption == VarianceAssumption::separate) {
    return (fit.left.mean_se_sq + fit.right.mean_se_sq).max(kDenomFloor);
  }
  const double phi_star = kernel_spec(KernelKind::jackknife).phi;
  const double nb = static_cast<double>(std::min(fit.n1, fit.n2)) * fit.b;
  return (phi_star * fit.pooled_variance / (nb * fit.pooled_density))
      .max(kDenomFloor);
}

Eigen::ArrayXd variance_denom_sq(const SplitFit& fit) {
  return (fit.left.var_se_sq + fit.right.var_se_sq).max(kDenomFloor);
}

namespace {

struct Supremum {
  double value = 0;
  Eigen::Index argmax = 0;
};

Supremum sup_over_valid(const Eigen::ArrayXd& ratio, const ArrayXb& valid) {
  Supremum sup;
  sup.value = -1.0;
  for (Eigen::Index j = 0; j < ratio.size(); ++j) {
    if (valid[j] && ratio[j] > sup.value) {
      sup.value = ratio[j];
      sup.argmax = j;
    }
  }
  return sup;
}

}  // namespace

double mean_sup_statistic(const SplitFit& fit, const TestConfig& cfg) {
  const Eigen::ArrayXd ratio = (fit.left.mean_bc - fit.right.mean_bc).abs() /
                               mean_denom_sq(fit, cfg).sqrt();
  return sup_over_valid(ratio, fit.valid).value;
}

double variance_sup_statistic(const SplitFit& fit) {
  const Eigen::ArrayXd ratio = (fit.left.var_bc - fit.right.var_bc).abs() /
                               variance_denom_sq(fit).sqrt();
  return sup_over_valid(ratio, fit.valid).value;
}

namespace {

TestOutcome mean_outcome(const SplitFit& fit, const TestConfig& cfg) {
  const Eigen::ArrayXd denom_sq = mean_denom_sq(fit, cfg);
  const Eigen::ArrayXd ratio =
      (fit.left.mean_bc - fit.right.mean_bc).abs() / denom_sq.sqrt();
  const Supremum sup = sup_over_valid(ratio, fit.valid);

  TestOutcome out;
  out.statistic = sup.value;
  out.m = fit.grid.m;
  out.critical_value = critical_value(fit.grid.m, gumbel_quantile(cfg.alpha));
  out.reject = out.statistic > out.critical_value;
  out.argmax_x = fit.grid.points[sup.argmax];
  return out;
}

TestOutcome variance_outcome(const SplitFit& fit, const TestConfig& cfg) {
  // nu enters the scale through the sandwich (it estimates
  // Var(sigma^2-hat) directly); the separate estimate is still reported.
  const NuEpsilonEstimate nu =
      estimate_nu_epsilon(fit.left, fit.seg1, fit.right, fit.seg2);
  const Eigen::ArrayXd denom_sq = variance_denom_sq(fit);
  const Eigen::ArrayXd ratio =
      (fit.left.var_bc - fit.right.var_bc).abs() / denom_sq.sqrt();
  const Supremum sup = sup_over_valid(ratio, fit.valid);

  TestOutcome out;
  out.statistic = sup.value;
  out.m = fit.grid.m;
  out.critical_value = critical_value(fit.grid.m, gumbel_quantile(cfg.alpha));
  out.reject = out.statistic > out.critical_value;
  out.argmax_x = fit.grid.points[sup.argmax];
  out.nu_epsilon = nu;
  return out;
}

}  // namespace

}  // namespace detail

TestOutcome test_mean(const TimeSeriesSample& window, Eigen::Index split,
                      const TestConfig& cfg) {
  return detail::mean_outcome(detail::fit_split(window, split, cfg), cfg);
}

TestOutcome test_variance(const TimeSeriesSample& window, Eigen::Index split,
                          const TestConfig& cfg) {
  return detail::variance_outcome(detail::fit_split(window, split, cfg), cfg);
}

JointOutcome test_joint(const TimeSeriesSample& window, Eigen::Index split,
                        const TestConfig& cfg) {
  const detail::SplitFit fit = detail::fit_split(window, split, cfg);
  JointOutcome joint;
  joint.mean = detail::mean_outcome(fit, cfg);
  joint.variance = detail::variance_outcome(fit, cfg);
  joint.critical_value_half =
      critical_value(fit.grid.m, gumbel_quantile(cfg.alpha / 2.0));

  const double t_max = std::max(joint.mean.statistic, joint.variance.statistic);
  const double t_min = std::min(joint.mean.statistic, joint.variance.statistic);
  const double b_full = joint.mean.critical_value;  // B(z_alpha), shared m
  const double b_half = joint.critical_value_half;

  // Holm step-down: the larger statistic faces the alpha/2 threshold; only
  // when it rejects does the smaller one face the alpha threshold.
  joint.reject_any = t_max >= b_half;
  const bool min_rejects = joint.reject_any && t_min >= b_full;
  const bool mean_is_max = joint.mean.statistic >= joint.variance.statistic;
  joint.reject_mean = mean_is_max ? joint.reject_any : min_rejects;
  joint.reject_variance = mean_is_max ? min_rejects : joint.reject_any;
  joint.reject_both_printed = t_min >= b_half && t_max >= b_full;
  return joint;
}

namespace {

ConfidenceBand band_from(const detail::SplitFit& fit,
                         const Eigen::ArrayXd& center_full,
                         const Eigen::ArrayXd& halfwidth_full, double alpha) {
  const Eigen::Index n_valid = fit.valid.count();
  ConfidenceBand band;
  band.level = 1.0 - alpha;
  band.x.resize(n_valid);
  band.center.resize(n_valid);
  band.half_width.resize(n_valid);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < fit.grid.m; ++j) {
    if (!fit.valid[j]) continue;
    band.x[k] = fit.grid.points[j];
    band.center[k] = center_full[j];
    band.half_width[k] = halfwidth_full[j];
    ++k;
  }
  return band;
}

}  // namespace

ConfidenceBand confidence_band_mean_diff(const TimeSeriesSample& window,
                                         Eigen::Index split,
                                         const TestConfig& cfg) {
  const detail::SplitFit fit = detail::fit_split(window, split, cfg);
  const double crit =
      critical_value(fit.grid.m, gumbel_quantile(cfg.alpha));
  const Eigen::ArrayXd center = fit.left.mean_bc - fit.right.mean_bc;
  const Eigen::ArrayXd half_width =
      crit * detail::mean_denom_sq(fit, cfg).sqrt();
  return band_from(fit, center, half_width, cfg.alpha);
}

ConfidenceBand confidence_band_variance_diff(const TimeSeriesSample& window,
                                             Eigen::Index split,
                                             const TestConfig& cfg) {
  const detail::SplitFit fit = detail::fit_split(window, split, cfg);
  const double crit =
      critical_value(fit.grid.m, gumbel_quantile(cfg.alpha));
  const Eigen::ArrayXd center = fit.left.var_bc - fit.right.var_bc;
  const Eigen::ArrayXd half_width =
      crit * detail::variance_denom_sq(fit).sqrt();
  return band_from(fit, center, half_width, cfg.alpha);
}

}  // namespace cpfind
