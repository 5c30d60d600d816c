#include "cpfind/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "cpfind/errors.hpp"

namespace cpfind {

double density_floor(Eigen::Index n, double b) {
  // The mass constant keeps roughly ten observations' worth of kernel
  // weight behind every retained cell; with fewer, the studentized cell
  // statistics are far from their normal limit and the sup test
  // over-rejects.
  return std::max(0.01, 10.0 / (static_cast<double>(n) * b));
}

double density_estimate(double x, const Eigen::ArrayXd& xs, double b,
                        const KernelSpec& k) {
  if (xs.size() == 0) throw DomainError("density: empty covariate array");
  if (!(b > 0.0)) throw DomainError("density: bandwidth must be positive");
  const Eigen::ArrayXd w = k(Eigen::ArrayXd((x - xs) / b));
  return w.sum() / (static_cast<double>(xs.size()) * b);
}

Eigen::ArrayXd density_estimate(const Eigen::ArrayXd& eval_points,
                                const Eigen::ArrayXd& xs, double b,
                                const KernelSpec& k) {
  Eigen::ArrayXd out(eval_points.size());
  for (Eigen::Index j = 0; j < eval_points.size(); ++j) {
    out[j] = density_estimate(eval_points[j], xs, b, k);
  }
  return out;
}

namespace detail {

NwFit nw_fit(const Eigen::ArrayXd& eval_points, const Eigen::ArrayXd& xs,
             const Eigen::ArrayXd& values, double b, const KernelSpec& k) {
  NwFit fit;
  fit.value = Eigen::ArrayXd::Zero(eval_points.size());
  fit.ok = ArrayXb::Constant(eval_points.size(), false);
  for (Eigen::Index j = 0; j < eval_points.size(); ++j) {
    const Eigen::ArrayXd w = k(Eigen::ArrayXd((eval_points[j] - xs) / b));
    const double denom = w.sum();
    // K* takes negative values; a non-positive weight sum cannot be
    // normalized and is treated like an empty window.
    if (denom > 0.0) {
      fit.value[j] = (w * values).sum() / denom;
      fit.ok[j] = true;
    }
  }
  return fit;
}

Eigen::ArrayXd sandwich_se_sq(const Eigen::ArrayXd& eval_points,
                              const Eigen::ArrayXd& xs,
                              const Eigen::ArrayXd& values, double b,
                              const KernelSpec& k) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(eval_points.size());
  for (Eigen::Index j = 0; j < eval_points.size(); ++j) {
    const Eigen::ArrayXd w = k(Eigen::ArrayXd((eval_points[j] - xs) / b));
    const double denom = w.sum();
    if (!(denom > 0.0)) continue;
    const double fit = (w * values).sum() / denom;
    out[j] = (w.square() * (values - fit).square()).sum() / (denom * denom);
  }
  return out;
}

double nu_from_residuals(const Eigen::ArrayXd& standardized) {
  if (standardized.size() < 1) {
    throw NoValidResidualsError("no residuals to estimate nu from");
  }
  return standardized.pow(4).mean() - 1.0;
}

}  // namespace detail

double nw_mean(double x, const TimeSeriesSample& segment, double b,
               const KernelSpec& k) {
  Eigen::ArrayXd pt(1);
  pt[0] = x;
  const auto fit = detail::nw_fit(pt, segment.x, segment.y, b, k);
  if (!fit.ok[0]) {
    throw EmptyWindowError("no observation in the kernel window");
  }
  return fit.value[0];
}

double nw_variance(double x, const TimeSeriesSample& segment,
                   const std::function<double(double)>& mean_fn, double b,
                   const KernelSpec& k) {
  Eigen::ArrayXd resid_sq(segment.size());
  for (Eigen::Index t = 0; t < segment.size(); ++t) {
    const double r = segment.y[t] - mean_fn(segment.x[t]);
    resid_sq[t] = r * r;
  }
  Eigen::ArrayXd pt(1);
  pt[0] = x;
  const auto fit = detail::nw_fit(pt, segment.x, resid_sq, b, k);
  if (!fit.ok[0]) {
    throw EmptyWindowError("no observation in the kernel window");
  }
  return std::max(fit.value[0], kVarianceFloor);
}

SegmentEstimate estimate_segment(const TimeSeriesSample& segment,
                                 const EvaluationGrid& grid, double b,
                                 int min_segment_n) {
  const Eigen::Index n = segment.size();
  if (n < min_segment_n) {
    throw SegmentTooSmallError("segment shorter than min_segment_n");
  }
  const KernelSpec& base = kernel_spec(KernelKind::parabolic);
  const KernelSpec& star = kernel_spec(KernelKind::jackknife);

  SegmentEstimate est;
  est.grid = grid;
  est.n_eff = n;
  est.density = density_estimate(grid.points, segment.x, b, base);

  const auto mean_fit = detail::nw_fit(grid.points, segment.x, segment.y, b, star);
  est.mean_bc = mean_fit.value;
  est.mean_se_sq = detail::sandwich_se_sq(grid.points, segment.x, segment.y,
                                          b, star);

  // Residuals against the bias-corrected mean evaluated directly at each
  // observation (no grid interpolation).
  const auto fitted = detail::nw_fit(segment.x, segment.x, segment.y, b, star);
  Eigen::ArrayXd resid_sq =
      fitted.ok.select((segment.y - fitted.value).square(),
                       Eigen::ArrayXd::Zero(n));
  const auto var_fit = detail::nw_fit(grid.points, segment.x, resid_sq, b, star);
  est.var_bc = var_fit.value.max(kVarianceFloor);
  est.var_se_sq =
      detail::sandwich_se_sq(grid.points, segment.x, resid_sq, b, star);

  // A non-positive jackknife variance fit means the negative kernel ring
  // overwhelmed the data at that cell; flooring it into the test scale
  // would inflate every statistic evaluated there. Exactly-zero residuals
  // (noiseless data) stay valid at the floor.
  ArrayXb var_ok = var_fit.ok;
  if (resid_sq.maxCoeff() > 0.0) {
    var_ok = var_ok && (var_fit.value > 0.0);
  }
  const double floor = density_floor(n, b);
  est.valid_mask = (est.density >= floor) && mean_fit.ok && var_ok;
  if (!est.valid_mask.any()) {
    throw AllPointsInvalidError("no grid point clears the density floor");
  }
  // Masked points keep placeholder zeros (variance at its floor) so the
  // arrays stay finite.
  for (Eigen::Index j = 0; j < grid.m; ++j) {
    if (!est.valid_mask[j]) {
      est.mean_bc[j] = 0.0;
      est.var_bc[j] = kVarianceFloor;
    }
  }
  return est;
}

namespace {

Eigen::Index grid_cell(const EvaluationGrid& grid, double x) {
  const Eigen::Index j = static_cast<Eigen::Index>(
      std::llround((x - grid.lambda1) / grid.spacing));
  return std::clamp<Eigen::Index>(j, 0, grid.m - 1);
}

void collect_residuals(const SegmentEstimate& est, const TimeSeriesSample& seg,
                       double b, std::vector<double>& out) {
  const KernelSpec& star = kernel_spec(KernelKind::jackknife);
  const KernelSpec& base = kernel_spec(KernelKind::parabolic);
  const auto mean_fit = detail::nw_fit(seg.x, seg.x, seg.y, b, star);
  Eigen::ArrayXd resid_sq =
      mean_fit.ok.select((seg.y - mean_fit.value).square(),
                         Eigen::ArrayXd::Zero(seg.size()));
  // The standardizing variance uses the base kernel: its weights are
  // nonnegative and the observation's own weight is maximal, which bounds
  // every standardized residual by the local window size. The jackknife
  // kernel's negative ring can drive this denominator to the floor and
  // blow the fourth moments up by many orders of magnitude.
  const auto var_fit = detail::nw_fit(seg.x, seg.x, resid_sq, b, base);
  for (Eigen::Index t = 0; t < seg.size(); ++t) {
    if (!mean_fit.ok[t] || !var_fit.ok[t]) continue;
    if (!est.valid_mask[grid_cell(est.grid, seg.x[t])]) continue;
    const double sd = std::sqrt(std::max(var_fit.value[t], kVarianceFloor));
    out.push_back((seg.y[t] - mean_fit.value[t]) / sd);
  }
}

}  // namespace

NuEpsilonEstimate estimate_nu_epsilon(const SegmentEstimate& est1,
                                      const TimeSeriesSample& seg1,
                                      const SegmentEstimate& est2,
                                      const TimeSeriesSample& seg2) {
  const double b = est1.grid.bandwidth();
  std::vector<double> r;
  r.reserve(seg1.size() + seg2.size());
  collect_residuals(est1, seg1, b, r);
  collect_residuals(est2, seg2, b, r);
  if (r.empty()) {
    throw NoValidResidualsError("no observation lies in a valid grid cell");
  }
  NuEpsilonEstimate nu;
  nu.count = static_cast<Eigen::Index>(r.size());
  nu.value = detail::nu_from_residuals(
      Eigen::Map<const Eigen::ArrayXd>(r.data(), nu.count));
  return nu;
}

}  // namespace cpfind
