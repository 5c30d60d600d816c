#pragma once

#include <Eigen/Core>
#include <functional>

#include "cpfind/grid.hpp"
#include "cpfind/kernels.hpp"
#include "cpfind/sample.hpp"

namespace cpfind {

inline constexpr double kVarianceFloor = 1e-8;
inline constexpr int kMinSegmentN = 30;

//! Estimates at grid points below this density are statistically
//! unreliable and get masked out of suprema.
double density_floor(Eigen::Index n, double b);

using ArrayXb = Eigen::Array<bool, Eigen::Dynamic, 1>;

//! Grid-evaluated density, bias-corrected mean and bias-corrected
//! variance for one time segment, with per-cell sandwich estimates of the
//! sampling variance of mean_bc and var_bc (sum w^2 (resp - value)^2 /
//! (sum w)^2). The sandwich sees both the noise term phi sigma^2/(n b f)
//! and the kernel design term, which dominates wherever sigma(x) is tiny.
struct SegmentEstimate {
  EvaluationGrid grid;
  Eigen::ArrayXd density;  // base kernel
  Eigen::ArrayXd mean_bc;  // jackknife kernel
  Eigen::ArrayXd var_bc;   // jackknife kernel, floored at kVarianceFloor
  Eigen::ArrayXd mean_se_sq;
  Eigen::ArrayXd var_se_sq;
  Eigen::Index n_eff = 0;
  ArrayXb valid_mask;
};

struct NuEpsilonEstimate {
  double value = 0;
  Eigen::Index count = 0;
};

//! Kernel density estimate (n b)^{-1} sum K((x - X_t)/b).
double density_estimate(double x, const Eigen::ArrayXd& xs, double b,
                        const KernelSpec& k);

Eigen::ArrayXd density_estimate(const Eigen::ArrayXd& eval_points,
                                const Eigen::ArrayXd& xs, double b,
                                const KernelSpec& k);

//! Self-normalized Nadaraya-Watson mean sum(Y K)/sum(K). Throws
//! EmptyWindowError when no observation falls inside the kernel support
//! around x (or the weight sum is not positive, possible for K*).
double nw_mean(double x, const TimeSeriesSample& segment, double b,
               const KernelSpec& k);

//! Kernel average of squared residuals against `mean_fn`, floored at
//! kVarianceFloor. Same window condition as nw_mean.
double nw_variance(double x, const TimeSeriesSample& segment,
                   const std::function<double(double)>& mean_fn, double b,
                   const KernelSpec& k);

//! Full per-segment fit: density with the base kernel, then mean and
//! variance with the jackknife kernel, the variance residuals taken
//! against the jackknife mean evaluated directly at each observation.
// TODO: allow a separate variance bandwidth h with h/b bounded.
SegmentEstimate estimate_segment(const TimeSeriesSample& segment,
                                 const EvaluationGrid& grid, double b,
                                 int min_segment_n = kMinSegmentN);

//! Excess fourth moment nu = E(eps^4) - 1 from standardized residuals of
//! both segments; observations whose grid cell is masked out are excluded.
NuEpsilonEstimate estimate_nu_epsilon(const SegmentEstimate& est1,
                                      const TimeSeriesSample& seg1,
                                      const SegmentEstimate& est2,
                                      const TimeSeriesSample& seg2);

namespace detail {

//! Generic self-normalized kernel fit of `values` at `eval_points`.
//! ok[i] is false when the window is empty or its weight sum is not
//! positive; value[i] is 0 there.
struct NwFit {
  Eigen::ArrayXd value;
  ArrayXb ok;
};

NwFit nw_fit(const Eigen::ArrayXd& eval_points, const Eigen::ArrayXd& xs,
             const Eigen::ArrayXd& values, double b, const KernelSpec& k);

//! Sandwich variance of the fit at each eval point:
//! sum w^2 (values - fit)^2 / (sum w)^2. Zero where the fit is not ok.
Eigen::ArrayXd sandwich_se_sq(const Eigen::ArrayXd& eval_points,
                              const Eigen::ArrayXd& xs,
                              const Eigen::ArrayXd& values, double b,
                              const KernelSpec& k);

//! mean(r^4) - 1.
double nu_from_residuals(const Eigen::ArrayXd& standardized);

}  // namespace detail

}  // namespace cpfind
