#include "cpfind/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpfind/errors.hpp"
#include "cpfind/sample.hpp"

namespace cpfind {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double b, double fa, double fm, double fb, double whole,
                     double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (!(a < b)) {
    return a == b ? 0.0 : -integrate(f, b, a, tol);
  }
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson(a, b, fa, fm, fb);
  return adaptive_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

double kernel_eval(double u) {
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

double jackknife_eval(double u) {
  return 2.0 * kernel_eval(u) - kernel_eval(u / kSqrt2) / kSqrt2;
}

Eigen::ArrayXd kernel_eval(const Eigen::ArrayXd& u) {
  return (u.abs() <= 1.0)
      .select(0.75 * (1.0 - u.square()), Eigen::ArrayXd::Zero(u.size()));
}

Eigen::ArrayXd jackknife_eval(const Eigen::ArrayXd& u) {
  return 2.0 * kernel_eval(u) - kernel_eval(Eigen::ArrayXd(u / kSqrt2)) / kSqrt2;
}

std::pair<double, double> kernel_moments(KernelKind kind) {
  const auto eval = [kind](double u) {
    return kind == KernelKind::parabolic ? kernel_eval(u) : jackknife_eval(u);
  };
  // Panels split at the kernel's corner points so the quadrature sees only
  // smooth pieces.
  std::vector<double> knots = kind == KernelKind::parabolic
                                  ? std::vector<double>{-1.0, 0.0, 1.0}
                                  : std::vector<double>{-kSqrt2, -1.0, 0.0,
                                                        1.0, kSqrt2};
  double phi = 0.0, psi = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    phi += integrate([&](double u) { return eval(u) * eval(u); }, knots[i],
                     knots[i + 1], 1e-13);
    psi += integrate([&](double u) { return 0.5 * u * u * eval(u); },
                     knots[i], knots[i + 1], 1e-13);
  }
  return {phi, psi};
}

const KernelSpec& kernel_spec(KernelKind kind) {
  static const KernelSpec parabolic = [] {
    auto [phi, psi] = kernel_moments(KernelKind::parabolic);
    return KernelSpec{KernelKind::parabolic, 1.0, phi, psi};
  }();
  static const KernelSpec jackknife = [] {
    auto [phi, psi] = kernel_moments(KernelKind::jackknife);
    return KernelSpec{KernelKind::jackknife, kSqrt2, phi, psi};
  }();
  return kind == KernelKind::parabolic ? parabolic : jackknife;
}

void BandwidthConfig::validate() const {
  switch (mode) {
    case BandwidthMode::rule_of_thumb:
      if (!(exponent > 1.0 / 9.0 && exponent < 1.0 / 3.0)) {
        throw DomainError("bandwidth exponent must lie in (1/9, 1/3)");
      }
      break;
    case BandwidthMode::fixed:
      if (!fixed_value || !(*fixed_value > 0.0)) {
        throw DomainError("fixed bandwidth must be positive");
      }
      break;
    case BandwidthMode::cross_validation:
      for (double c : cv_grid) {
        if (!(c > 0.0)) throw DomainError("cv candidates must be positive");
      }
      break;
  }
}

double rule_of_thumb_bandwidth(Eigen::Index n, double exponent) {
  if (n < 1) throw DomainError("sample size must be >= 1");
  if (!(exponent > 1.0 / 9.0 && exponent < 1.0 / 3.0)) {
    throw DomainError("bandwidth exponent must lie in (1/9, 1/3)");
  }
  return std::pow(static_cast<double>(n), -exponent);
}

double cv_bandwidth(const TimeSeriesSample& sample,
                    const std::vector<double>& candidates) {
  if (candidates.empty()) throw DomainError("cv candidate list is empty");
  if (sample.size() < 20) {
    throw DomainError("cv requires at least 20 observations");
  }
  std::vector<double> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  const Eigen::Index n = sample.size();
  const double inf = std::numeric_limits<double>::infinity();

  double best_score = inf;
  double best = 0.0;
  bool found = false;
  for (double b : sorted) {
    if (!(b > 0.0)) throw DomainError("cv candidates must be positive");
    double score = 0.0;
    for (Eigen::Index t = 0; t < n && score < inf; ++t) {
      // Leave-one-out fit with the base kernel.
      const Eigen::ArrayXd w =
          kernel_eval(Eigen::ArrayXd((sample.x[t] - sample.x) / b));
      const double denom = w.sum() - w[t];
      if (!(denom > 0.0)) {
        score = inf;
        break;
      }
      const double num = (w * sample.y).sum() - w[t] * sample.y[t];
      const double resid = sample.y[t] - num / denom;
      score += resid * resid;
    }
    if (score < best_score) {
      best_score = score;
      best = b;
      found = true;
    }
  }
  if (!found) {
    throw DegenerateSampleError(
        "every cv candidate leaves some observation without a neighbour");
  }
  return best;
}

std::vector<double> default_cv_grid() {
  std::vector<double> grid(10);
  const double ratio = std::pow(1.0 / 0.05, 1.0 / 9.0);
  double v = 0.05;
  for (auto& g : grid) {
    g = v;
    v *= ratio;
  }
  grid.back() = 1.0;
  return grid;
}

namespace {

// Kernel windows live in covariate units; the n^(-beta) rate is unitless.
double covariate_scale(const TimeSeriesSample& window) {
  if (window.x.size() < 2) return 1.0;
  const double sd =
      std::sqrt((window.x - window.x.mean()).square().sum() /
                static_cast<double>(window.x.size() - 1));
  return sd > 0.0 ? sd : 1.0;
}

}  // namespace

double resolve_bandwidth(const BandwidthConfig& cfg,
                         const TimeSeriesSample& window) {
  cfg.validate();
  switch (cfg.mode) {
    case BandwidthMode::rule_of_thumb:
      return covariate_scale(window) *
             rule_of_thumb_bandwidth(window.size(), cfg.exponent);
    case BandwidthMode::fixed:
      return *cfg.fixed_value;
    case BandwidthMode::cross_validation: {
      if (!cfg.cv_grid.empty()) return cv_bandwidth(window, cfg.cv_grid);
      std::vector<double> grid = default_cv_grid();
      const double scale = covariate_scale(window);
      for (auto& g : grid) g *= scale;
      return cv_bandwidth(window, grid);
    }
  }
  throw DomainError("unknown bandwidth mode");
}

}  // namespace cpfind
