#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace cpfind {

struct TimeSeriesSample;

enum class KernelKind { parabolic, jackknife };

//! Parabolic (Epanechnikov) kernel 0.75(1-u^2) on [-1,1].
double kernel_eval(double u);

//! Bias-cancelling jackknife kernel K*(u) = 2K(u) - K(u/sqrt(2))/sqrt(2),
//! supported on [-sqrt(2), sqrt(2)]. Its second moment vanishes, which is
//! what removes the O(b^2) smoothing bias.
double jackknife_eval(double u);

Eigen::ArrayXd kernel_eval(const Eigen::ArrayXd& u);
Eigen::ArrayXd jackknife_eval(const Eigen::ArrayXd& u);

//! A kernel together with its support half-width and moment constants
//! phi = ∫K^2 and psi = ∫(u^2/2)K.
struct KernelSpec {
  KernelKind kind;
  double support_halfwidth;
  double phi;
  double psi;

  double operator()(double u) const {
    return kind == KernelKind::parabolic ? kernel_eval(u) : jackknife_eval(u);
  }
  Eigen::ArrayXd operator()(const Eigen::ArrayXd& u) const {
    return kind == KernelKind::parabolic ? kernel_eval(u) : jackknife_eval(u);
  }
};

//! Moment constants (phi, psi), by adaptive quadrature over the support.
std::pair<double, double> kernel_moments(KernelKind kind);

//! Fully populated spec; moments are computed once and cached.
const KernelSpec& kernel_spec(KernelKind kind);

//! Adaptive Simpson integration to absolute tolerance `tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12);

enum class BandwidthMode { rule_of_thumb, fixed, cross_validation };

struct BandwidthConfig {
  BandwidthMode mode = BandwidthMode::rule_of_thumb;
  double exponent = 0.2;
  std::optional<double> fixed_value;
  std::vector<double> cv_grid;

  void validate() const;
};

//! n^(-exponent); exponent must lie in the admissible range (1/9, 1/3).
double rule_of_thumb_bandwidth(Eigen::Index n, double exponent);

//! Leave-one-out cross-validation over `candidates`: picks the bandwidth
//! minimizing the squared prediction error of the kernel mean fit, ties
//! broken by the smallest bandwidth. A candidate that strands some
//! observation without an in-window neighbour scores +inf.
double cv_bandwidth(const TimeSeriesSample& sample,
                    const std::vector<double>& candidates);

std::vector<double> default_cv_grid();

//! Concrete bandwidth for one analysis window.
double resolve_bandwidth(const BandwidthConfig& cfg,
                         const TimeSeriesSample& window);

}  // namespace cpfind
