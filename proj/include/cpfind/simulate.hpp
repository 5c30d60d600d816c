#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "cpfind/break_tests.hpp"
#include "cpfind/sample.hpp"

namespace cpfind {

enum class DgpKind { white_noise, arma_garch, tar };

struct DgpSpec {
  DgpKind kind = DgpKind::white_noise;
  // ARMA-GARCH
  double phi1 = 0.5, theta1 = -0.4;
  double omega = 0.1, garch_alpha1 = 0.1, garch_beta1 = 0.8;
  // TAR
  double phi11 = 0.6, phi12 = 0.3, phi21 = -0.6, phi22 = 0.4;

  void validate() const;
};

enum class NoiseKind { normal, student_t, power_law };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::normal;
  double nu = 10.0;     // Student's t degrees of freedom
  double x0 = 1.0;      // power-law scale
  double alpha = 0.6;   // power-law tail exponent

  void validate() const;
};

struct SimulationScenario {
  Eigen::Index n = 0;
  DgpSpec dgp{};
  NoiseSpec noise{};
  std::vector<Eigen::Index> breaks;   // index of the first post-break row
  std::vector<int> segment_ids;       // one per inter-break interval
  std::uint64_t seed = 0;

  void validate() const;
};

struct SegmentFunctions {
  std::function<double(double)> mu;
  std::function<double(double)> sigma2;  // floored at kVarianceFloor
};

struct DetectionMetrics {
  double amd = 0;
  double adn = 0;
  int reps = 0;
};

struct SizePowerResult {
  double size = 0;
  double power = 0;
};

//! Covariate series from the chosen DGP with a 500-draw burn-in,
//! standard-normal innovations, deterministic under `seed`.
Eigen::ArrayXd gen_covariate(const DgpSpec& dgp, Eigen::Index n,
                             std::uint64_t seed);

//! Noise draws: N(0,1), raw t_nu, or median-centered power law on (0, x0].
Eigen::ArrayXd gen_noise(const NoiseSpec& noise, Eigen::Index n,
                         std::uint64_t seed);

//! The Table-style segment (mu, sigma^2) pair, id in 1..5.
SegmentFunctions segment_functions(int id);

//! Y_t = mu_seg(X_t) + sqrt(sigma2_seg(X_t)) * eps_t with the segment
//! switching at each break index.
TimeSeriesSample compose(const Eigen::ArrayXd& x, const Eigen::ArrayXd& eps,
                         const std::vector<Eigen::Index>& breaks,
                         const std::vector<int>& segment_ids);

std::pair<TimeSeriesSample, std::vector<Eigen::Index>> synthesize(
    const SimulationScenario& scenario);

//! 1..min(4, feasible) breaks, uniform positions with pairwise gaps >= 100
//! and >= 100 from both endpoints; rejection-sampled.
std::vector<Eigen::Index> inject_breaks(Eigen::Index n, std::mt19937_64& rng);

//! Sum over detected breaks of the distance to the nearest true break.
double amd(const std::vector<Eigen::Index>& truth,
           const std::vector<Eigen::Index>& detected);

//! Absolute difference in break counts.
double adn(const std::vector<Eigen::Index>& truth,
           const std::vector<Eigen::Index>& detected);

//! Empirical size (no break) and power (single seg5 -> seg2 break placed
//! uniformly in the central 60%) of the midpoint test, over `reps`
//! replications with seeds derived from `seed`.
SizePowerResult run_size_power(const DgpSpec& dgp, const NoiseSpec& noise,
                               Eigen::Index n, TestTarget target, int reps,
                               std::uint64_t seed);

using Detector = std::function<std::vector<Eigen::Index>(
    const TimeSeriesSample&, const std::vector<Eigen::Index>& truth)>;

//! Random-break detection benchmark; `detector` defaults to cpfind with
//! L_min = 100, joint target, alpha = 0.05.
DetectionMetrics run_detection_benchmark(const DgpSpec& dgp,
                                         const NoiseSpec& noise,
                                         Eigen::Index n, int reps,
                                         std::uint64_t seed,
                                         const Detector& detector = {});

//! One 64-bit seed per (master, stream) pair, splitmix64-mixed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

namespace detail {

//! Joint outcome of the midpoint test on every replication of a scenario
//! family; estimation failures count as non-rejections.
struct RepDecisions {
  std::vector<bool> mean, variance, joint;
};

RepDecisions size_power_reps(const DgpSpec& dgp, const NoiseSpec& noise,
                             Eigen::Index n, int reps, std::uint64_t seed,
                             bool with_break);

//! ARMA-GARCH recursion exposing the GARCH innovations (for moment checks).
std::pair<Eigen::ArrayXd, Eigen::ArrayXd> arma_garch_series(
    const DgpSpec& dgp, Eigen::Index n, std::uint64_t seed);

//! Raw bounded power-law draws on (0, x0] before median-centering.
Eigen::ArrayXd power_law_raw(const NoiseSpec& noise, Eigen::Index n,
                          std::uint64_t seed);

}  // namespace detail

}  // namespace cpfind
