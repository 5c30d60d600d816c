#include "cpfind/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpfind/detect.hpp"
#include "cpfind/errors.hpp"
#include "cpfind/parallel.hpp"

namespace cpfind {

namespace {

constexpr Eigen::Index kBurnIn = 500;
constexpr Eigen::Index kMinBreakGap = 100;

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 over a golden-ratio stream offset.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void DgpSpec::validate() const {
  const bool finite =
      std::isfinite(phi1) && std::isfinite(theta1) && std::isfinite(omega) &&
      std::isfinite(garch_alpha1) && std::isfinite(garch_beta1) &&
      std::isfinite(phi11) && std::isfinite(phi12) && std::isfinite(phi21) &&
      std::isfinite(phi22);
  if (!finite) throw DomainError("dgp parameters must be finite");
  if (kind == DgpKind::arma_garch) {
    if (!(omega > 0.0) || garch_alpha1 < 0.0 || garch_beta1 < 0.0 ||
        garch_alpha1 + garch_beta1 >= 1.0) {
      throw DomainError("garch parameters violate stationarity");
    }
  }
}

void NoiseSpec::validate() const {
  if (kind == NoiseKind::student_t && !(nu > 2.0)) {
    throw DomainError("student-t noise requires nu > 2");
  }
  if (kind == NoiseKind::power_law &&
      (!(x0 > 0.0) || !(alpha > 0.0) || !(alpha < 2.0))) {
    throw DomainError("power-law noise requires x0 > 0 and alpha in (0, 2)");
  }
}

void SimulationScenario::validate() const {
  if (n < 1) throw DomainError("scenario sample size must be >= 1");
  dgp.validate();
  noise.validate();
  if (segment_ids.size() != breaks.size() + 1) {
    throw DomainError("need one segment id per inter-break interval");
  }
  for (int id : segment_ids) {
    if (id < 1 || id > 5) throw DomainError("segment id must be in 1..5");
  }
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    if (breaks[i] < 1 || breaks[i] >= n) {
      throw DomainError("breaks must lie strictly inside [1, n)");
    }
    if (i > 0 && breaks[i] - breaks[i - 1] < kMinBreakGap) {
      throw DomainError("breaks must be at least 100 apart");
    }
  }
  if (n <= 2000 && breaks.size() > 4) {
    throw DomainError("at most 4 breaks for n <= 2000");
  }
}

namespace detail {

std::pair<Eigen::ArrayXd, Eigen::ArrayXd> arma_garch_series(
    const DgpSpec& dgp, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::ArrayXd y(n), eps_out(n);
  double y_prev = 0.0, eps_prev = 0.0, sig2_prev = 0.0;
  for (Eigen::Index t = 0; t < kBurnIn + n; ++t) {
    const double sig2 = dgp.omega + dgp.garch_alpha1 * eps_prev * eps_prev +
                        dgp.garch_beta1 * sig2_prev;
    const double eps = std::sqrt(sig2) * normal(rng);
    const double yt = dgp.phi1 * y_prev + eps + dgp.theta1 * eps_prev;
    if (t >= kBurnIn) {
      y[t - kBurnIn] = yt;
      eps_out[t - kBurnIn] = eps;
    }
    y_prev = yt;
    eps_prev = eps;
    sig2_prev = sig2;
  }
  return {y, eps_out};
}

Eigen::ArrayXd power_law_raw(const NoiseSpec& noise, Eigen::Index n,
                             std::uint64_t seed) {
  // Density proportional to x^{1-alpha} on (0, x0]: the printed form is
  // increasing in x, so its support is bounded above by x0. Inverse-cdf
  // sampling: X = x0 * U^{1/(2-alpha)}.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::ArrayXd out(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double u = 1.0 - unif(rng);  // (0, 1]
    out[t] = noise.x0 * std::pow(u, 1.0 / (2.0 - noise.alpha));
  }
  return out;
}

}  // namespace detail

Eigen::ArrayXd gen_covariate(const DgpSpec& dgp, Eigen::Index n,
                             std::uint64_t seed) {
  if (n < 1) throw DomainError("n must be >= 1");
  dgp.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (dgp.kind) {
    case DgpKind::white_noise: {
      Eigen::ArrayXd out(n);
      for (Eigen::Index t = 0; t < kBurnIn; ++t) normal(rng);
      for (Eigen::Index t = 0; t < n; ++t) out[t] = normal(rng);
      return out;
    }
    case DgpKind::arma_garch:
      return detail::arma_garch_series(dgp, n, seed).first;
    case DgpKind::tar: {
      Eigen::ArrayXd out(n);
      double y1 = 0.0, y2 = 0.0;
      for (Eigen::Index t = 0; t < kBurnIn + n; ++t) {
        const double eps = normal(rng);
        const double yt = y1 <= 0.0 ? dgp.phi11 * y1 + dgp.phi12 * y2 + eps
                                    : dgp.phi21 * y1 + dgp.phi22 * y2 + eps;
        if (t >= kBurnIn) out[t - kBurnIn] = yt;
        y2 = y1;
        y1 = yt;
      }
      return out;
    }
  }
  throw DomainError("unknown dgp kind");
}

Eigen::ArrayXd gen_noise(const NoiseSpec& noise, Eigen::Index n,
                         std::uint64_t seed) {
  if (n < 1) throw DomainError("n must be >= 1");
  noise.validate();
  std::mt19937_64 rng(seed);
  switch (noise.kind) {
    case NoiseKind::normal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::ArrayXd out(n);
      for (Eigen::Index t = 0; t < n; ++t) out[t] = normal(rng);
      return out;
    }
    case NoiseKind::student_t: {
      std::student_t_distribution<double> t(noise.nu);
      Eigen::ArrayXd out(n);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = t(rng);
      return out;
    }
    case NoiseKind::power_law: {
      // Power-law draws take only positive values; centering by the sample
      // median lets the noise act on both sides of the regression function.
      Eigen::ArrayXd out = detail::power_law_raw(noise, n, seed);
      std::vector<double> sorted(out.data(), out.data() + n);
      std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
      double median = sorted[n / 2];
      if (n % 2 == 0) {
        std::nth_element(sorted.begin(), sorted.begin() + n / 2 - 1,
                         sorted.end());
        median = 0.5 * (median + sorted[n / 2 - 1]);
      }
      return out - median;
    }
  }
  throw DomainError("unknown noise kind");
}

SegmentFunctions segment_functions(int id) {
  const auto floored = [](double v) { return std::max(v, kVarianceFloor); };
  switch (id) {
    case 1:
      return {[](double x) { return 0.5 + 0.2 * x; },
              [floored](double) { return floored(1.0); }};
    case 2:
      return {[](double x) {
                return 0.1 + 0.3 * x * x + 0.1 * x * x * x +
                       0.2 * x * x * x * x;
              },
              [floored](double x) { return floored(x * x); }};
    case 3:
      return {[](double x) { return std::log(0.4 + 0.1 * x * x); },
              [floored](double x) { return floored(0.1 + 0.4 * x * x); }};
    case 4:
      return {[](double x) { return std::exp(0.01 * x); },
              [floored](double x) {
                const double c = 0.8 + x;
                return floored(0.5 + c * c * c * c);
              }};
    case 5:
      return {[](double x) { return 0.9 * std::sin(x); },
              [floored](double x) {
                return floored(std::log1p(0.4 * x * x));
              }};
    default:
      throw DomainError("segment id must be in 1..5");
  }
}

TimeSeriesSample compose(const Eigen::ArrayXd& x, const Eigen::ArrayXd& eps,
                         const std::vector<Eigen::Index>& breaks,
                         const std::vector<int>& segment_ids) {
  const Eigen::Index n = x.size();
  if (eps.size() != n) throw DomainError("x and eps must have equal length");
  if (segment_ids.size() != breaks.size() + 1) {
    throw DomainError("need one segment id per inter-break interval");
  }
  Eigen::ArrayXd y(n);
  Eigen::Index start = 0;
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    const Eigen::Index stop = i < breaks.size() ? breaks[i] : n;
    if (stop < start || stop > n) {
      throw DomainError("breaks must be sorted and inside [1, n)");
    }
    const SegmentFunctions seg = segment_functions(segment_ids[i]);
    for (Eigen::Index t = start; t < stop; ++t) {
      y[t] = seg.mu(x[t]) + std::sqrt(seg.sigma2(x[t])) * eps[t];
    }
    start = stop;
  }
  return make_sample(std::move(y), x);
}

std::pair<TimeSeriesSample, std::vector<Eigen::Index>> synthesize(
    const SimulationScenario& scenario) {
  scenario.validate();
  const Eigen::ArrayXd x =
      gen_covariate(scenario.dgp, scenario.n, derive_seed(scenario.seed, 1));
  const Eigen::ArrayXd eps =
      gen_noise(scenario.noise, scenario.n, derive_seed(scenario.seed, 2));
  return {compose(x, eps, scenario.breaks, scenario.segment_ids),
          scenario.breaks};
}

std::vector<Eigen::Index> inject_breaks(Eigen::Index n,
                                        std::mt19937_64& rng) {
  if (n < 300) {
    throw InfeasibleSampleSizeError(
        "need n >= 300 to place a break with 100-gap margins");
  }
  const auto max_count =
      std::min<Eigen::Index>(4, (n - kMinBreakGap) / (2 * kMinBreakGap));
  std::uniform_int_distribution<Eigen::Index> count_dist(1, max_count);
  const Eigen::Index count = count_dist(rng);
  std::uniform_int_distribution<Eigen::Index> pos_dist(kMinBreakGap,
                                                       n - kMinBreakGap);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<Eigen::Index> breaks(count);
    for (auto& b : breaks) b = pos_dist(rng);
    std::sort(breaks.begin(), breaks.end());
    bool ok = true;
    for (Eigen::Index i = 1; i < count; ++i) {
      if (breaks[i] - breaks[i - 1] < kMinBreakGap) {
        ok = false;
        break;
      }
    }
    if (ok) return breaks;
  }
  throw InfeasibleSampleSizeError("could not place breaks with 100-gaps");
}

double amd(const std::vector<Eigen::Index>& truth,
           const std::vector<Eigen::Index>& detected) {
  if (truth.empty()) throw DomainError("amd requires a non-empty truth set");
  double sum = 0.0;
  for (const Eigen::Index d : detected) {
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::Index t : truth) {
      best = std::min(best, std::abs(static_cast<double>(d - t)));
    }
    sum += best;
  }
  return sum;
}

double adn(const std::vector<Eigen::Index>& truth,
           const std::vector<Eigen::Index>& detected) {
  return std::abs(static_cast<double>(truth.size()) -
                  static_cast<double>(detected.size()));
}

namespace detail {

RepDecisions size_power_reps(const DgpSpec& dgp, const NoiseSpec& noise,
                             Eigen::Index n, int reps, std::uint64_t seed,
                             bool with_break) {
  RepDecisions out;
  out.mean.assign(reps, false);
  out.variance.assign(reps, false);
  out.joint.assign(reps, false);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t i) {
    const std::uint64_t rep_seed =
        derive_seed(seed, (with_break ? 1000000 : 0) + i);
    SimulationScenario scenario;
    scenario.n = n;
    scenario.dgp = dgp;
    scenario.noise = noise;
    scenario.seed = derive_seed(rep_seed, 4);
    if (with_break) {
      // Single break placed uniformly in the central 60%.
      std::mt19937_64 rng(derive_seed(rep_seed, 3));
      const auto lo = static_cast<Eigen::Index>(std::ceil(0.2 * n));
      const auto hi = static_cast<Eigen::Index>(std::floor(0.8 * n));
      std::uniform_int_distribution<Eigen::Index> pos(lo, hi);
      scenario.breaks = {pos(rng)};
      scenario.segment_ids = {5, 2};
    } else {
      // Null model: segment 1, whose variance is bounded away from zero as
      // the stability theory assumes. Segment 5's sigma^2 vanishes at x=0,
      // where the type-I error is no longer governed by the limit law.
      scenario.segment_ids = {1};
    }
    const auto [sample, truth] = synthesize(scenario);
    TestConfig tc;
    try {
      const JointOutcome joint = test_joint(sample, n / 2, tc);
      out.mean[i] = joint.mean.reject;
      out.variance[i] = joint.variance.reject;
      out.joint[i] = joint.reject_any;
    } catch (const EstimationError&) {
      // insufficient data counts as a non-rejection
    }
  });
  return out;
}

}  // namespace detail

namespace {

double rejection_fraction(const detail::RepDecisions& d, TestTarget target) {
  const std::vector<bool>& flags = target == TestTarget::mean ? d.mean
                                   : target == TestTarget::variance
                                       ? d.variance
                                       : d.joint;
  if (flags.empty()) return 0.0;
  return static_cast<double>(std::count(flags.begin(), flags.end(), true)) /
         static_cast<double>(flags.size());
}

}  // namespace

SizePowerResult run_size_power(const DgpSpec& dgp, const NoiseSpec& noise,
                               Eigen::Index n, TestTarget target, int reps,
                               std::uint64_t seed) {
  if (reps < 1) throw DomainError("reps must be >= 1");
  SizePowerResult result;
  result.size = rejection_fraction(
      detail::size_power_reps(dgp, noise, n, reps, seed, false), target);
  result.power = rejection_fraction(
      detail::size_power_reps(dgp, noise, n, reps, seed, true), target);
  return result;
}

DetectionMetrics run_detection_benchmark(const DgpSpec& dgp,
                                         const NoiseSpec& noise,
                                         Eigen::Index n, int reps,
                                         std::uint64_t seed,
                                         const Detector& detector) {
  if (reps < 1) throw DomainError("reps must be >= 1");
  Detector run = detector;
  if (!run) {
    run = [](const TimeSeriesSample& series,
             const std::vector<Eigen::Index>&) {
      DetectConfig cfg;
      cfg.l_min = 100;
      cfg.alpha = 0.05;
      cfg.target = TestTarget::joint;
      return cpfind(series, cfg).breaks;
    };
  }
  std::vector<double> md(reps), dn(reps);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    SimulationScenario scenario;
    scenario.n = n;
    scenario.dgp = dgp;
    scenario.noise = noise;
    scenario.seed = derive_seed(seed, 500000 + i);
    scenario.breaks = inject_breaks(n, rng);
    scenario.segment_ids.resize(scenario.breaks.size() + 1);
    // Rotate through the segment catalogue so adjacent intervals always
    // carry different mean/variance pairs.
    for (std::size_t s = 0; s < scenario.segment_ids.size(); ++s) {
      scenario.segment_ids[s] = static_cast<int>(s % 5) + 1;
    }
    const auto [sample, truth] = synthesize(scenario);
    const std::vector<Eigen::Index> detected = run(sample, truth);
    md[i] = amd(truth, detected);
    dn[i] = adn(truth, detected);
  });
  DetectionMetrics metrics;
  metrics.reps = reps;
  metrics.amd = Eigen::Map<const Eigen::ArrayXd>(md.data(), reps).mean();
  metrics.adn = Eigen::Map<const Eigen::ArrayXd>(dn.data(), reps).mean();
  return metrics;
}

}  // namespace cpfind
