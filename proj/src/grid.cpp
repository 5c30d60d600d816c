#include "cpfind/grid.hpp"

#include <cmath>

#include "cpfind/errors.hpp"

namespace cpfind {

EvaluationGrid build_grid(double lambda1, double lambda2, double b) {
  if (!(lambda1 < lambda2)) {
    throw DomainError("grid range is empty: lambda1 >= lambda2");
  }
  if (!(b > 0.0)) throw DomainError("bandwidth must be positive");

  EvaluationGrid grid;
  grid.lambda1 = lambda1;
  grid.lambda2 = lambda2;
  grid.spacing = 2.0 * b;
  // Nudge guards against ratios like 2.0000000000000004 from rounding.
  grid.m = static_cast<Eigen::Index>(
      std::ceil((lambda2 - lambda1) / grid.spacing - 1e-12));
  if (grid.m < 1) grid.m = 1;
  grid.points = lambda1 +
                grid.spacing * Eigen::ArrayXd::LinSpaced(
                                   grid.m, 0.0, static_cast<double>(grid.m - 1));
  return grid;
}

}  // namespace cpfind
