#pragma once

#include <Eigen/Core>

namespace cpfind {

//! Evaluation grid x_j = lambda1 + 2jb over the covariate range, with
//! m = ceil((lambda2 - lambda1)/(2b)) points. Suprema of the test
//! statistics are taken over this grid.
struct EvaluationGrid {
  Eigen::ArrayXd points;
  Eigen::Index m = 0;
  double lambda1 = 0;
  double lambda2 = 0;
  double spacing = 0;  // 2b

  double bandwidth() const { return spacing / 2.0; }
};

EvaluationGrid build_grid(double lambda1, double lambda2, double b);

}  // namespace cpfind
