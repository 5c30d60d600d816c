#pragma once

#include <Eigen/Core>

namespace cpfind {

//! Paired observations (t_i, Y_i, X_i) with a strictly increasing time index.
struct TimeSeriesSample {
  Eigen::ArrayXd times;
  Eigen::ArrayXd y;
  Eigen::ArrayXd x;

  Eigen::Index size() const { return y.size(); }

  //! Half-open sub-window [begin, end).
  TimeSeriesSample slice(Eigen::Index begin, Eigen::Index end) const;

  //! Throws DomainError on length mismatch, non-finite values or a
  //! non-increasing time index.
  void validate() const;
};

//! Sample with times 0..n-1.
TimeSeriesSample make_sample(Eigen::ArrayXd y, Eigen::ArrayXd x);

}  // namespace cpfind
