#include "cpfind/sample.hpp"

#include <cmath>

#include "cpfind/errors.hpp"

namespace cpfind {

TimeSeriesSample TimeSeriesSample::slice(Eigen::Index begin,
                                         Eigen::Index end) const {
  if (begin < 0 || end > size() || begin > end) {
    throw DomainError("slice bounds out of range");
  }
  const Eigen::Index len = end - begin;
  return TimeSeriesSample{times.segment(begin, len), y.segment(begin, len),
                          x.segment(begin, len)};
}

void TimeSeriesSample::validate() const {
  if (y.size() < 1 || x.size() != y.size() || times.size() != y.size()) {
    throw DomainError("sample arrays must be non-empty and equal length");
  }
  if (!y.isFinite().all() || !x.isFinite().all() || !times.isFinite().all()) {
    throw DomainError("sample contains non-finite values");
  }
  for (Eigen::Index i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw DomainError("time index must be strictly increasing");
    }
  }
}

TimeSeriesSample make_sample(Eigen::ArrayXd y, Eigen::ArrayXd x) {
  TimeSeriesSample s;
  s.times = Eigen::ArrayXd::LinSpaced(y.size(), 0.0,
                                      static_cast<double>(y.size() - 1));
  s.y = std::move(y);
  s.x = std::move(x);
  return s;
}

}  // namespace cpfind
