#pragma once

#include <stdexcept>
#include <string>

namespace cpfind {

//! Invalid argument or configuration (caller bug / bad flags).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

//! Base for data-dependent failures: the inputs were well-formed but too
//! sparse, too short or otherwise degenerate for the requested estimate.
class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class EmptyWindowError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class SegmentTooSmallError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class AllPointsInvalidError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class NoValidResidualsError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class NoAdmissibleCandidateError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class DegenerateSampleError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

//! Covariate range or grid too narrow to test on.
class DegenerateWindowError : public EstimationError {
public:
  using EstimationError::EstimationError;
};

class InfeasibleSampleSizeError : public DomainError {
public:
  using DomainError::DomainError;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpfind
