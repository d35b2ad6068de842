#pragma once

#include <stdexcept>
#include <string>

namespace hbmeta {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input-data problems (bad datasets, malformed files, invalid arguments).
/// The CLI maps these to exit code 2.
struct DataError : Error {
  using Error::Error;
};

struct DuplicateStudyId : DataError {
  using DataError::DataError;
};
struct EmptyArm : DataError {
  using DataError::DataError;
};
struct NegativeCount : DataError {
  using DataError::DataError;
};
struct MalformedHeader : DataError {
  using DataError::DataError;
};
struct NonIntegerCount : DataError {
  using DataError::DataError;
};
struct NoUsableStudies : DataError {
  using DataError::DataError;
};
struct DegenerateWeights : DataError {
  using DataError::DataError;
};
struct InsufficientStudies : DataError {
  using DataError::DataError;
};
struct AllZeroVariance : DataError {
  using DataError::DataError;
};
struct NonPositiveRR : DataError {
  using DataError::DataError;
};
struct RateOutOfRange : DataError {
  using DataError::DataError;
};
struct InsufficientSims : DataError {
  using DataError::DataError;
};
struct EmptySpec : DataError {
  using DataError::DataError;
};

/// Numerical-domain problems (evaluating a density outside its support,
/// transform arguments outside their domain).
struct DomainError : Error {
  using Error::Error;
};
struct OutOfSupport : DomainError {
  using DomainError::DomainError;
};

/// Sampler and diagnostics failures. The CLI maps DiagnosticsFailure to
/// exit code 3.
struct NonFiniteDensity : Error {
  using Error::Error;
};
struct GradientFailure : Error {
  using Error::Error;
};
struct AllDivergent : Error {
  using Error::Error;
};
struct InsufficientDraws : Error {
  using Error::Error;
};
struct DiagnosticsFailure : Error {
  using Error::Error;
};

}  // namespace hbmeta
