#pragma once

#include <stdexcept>
#include <string>

namespace simseg {

/// Root of the library's error hierarchy.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed argument.
class InvalidInput : public Error {
  public:
    using Error::Error;
};

/// The token stream contained no segmentation token.
class NoSegToken : public Error {
  public:
    using Error::Error;
};

/// Requested pooling grid is finer than the similarity map supports (b = 0).
class GridTooFine : public InvalidInput {
  public:
    using InvalidInput::InvalidInput;
};

/// Critic reply had no recognizable final decision.
class UnparseableVerdict : public Error {
  public:
    using Error::Error;
};

/// Assistant transport failure; message carries the sample id.
class PipelineIo : public Error {
  public:
    using Error::Error;
};

/// No approved records to package.
class EmptyDataset : public Error {
  public:
    using Error::Error;
};

/// Filesystem or format failure.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace simseg
