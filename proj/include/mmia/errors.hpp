#pragma once

#include <stdexcept>
#include <string>

namespace mmia {

// Base for every library error so callers can catch one type at the CLI edge.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caption tokenized down to nothing.
struct EmptyCaptionError : Error {
  using Error::Error;
};

// Corpus generation request below the minimum viable size.
struct SpecTooSmallError : Error {
  using Error::Error;
};

// Corpus too small for the requested member/shadow split.
struct InsufficientDataError : Error {
  using Error::Error;
};

// Corpus directory or manifest is malformed; message names the record.
struct FormatError : Error {
  using Error::Error;
};

// Training loss became non-finite; message names the epoch.
struct DivergenceError : Error {
  using Error::Error;
};

// Checkpoint file is corrupt, wrong version, or wrong architecture.
struct CheckpointError : Error {
  using Error::Error;
};

// Classifier fitting needs both classes present.
struct SingleClassError : Error {
  using Error::Error;
};

// t-SNE input too small for the requested perplexity.
struct PerplexityError : Error {
  using Error::Error;
};

// Scenario code is malformed; message names the offending position.
struct ParseError : Error {
  using Error::Error;
};

// Experiment config has an unknown key or an invalid value.
struct ConfigError : Error {
  using Error::Error;
};

// A pipeline stage is missing an upstream artifact; message names the file.
struct DependencyError : Error {
  using Error::Error;
};

}  // namespace mmia
