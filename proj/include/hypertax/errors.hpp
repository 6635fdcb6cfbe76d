#pragma once

#include <stdexcept>
#include <string>

namespace hypertax {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (edge lists, TSV/CSV files); message carries a line
// number when one is known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structural graph violations: cycles, empty observed sets, nodes with no
// eligible negatives.
class GraphError : public Error {
 public:
  using Error::Error;
};

// Geometry domain violations (points outside the ball, coincident points
// where a gradient is undefined).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Unknown identifiers (concept codes, node ids out of range).
class LookupError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training aborted (non-finite gradients, invalid pairs).
class TrainError : public Error {
 public:
  using Error::Error;
};

// Metric preconditions violated (single-class AUROC, missing vectors).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Patient-record / feature-space violations.
class DataError : public Error {
 public:
  using Error::Error;
};

// File system and file format failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypertax
