#ifndef OPINET_ERRORS_HPP
#define OPINET_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opinet {

// Root of every error thrown by the library. The three direct subclasses map
// onto the CLI exit codes (1 validation, 2 runtime, 3 I/O).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class RuntimeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public ValidationError {
 public:
  explicit DimensionMismatch(const std::string& what)
      : ValidationError("dimension mismatch: " + what) {}
};

class RowSumViolation : public ValidationError {
 public:
  RowSumViolation(std::size_t row_in, double sum_in)
      : ValidationError("row " + std::to_string(row_in) + " sums to " +
                        std::to_string(sum_in) + ", expected 1"),
        row(row_in),
        sum(sum_in) {}
  std::size_t row;
  double sum;
};

class NegativeEntry : public ValidationError {
 public:
  NegativeEntry(std::size_t row_in, std::size_t col_in)
      : ValidationError("negative influence entry at (" +
                        std::to_string(row_in) + ", " +
                        std::to_string(col_in) + ")"),
        row(row_in),
        col(col_in) {}
  std::size_t row;
  std::size_t col;
};

class AbsRowSumViolation : public ValidationError {
 public:
  AbsRowSumViolation(std::size_t row_in, double sum_in)
      : ValidationError("row " + std::to_string(row_in) +
                        " has absolute sum " + std::to_string(sum_in) +
                        ", expected 1"),
        row(row_in),
        sum(sum_in) {}
  std::size_t row;
  double sum;
};

class NegativeDiagonal : public ValidationError {
 public:
  explicit NegativeDiagonal(std::size_t row_in)
      : ValidationError("negative self-dependency on row " +
                        std::to_string(row_in)),
        row(row_in) {}
  std::size_t row;
};

class ZeroRowInComponent : public ValidationError {
 public:
  explicit ZeroRowInComponent(std::size_t row_in)
      : ValidationError("row " + std::to_string(row_in) +
                        " has no access mass inside its component"),
        row(row_in) {}
  std::size_t row;
};

class IndexOutOfRange : public ValidationError {
 public:
  IndexOutOfRange(std::size_t index_in, std::size_t bound_in)
      : ValidationError("index " + std::to_string(index_in) +
                        " out of range [0, " + std::to_string(bound_in) + ")"),
        index(index_in),
        bound(bound_in) {}
  std::size_t index;
  std::size_t bound;
};

class VectorExternalNotAllowed : public ValidationError {
 public:
  explicit VectorExternalNotAllowed(std::size_t topic_in)
      : ValidationError("external topic " + std::to_string(topic_in) +
                        " carries per-agent values; open singleton rule "
                        "needs a scalar consensus"),
        topic(topic_in) {}
  std::size_t topic;
};

class MissingExternal : public ValidationError {
 public:
  explicit MissingExternal(std::size_t topic_in)
      : ValidationError("no consensus value supplied for external topic " +
                        std::to_string(topic_in)),
        topic(topic_in) {}
  std::size_t topic;
};

class SelfDependencyOne : public ValidationError {
 public:
  explicit SelfDependencyOne(std::size_t agent_in)
      : ValidationError("agent " + std::to_string(agent_in) +
                        " has self-dependency 1 but nonzero external input"),
        agent(agent_in) {}
  std::size_t agent;
};

class CycleDetected : public RuntimeError {
 public:
  CycleDetected() : RuntimeError("block dependency graph contains a cycle") {}
};

class DeadlockError : public RuntimeError {
 public:
  explicit DeadlockError(std::size_t pending_in)
      : RuntimeError("scheduler deadlock: " + std::to_string(pending_in) +
                     " pending blocks but none ready"),
        pending(pending_in) {}
  std::size_t pending;
};

class ConfigurationError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& file_in, std::size_t line_in,
             const std::string& msg)
      : ValidationError(file_in + ":" + std::to_string(line_in) + ": " + msg),
        file(file_in),
        line(line_in) {}
  std::string file;
  std::size_t line;
};

}  // namespace opinet

#endif  // OPINET_ERRORS_HPP
