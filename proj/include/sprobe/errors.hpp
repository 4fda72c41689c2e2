#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sprobe {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line (CoNLL-U, CSV).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A sentence whose head assignment does not form a tree.
class ValidationError : public Error {
 public:
  ValidationError(std::string sentence_id, const std::string& what)
      : Error("sentence '" + sentence_id + "': " + what), sentence_id_(std::move(sentence_id)) {}
  const std::string& sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

// EMB1 header problems: bad magic, unsupported version, nonzero reserved word.
class FormatError : public Error {
 public:
  using Error::Error;
};

// EMB1 byte stream ends before a declared length is satisfied.
class CorruptionError : public Error {
 public:
  CorruptionError(std::size_t offset, const std::string& what)
      : Error("byte offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Numeric payload problem attributable to one sentence (e.g. NaN in a matrix).
class DataError : public Error {
 public:
  DataError(std::string sentence_id, const std::string& what)
      : Error("sentence '" + sentence_id + "': " + what), sentence_id_(std::move(sentence_id)) {}
  const std::string& sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

class AlignmentError : public Error {
 public:
  AlignmentError(std::string sentence_id, const std::string& what)
      : Error("sentence '" + sentence_id + "': " + what), sentence_id_(std::move(sentence_id)) {}
  const std::string& sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, double learning_rate)
      : Error("non-finite loss in epoch " + std::to_string(epoch) +
              " (learning rate " + std::to_string(learning_rate) + ")"),
        epoch_(epoch),
        learning_rate_(learning_rate) {}
  int epoch() const { return epoch_; }
  double learning_rate() const { return learning_rate_; }

 private:
  int epoch_;
  double learning_rate_;
};

// Eigenvalue or conditioning failure in the synthetic generators.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Bad caller-supplied arguments or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sprobe
