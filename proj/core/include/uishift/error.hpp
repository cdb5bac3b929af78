#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uishift {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A gold target whose shape is inconsistent (e.g. click without bbox).
class CorruptGoldError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Record-level schema violation, located by file and 1-based line.
class SchemaError : public Error {
 public:
  SchemaError(std::string file, std::size_t line, std::string field,
              const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " +
              (field.empty() ? what : "field '" + field + "': " + what)),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

// The corpus root itself is unusable.
class CorpusError : public Error {
 public:
  using Error::Error;
};

class UnresolvedTargetError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace uishift
