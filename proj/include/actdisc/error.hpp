#pragma once

#include <stdexcept>
#include <string>

namespace actdisc {

// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (line/column carried in the message).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A pipeline stage failed; `stage()` names the module, `source()` the input.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string source, const std::string& what)
      : Error("[" + stage + "] " + (source.empty() ? "" : source + ": ") + what),
        stage_(std::move(stage)),
        source_(std::move(source)) {}
  const std::string& stage() const { return stage_; }
  const std::string& source() const { return source_; }

 private:
  std::string stage_;
  std::string source_;
};

}  // namespace actdisc
