#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rwenas {

// Base for every error raised by the library. `kind()` is the stable name used
// in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidLength : public Error {
 public:
  InvalidLength(std::size_t expected, std::size_t got)
      : Error("InvalidLength", "expected " + std::to_string(expected) + " integers, got " +
                                   std::to_string(got)),
        expected(expected), got(got) {}
  std::size_t expected;
  std::size_t got;
};

class OutOfBounds : public Error {
 public:
  OutOfBounds(std::size_t position, long long value, int bound)
      : Error("OutOfBounds", "gene at position " + std::to_string(position) + " has value " +
                                 std::to_string(value) + ", allowed range [0, " +
                                 std::to_string(bound) + "]"),
        position(position), value(value), bound(bound) {}
  std::size_t position;
  long long value;
  int bound;
};

class DegenerateResolution : public Error {
 public:
  explicit DegenerateResolution(const std::string& what) : Error("DegenerateResolution", what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error("ShapeMismatch", what) {}
};

class TooFewSamples : public Error {
 public:
  explicit TooFewSamples(const std::string& what) : Error("TooFewSamples", what) {}
};

class EmptyValidation : public Error {
 public:
  EmptyValidation() : Error("EmptyValidation", "validation set is empty") {}
};

class MissingFile : public Error {
 public:
  explicit MissingFile(const std::string& path) : Error("MissingFile", path), path(path) {}
  std::string path;
};

class CorruptRecord : public Error {
 public:
  CorruptRecord(const std::string& file, std::size_t offset, const std::string& why)
      : Error("CorruptRecord", file + " at byte " + std::to_string(offset) + ": " + why),
        file(file), offset(offset) {}
  std::string file;
  std::size_t offset;
};

class InvalidStats : public Error {
 public:
  explicit InvalidStats(const std::string& what) : Error("InvalidStats", what) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("LengthMismatch", std::to_string(a) + " vs " + std::to_string(b)) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& what) : Error("DegenerateInput", what) {}
};

class MissingGroundTruth : public Error {
 public:
  explicit MissingGroundTruth(const std::string& id)
      : Error("MissingGroundTruth", "no ground truth for id '" + id + "'"), id(id) {}
  std::string id;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

}  // namespace rwenas
