#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace constraintsmith {

// Base of every error this library throws. `kind()` is the stable name used
// on the wire and in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct Violation {
  std::string path;     // JSON pointer into the spec document
  std::string message;

  bool operator==(const Violation&) const = default;
};

class InvalidSpec : public Error {
 public:
  explicit InvalidSpec(std::vector<Violation> violations)
      : Error("InvalidSpec", summarize(violations)),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& v) {
    std::string out = "invalid constraint spec";
    for (const auto& x : v) out += "; " + x.path + ": " + x.message;
    return out;
  }

  std::vector<Violation> violations_;
};

// Malformed spec document: bad JSON, unknown variant, wrong field types.
class SpecParseError : public Error {
 public:
  SpecParseError(std::string path, const std::string& message,
                 std::size_t byte_offset = npos)
      : Error("SpecParseError", path.empty() ? message : path + ": " + message),
        path_(std::move(path)),
        byte_offset_(byte_offset) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  const std::string& path() const noexcept { return path_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::string path_;
  std::size_t byte_offset_;
};

class RegexSyntaxError : public Error {
 public:
  RegexSyntaxError(std::size_t offset, const std::string& message)
      : Error("SyntaxError", message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedFeature : public Error {
 public:
  UnsupportedFeature(std::string feature, std::size_t offset)
      : Error("UnsupportedFeature",
              "unsupported regex feature '" + feature + "' at offset " +
                  std::to_string(offset)),
        feature_(std::move(feature)),
        offset_(offset) {}

  const std::string& feature() const noexcept { return feature_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string feature_;
  std::size_t offset_;
};

class EmptyLanguage : public Error {
 public:
  EmptyLanguage() : Error("EmptyLanguage", "pattern matches no string") {}
};

class ComplexityLimit : public Error {
 public:
  explicit ComplexityLimit(std::size_t cap)
      : Error("ComplexityLimit",
              "automaton exceeds the state cap of " + std::to_string(cap)),
        cap_(cap) {}

  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

class LengthExceeded : public Error {
 public:
  explicit LengthExceeded(std::size_t max_len)
      : Error("LengthExceeded",
              "no accepted string of length <= " + std::to_string(max_len)) {}
};

class UnknownState : public Error {
 public:
  explicit UnknownState(std::size_t state)
      : Error("UnknownState", "unknown automaton state " + std::to_string(state)) {}
};

class TokenNotAllowed : public Error {
 public:
  TokenNotAllowed(std::size_t state, std::size_t token)
      : Error("TokenNotAllowed", "token " + std::to_string(token) +
                                     " is not allowed in state " +
                                     std::to_string(state)) {}
};

class VocabularyError : public Error {
 public:
  explicit VocabularyError(const std::string& message)
      : Error("VocabularyError", message) {}
};

class ScorerError : public Error {
 public:
  ScorerError(std::size_t step, const std::string& message)
      : Error("ScorerError", "step " + std::to_string(step) + ": " + message),
        step_(step),
        reason_(message) {}

  std::size_t step() const noexcept { return step_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t step_;
  std::string reason_;
};

}  // namespace constraintsmith
