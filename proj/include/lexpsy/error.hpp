#pragma once

#include <stdexcept>
#include <string>

namespace lexpsy {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Config,            // malformed configuration, missing input, schema mismatch
  EmptyData,         // nothing usable to analyse
  Numerical,         // decomposition failure, singular transform, rank error
  Transport,         // gateway transport failure after retries
  UnknownAdjective,  // synthetic respondent asked about an unkeyed term
  GenerationFailed,  // persona generation exhausted its re-requests
  StoreCorrupt,      // response store failed checksum or parse
  Unparseable,       // reply did not start with a scale label
  Shape,             // matrix dimensions disagree
  DegenerateScale,   // zero total-score variance in reliability
  ConstantColumn,    // correlation with a constant variable
  EmptySet,          // similarity over an empty term set
  MissingTerm,       // term not resolvable in an embedding table
  KeyGap,            // scoring key does not cover a responded item
  Format,            // malformed input file
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace lexpsy
