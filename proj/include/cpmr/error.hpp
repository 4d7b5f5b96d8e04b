#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cpmr {

/// Closed set of failure kinds surfaced across the library. The string form
/// (see to_string) is what appears on the wire and in CLI diagnostics.
enum class Errc {
  SyntaxError,
  InvariantError,
  NotFound,
  DuplicateLabel,
  NotContiguous,
  NotASubprocess,
  NoSuchBranch,
  NoSuchCondition,
  WouldViolateInvariant,
  LastBranch,
  KindUnchanged,
  ConditionCountMismatch,
  InvalidTarget,
  InvalidMeaning,
  BackendUnavailable,
  UnparseableOutput,
  InvalidModelOutput,
  IncompleteTrace,
  InvalidTrace,
  IdMismatch,
  EmptyInput,
  MissingFile,
  BadCsv,
  InvalidModel,
  UnknownSession,
  NothingToUndo,
  BadRequest,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Wire-facing code; subclasses may refine it (e.g. the first diagnostic).
  virtual std::string code_name() const { return std::string(to_string(code_)); }

 private:
  Errc code_;
};

}  // namespace cpmr
