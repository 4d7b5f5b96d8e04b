#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cpmr/error.hpp"
#include "cpmr/model.hpp"

namespace cpmr {

/// Name under which the textual notation is presented to language models.
inline constexpr std::string_view kDslName = "CPM";

class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A syntactically valid model that breaks a structural invariant. The wire
/// code is the first diagnostic's code (e.g. "DuplicateLabel").
class InvariantError : public Error {
 public:
  explicit InvariantError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }
  std::string code_name() const override;

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parses the line-oriented notation and validates the result.
/// Throws SyntaxError or InvariantError.
ProcessModel parse_dsl(std::string_view text);

/// Canonical text: two-space indentation, LF endings, tree order.
std::string serialize_dsl(const ProcessModel& model);

/// Grammar summary handed to language models alongside the format name.
std::string_view dsl_rules();

std::string quote(std::string_view text);

}  // namespace cpmr
