#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cpmr/error.hpp"
#include "cpmr/model.hpp"
#include "cpmr/patterns.hpp"

namespace cpmr {

/// A single redesign request in the user's words (trimmed, non-empty).
class Wording {
 public:
  /// Throws Error{EmptyInput} when nothing but whitespace is given.
  explicit Wording(std::string_view text);
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

struct NlMeaning {
  std::string text;
  friend bool operator==(const NlMeaning&, const NlMeaning&) = default;
};

using Meaning = std::variant<StructuredMeaning, NlMeaning>;

/// The text handed to the Apply prompt for a meaning.
std::string meaning_text(const Meaning& m);
nlohmann::json to_json(const Meaning& m);

// ---- prompts ---------------------------------------------------------------

struct Prompt {
  std::string system;
  std::string user;
};

namespace prompt_templates {
extern const std::string_view kIdentifySystem;
extern const std::string_view kIdentifyUser;
extern const std::string_view kDeriveSystem;
extern const std::string_view kDeriveUser;
extern const std::string_view kApplySystem;
extern const std::string_view kApplyUser;
}  // namespace prompt_templates

/// "cp1: Insert Process Fragment - <description>" lines, catalog order.
std::string catalog_listing(const PatternCatalog& cat);

Prompt identify_prompt(const Wording& w, const PatternCatalog& cat);
Prompt derive_prompt(PatternId id, const Wording& w);
/// `change` is the meaning text (CPMR) or the raw wording (baseline).
Prompt apply_prompt(const ProcessModel& model, std::string_view change);

// ---- backends --------------------------------------------------------------

enum class Stage { Identify, Derive, Apply };
std::string_view to_string(Stage s) noexcept;

/// Everything a backend may look at. Network backends only send `prompt`;
/// offline backends use the structured fields.
struct BackendRequest {
  Stage stage = Stage::Identify;
  Prompt prompt;
  std::string wording;
  std::optional<PatternId> pattern;
  const ProcessModel* model = nullptr;
  const Meaning* meaning = nullptr;  // null for baseline apply (wording is the change)
};

/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  /// Raw response text. Throws Error{BackendUnavailable} on transport failure.
  virtual std::string complete(const BackendRequest& request) const = 0;
};

/// Deterministic offline backend: keyword rules for identify, pattern-driven
/// extraction for derive, and the change-pattern engine for apply.
class MockBackend final : public Backend {
 public:
  std::string name() const override { return "mock"; }
  std::string complete(const BackendRequest& request) const override;
};

/// Keyword rule table. nullopt when no rule or rules for several patterns match.
std::optional<PatternId> mock_identify(std::string_view wording);
/// Parameter extraction for a known pattern; nullopt when details are missing.
std::optional<StructuredMeaning> mock_derive(PatternId id, std::string_view wording);

enum class BackendKind { Mock, Llm };

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::optional<std::string> endpoint;  // e.g. http://localhost:8080/v1/chat/completions
  std::optional<std::string> model;
  std::string api_key_env = "CPMR_LLM_API_KEY";
  double temperature = 0.0;
  std::chrono::seconds timeout{60};

  /// Throws Error{BadRequest} when an llm config lacks endpoint or model.
  void check() const;
  /// Reads CPMR_LLM_ENDPOINT, CPMR_LLM_MODEL and CPMR_LLM_TIMEOUT_SECS.
  static BackendConfig llm_from_env();
};

/// Chat-completion style HTTP backend. One retry on transport errors.
class LlmBackend final : public Backend {
 public:
  explicit LlmBackend(BackendConfig config);
  std::string name() const override { return *config_.model; }
  std::string complete(const BackendRequest& request) const override;

  /// Request body sent for a prompt (exposed for tests).
  nlohmann::json request_body(const Prompt& p) const;

 private:
  BackendConfig config_;
};

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

/// Appends one JSON line per backend call to a stream. Thread-safe.
class TranscriptSink {
 public:
  explicit TranscriptSink(std::ostream& out) : out_(out) {}
  void write(const std::string& line);

 private:
  std::mutex mu_;
  std::ostream& out_;
};

// ---- traces and runs -------------------------------------------------------

enum class Approach { Cpmr, Baseline };
std::string_view to_string(Approach a) noexcept;

struct PipelineTrace {
  Approach approach = Approach::Cpmr;
  std::string wording;
  bool step_1a = false;
  std::optional<PatternId> identified;
  std::optional<bool> step_1b;
  std::optional<bool> step_2;
  std::optional<Meaning> meaning;
  std::optional<bool> step_3;
  std::optional<ProcessModel> aao;
  std::optional<std::string> apply_error;
  std::vector<std::string> transcripts;
};

/// Throws Error{InvalidTrace} when the step presence rules are broken.
void check_trace_shape(const PipelineTrace& t);

/// "(T,F,T,·)" for CPMR traces, "(·,·,·,T)" style for baseline ones.
std::string step_string(const PipelineTrace& t);
nlohmann::json to_json(const PipelineTrace& t);

struct Expectation {
  std::optional<PatternId> pattern;
  std::optional<ProcessModel> eao;
};

/// Thrown when the backend becomes unreachable mid-run; carries what was done.
class PipelineAborted : public Error {
 public:
  PipelineAborted(const std::string& detail, PipelineTrace partial)
      : Error(Errc::BackendUnavailable, detail), partial_(std::move(partial)) {}
  const PipelineTrace& partial() const noexcept { return partial_; }

 private:
  PipelineTrace partial_;
};

class Pipeline {
 public:
  explicit Pipeline(std::shared_ptr<const Backend> backend, TranscriptSink* sink = nullptr);

  const Backend& backend() const noexcept { return *backend_; }

  /// nullopt means NotIdentified ("NA", extra prose, unknown or excluded id).
  std::optional<PatternId> identify(const Wording& w, const PatternCatalog& cat,
                                    std::vector<std::string>* transcripts = nullptr) const;
  /// nullopt means NotDerived.
  std::optional<Meaning> derive(PatternId id, const Wording& w,
                                std::vector<std::string>* transcripts = nullptr) const;
  /// Throws UnparseableOutput / InvalidModelOutput / BackendUnavailable.
  ProcessModel apply_llm(const ProcessModel& model, const Meaning& m,
                         std::vector<std::string>* transcripts = nullptr) const;

  PipelineTrace run_cpmr(const ProcessModel& model, const Wording& w, const Expectation& expected = {}) const;
  PipelineTrace run_baseline(const ProcessModel& model, const Wording& w,
                             const std::optional<ProcessModel>& eao = std::nullopt) const;

 private:
  std::string call(const BackendRequest& req, std::vector<std::string>* transcripts) const;
  ProcessModel parse_output(const std::string& text) const;

  std::shared_ptr<const Backend> backend_;
  TranscriptSink* sink_;
};

}  // namespace cpmr
