#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cpmr/model.hpp"
#include "cpmr/patterns.hpp"
#include "cpmr/pipeline.hpp"

namespace cpmr {

enum class OutcomeCategory {
  NotIdentified,
  MeaningNotDerived,
  CorrectBehaviour,
  IncorrectPatternImplementation,
  IncorrectApplicationOrIdentification,
  CriticalInconsistency,
};

inline constexpr OutcomeCategory kAllCategories[] = {
    OutcomeCategory::NotIdentified,
    OutcomeCategory::MeaningNotDerived,
    OutcomeCategory::CorrectBehaviour,
    OutcomeCategory::IncorrectPatternImplementation,
    OutcomeCategory::IncorrectApplicationOrIdentification,
    OutcomeCategory::CriticalInconsistency,
};

std::string_view to_string(OutcomeCategory c) noexcept;

/// CPMR traces only. Throws InvalidTrace for broken shapes or baseline
/// traces, IncompleteTrace when the run lacked expected pattern or EAO.
OutcomeCategory classify(const PipelineTrace& trace);

enum class Reason { NoFailure, User, Llm, PatternAmbiguity };
std::string_view to_string(Reason r) noexcept;
Reason reason_of(OutcomeCategory c) noexcept;

struct RollupRow {
  double no_failure = 0, user = 0, llm = 0, pattern_ambiguity = 0;
  std::size_t count = 0;
  double sum() const { return no_failure + user + llm + pattern_ambiguity; }
};

/// Rates over the given categories; all zero for an empty list.
RollupRow reason_rollup(const std::vector<OutcomeCategory>& categories);

struct Verdict {
  std::string record_id;
  bool aao_equals_eao = false;
};

/// Fraction of records whose verdicts agree. Matched by record id.
/// Throws EmptyInput or IdMismatch.
double agreement(const std::vector<Verdict>& baseline, const std::vector<Verdict>& cpmr);

struct RunPair {
  std::optional<PipelineTrace> baseline;
  std::optional<PipelineTrace> cpmr;
};

struct EvaluationRecord {
  std::string id;
  PatternId expected = PatternId::Cp1;
  std::string wording;
  std::string input_ref;
  std::string eao_ref;
  ProcessModel input;
  ProcessModel eao;
  std::map<std::string, RunPair> traces;  // backend name -> runs
};

/// Reads `records.csv` (record_id,pattern_expected,wording,input_model,eao_model)
/// and the model files it references, relative to `dir`.
/// Throws MissingFile, BadCsv ("line N: ...") or InvalidModel (naming the file).
std::vector<EvaluationRecord> load_survey(const std::filesystem::path& dir);

/// RFC 4180 rows; throws BadCsv on an unterminated quote or stray quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

struct RunOptions {
  bool baseline = true;
  bool cpmr = true;
  unsigned threads = 0;  // 0: hardware concurrency
  TranscriptSink* sink = nullptr;
};

/// Runs every record against every backend and stores the traces.
/// BackendUnavailable aborts the whole evaluation.
void run_evaluation(std::vector<EvaluationRecord>& records,
                    const std::vector<std::shared_ptr<const Backend>>& backends, const RunOptions& options);

enum class Metric {
  BaselineCorrect,
  CpmrCorrect,
  NotIdentified,
  MeaningNotDerived,
  IncorrectApplication,
  IncorrectImplementation,
  CriticalInconsistency,
};

inline constexpr Metric kAllMetrics[] = {
    Metric::BaselineCorrect,      Metric::CpmrCorrect,          Metric::NotIdentified,
    Metric::MeaningNotDerived,    Metric::IncorrectApplication, Metric::IncorrectImplementation,
    Metric::CriticalInconsistency,
};

std::string_view to_string(Metric m) noexcept;

struct AggregateReport {
  std::vector<std::string> backends;
  std::vector<PatternId> patterns;
  std::map<PatternId, std::size_t> record_counts;
  /// rate[metric][pattern][backend]; absent when that approach was not run.
  std::map<Metric, std::map<PatternId, std::map<std::string, double>>> rates;
  /// Alternatives identified in place of the expected pattern, for the
  /// incorrect-application and critical-inconsistency tables.
  std::map<PatternId, std::vector<PatternId>> predominant_application;
  std::map<PatternId, std::vector<PatternId>> predominant_inconsistency;
  /// Per pattern, mean over backends of the per-backend rollup.
  std::map<PatternId, RollupRow> rollup;
  std::map<std::string, double> agreement;

  std::optional<double> rate(Metric m, PatternId p, const std::string& backend) const;
  /// Unweighted mean of the backend rates.
  std::optional<double> average(Metric m, PatternId p) const;
};

inline constexpr double kPredominantThreshold = 0.10;

/// Folds the traces stored in the records. Records without any trace for a
/// backend are ignored for that backend.
AggregateReport aggregate(const std::vector<EvaluationRecord>& records);

/// File name -> CSV content.
std::map<std::string, std::string> render_csv(const AggregateReport& report);
std::string render_text(const AggregateReport& report);

enum class ReportFormat { Csv, Text };
/// Writes the CSV files, or report.txt, into `out_dir` (created if needed).
void write_reports(const AggregateReport& report, const std::filesystem::path& out_dir, ReportFormat format);

}  // namespace cpmr
