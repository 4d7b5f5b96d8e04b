#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cpmr/error.hpp"
#include "cpmr/evaluation.hpp"
#include "cpmr/graph.hpp"
#include "cpmr/model.hpp"
#include "cpmr/patterns.hpp"

namespace cpmr::testkit {

std::filesystem::path fixture_dir();

struct GoldenCase {
  std::string file;
  std::string name;
  std::string meaning_json;
  std::string input;
  std::optional<std::string> expected;  // canonical DSL
  std::optional<std::string> error;     // Errc name
};

std::vector<GoldenCase> load_golden();

/// Outcome of one golden case: empty on success, otherwise a description.
std::string check_golden(const GoldenCase& c);

// Random well-formed models. Labels are unique; some contain quotes,
// backslashes and non-ASCII text to exercise escaping.
class ModelGen {
 public:
  explicit ModelGen(std::uint64_t seed) : rng_(seed) {}
  ProcessModel model();
  std::mt19937_64& rng() { return rng_; }

 private:
  Sequence sequence(int depth, bool allow_empty);
  Node node(int depth);
  std::string label(const char* prefix);
  std::string condition();
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  std::mt19937_64 rng_;
  int counter_ = 0;
};

/// A meaning that targets real elements of the model (it may still violate
/// a precondition, e.g. non-adjacent targets).
StructuredMeaning random_meaning(std::mt19937_64& rng, const ProcessModel& m, PatternId id);

/// Counts at the top process level: tasks, gateways, loops, subprocesses.
struct TopCounts {
  std::size_t tasks = 0, gateways = 0, loops = 0, subprocesses = 0;
};
TopCounts top_counts(const ProcessModel& m);

/// A wording the mock backend understands, with hand-derived input and
/// expected output models (canonical DSL).
struct CanonicalCase {
  PatternId pattern;
  std::string wording;
  std::string input;
  std::string expected;
};
const std::vector<CanonicalCase>& canonical_cases();

/// Trace with the given shape: "F", "TTF", "TTTT", "TTTF", "TFTT:cp4" or
/// "TFTF:cp4" (the suffix is the pattern identified instead of `expected`).
PipelineTrace cpmr_trace(PatternId expected, const std::string& shape);
PipelineTrace baseline_trace(bool step_3);

/// Twenty records (cp1: r01-r10, cp5: r11-r20) with traces for backends
/// "m1" and "m2". The expected rates are counted by hand in the tests.
std::vector<EvaluationRecord> aggregation_fixture();

/// Empty when the graph has unique ids, dangling-free edges, exactly one
/// start and end, every node reachable from start and end reachable from
/// every node; otherwise the first problem found.
std::string graph_soundness(const GraphDoc& g);

}  // namespace cpmr::testkit
