#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cpmr/model.hpp"

namespace cpmr {

enum class PatternId {
  Cp1, Cp2, Cp3, Cp4, Cp5, Cp6, Cp7, Cp8_1, Cp8_2, Cp9, Cp10,
  Cp13, Cp14, Cp15, Cp16, Cp17, Cp18, Cp19, Lp6,
};

inline constexpr PatternId kAllPatterns[] = {
    PatternId::Cp1,  PatternId::Cp2,  PatternId::Cp3,   PatternId::Cp4,   PatternId::Cp5,
    PatternId::Cp6,  PatternId::Cp7,  PatternId::Cp8_1, PatternId::Cp8_2, PatternId::Cp9,
    PatternId::Cp10, PatternId::Cp13, PatternId::Cp14,  PatternId::Cp15,  PatternId::Cp16,
    PatternId::Cp17, PatternId::Cp18, PatternId::Cp19,  PatternId::Lp6,
};

std::string_view to_string(PatternId id) noexcept;

/// Exact, case-sensitive match on the catalog ids ("cp1" ... "cp19", "lp6").
/// cp11 and cp12 are recognised only to be rejected: they yield nullopt.
std::optional<PatternId> parse_pattern_id(std::string_view text);

/// True for identifiers that name a known pattern deliberately left out of
/// the catalog (control-dependency patterns without a BPMN counterpart).
bool is_excluded_pattern_id(std::string_view text);

struct CatalogEntry {
  PatternId id;
  std::string name;
  std::string prompt_description;
};

using PatternCatalog = std::vector<CatalogEntry>;

const PatternCatalog& catalog();
const CatalogEntry& catalog_entry(PatternId id);

// ---- Structured meaning ---------------------------------------------------

struct Before { std::string label; friend bool operator==(const Before&, const Before&) = default; };
struct After { std::string label; friend bool operator==(const After&, const After&) = default; };
struct Between {
  std::string label_a, label_b;
  friend bool operator==(const Between&, const Between&) = default;
};
using Position = std::variant<Before, After, Between>;

struct ByContainedLabel {
  std::string label;
  friend bool operator==(const ByContainedLabel&, const ByContainedLabel&) = default;
};
struct ByOrdinal {
  GatewayKind kind = GatewayKind::Xor;
  int index = 1;  // 1-based, preorder, counted per kind
  friend bool operator==(const ByOrdinal&, const ByOrdinal&) = default;
};
using GatewayRef = std::variant<ByContainedLabel, ByOrdinal>;

struct GatewayBranchCondition {
  GatewayRef gateway;
  std::string old_condition;
  friend bool operator==(const GatewayBranchCondition&, const GatewayBranchCondition&) = default;
};
struct LoopCondition {
  std::string containing_label;
  friend bool operator==(const LoopCondition&, const LoopCondition&) = default;
};
using ConditionRef = std::variant<GatewayBranchCondition, LoopCondition>;

namespace meaning {

struct Insert { std::string new_label; Position position; friend bool operator==(const Insert&, const Insert&) = default; };
struct Delete { std::string label; friend bool operator==(const Delete&, const Delete&) = default; };
struct Move { std::string label; Position position; friend bool operator==(const Move&, const Move&) = default; };
struct Replace { std::string label; std::vector<std::string> new_labels; friend bool operator==(const Replace&, const Replace&) = default; };
struct Swap { std::string label_a, label_b; friend bool operator==(const Swap&, const Swap&) = default; };
struct ExtractSubprocess {
  std::string from_label, to_label, sub_label;
  friend bool operator==(const ExtractSubprocess&, const ExtractSubprocess&) = default;
};
struct InlineSubprocess { std::string sub_label; friend bool operator==(const InlineSubprocess&, const InlineSubprocess&) = default; };
struct EmbedLoopPre { std::string label, condition; friend bool operator==(const EmbedLoopPre&, const EmbedLoopPre&) = default; };
struct EmbedLoopPost { std::string label, condition; friend bool operator==(const EmbedLoopPost&, const EmbedLoopPost&) = default; };
struct Parallelize { std::vector<std::string> labels; friend bool operator==(const Parallelize&, const Parallelize&) = default; };
struct EmbedConditional { std::string label, condition; friend bool operator==(const EmbedConditional&, const EmbedConditional&) = default; };
struct UpdateCondition {
  ConditionRef target;
  std::string new_condition;
  friend bool operator==(const UpdateCondition&, const UpdateCondition&) = default;
};
struct Copy { std::string label, new_label; Position position; friend bool operator==(const Copy&, const Copy&) = default; };
struct SplitTask { std::string label; std::vector<std::string> new_labels; friend bool operator==(const SplitTask&, const SplitTask&) = default; };
struct MergeTasks { std::vector<std::string> labels; std::string new_label; friend bool operator==(const MergeTasks&, const MergeTasks&) = default; };
struct DeleteBranch {
  GatewayRef gateway;
  std::string branch_condition;  // for parallel gateways: a label inside the branch
  friend bool operator==(const DeleteBranch&, const DeleteBranch&) = default;
};
struct LeaveSingleBranch {
  GatewayRef gateway;
  std::string keep_condition;  // for parallel gateways: a label inside the branch
  friend bool operator==(const LeaveSingleBranch&, const LeaveSingleBranch&) = default;
};
struct ReplaceGateways {
  GatewayRef gateway;
  GatewayKind new_kind = GatewayKind::And;
  std::optional<std::vector<std::string>> conditions;
  friend bool operator==(const ReplaceGateways&, const ReplaceGateways&) = default;
};
struct Rename { std::string label, new_label; friend bool operator==(const Rename&, const Rename&) = default; };

}  // namespace meaning

using StructuredMeaning =
    std::variant<meaning::Insert, meaning::Delete, meaning::Move, meaning::Replace, meaning::Swap,
                 meaning::ExtractSubprocess, meaning::InlineSubprocess, meaning::EmbedLoopPre,
                 meaning::EmbedLoopPost, meaning::Parallelize, meaning::EmbedConditional,
                 meaning::UpdateCondition, meaning::Copy, meaning::SplitTask, meaning::MergeTasks,
                 meaning::DeleteBranch, meaning::LeaveSingleBranch, meaning::ReplaceGateways,
                 meaning::Rename>;

PatternId pattern_of(const StructuredMeaning& m) noexcept;

/// Throws Error{InvalidMeaning} when a parameter is empty or malformed
/// (too few labels, non-positive ordinal, ...).
void check_meaning(const StructuredMeaning& m);

/// Wire form: {"pattern":"cp1","params":{...}} with the field names above.
nlohmann::json to_json(const StructuredMeaning& m);
StructuredMeaning meaning_from_json(const nlohmann::json& j);

/// Applies one change pattern. The input must validate; the output always
/// does. Throws Error with NotFound, DuplicateLabel, NotContiguous,
/// NotASubprocess, NoSuchBranch, NoSuchCondition, WouldViolateInvariant,
/// LastBranch, KindUnchanged, ConditionCountMismatch, InvalidTarget or
/// InvalidMeaning.
ProcessModel apply_pattern(const ProcessModel& model, const StructuredMeaning& m);

/// One deterministic English sentence describing the change.
std::string render_meaning_nl(const StructuredMeaning& m);

/// Path of the gateway block a reference designates.
FragmentPath resolve_gateway(const ProcessModel& model, const GatewayRef& ref);

}  // namespace cpmr
