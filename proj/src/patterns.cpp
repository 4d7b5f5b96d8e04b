#include "cpmr/patterns.hpp"

#include <algorithm>

#include "cpmr/error.hpp"

namespace cpmr {

std::string_view to_string(PatternId id) noexcept {
  switch (id) {
    case PatternId::Cp1: return "cp1";
    case PatternId::Cp2: return "cp2";
    case PatternId::Cp3: return "cp3";
    case PatternId::Cp4: return "cp4";
    case PatternId::Cp5: return "cp5";
    case PatternId::Cp6: return "cp6";
    case PatternId::Cp7: return "cp7";
    case PatternId::Cp8_1: return "cp8.1";
    case PatternId::Cp8_2: return "cp8.2";
    case PatternId::Cp9: return "cp9";
    case PatternId::Cp10: return "cp10";
    case PatternId::Cp13: return "cp13";
    case PatternId::Cp14: return "cp14";
    case PatternId::Cp15: return "cp15";
    case PatternId::Cp16: return "cp16";
    case PatternId::Cp17: return "cp17";
    case PatternId::Cp18: return "cp18";
    case PatternId::Cp19: return "cp19";
    case PatternId::Lp6: return "lp6";
  }
  return "?";
}

std::optional<PatternId> parse_pattern_id(std::string_view text) {
  for (PatternId id : kAllPatterns)
    if (to_string(id) == text) return id;
  return std::nullopt;
}

bool is_excluded_pattern_id(std::string_view text) { return text == "cp11" || text == "cp12"; }

const PatternCatalog& catalog() {
  static const PatternCatalog entries = {
      {PatternId::Cp1, "Insert Process Fragment",
       "Adds a new process fragment (usually a new task) to the model at a given position: directly "
       "before or after an existing element, or between two directly succeeding elements."},
      {PatternId::Cp2, "Delete Process Fragment",
       "Removes an existing process fragment (a task, or a subprocess with its content) from the model "
       "and reconnects the elements around it."},
      {PatternId::Cp3, "Move Process Fragment",
       "Moves an existing process fragment from its current position to a new position in the model; "
       "the fragment itself stays unchanged."},
      {PatternId::Cp4, "Replace Process Fragment",
       "Substitutes an existing process fragment by one or more new tasks placed at the same position."},
      {PatternId::Cp5, "Swap Process Fragments", "Exchanges the positions of two existing process fragments."},
      {PatternId::Cp6, "Extract Sub Process",
       "Takes a contiguous sequence of existing process fragments and moves it into a new subprocess that "
       "takes their former place."},
      {PatternId::Cp7, "Inline Sub Process",
       "Dissolves an existing subprocess so that the elements of its body appear directly in the "
       "surrounding process where the subprocess was."},
      {PatternId::Cp8_1, "Embed Process Fragment in Pre-Cond. Loop",
       "Wraps an existing process fragment into a loop whose condition is checked before every iteration; "
       "the fragment may run several times or not at all."},
      {PatternId::Cp8_2, "Embed Process Fragment in Post-Cond. Loop",
       "Wraps an existing process fragment into a loop whose condition is checked after every iteration; "
       "the fragment runs at least once and repeats while the condition holds."},
      {PatternId::Cp9, "Parallelise Process Fragments",
       "Places existing process fragments that directly follow each other into separate branches of a "
       "parallel (AND) gateway so that they run concurrently."},
      {PatternId::Cp10, "Embed Process Fragment in Cond. Branch",
       "Wraps an existing process fragment into an exclusive (XOR) gateway so that it only runs when a "
       "given condition holds and is skipped otherwise."},
      {PatternId::Cp13, "Update Condition",
       "Changes the condition text of an existing exclusive gateway branch or of an existing loop."},
      {PatternId::Cp14, "Copy Process Fragment",
       "Duplicates an existing process fragment under a new label and places the copy at a given position; "
       "the original stays where it is."},
      {PatternId::Cp15, "Split Process Fragment",
       "Splits one existing task into several separate tasks that run one after another at its position."},
      {PatternId::Cp16, "Merge Process Fragment",
       "Merges several existing process fragments (directly succeeding ones, or the single tasks forming "
       "all branches of one gateway) into one task."},
      {PatternId::Cp17, "Delete Entire Branch",
       "Removes one whole branch of a gateway with every element in it; when a single branch remains the "
       "gateway is removed and that branch stays in place."},
      {PatternId::Cp18, "Leave Single Branch",
       "Removes every branch of a gateway except one, removes the gateway itself and keeps the elements "
       "of the remaining branch in place."},
      {PatternId::Cp19, "Replace Gateways",
       "Changes the type of a gateway block by replacing its splitting and its merging gateway at once, "
       "such as turning an exclusive gateway into a parallel one."},
      {PatternId::Lp6, "Rename Node",
       "Changes the label of an existing task or subprocess without changing anything else."},
  };
  return entries;
}

const CatalogEntry& catalog_entry(PatternId id) {
  for (const auto& e : catalog())
    if (e.id == id) return e;
  throw Error(Errc::NotFound, "pattern not in catalog");
}

PatternId pattern_of(const StructuredMeaning& m) noexcept {
  static constexpr PatternId by_index[] = {
      PatternId::Cp1,   PatternId::Cp2,  PatternId::Cp3,  PatternId::Cp4,  PatternId::Cp5,
      PatternId::Cp6,   PatternId::Cp7,  PatternId::Cp8_1, PatternId::Cp8_2, PatternId::Cp9,
      PatternId::Cp10,  PatternId::Cp13, PatternId::Cp14, PatternId::Cp15, PatternId::Cp16,
      PatternId::Cp17,  PatternId::Cp18, PatternId::Cp19, PatternId::Lp6,
  };
  static_assert(std::size(by_index) == std::variant_size_v<StructuredMeaning>);
  return by_index[m.index()];
}

// ---- validation of parameters ---------------------------------------------

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::InvalidMeaning, what); }

void need(const std::string& value, const char* field) {
  if (value.empty()) bad(std::string(field) + " must not be empty");
  for (char c : value)
    if (static_cast<unsigned char>(c) < 0x20) bad(std::string(field) + " contains control characters");
}

void need_list(const std::vector<std::string>& values, std::size_t min, const char* field) {
  if (values.size() < min) bad(std::string(field) + " needs at least " + std::to_string(min) + " entries");
  for (const auto& v : values) need(v, field);
}

void need(const Position& p) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Between>) {
          need(v.label_a, "position.label_a");
          need(v.label_b, "position.label_b");
        } else {
          need(v.label, "position.label");
        }
      },
      p);
}

void need(const GatewayRef& g) {
  if (const auto* c = std::get_if<ByContainedLabel>(&g)) need(c->label, "gateway.label");
  if (const auto* o = std::get_if<ByOrdinal>(&g); o && o->index < 1) bad("gateway.index must be >= 1");
}

}  // namespace

void check_meaning(const StructuredMeaning& m) {
  using namespace meaning;
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Insert>) {
          need(v.new_label, "new_label");
          need(v.position);
        } else if constexpr (std::is_same_v<T, Delete> || std::is_same_v<T, Rename>) {
          need(v.label, "label");
          if constexpr (std::is_same_v<T, Rename>) need(v.new_label, "new_label");
        } else if constexpr (std::is_same_v<T, Move>) {
          need(v.label, "label");
          need(v.position);
        } else if constexpr (std::is_same_v<T, Replace>) {
          need(v.label, "label");
          need_list(v.new_labels, 1, "new_labels");
        } else if constexpr (std::is_same_v<T, Swap>) {
          need(v.label_a, "label_a");
          need(v.label_b, "label_b");
        } else if constexpr (std::is_same_v<T, ExtractSubprocess>) {
          need(v.from_label, "from_label");
          need(v.to_label, "to_label");
          need(v.sub_label, "sub_label");
        } else if constexpr (std::is_same_v<T, InlineSubprocess>) {
          need(v.sub_label, "sub_label");
        } else if constexpr (std::is_same_v<T, EmbedLoopPre> || std::is_same_v<T, EmbedLoopPost> ||
                             std::is_same_v<T, EmbedConditional>) {
          need(v.label, "label");
          need(v.condition, "condition");
        } else if constexpr (std::is_same_v<T, Parallelize>) {
          need_list(v.labels, 2, "labels");
        } else if constexpr (std::is_same_v<T, UpdateCondition>) {
          need(v.new_condition, "new_condition");
          if (const auto* gb = std::get_if<GatewayBranchCondition>(&v.target)) {
            need(gb->gateway);
            need(gb->old_condition, "old_condition");
          } else {
            need(std::get<LoopCondition>(v.target).containing_label, "containing_label");
          }
        } else if constexpr (std::is_same_v<T, Copy>) {
          need(v.label, "label");
          need(v.new_label, "new_label");
          need(v.position);
        } else if constexpr (std::is_same_v<T, SplitTask>) {
          need(v.label, "label");
          need_list(v.new_labels, 2, "new_labels");
        } else if constexpr (std::is_same_v<T, MergeTasks>) {
          need_list(v.labels, 2, "labels");
          need(v.new_label, "new_label");
        } else if constexpr (std::is_same_v<T, DeleteBranch>) {
          need(v.gateway);
          need(v.branch_condition, "branch_condition");
        } else if constexpr (std::is_same_v<T, LeaveSingleBranch>) {
          need(v.gateway);
          need(v.keep_condition, "keep_condition");
        } else if constexpr (std::is_same_v<T, ReplaceGateways>) {
          need(v.gateway);
          if (v.conditions) need_list(*v.conditions, 0, "conditions");
        }
      },
      m);
}

// ---- JSON wire form --------------------------------------------------------

namespace {

using nlohmann::json;

std::string kind_name(GatewayKind k) { return k == GatewayKind::Xor ? "xor" : "and"; }

GatewayKind kind_from(const json& j) {
  std::string s = j.get<std::string>();
  if (s == "xor") return GatewayKind::Xor;
  if (s == "and") return GatewayKind::And;
  bad("gateway kind must be \"xor\" or \"and\", got \"" + s + "\"");
}

json position_json(const Position& p) {
  if (const auto* b = std::get_if<Before>(&p)) return {{"type", "before"}, {"label", b->label}};
  if (const auto* a = std::get_if<After>(&p)) return {{"type", "after"}, {"label", a->label}};
  const auto& bw = std::get<Between>(p);
  return {{"type", "between"}, {"label_a", bw.label_a}, {"label_b", bw.label_b}};
}

Position position_from(const json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "before") return Before{j.at("label").get<std::string>()};
  if (type == "after") return After{j.at("label").get<std::string>()};
  if (type == "between") return Between{j.at("label_a").get<std::string>(), j.at("label_b").get<std::string>()};
  bad("unknown position type \"" + type + "\"");
}

json gateway_json(const GatewayRef& g) {
  if (const auto* c = std::get_if<ByContainedLabel>(&g)) return {{"type", "contained_label"}, {"label", c->label}};
  const auto& o = std::get<ByOrdinal>(g);
  return {{"type", "ordinal"}, {"kind", kind_name(o.kind)}, {"index", o.index}};
}

GatewayRef gateway_from(const json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "contained_label") return ByContainedLabel{j.at("label").get<std::string>()};
  if (type == "ordinal") return ByOrdinal{kind_from(j.at("kind")), j.at("index").get<int>()};
  bad("unknown gateway reference type \"" + type + "\"");
}

json condition_json(const ConditionRef& c) {
  if (const auto* gb = std::get_if<GatewayBranchCondition>(&c))
    return {{"type", "gateway_branch"}, {"gateway", gateway_json(gb->gateway)}, {"old_condition", gb->old_condition}};
  return {{"type", "loop"}, {"containing_label", std::get<LoopCondition>(c).containing_label}};
}

ConditionRef condition_from(const json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "gateway_branch")
    return GatewayBranchCondition{gateway_from(j.at("gateway")), j.at("old_condition").get<std::string>()};
  if (type == "loop") return LoopCondition{j.at("containing_label").get<std::string>()};
  bad("unknown condition reference type \"" + type + "\"");
}

std::vector<std::string> strings(const json& j) { return j.get<std::vector<std::string>>(); }

}  // namespace

nlohmann::json to_json(const StructuredMeaning& m) {
  using namespace meaning;
  json params = std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Insert>) return {{"new_label", v.new_label}, {"position", position_json(v.position)}};
        else if constexpr (std::is_same_v<T, Delete>) return {{"label", v.label}};
        else if constexpr (std::is_same_v<T, Move>) return {{"label", v.label}, {"position", position_json(v.position)}};
        else if constexpr (std::is_same_v<T, Replace>) return {{"label", v.label}, {"new_labels", v.new_labels}};
        else if constexpr (std::is_same_v<T, Swap>) return {{"label_a", v.label_a}, {"label_b", v.label_b}};
        else if constexpr (std::is_same_v<T, ExtractSubprocess>)
          return {{"from_label", v.from_label}, {"to_label", v.to_label}, {"sub_label", v.sub_label}};
        else if constexpr (std::is_same_v<T, InlineSubprocess>) return {{"sub_label", v.sub_label}};
        else if constexpr (std::is_same_v<T, EmbedLoopPre> || std::is_same_v<T, EmbedLoopPost> ||
                           std::is_same_v<T, EmbedConditional>)
          return {{"label", v.label}, {"condition", v.condition}};
        else if constexpr (std::is_same_v<T, Parallelize>) return {{"labels", v.labels}};
        else if constexpr (std::is_same_v<T, UpdateCondition>)
          return {{"target", condition_json(v.target)}, {"new_condition", v.new_condition}};
        else if constexpr (std::is_same_v<T, Copy>)
          return {{"label", v.label}, {"new_label", v.new_label}, {"position", position_json(v.position)}};
        else if constexpr (std::is_same_v<T, SplitTask>) return {{"label", v.label}, {"new_labels", v.new_labels}};
        else if constexpr (std::is_same_v<T, MergeTasks>) return {{"labels", v.labels}, {"new_label", v.new_label}};
        else if constexpr (std::is_same_v<T, DeleteBranch>)
          return {{"gateway", gateway_json(v.gateway)}, {"branch_condition", v.branch_condition}};
        else if constexpr (std::is_same_v<T, LeaveSingleBranch>)
          return {{"gateway", gateway_json(v.gateway)}, {"keep_condition", v.keep_condition}};
        else if constexpr (std::is_same_v<T, ReplaceGateways>) {
          json out = {{"gateway", gateway_json(v.gateway)}, {"new_kind", kind_name(v.new_kind)}};
          out["conditions"] = v.conditions ? json(*v.conditions) : json(nullptr);
          return out;
        } else
          return {{"label", v.label}, {"new_label", v.new_label}};
      },
      m);
  return {{"pattern", std::string(to_string(pattern_of(m)))}, {"params", std::move(params)}};
}

StructuredMeaning meaning_from_json(const nlohmann::json& j) {
  using namespace meaning;
  StructuredMeaning out = Rename{};
  try {
    if (!j.is_object()) bad("meaning must be a JSON object");
    std::string pid = j.at("pattern").get<std::string>();
    auto id = parse_pattern_id(pid);
    if (!id) {
      if (is_excluded_pattern_id(pid)) bad(pid + " is not supported for BPMN models");
      bad("unknown pattern id \"" + pid + "\"");
    }
    const json& p = j.at("params");
    auto s = [&](const char* key) { return p.at(key).get<std::string>(); };
    switch (*id) {
      case PatternId::Cp1: out = Insert{s("new_label"), position_from(p.at("position"))}; break;
      case PatternId::Cp2: out = Delete{s("label")}; break;
      case PatternId::Cp3: out = Move{s("label"), position_from(p.at("position"))}; break;
      case PatternId::Cp4: out = Replace{s("label"), strings(p.at("new_labels"))}; break;
      case PatternId::Cp5: out = Swap{s("label_a"), s("label_b")}; break;
      case PatternId::Cp6: out = ExtractSubprocess{s("from_label"), s("to_label"), s("sub_label")}; break;
      case PatternId::Cp7: out = InlineSubprocess{s("sub_label")}; break;
      case PatternId::Cp8_1: out = EmbedLoopPre{s("label"), s("condition")}; break;
      case PatternId::Cp8_2: out = EmbedLoopPost{s("label"), s("condition")}; break;
      case PatternId::Cp9: out = Parallelize{strings(p.at("labels"))}; break;
      case PatternId::Cp10: out = EmbedConditional{s("label"), s("condition")}; break;
      case PatternId::Cp13: out = UpdateCondition{condition_from(p.at("target")), s("new_condition")}; break;
      case PatternId::Cp14: out = Copy{s("label"), s("new_label"), position_from(p.at("position"))}; break;
      case PatternId::Cp15: out = SplitTask{s("label"), strings(p.at("new_labels"))}; break;
      case PatternId::Cp16: out = MergeTasks{strings(p.at("labels")), s("new_label")}; break;
      case PatternId::Cp17: out = DeleteBranch{gateway_from(p.at("gateway")), s("branch_condition")}; break;
      case PatternId::Cp18: out = LeaveSingleBranch{gateway_from(p.at("gateway")), s("keep_condition")}; break;
      case PatternId::Cp19: {
        ReplaceGateways r{gateway_from(p.at("gateway")), kind_from(p.at("new_kind")), std::nullopt};
        if (p.contains("conditions") && !p.at("conditions").is_null()) r.conditions = strings(p.at("conditions"));
        out = std::move(r);
        break;
      }
      case PatternId::Lp6: out = Rename{s("label"), s("new_label")}; break;
    }
  } catch (const json::exception& e) {
    bad(std::string("malformed meaning: ") + e.what());
  }
  check_meaning(out);
  return out;
}

// ---- natural-language rendering ------------------------------------------

namespace {

std::string q(const std::string& s) { return "'" + s + "'"; }

std::string list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += q(items[i]);
  }
  return out;
}

std::string ordinal_word(int n) {
  static const char* words[] = {"first", "second", "third", "fourth", "fifth",
                                "sixth", "seventh", "eighth", "ninth", "tenth"};
  if (n >= 1 && n <= 10) return words[n - 1];
  return "number " + std::to_string(n);
}

std::string position_text(const Position& p) {
  if (const auto* b = std::get_if<Before>(&p)) return "directly before task " + q(b->label);
  if (const auto* a = std::get_if<After>(&p)) return "directly after task " + q(a->label);
  const auto& bw = std::get<Between>(p);
  return "between task " + q(bw.label_a) + " and task " + q(bw.label_b);
}

std::string gateway_text(const GatewayRef& g) {
  if (const auto* c = std::get_if<ByContainedLabel>(&g))
    return "the innermost gateway containing " + q(c->label);
  const auto& o = std::get<ByOrdinal>(g);
  return "the " + ordinal_word(o.index) + (o.kind == GatewayKind::Xor ? " exclusive" : " parallel") + " gateway";
}

}  // namespace

std::string render_meaning_nl(const StructuredMeaning& m) {
  using namespace meaning;
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Insert>) {
          return "Insert a new task " + q(v.new_label) + " " + position_text(v.position) + ".";
        } else if constexpr (std::is_same_v<T, Delete>) {
          return "Delete the process fragment " + q(v.label) + " together with everything it contains.";
        } else if constexpr (std::is_same_v<T, Move>) {
          return "Move the process fragment " + q(v.label) + " unchanged to the position " +
                 position_text(v.position) + ".";
        } else if constexpr (std::is_same_v<T, Replace>) {
          return "Replace the process fragment " + q(v.label) +
                 (v.new_labels.size() == 1 ? " with the new task " : " with the sequence of new tasks ") +
                 list(v.new_labels) + ".";
        } else if constexpr (std::is_same_v<T, Swap>) {
          return "Swap the positions of the process fragments " + q(v.label_a) + " and " + q(v.label_b) + ".";
        } else if constexpr (std::is_same_v<T, ExtractSubprocess>) {
          if (v.from_label == v.to_label)
            return "Extract the process fragment " + q(v.from_label) + " into a new subprocess " +
                   q(v.sub_label) + " placed where it was.";
          return "Extract the directly succeeding process fragments from " + q(v.from_label) + " through " +
                 q(v.to_label) + " into a new subprocess " + q(v.sub_label) + " placed where they were.";
        } else if constexpr (std::is_same_v<T, InlineSubprocess>) {
          return "Inline the subprocess " + q(v.sub_label) +
                 ", replacing it with the elements of its body in the same order.";
        } else if constexpr (std::is_same_v<T, EmbedLoopPre>) {
          return "Embed the process fragment " + q(v.label) + " in a pre-conditional loop with condition " +
                 q(v.condition) + ": the condition is checked before each iteration, so " + q(v.label) +
                 " runs zero or more times.";
        } else if constexpr (std::is_same_v<T, EmbedLoopPost>) {
          return "Embed the process fragment " + q(v.label) + " in a post-conditional loop with condition " +
                 q(v.condition) + ": " + q(v.label) +
                 " is executed at least once and repeated while the condition holds.";
        } else if constexpr (std::is_same_v<T, Parallelize>) {
          return "Execute the process fragments " + list(v.labels) +
                 " in parallel, each in its own branch of a new parallel gateway.";
        } else if constexpr (std::is_same_v<T, EmbedConditional>) {
          return "Embed the process fragment " + q(v.label) +
                 " in an exclusive gateway so that it only runs if the condition " + q(v.condition) +
                 " holds; otherwise ('else') it is skipped.";
        } else if constexpr (std::is_same_v<T, UpdateCondition>) {
          if (const auto* gb = std::get_if<GatewayBranchCondition>(&v.target))
            return "Change the branch condition " + q(gb->old_condition) + " of " + gateway_text(gb->gateway) +
                   " to " + q(v.new_condition) + ".";
          return "Change the condition of the innermost loop containing " +
                 q(std::get<LoopCondition>(v.target).containing_label) + " to " + q(v.new_condition) + ".";
        } else if constexpr (std::is_same_v<T, Copy>) {
          return "Copy the process fragment " + q(v.label) + " as " + q(v.new_label) + " and place the copy " +
                 position_text(v.position) + ", keeping the original in place.";
        } else if constexpr (std::is_same_v<T, SplitTask>) {
          return "Split the task " + q(v.label) + " into the sequential tasks " + list(v.new_labels) + ".";
        } else if constexpr (std::is_same_v<T, MergeTasks>) {
          return "Merge the process fragments " + list(v.labels) + " into the single task " + q(v.new_label) + ".";
        } else if constexpr (std::is_same_v<T, DeleteBranch>) {
          return "Delete the branch " + q(v.branch_condition) + " of " + gateway_text(v.gateway) +
                 " with all its elements, removing the gateway if only one branch remains.";
        } else if constexpr (std::is_same_v<T, LeaveSingleBranch>) {
          return "Keep only the branch " + q(v.keep_condition) + " of " + gateway_text(v.gateway) +
                 ", deleting all other branches and the gateway itself.";
        } else if constexpr (std::is_same_v<T, ReplaceGateways>) {
          std::string out = "Replace both the split and the join of " + gateway_text(v.gateway) + " with ";
          if (v.new_kind == GatewayKind::And) return out + "a parallel gateway, dropping the branch conditions.";
          out += "an exclusive gateway";
          if (v.conditions && !v.conditions->empty()) out += " with branch conditions " + list(*v.conditions) + " in branch order";
          return out + ".";
        } else {
          return "Rename " + q(v.label) + " to " + q(v.new_label) + ".";
        }
      },
      m);
}

}  // namespace cpmr
