#include <regex>
#include <set>

#include "cpmr/dsl.hpp"
#include "cpmr/pipeline.hpp"

namespace cpmr {

namespace {

struct Rule {
  PatternId id;
  std::regex re;
};

std::regex rx(const char* pattern) {
  return std::regex(pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
}

const std::vector<Rule>& rules() {
  static const std::vector<Rule> table = {
      {PatternId::Cp5, rx(R"(\b(swap|exchange)\b)")},
      {PatternId::Cp15, rx(R"(\bsplit\b)")},
      {PatternId::Cp16, rx(R"(\b(merge|combine)\b)")},
      {PatternId::Cp8_2, rx(R"(\bloop\b.*\bat least once\b|\bat least once\b.*\bloop\b)")},
      {PatternId::Cp8_1, rx(R"(^(?!.*\bat least once\b)(?!\s*(change|update|modify|set)\b).*\bloop\b)")},
      {PatternId::Cp1, rx(R"(\b(add|insert)\b.*\b(after|before|between)\b)")},
      {PatternId::Cp2, rx(R"(^\s*(delete|remove|deleting|removing)\b(?!.*\bbranch))")},
      {PatternId::Cp3, rx(R"(^\s*(move|moving)\b)")},
      {PatternId::Cp4, rx(R"(^\s*(replace|replacing|substitute)\b(?!.*\bgateway\b))")},
      {PatternId::Cp6, rx(R"(\bextract\b)")},
      {PatternId::Cp7, rx(R"(\b(inline|dissolve|flatten)\b.*\bsub-?process\b)")},
      {PatternId::Cp9, rx(R"(^(?!.*\bgateway\b).*\b(in parallel|concurrently|simultaneously)\b)")},
      {PatternId::Cp10, rx(R"(\bonly (if|when)\b)")},
      {PatternId::Cp13, rx(R"(^\s*(change|update|modify|set)\b.*\bcondition\b)")},
      {PatternId::Cp14, rx(R"(\b(copy|duplicate)\b)")},
      {PatternId::Cp17, rx(R"(^\s*(delete|remove|drop)\b(?!.*\b(except|but|other)\b).*\bbranch\b)")},
      {PatternId::Cp18, rx(R"(\b(keep|leave)\b.*\bbranch\b|\bbranch(es)?\b.*\bexcept\b)")},
      {PatternId::Cp19, rx(R"(\bgateway\b.*\b(with|by|into|to)\b.*\bgateway\b)")},
      {PatternId::Lp6, rx(R"(\brename\b)")},
  };
  return table;
}

// A label is either quoted or a single bare token.
constexpr const char* kLabel = R"re((?:'([^']+)'|"([^"]+)"|([A-Za-z0-9_][A-Za-z0-9_\-]*)))re";

struct Ref {
  std::string kind;  // "task", "subprocess", ...
  std::string label;
  std::size_t begin, end;
};

std::string pick(const std::smatch& m, std::size_t first) {
  for (std::size_t i = first; i < first + 3; ++i)
    if (m[i].matched) return m[i].str();
  return {};
}

std::vector<Ref> refs(const std::string& text) {
  static const std::regex re = rx((std::string(R"(\b(task|subprocess|sub-process|activity)\s+)") + kLabel).c_str());
  std::vector<Ref> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string kind = m[1].str();
    for (auto& c : kind) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (kind == "sub-process") kind = "subprocess";
    out.push_back({kind, pick(m, 2), static_cast<std::size_t>(m.position(0)),
                   static_cast<std::size_t>(m.position(0) + m.length(0))});
  }
  return out;
}

// Quoted strings that are not label references.
std::vector<std::string> conditions(const std::string& text, const std::vector<Ref>& rs) {
  static const std::regex re(R"re('([^']+)'|"([^"]+)")re");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    auto pos = static_cast<std::size_t>(it->position(0));
    bool inside = false;
    for (const auto& r : rs) inside = inside || (pos >= r.begin && pos < r.end);
    if (!inside) out.push_back((*it)[1].matched ? (*it)[1].str() : (*it)[2].str());
  }
  return out;
}

bool has(const std::string& text, const char* pattern) { return std::regex_search(text, rx(pattern)); }

std::size_t find_word(const std::string& text, const char* pattern) {
  std::smatch m;
  if (!std::regex_search(text, m, rx(pattern))) return std::string::npos;
  return static_cast<std::size_t>(m.position(0));
}

std::vector<std::string> labels_of(const std::vector<Ref>& rs, std::size_t from = 0, std::size_t to = SIZE_MAX) {
  std::vector<std::string> out;
  for (std::size_t i = from; i < rs.size() && i < to; ++i) out.push_back(rs[i].label);
  return out;
}

// Position from the references following a position word.
std::optional<Position> position(const std::string& text, const std::vector<Ref>& rs, std::size_t first) {
  std::size_t at = find_word(text, R"(\b(after|before|between)\b)");
  if (at == std::string::npos) return std::nullopt;
  std::vector<std::string> after_word;
  for (std::size_t i = first; i < rs.size(); ++i)
    if (rs[i].begin > at) after_word.push_back(rs[i].label);
  std::string word = text.substr(at, 3);
  for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (word == "bet") {
    if (after_word.size() != 2) return std::nullopt;
    return Between{after_word[0], after_word[1]};
  }
  if (after_word.size() != 1) return std::nullopt;
  if (word == "aft") return After{after_word[0]};
  return Before{after_word[0]};
}

std::optional<int> ordinal(const std::string& w) {
  static const std::vector<std::pair<std::string, int>> words = {
      {"first", 1}, {"1st", 1}, {"second", 2}, {"2nd", 2}, {"third", 3},
      {"3rd", 3},   {"fourth", 4}, {"4th", 4}, {"fifth", 5}, {"5th", 5}};
  std::string lw = w;
  for (auto& c : lw) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& [k, v] : words)
    if (lw == k) return v;
  return std::nullopt;
}

GatewayKind gateway_kind(std::string w) {
  for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return (w == "parallel" || w == "and") ? GatewayKind::And : GatewayKind::Xor;
}

// A gateway named by a contained label wins; otherwise the first one mentioned.
std::optional<GatewayRef> gateway_ref(const std::string& text) {
  std::smatch m;
  static const std::regex contained =
      rx((std::string(R"(\bgateway\s+(?:that\s+)?contain(?:s|ing)\s+(?:task|subprocess)\s+)") + kLabel).c_str());
  static const std::regex ord =
      rx(R"(\b(first|second|third|fourth|fifth|1st|2nd|3rd|4th|5th)\s+(exclusive|xor|parallel|and)\s+gateway\b)");
  static const std::regex plain = rx(R"(\bthe\s+(exclusive|xor|parallel|and)\s+gateway\b)");
  std::optional<std::pair<std::size_t, GatewayRef>> best;
  auto consider = [&](std::size_t pos, GatewayRef ref) {
    if (!best || pos < best->first) best = {pos, std::move(ref)};
  };
  if (std::regex_search(text, m, contained)) return ByContainedLabel{pick(m, 1)};
  if (std::regex_search(text, m, ord))
    consider(static_cast<std::size_t>(m.position(0)), ByOrdinal{gateway_kind(m[2].str()), *ordinal(m[1].str())});
  if (std::regex_search(text, m, plain))
    consider(static_cast<std::size_t>(m.position(0)), ByOrdinal{gateway_kind(m[1].str()), 1});
  if (!best) return std::nullopt;
  return best->second;
}

std::optional<StructuredMeaning> derive_impl(PatternId id, const std::string& text) {
  using namespace meaning;
  auto rs = refs(text);
  auto conds = conditions(text, rs);
  switch (id) {
    case PatternId::Cp1: {
      // The new element is the first reference, or a bare quoted label,
      // before the position word.
      std::size_t at = find_word(text, R"(\b(after|before|between)\b)");
      if (at == std::string::npos) return std::nullopt;
      std::optional<std::string> label;
      if (!rs.empty() && rs[0].begin < at) label = rs[0].label;
      std::smatch q;
      std::string head = text.substr(0, at);
      if (!label && std::regex_search(head, q, std::regex(R"re('([^']+)'|"([^"]+)")re")))
        label = q[1].matched ? q[1].str() : q[2].str();
      auto p = position(text, rs, 0);
      if (!label || !p) return std::nullopt;
      return Insert{*label, *p};
    }
    case PatternId::Cp2:
      if (rs.size() != 1) return std::nullopt;
      return Delete{rs[0].label};
    case PatternId::Cp3: {
      if (rs.empty()) return std::nullopt;
      auto p = position(text, rs, 1);
      if (!p) return std::nullopt;
      return Move{rs[0].label, *p};
    }
    case PatternId::Cp4:
      if (rs.size() < 2) return std::nullopt;
      return Replace{rs[0].label, labels_of(rs, 1)};
    case PatternId::Cp5:
      if (rs.size() != 2) return std::nullopt;
      return Swap{rs[0].label, rs[1].label};
    case PatternId::Cp6: {
      if (rs.size() < 2 || rs.back().kind != "subprocess") return std::nullopt;
      std::string sub = rs.back().label;
      if (rs.size() == 2) return ExtractSubprocess{rs[0].label, rs[0].label, sub};
      if (rs.size() == 3) return ExtractSubprocess{rs[0].label, rs[1].label, sub};
      return std::nullopt;
    }
    case PatternId::Cp7:
      if (rs.size() != 1) return std::nullopt;
      return InlineSubprocess{rs[0].label};
    case PatternId::Cp8_1:
      if (rs.size() != 1 || conds.size() != 1) return std::nullopt;
      return EmbedLoopPre{rs[0].label, conds[0]};
    case PatternId::Cp8_2:
      if (rs.size() != 1 || conds.size() != 1) return std::nullopt;
      return EmbedLoopPost{rs[0].label, conds[0]};
    case PatternId::Cp9:
      if (rs.size() < 2) return std::nullopt;
      return Parallelize{labels_of(rs)};
    case PatternId::Cp10:
      if (rs.size() != 1 || conds.size() != 1) return std::nullopt;
      return EmbedConditional{rs[0].label, conds[0]};
    case PatternId::Cp13: {
      if (has(text, R"(\bloop\b)") && !has(text, R"(\bgateway\b)")) {
        if (rs.size() != 1 || conds.empty()) return std::nullopt;
        return UpdateCondition{LoopCondition{rs[0].label}, conds.back()};
      }
      auto g = gateway_ref(text);
      if (!g || conds.size() != 2) return std::nullopt;
      return UpdateCondition{GatewayBranchCondition{*g, conds[0]}, conds[1]};
    }
    case PatternId::Cp14: {
      if (rs.size() < 3) return std::nullopt;
      auto p = position(text, rs, 2);
      if (!p) return std::nullopt;
      return Copy{rs[0].label, rs[1].label, *p};
    }
    case PatternId::Cp15:
      if (rs.size() < 3) return std::nullopt;
      return SplitTask{rs[0].label, labels_of(rs, 1)};
    case PatternId::Cp16: {
      std::size_t into = find_word(text, R"(\binto\b)");
      if (into == std::string::npos) return std::nullopt;
      std::vector<std::string> before, after;
      for (const auto& r : rs) (r.begin < into ? before : after).push_back(r.label);
      if (before.size() < 2 || after.size() != 1) return std::nullopt;
      return MergeTasks{before, after[0]};
    }
    case PatternId::Cp17:
    case PatternId::Cp18: {
      auto g = gateway_ref(text);
      if (!g) return std::nullopt;
      std::string selector;
      if (conds.size() == 1) {
        selector = conds[0];
      } else if (conds.empty()) {
        // parallel branches are named by a label inside them
        std::vector<std::string> ls;
        for (const auto& r : rs) {
          const auto* c = std::get_if<ByContainedLabel>(&*g);
          if (!c || c->label != r.label) ls.push_back(r.label);
        }
        if (ls.size() != 1) return std::nullopt;
        selector = ls[0];
      } else {
        return std::nullopt;
      }
      if (id == PatternId::Cp17) return DeleteBranch{*g, selector};
      return LeaveSingleBranch{*g, selector};
    }
    case PatternId::Cp19: {
      auto g = gateway_ref(text);
      std::smatch m;
      static const std::regex target = rx(R"(\b(with|by|into|to)\s+(?:an?\s+)?(parallel|and|exclusive|xor)\b)");
      if (!g || !std::regex_search(text, m, target)) return std::nullopt;
      GatewayKind k = gateway_kind(m[2].str());
      std::optional<std::vector<std::string>> cs;
      if (!conds.empty()) cs = conds;
      return ReplaceGateways{*g, k, cs};
    }
    case PatternId::Lp6: {
      if (rs.size() == 2) return Rename{rs[0].label, rs[1].label};
      static const std::regex to = rx((std::string(R"(\bto\s+)") + kLabel).c_str());
      std::smatch m;
      if (rs.size() == 1 && std::regex_search(text, m, to)) return Rename{rs[0].label, pick(m, 1)};
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string apply_from_wording(const ProcessModel& model, const std::string& wording) {
  auto id = mock_identify(wording);
  if (!id) return "NA (pattern not identified)";
  auto m = mock_derive(*id, wording);
  if (!m) return "NA (meaning not derived)";
  return serialize_dsl(apply_pattern(model, *m));
}

}  // namespace

std::optional<PatternId> mock_identify(std::string_view wording) {
  std::string text(wording);
  std::set<PatternId> hits;
  for (const auto& r : rules())
    if (std::regex_search(text, r.re)) hits.insert(r.id);
  if (hits.size() != 1) return std::nullopt;
  return *hits.begin();
}

std::optional<StructuredMeaning> mock_derive(PatternId id, std::string_view wording) {
  auto m = derive_impl(id, std::string(wording));
  if (!m) return std::nullopt;
  try {
    check_meaning(*m);
  } catch (const Error&) {
    return std::nullopt;
  }
  return m;
}

std::string MockBackend::complete(const BackendRequest& req) const {
  switch (req.stage) {
    case Stage::Identify: {
      auto id = mock_identify(req.wording);
      return id ? std::string(to_string(*id)) : "NA";
    }
    case Stage::Derive: {
      if (!req.pattern) return "NA";
      auto m = mock_derive(*req.pattern, req.wording);
      return m ? to_json(*m).dump() : "NA";
    }
    case Stage::Apply: {
      if (!req.model) return "NA (no model)";
      try {
        if (req.meaning) {
          if (const auto* s = std::get_if<StructuredMeaning>(req.meaning))
            return serialize_dsl(apply_pattern(*req.model, *s));
          return apply_from_wording(*req.model, std::get<NlMeaning>(*req.meaning).text);
        }
        return apply_from_wording(*req.model, req.wording);
      } catch (const Error& e) {
        return "NA (" + e.code_name() + ": " + e.what() + ")";
      }
    }
  }
  return "NA";
}

}  // namespace cpmr
