#include "support.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cpmr/dsl.hpp"
#include "cpmr/error.hpp"

#ifndef CPMR_FIXTURE_DIR
#error "CPMR_FIXTURE_DIR must be defined"
#endif

namespace cpmr::testkit {

std::filesystem::path fixture_dir() { return CPMR_FIXTURE_DIR; }

std::vector<GoldenCase> load_golden() {
  std::vector<GoldenCase> out;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(fixture_dir() / "golden"))
    if (e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line, section;
    GoldenCase* cur = nullptr;
    std::string* sink = nullptr;
    std::string expected, error;
    auto flush = [&] {
      if (!cur) return;
      if (!expected.empty()) cur->expected = expected;
      if (!error.empty()) cur->error = error.substr(0, error.find('\n'));
      expected.clear();
      error.clear();
    };
    while (std::getline(in, line)) {
      if (line.rfind("=== ", 0) == 0) {
        flush();
        out.push_back({f.filename().string(), line.substr(4), {}, {}, {}, {}});
        cur = &out.back();
        sink = nullptr;
      } else if (!cur) {
        continue;
      } else if (line.rfind("meaning ", 0) == 0) {
        cur->meaning_json = line.substr(8);
      } else if (line == "--- input") {
        sink = &cur->input;
      } else if (line == "--- expected") {
        sink = &expected;
      } else if (line == "--- error") {
        sink = &error;
      } else if (line.empty()) {
        sink = nullptr;
      } else if (sink) {
        *sink += line + "\n";
      }
    }
    flush();
  }
  return out;
}

std::string check_golden(const GoldenCase& c) {
  ProcessModel input;
  try {
    input = parse_dsl(c.input);
  } catch (const Error& e) {
    return "input does not parse: " + std::string(e.what());
  }
  StructuredMeaning m = meaning::Rename{};
  try {
    m = meaning_from_json(nlohmann::json::parse(c.meaning_json));
  } catch (const std::exception& e) {
    return "meaning does not parse: " + std::string(e.what());
  }
  try {
    ProcessModel out = apply_pattern(input, m);
    if (c.error) return "expected error " + *c.error + ", got a model";
    std::string got = serialize_dsl(out);
    if (got != *c.expected) return "output differs:\n" + got + "expected:\n" + *c.expected;
    if (!validate(out).empty()) return "output does not validate";
    if (serialize_dsl(parse_dsl(got)) != got) return "output does not round-trip";
  } catch (const Error& e) {
    if (!c.error) return "unexpected error " + e.code_name() + ": " + e.what();
    if (e.code_name() != *c.error) return "expected error " + *c.error + ", got " + e.code_name();
  }
  return {};
}

// ---- random models ---------------------------------------------------------

std::string ModelGen::label(const char* prefix) {
  static const char* const decorations[] = {"", "", "", "", " \"q\"", " back\\slash", " \xC3\xBC" "ber", " \xE2\x82\xAC"};
  std::string s = std::string(prefix) + std::to_string(++counter_);
  s += decorations[pick(static_cast<int>(std::size(decorations)))];
  return s;
}

std::string ModelGen::condition() { return "c" + std::to_string(++counter_); }

Sequence ModelGen::sequence(int depth, bool allow_empty) {
  Sequence s;
  int n = allow_empty && pick(8) == 0 ? 0 : 1 + pick(depth >= 2 ? 2 : 4);
  for (int i = 0; i < n; ++i) s.children.push_back(node(depth));
  return s;
}

Node ModelGen::node(int depth) {
  int r = depth >= 3 ? 0 : pick(100);
  if (r < 55) return Task{label("T")};
  if (r < 68) {
    Gateway g{GatewayKind::Xor, {}};
    int n = 2 + pick(2);
    for (int i = 0; i < n; ++i) g.branches.push_back(Branch{condition(), sequence(depth + 1, true)});
    return g;
  }
  if (r < 80) {
    Gateway g{GatewayKind::And, {}};
    int n = 2 + pick(2);
    for (int i = 0; i < n; ++i) g.branches.push_back(Branch{std::nullopt, sequence(depth + 1, false)});
    return g;
  }
  if (r < 87) return Loop{LoopKind::Pre, condition(), sequence(depth + 1, false)};
  if (r < 93) return Loop{LoopKind::Post, condition(), sequence(depth + 1, false)};
  return Subprocess{label("S"), sequence(depth + 1, false)};
}

ProcessModel ModelGen::model() {
  ProcessModel m;
  m.name = "Random " + std::to_string(++counter_);
  m.body = sequence(0, false);
  return m;
}

TopCounts top_counts(const ProcessModel& m) {
  TopCounts c;
  std::function<void(const Sequence&)> walk = [&](const Sequence& s) {
    for (const auto& n : s.children) {
      if (n.is<Task>()) {
        ++c.tasks;
      } else if (n.is<Subprocess>()) {
        ++c.subprocesses;
      } else if (const auto* g = std::get_if<Gateway>(&n.value)) {
        ++c.gateways;
        for (const auto& b : g->branches) walk(b.body);
      } else {
        ++c.loops;
        walk(n.as<Loop>().body);
      }
    }
  };
  walk(m.body);
  return c;
}

// ---- random meanings -------------------------------------------------------

namespace {

struct Survey {
  std::vector<std::string> labels, tasks, subprocesses;
  std::vector<std::pair<std::string, std::string>> adjacent;  // labelled siblings
  std::vector<FragmentPath> xors, ands;
  std::vector<std::string> in_loop;  // labels with an enclosing loop
  std::map<FragmentPath, std::string> label_at;
};

Survey survey(const ProcessModel& m) {
  Survey s;
  for_each_node(m, [&](const Node& n, const FragmentPath& p) {
    if (const std::string* l = n.label()) {
      s.labels.push_back(*l);
      s.label_at[p] = *l;
      (n.is<Task>() ? s.tasks : s.subprocesses).push_back(*l);
      for (const auto& a : ancestors(m, p))
        if (node_at(m, a).is<Loop>()) {
          s.in_loop.push_back(*l);
          break;
        }
    }
    if (const auto* g = std::get_if<Gateway>(&n.value)) (g->kind == GatewayKind::Xor ? s.xors : s.ands).push_back(p);
  });
  for (const auto& [p, l] : s.label_at) {
    FragmentPath next = p;
    next.indices.back() += 1;
    if (auto it = s.label_at.find(next); it != s.label_at.end()) s.adjacent.emplace_back(l, it->second);
  }
  return s;
}

template <class T>
const T& any_of(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::string fresh(std::mt19937_64& rng) {
  return "New " + std::to_string(std::uniform_int_distribution<std::uint32_t>()(rng));
}

}  // namespace

StructuredMeaning random_meaning(std::mt19937_64& rng, const ProcessModel& m, PatternId id) {
  using namespace meaning;
  Survey s = survey(m);
  auto coin = [&] { return std::uniform_int_distribution<int>(0, 1)(rng) == 0; };
  auto label = [&] { return s.labels.empty() ? std::string("missing") : any_of(rng, s.labels); };
  auto task = [&] { return s.tasks.empty() ? std::string("missing") : any_of(rng, s.tasks); };
  auto pair = [&]() -> std::pair<std::string, std::string> {
    if (s.adjacent.empty()) return {label(), label()};
    return any_of(rng, s.adjacent);
  };
  auto position = [&](const std::string& avoid) -> Position {
    int r = std::uniform_int_distribution<int>(0, 2)(rng);
    if (r == 2 && !s.adjacent.empty()) {
      auto [a, b] = pair();
      if (a != avoid && b != avoid) return Between{a, b};
    }
    std::string l = label();
    if (l == avoid && s.labels.size() > 1) l = label();
    if (r == 0) return Before{l};
    return After{l};
  };
  auto gateway = [&](bool xor_only, FragmentPath* where) -> GatewayRef {
    bool use_xor = xor_only || s.ands.empty() || (!s.xors.empty() && coin());
    const auto& list = use_xor ? s.xors : s.ands;
    if (list.empty()) return ByOrdinal{GatewayKind::Xor, 1};
    std::size_t i = std::uniform_int_distribution<std::size_t>(0, list.size() - 1)(rng);
    *where = list[i];
    return ByOrdinal{use_xor ? GatewayKind::Xor : GatewayKind::And, static_cast<int>(i + 1)};
  };
  auto branch_selector = [&](const FragmentPath& gp) -> std::string {
    if (gp.empty()) return "missing";
    const auto& g = node_at(m, gp).as<Gateway>();
    std::size_t b = std::uniform_int_distribution<std::size_t>(0, g.branches.size() - 1)(rng);
    if (g.kind == GatewayKind::Xor) return *g.branches[b].condition;
    for (const auto& [p, l] : s.label_at)
      if (p.indices.size() > gp.indices.size() + 1 &&
          std::equal(gp.indices.begin(), gp.indices.end(), p.indices.begin()) && p.indices[gp.indices.size()] == b)
        return l;
    return "missing";
  };

  switch (id) {
    case PatternId::Cp1: return Insert{fresh(rng), position("")};
    case PatternId::Cp2: return Delete{label()};
    case PatternId::Cp3: {
      std::string l = label();
      return Move{l, position(l)};
    }
    case PatternId::Cp4: {
      std::vector<std::string> news = {fresh(rng)};
      if (coin()) news.push_back(fresh(rng) + "b");
      return Replace{label(), news};
    }
    case PatternId::Cp5: {
      std::string a = label(), b = label();
      return Swap{a, b};
    }
    case PatternId::Cp6: {
      if (coin()) {
        std::string l = label();
        return ExtractSubprocess{l, l, fresh(rng)};
      }
      auto [a, b] = pair();
      return ExtractSubprocess{a, b, fresh(rng)};
    }
    case PatternId::Cp7:
      return InlineSubprocess{s.subprocesses.empty() ? label() : any_of(rng, s.subprocesses)};
    case PatternId::Cp8_1: return EmbedLoopPre{label(), "loop " + fresh(rng)};
    case PatternId::Cp8_2: return EmbedLoopPost{label(), "loop " + fresh(rng)};
    case PatternId::Cp9: {
      auto [a, b] = pair();
      return Parallelize{{a, b}};
    }
    case PatternId::Cp10: return EmbedConditional{label(), "if " + fresh(rng)};
    case PatternId::Cp13: {
      if (!s.in_loop.empty() && (s.xors.empty() || coin()))
        return UpdateCondition{LoopCondition{any_of(rng, s.in_loop)}, "cond " + fresh(rng)};
      FragmentPath gp;
      GatewayRef g = gateway(true, &gp);
      return UpdateCondition{GatewayBranchCondition{g, branch_selector(gp)}, "cond " + fresh(rng)};
    }
    case PatternId::Cp14: {
      std::string l = coin() || s.subprocesses.empty() ? task() : label();
      return Copy{l, fresh(rng), position("")};
    }
    case PatternId::Cp15: return SplitTask{task(), {fresh(rng) + "a", fresh(rng) + "b"}};
    case PatternId::Cp16: {
      if (!s.ands.empty() && coin()) {
        const auto& g = node_at(m, any_of(rng, s.ands)).as<Gateway>();
        std::vector<std::string> ls;
        for (const auto& b : g.branches)
          if (!b.body.empty() && b.body.children[0].label()) ls.push_back(*b.body.children[0].label());
        if (ls.size() >= 2) return MergeTasks{ls, fresh(rng)};
      }
      auto [a, b] = pair();
      return MergeTasks{{a, b}, fresh(rng)};
    }
    case PatternId::Cp17: {
      FragmentPath gp;
      GatewayRef g = gateway(false, &gp);
      return DeleteBranch{g, branch_selector(gp)};
    }
    case PatternId::Cp18: {
      FragmentPath gp;
      GatewayRef g = gateway(false, &gp);
      return LeaveSingleBranch{g, branch_selector(gp)};
    }
    case PatternId::Cp19: {
      FragmentPath gp;
      GatewayRef g = gateway(false, &gp);
      if (gp.empty() || node_at(m, gp).as<Gateway>().kind == GatewayKind::Xor)
        return ReplaceGateways{g, GatewayKind::And, std::nullopt};
      std::vector<std::string> cs;
      for (std::size_t i = 0; i < node_at(m, gp).as<Gateway>().branches.size(); ++i)
        cs.push_back("when " + std::to_string(i));
      return ReplaceGateways{g, GatewayKind::Xor, cs};
    }
    case PatternId::Lp6: return Rename{label(), fresh(rng)};
  }
  return Rename{label(), fresh(rng)};
}

// ---- graph checks ------------------------------------------------------------

namespace {

std::set<std::string> reach(const std::string& from,
                            const std::map<std::string, std::vector<std::string>>& adj) {
  std::set<std::string> seen{from};
  std::deque<std::string> todo{from};
  while (!todo.empty()) {
    auto cur = todo.front();
    todo.pop_front();
    auto it = adj.find(cur);
    if (it == adj.end()) continue;
    for (const auto& nxt : it->second)
      if (seen.insert(nxt).second) todo.push_back(nxt);
  }
  return seen;
}

}  // namespace

std::string graph_soundness(const GraphDoc& g) {
  std::set<std::string> ids;
  int starts = 0, ends = 0;
  for (const auto& n : g.nodes) {
    if (!ids.insert(n.id).second) return "duplicate id " + n.id;
    starts += n.kind == NodeKind::Start;
    ends += n.kind == NodeKind::End;
  }
  if (starts != 1 || ends != 1) return "expected one start and one end node";
  std::map<std::string, std::vector<std::string>> fwd, back;
  for (const auto& e : g.edges) {
    if (!ids.count(e.source) || !ids.count(e.target)) return "dangling edge " + e.source + " -> " + e.target;
    fwd[e.source].push_back(e.target);
    back[e.target].push_back(e.source);
  }
  auto from_start = reach("start", fwd);
  auto to_end = reach("end", back);
  for (const auto& id : ids) {
    if (!from_start.count(id)) return id + " unreachable from start";
    if (!to_end.count(id)) return "end unreachable from " + id;
  }
  return "";
}

// ---- canonical wordings -------------------------------------------------------

namespace {

std::string seq(std::initializer_list<const char*> lines) {
  std::string out = "process \"P\"\n";
  for (const char* l : lines) out += std::string("  ") + l + "\n";
  return out;
}

}  // namespace

const std::vector<CanonicalCase>& canonical_cases() {
  const std::string abcd = seq({"task \"A\"", "task \"B\"", "task \"C\"", "task \"D\""});
  const std::string fig = seq({"task \"A\"", "xor", "  branch \"true\"", "    task \"B\"", "  branch \"false\"",
                               "    task \"C\"", "task \"D\""});
  static const std::vector<CanonicalCase> cases = {
      {PatternId::Cp1, "Add task C after task B", seq({"task \"A\"", "task \"B\"", "task \"D\""}), abcd},
      {PatternId::Cp2, "Delete task B", abcd, seq({"task \"A\"", "task \"C\"", "task \"D\""})},
      {PatternId::Cp3, "Move task B after task D", abcd,
       seq({"task \"A\"", "task \"C\"", "task \"D\"", "task \"B\""})},
      {PatternId::Cp4, "Replace task B with task X", abcd,
       seq({"task \"A\"", "task \"X\"", "task \"C\"", "task \"D\""})},
      {PatternId::Cp5, "Swap task B and task C", abcd,
       seq({"task \"A\"", "task \"C\"", "task \"B\"", "task \"D\""})},
      {PatternId::Cp6, "Extract task B through task C into subprocess S", abcd,
       seq({"task \"A\"", "subprocess \"S\"", "  task \"B\"", "  task \"C\"", "task \"D\""})},
      {PatternId::Cp7, "Inline subprocess S",
       seq({"task \"A\"", "subprocess \"S\"", "  task \"B\"", "  task \"C\"", "task \"D\""}), abcd},
      {PatternId::Cp8_1, "Embed task B in a loop with condition 'more items'", abcd,
       seq({"task \"A\"", "loop-pre \"more items\"", "  task \"B\"", "task \"C\"", "task \"D\""})},
      {PatternId::Cp8_2, "Execute task B at least once in a loop with condition 'retry'", abcd,
       seq({"task \"A\"", "loop-post \"retry\"", "  task \"B\"", "task \"C\"", "task \"D\""})},
      {PatternId::Cp9, "Execute task B and task C in parallel", abcd,
       seq({"task \"A\"", "and", "  branch", "    task \"B\"", "  branch", "    task \"C\"", "task \"D\""})},
      {PatternId::Cp10, "Execute task D only if 'status ok'", abcd,
       seq({"task \"A\"", "task \"B\"", "task \"C\"", "xor", "  branch \"status ok\"", "    task \"D\"",
            "  branch \"else\""})},
      {PatternId::Cp13, "Change condition 'true' of the exclusive gateway containing task B to 'approved'", fig,
       seq({"task \"A\"", "xor", "  branch \"approved\"", "    task \"B\"", "  branch \"false\"", "    task \"C\"",
            "task \"D\""})},
      {PatternId::Cp14, "Copy task B as task B2 after task D", abcd,
       seq({"task \"A\"", "task \"B\"", "task \"C\"", "task \"D\"", "task \"B2\""})},
      {PatternId::Cp15, "Split task B into task B1 and task B2", abcd,
       seq({"task \"A\"", "task \"B1\"", "task \"B2\"", "task \"C\"", "task \"D\""})},
      {PatternId::Cp16, "Merge task B and task C into task BC", abcd,
       seq({"task \"A\"", "task \"BC\"", "task \"D\""})},
      {PatternId::Cp17, "Delete the branch 'false' of the first exclusive gateway", fig,
       seq({"task \"A\"", "task \"B\"", "task \"D\""})},
      {PatternId::Cp18, "Keep only the branch 'true' of the first exclusive gateway", fig,
       seq({"task \"A\"", "task \"B\"", "task \"D\""})},
      {PatternId::Cp19, "Replace the first exclusive gateway with a parallel gateway", fig,
       seq({"task \"A\"", "and", "  branch", "    task \"B\"", "  branch", "    task \"C\"", "task \"D\""})},
      {PatternId::Lp6, "Rename task B to task Z", abcd,
       seq({"task \"A\"", "task \"Z\"", "task \"C\"", "task \"D\""})},
  };
  return cases;
}

// ---- evaluation fixtures ----------------------------------------------------------

PipelineTrace cpmr_trace(PatternId expected, const std::string& shape) {
  PipelineTrace t;
  t.approach = Approach::Cpmr;
  t.wording = "w";
  std::string steps = shape.substr(0, shape.find(':'));
  t.step_1a = steps[0] == 'T';
  if (!t.step_1a) return t;
  t.identified = expected;
  if (auto colon = shape.find(':'); colon != std::string::npos) t.identified = *parse_pattern_id(shape.substr(colon + 1));
  t.step_1b = steps[1] == 'T';
  t.step_2 = steps[2] == 'T';
  if (*t.step_2) t.step_3 = steps[3] == 'T';
  return t;
}

PipelineTrace baseline_trace(bool step_3) {
  PipelineTrace t;
  t.approach = Approach::Baseline;
  t.wording = "w";
  t.step_3 = step_3;
  return t;
}

std::vector<EvaluationRecord> aggregation_fixture() {
  struct Row {
    const char* id;
    PatternId expected;
    const char* m1;
    bool m1_base;
    const char* m2;
    bool m2_base;
  };
  const PatternId a = PatternId::Cp1, b = PatternId::Cp5;
  const Row rows[] = {
      {"r01", a, "TTTT", true, "TTTT", true},
      {"r02", a, "TTTT", true, "TTTT", true},
      {"r03", a, "TTTT", true, "TTTT", true},
      {"r04", a, "TTTT", false, "TTTF", true},
      {"r05", a, "F", true, "F", false},
      {"r06", a, "TTF", false, "F", false},
      {"r07", a, "TTTF", true, "TFTT:cp4", false},
      {"r08", a, "TFTT:cp4", false, "TFTT:cp4", false},
      {"r09", a, "TFTT:cp4", false, "TFTT:cp10", false},
      {"r10", a, "TFTF:cp10", false, "TFTF:cp10", false},
      {"r11", b, "TTTT", true, "TTTT", true},
      {"r12", b, "TTTT", false, "TTTF", false},
      {"r13", b, "F", true, "TTTF", false},
      {"r14", b, "TTF", false, "TFTF:cp3", false},
      {"r15", b, "TFTF:cp3", true, "TFTT:cp3", false},
      {"r16", b, "TFTT:cp3", true, "TFTT:cp3", false},
      {"r17", b, "TFTT:cp3", false, "TFTT:cp16", false},
      {"r18", b, "TFTF:cp3", false, "TFTF:cp16", false},
      {"r19", b, "TFTF:cp16", false, "TFTF:cp16", false},
      {"r20", b, "TFTF:cp16", false, "TFTF:cp3", false},
  };
  std::vector<EvaluationRecord> out;
  for (const auto& r : rows) {
    EvaluationRecord rec;
    rec.id = r.id;
    rec.expected = r.expected;
    rec.wording = "w";
    rec.input = process("P", {task("A")});
    rec.eao = rec.input;
    rec.traces["m1"] = RunPair{baseline_trace(r.m1_base), cpmr_trace(r.expected, r.m1)};
    rec.traces["m2"] = RunPair{baseline_trace(r.m2_base), cpmr_trace(r.expected, r.m2)};
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cpmr::testkit
