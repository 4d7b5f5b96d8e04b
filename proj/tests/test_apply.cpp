#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "cpmr/dsl.hpp"
#include "cpmr/patterns.hpp"
#include "support.hpp"

using namespace cpmr;
using namespace cpmr::meaning;

namespace {

std::string errc_of(const ProcessModel& m, const StructuredMeaning& meaning) {
  try {
    apply_pattern(m, meaning);
  } catch (const Error& e) {
    return std::string(e.code_name());
  }
  return "none";
}

std::string text(const ProcessModel& m) { return serialize_dsl(m); }

std::string node_text(const Node& n) { return serialize_dsl(process("x", {n})); }

const std::set<std::string> kApplyErrors = {
    "NotFound",         "DuplicateLabel",        "NotContiguous",  "NotASubprocess",
    "NoSuchBranch",     "NoSuchCondition",       "LastBranch",     "KindUnchanged",
    "ConditionCountMismatch", "WouldViolateInvariant", "InvalidTarget", "InvalidMeaning"};

}  // namespace

TEST(Golden, AllCasesPass) {
  auto cases = testkit::load_golden();
  ASSERT_GE(cases.size(), 38u);
  std::set<std::string> covered;
  for (const auto& c : cases) {
    EXPECT_EQ(testkit::check_golden(c), "") << c.file << ": " << c.name;
    if (c.expected) covered.insert(c.meaning_json.substr(0, c.meaning_json.find(',')));
  }
  EXPECT_EQ(covered.size(), 19u);
}

TEST(ApplyPattern, SpecExamples) {
  EXPECT_EQ(apply_pattern(process("P", {task("A"), task("B")}), Insert{"C", After{"A"}}),
            process("P", {task("A"), task("C"), task("B")}));

  EXPECT_EQ(text(apply_pattern(process("P", {task("A"), task("B"), task("C"), task("D")}), Parallelize{{"B", "C"}})),
            text(process("P", {task("A"),
                               and_block({branch(std::nullopt, {task("B")}), branch(std::nullopt, {task("C")})}),
                               task("D")})));

  auto fig = process("P", {task("A"), xor_block({branch("true", {task("B")}), branch("false", {task("C")})}), task("D")});
  EXPECT_EQ(text(apply_pattern(fig, DeleteBranch{ByOrdinal{GatewayKind::Xor, 1}, "false"})),
            text(process("P", {task("A"), task("B"), task("D")})));

  EXPECT_EQ(text(apply_pattern(process("P", {task("A"), task("D")}), EmbedConditional{"D", "status ok"})),
            text(process("P", {task("A"), xor_block({branch("status ok", {task("D")}), branch("else", {})})})));

  EXPECT_EQ(errc_of(process("P", {task("A"), task("B")}), Insert{"A", After{"B"}}), "DuplicateLabel");

  EXPECT_EQ(text(apply_pattern(process("P", {task("A"), subprocess("F", {task("B"), task("C")}), task("D")}),
                               InlineSubprocess{"F"})),
            text(process("P", {task("A"), task("B"), task("C"), task("D")})));
}

TEST(ApplyPattern, InputIsNotMutated) {
  auto m = process("P", {task("A"), task("B")});
  auto before = text(m);
  apply_pattern(m, Delete{"A"});
  EXPECT_EQ(text(m), before);
}

TEST(ApplyPattern, DeletingTheLastBranchIsAnError) {
  // A gateway always has at least two branches, so cp17 flattens instead.
  auto m = process("P", {and_block({branch(std::nullopt, {task("X")}), branch(std::nullopt, {task("Y")})})});
  EXPECT_EQ(text(apply_pattern(m, DeleteBranch{ByOrdinal{GatewayKind::And, 1}, "X"})), text(process("P", {task("Y")})));
  EXPECT_EQ(errc_of(m, DeleteBranch{ByOrdinal{GatewayKind::And, 2}, "X"}), "NotFound");
}

TEST(ApplyPattern, DeleteKeepsEmptyXorBranch) {
  auto m = process("P", {xor_block({branch("a", {task("X")}), branch("b", {task("Y")})})});
  EXPECT_EQ(text(apply_pattern(m, Delete{"X"})),
            text(process("P", {xor_block({branch("a", {}), branch("b", {task("Y")})})})));
  auto par = process("P", {and_block({branch(std::nullopt, {task("X")}), branch(std::nullopt, {task("Y")})})});
  EXPECT_EQ(errc_of(par, Delete{"X"}), "WouldViolateInvariant");
}

TEST(ApplyPattern, CopyOfSubprocessWithInnerLabelsCollides) {
  auto m = process("P", {subprocess("S", {task("X")}), task("Y")});
  EXPECT_EQ(errc_of(m, Copy{"S", "S2", After{"Y"}}), "DuplicateLabel");
  EXPECT_EQ(text(apply_pattern(m, Copy{"Y", "Y2", Before{"S"}})),
            text(process("P", {task("Y2"), subprocess("S", {task("X")}), task("Y")})));
}

TEST(ApplyPattern, MergeWholeParallelBlock) {
  auto m = process("P", {task("A"), and_block({branch(std::nullopt, {task("B")}), branch(std::nullopt, {task("E")})})});
  EXPECT_EQ(text(apply_pattern(m, MergeTasks{{"E", "B"}, "Summary"})),
            text(process("P", {task("A"), task("Summary")})));
  auto partial = process("P", {and_block({branch(std::nullopt, {task("B"), task("C")}),
                                          branch(std::nullopt, {task("E")})})});
  EXPECT_EQ(errc_of(partial, MergeTasks{{"B", "E"}, "Summary"}), "NotContiguous");
}

// ---- properties --------------------------------------------------------------

TEST(ApplyProperty, SoundnessOnRandomModels) {
  testkit::ModelGen gen(1234);
  int applied = 0;
  for (int i = 0; i < 150; ++i) {
    auto m = gen.model();
    for (PatternId id : kAllPatterns) {
      auto meaning = testkit::random_meaning(gen.rng(), m, id);
      try {
        auto out = apply_pattern(m, meaning);
        ++applied;
        auto ds = validate(out);
        ASSERT_TRUE(ds.empty()) << to_json(meaning).dump() << "\n" << text(m) << ds.front().message;
        ASSERT_EQ(testkit::graph_soundness(export_graph(out)), "");
        ASSERT_EQ(text(apply_pattern(m, meaning)), text(out));  // deterministic
      } catch (const Error& e) {
        ASSERT_TRUE(kApplyErrors.count(std::string(e.code_name())))
            << e.code_name() << " " << e.what() << "\n" << to_json(meaning).dump();
      }
    }
  }
  EXPECT_GT(applied, 1000);
}

TEST(ApplyProperty, LocalityOfSingleTargetPatterns) {
  testkit::ModelGen gen(77);
  for (int i = 0; i < 150; ++i) {
    auto m = gen.model();
    for (PatternId id : {PatternId::Cp2, PatternId::Cp4, PatternId::Cp8_1, PatternId::Cp8_2, PatternId::Cp10,
                         PatternId::Cp15, PatternId::Lp6}) {
      auto meaning = testkit::random_meaning(gen.rng(), m, id);
      std::string target = to_json(meaning)["params"]["label"].get<std::string>();
      ProcessModel out;
      try {
        out = apply_pattern(m, meaning);
      } catch (const Error&) {
        continue;
      }
      auto top = find_by_label(m, target).indices.front();
      std::multiset<std::string> after;
      for (const auto& n : out.body.children) after.insert(node_text(n));
      for (std::size_t k = 0; k < m.body.size(); ++k) {
        if (k == top) continue;
        auto it = after.find(node_text(m.body.children[k]));
        ASSERT_NE(it, after.end()) << "untouched sibling changed by " << to_json(meaning).dump();
        after.erase(it);
      }
    }
  }
}

TEST(ApplyProperty, InlineUndoesExtract) {
  testkit::ModelGen gen(8);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    auto m = gen.model();
    auto meaning = testkit::random_meaning(gen.rng(), m, PatternId::Cp6);
    const auto& ex = std::get<ExtractSubprocess>(meaning);
    try {
      auto out = apply_pattern(m, meaning);
      ASSERT_EQ(text(apply_pattern(out, InlineSubprocess{ex.sub_label})), text(m));
      ++checked;
    } catch (const Error&) {
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(ApplyProperty, RenameTwiceIsIdentity) {
  testkit::ModelGen gen(9);
  for (int i = 0; i < 200; ++i) {
    auto m = gen.model();
    for (const auto& l : all_labels(m)) {
      auto out = apply_pattern(apply_pattern(m, Rename{l, "fresh label"}), Rename{"fresh label", l});
      ASSERT_EQ(text(out), text(m));
    }
  }
}

TEST(ApplyProperty, CopyThenDeleteCopyIsIdentity) {
  testkit::ModelGen gen(10);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    auto m = gen.model();
    auto meaning = testkit::random_meaning(gen.rng(), m, PatternId::Cp14);
    try {
      auto out = apply_pattern(m, meaning);
      ASSERT_EQ(text(apply_pattern(out, Delete{std::get<Copy>(meaning).new_label})), text(m));
      ++checked;
    } catch (const Error&) {
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(ApplyProperty, ConditionalThenDeleteElseRestores) {
  testkit::ModelGen gen(12);
  for (int i = 0; i < 200; ++i) {
    auto m = gen.model();
    auto labels = all_labels(m);
    if (labels.empty()) continue;
    const std::string& l = *labels.begin();
    auto wrapped = apply_pattern(m, EmbedConditional{l, "guard"});
    ASSERT_EQ(text(apply_pattern(wrapped, DeleteBranch{ByContainedLabel{l}, "else"})), text(m));
  }
}

TEST(ApplyProperty, KeepOneBranchEqualsIteratedDelete) {
  testkit::ModelGen gen(13);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto m = gen.model();
    FragmentPath gw;
    try {
      gw = resolve_gateway(m, ByOrdinal{GatewayKind::Xor, 1});
    } catch (const Error&) {
      continue;
    }
    const auto& g = node_at(m, gw).as<Gateway>();
    std::vector<std::string> conds;
    for (const auto& b : g.branches) conds.push_back(*b.condition);
    const std::string keep = conds[conds.size() / 2];

    auto outcome = [](auto&& f) -> std::string {
      try {
        return text(f());
      } catch (const Error& e) {
        return std::string(e.code_name());
      }
    };
    auto kept = outcome([&] { return apply_pattern(m, LeaveSingleBranch{ByOrdinal{GatewayKind::Xor, 1}, keep}); });
    auto iterated = outcome([&] {
      auto cur = m;
      for (const auto& c : conds)
        if (c != keep) cur = apply_pattern(cur, DeleteBranch{ByOrdinal{GatewayKind::Xor, 1}, c});
      return cur;
    });
    ASSERT_EQ(kept, iterated) << text(m);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}
