#include <algorithm>
#include <set>

#include "cpmr/error.hpp"
#include "cpmr/patterns.hpp"

namespace cpmr {

namespace {

using namespace meaning;

bool same_parent(const FragmentPath& a, const FragmentPath& b) {
  return a.indices.size() == b.indices.size() &&
         std::equal(a.indices.begin(), a.indices.end() - 1, b.indices.begin());
}

bool is_prefix(const FragmentPath& outer, const FragmentPath& inner) {
  return outer.indices.size() < inner.indices.size() &&
         std::equal(outer.indices.begin(), outer.indices.end(), inner.indices.begin());
}

std::size_t index_of(const FragmentPath& p) { return p.indices.back(); }

// Inserts `node` at the place a Position designates.
void insert_at(ProcessModel& model, const Position& pos, Node node) {
  if (const auto* b = std::get_if<Before>(&pos)) {
    FragmentPath p = find_by_label(model, b->label);
    Sequence& seq = parent_sequence(model, p);
    seq.children.insert(seq.children.begin() + static_cast<std::ptrdiff_t>(index_of(p)), std::move(node));
    return;
  }
  if (const auto* a = std::get_if<After>(&pos)) {
    FragmentPath p = find_by_label(model, a->label);
    Sequence& seq = parent_sequence(model, p);
    seq.children.insert(seq.children.begin() + static_cast<std::ptrdiff_t>(index_of(p) + 1), std::move(node));
    return;
  }
  const auto& bw = std::get<Between>(pos);
  FragmentPath pa = find_by_label(model, bw.label_a);
  FragmentPath pb = find_by_label(model, bw.label_b);
  std::size_t ia = index_of(pa), ib = index_of(pb);
  if (!same_parent(pa, pb) || (ia + 1 != ib && ib + 1 != ia))
    throw Error(Errc::NotContiguous,
                "'" + bw.label_a + "' and '" + bw.label_b + "' do not directly succeed each other");
  Sequence& seq = parent_sequence(model, pa);
  seq.children.insert(seq.children.begin() + static_cast<std::ptrdiff_t>(std::max(ia, ib)), std::move(node));
}

// Paths of `labels`, which must sit in one sequence at consecutive positions.
// Returns the first index and count.
std::pair<FragmentPath, std::size_t> contiguous_range(const ProcessModel& model,
                                                      const std::vector<std::string>& labels) {
  std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() != labels.size()) throw Error(Errc::InvalidTarget, "a label is listed more than once");
  std::vector<FragmentPath> paths;
  for (const auto& l : labels) paths.push_back(find_by_label(model, l));
  for (const auto& p : paths)
    if (!same_parent(p, paths.front()))
      throw Error(Errc::NotContiguous, "the fragments are not in the same sequence");
  std::sort(paths.begin(), paths.end());
  for (std::size_t i = 1; i < paths.size(); ++i)
    if (index_of(paths[i]) != index_of(paths[i - 1]) + 1)
      throw Error(Errc::NotContiguous, "the fragments do not directly succeed each other");
  return {paths.front(), paths.size()};
}

void replace_range(ProcessModel& model, const FragmentPath& first, std::size_t count, std::vector<Node> with) {
  Sequence& seq = parent_sequence(model, first);
  auto begin = seq.children.begin() + static_cast<std::ptrdiff_t>(index_of(first));
  auto pos = seq.children.erase(begin, begin + static_cast<std::ptrdiff_t>(count));
  seq.children.insert(pos, std::make_move_iterator(with.begin()), std::make_move_iterator(with.end()));
}

std::vector<Node> tasks(const std::vector<std::string>& labels) {
  std::vector<Node> out;
  for (const auto& l : labels) out.push_back(Task{l});
  return out;
}

bool contains_label(const Sequence& seq, const std::string& label) {
  for (const Node& n : seq.children) {
    if (const std::string* l = n.label(); l && *l == label) return true;
    bool inner = std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Subprocess> || std::is_same_v<T, Loop>) {
            return contains_label(v.body, label);
          } else if constexpr (std::is_same_v<T, Gateway>) {
            return std::any_of(v.branches.begin(), v.branches.end(),
                               [&](const Branch& b) { return contains_label(b.body, label); });
          } else {
            return false;
          }
        },
        n.value);
    if (inner) return true;
  }
  return false;
}

// Exclusive branches are addressed by condition text, parallel ones by a
// label they contain.
std::size_t find_branch(const Gateway& g, const std::string& selector) {
  for (std::size_t b = 0; b < g.branches.size(); ++b) {
    const Branch& br = g.branches[b];
    if (g.kind == GatewayKind::Xor ? br.condition == selector : contains_label(br.body, selector)) return b;
  }
  throw Error(Errc::NoSuchBranch, g.kind == GatewayKind::Xor
                                      ? "no branch with condition '" + selector + "'"
                                      : "no parallel branch contains '" + selector + "'");
}

// Replaces the gateway at `path` with the body of one of its branches.
void splice_branch(ProcessModel& model, const FragmentPath& path, std::size_t keep) {
  Sequence body = std::move(node_at(model, path).as<Gateway>().branches[keep].body);
  replace_range(model, path, 1, std::move(body.children));
}

class Applier {
 public:
  explicit Applier(ProcessModel model) : m_(std::move(model)) {}

  ProcessModel finish() {
    auto diags = validate(m_);
    for (const auto& d : diags)
      if (d.code == DiagCode::DuplicateLabel) throw Error(Errc::DuplicateLabel, d.message);
    if (!diags.empty())
      throw Error(Errc::WouldViolateInvariant,
                  "the change would leave the model malformed: " + diags.front().message);
    if (m_.body.empty()) throw Error(Errc::WouldViolateInvariant, "the change would leave the process empty");
    return std::move(m_);
  }

  void operator()(const Insert& v) { insert_at(m_, v.position, Task{v.new_label}); }

  void operator()(const Delete& v) {
    FragmentPath p = find_by_label(m_, v.label);
    replace_range(m_, p, 1, {});
  }

  void operator()(const Move& v) {
    FragmentPath p = find_by_label(m_, v.label);
    Node moved = node_at(m_, p);
    replace_range(m_, p, 1, {});
    insert_at(m_, v.position, std::move(moved));
  }

  void operator()(const Replace& v) {
    FragmentPath p = find_by_label(m_, v.label);
    replace_range(m_, p, 1, tasks(v.new_labels));
  }

  void operator()(const Swap& v) {
    FragmentPath a = find_by_label(m_, v.label_a);
    FragmentPath b = find_by_label(m_, v.label_b);
    if (a == b) throw Error(Errc::InvalidTarget, "cannot swap a fragment with itself");
    if (is_prefix(a, b) || is_prefix(b, a))
      throw Error(Errc::InvalidTarget, "cannot swap a fragment with an element nested inside it");
    std::swap(node_at(m_, a), node_at(m_, b));
  }

  void operator()(const ExtractSubprocess& v) {
    FragmentPath from = find_by_label(m_, v.from_label);
    FragmentPath to = find_by_label(m_, v.to_label);
    if (!same_parent(from, to)) throw Error(Errc::NotContiguous, "the range does not lie in one sequence");
    if (to < from) std::swap(from, to);
    std::size_t count = index_of(to) - index_of(from) + 1;
    const Sequence& seq = parent_sequence(m_, from);
    auto begin = seq.children.begin() + static_cast<std::ptrdiff_t>(index_of(from));
    Subprocess sub{v.sub_label, Sequence{std::vector<Node>(begin, begin + static_cast<std::ptrdiff_t>(count))}};
    std::vector<Node> with;
    with.push_back(std::move(sub));
    replace_range(m_, from, count, std::move(with));
  }

  void operator()(const InlineSubprocess& v) {
    FragmentPath p = find_by_label(m_, v.sub_label);
    Node& n = node_at(m_, p);
    if (!n.is<Subprocess>()) throw Error(Errc::NotASubprocess, "'" + v.sub_label + "' is not a subprocess");
    Sequence body = std::move(n.as<Subprocess>().body);
    replace_range(m_, p, 1, std::move(body.children));
  }

  void operator()(const EmbedLoopPre& v) { wrap(v.label, [&](Node n) -> Node { return loop_pre(v.condition, {std::move(n)}); }); }

  void operator()(const EmbedLoopPost& v) { wrap(v.label, [&](Node n) -> Node { return loop_post(v.condition, {std::move(n)}); }); }

  void operator()(const Parallelize& v) {
    auto [first, count] = contiguous_range(m_, v.labels);
    const Sequence& seq = parent_sequence(m_, first);
    std::vector<Branch> branches;
    for (std::size_t i = 0; i < count; ++i)
      branches.push_back(branch(std::nullopt, {seq.children[index_of(first) + i]}));
    std::vector<Node> with;
    with.push_back(and_block(std::move(branches)));
    replace_range(m_, first, count, std::move(with));
  }

  void operator()(const EmbedConditional& v) {
    wrap(v.label, [&](Node n) -> Node {
      return xor_block({branch(v.condition, {std::move(n)}), branch("else", {})});
    });
  }

  void operator()(const UpdateCondition& v) {
    if (const auto* gb = std::get_if<GatewayBranchCondition>(&v.target)) {
      Gateway& g = node_at(m_, resolve_gateway(m_, gb->gateway)).as<Gateway>();
      if (g.kind != GatewayKind::Xor) throw Error(Errc::NoSuchCondition, "a parallel gateway has no conditions");
      for (Branch& b : g.branches) {
        if (b.condition == gb->old_condition) {
          b.condition = v.new_condition;
          return;
        }
      }
      throw Error(Errc::NoSuchCondition, "no branch with condition '" + gb->old_condition + "'");
    }
    const std::string& label = std::get<LoopCondition>(v.target).containing_label;
    FragmentPath p = find_by_label(m_, label);
    auto outer = ancestors(m_, p);
    for (auto it = outer.rbegin(); it != outer.rend(); ++it) {
      Node& n = node_at(m_, *it);
      if (n.is<Loop>()) {
        n.as<Loop>().condition = v.new_condition;
        return;
      }
    }
    throw Error(Errc::NoSuchCondition, "'" + label + "' is not inside a loop");
  }

  void operator()(const Copy& v) {
    Node copy = node_at(m_, find_by_label(m_, v.label));
    if (copy.is<Task>()) copy.as<Task>().label = v.new_label;
    else copy.as<Subprocess>().label = v.new_label;
    insert_at(m_, v.position, std::move(copy));
  }

  void operator()(const SplitTask& v) {
    FragmentPath p = find_by_label(m_, v.label);
    if (!node_at(m_, p).is<Task>()) throw Error(Errc::InvalidTarget, "'" + v.label + "' is not a task");
    replace_range(m_, p, 1, tasks(v.new_labels));
  }

  void operator()(const MergeTasks& v) {
    if (auto gateway = all_branches_of_one_gateway(v.labels)) {
      replace_range(m_, *gateway, 1, tasks({v.new_label}));
      return;
    }
    auto [first, count] = contiguous_range(m_, v.labels);
    replace_range(m_, first, count, tasks({v.new_label}));
  }

  void operator()(const DeleteBranch& v) {
    FragmentPath p = resolve_gateway(m_, v.gateway);
    Gateway& g = node_at(m_, p).as<Gateway>();
    std::size_t b = find_branch(g, v.branch_condition);
    if (g.branches.size() < 2) throw Error(Errc::LastBranch, "cannot delete the only branch of a gateway");
    g.branches.erase(g.branches.begin() + static_cast<std::ptrdiff_t>(b));
    if (g.branches.size() == 1) splice_branch(m_, p, 0);
  }

  void operator()(const LeaveSingleBranch& v) {
    FragmentPath p = resolve_gateway(m_, v.gateway);
    std::size_t b = find_branch(node_at(m_, p).as<Gateway>(), v.keep_condition);
    splice_branch(m_, p, b);
  }

  void operator()(const ReplaceGateways& v) {
    Gateway& g = node_at(m_, resolve_gateway(m_, v.gateway)).as<Gateway>();
    if (g.kind == v.new_kind) throw Error(Errc::KindUnchanged, "the gateway already has that type");
    if (v.new_kind == GatewayKind::And) {
      for (Branch& b : g.branches) b.condition.reset();
    } else {
      if (!v.conditions || v.conditions->size() != g.branches.size())
        throw Error(Errc::ConditionCountMismatch,
                    "an exclusive gateway needs exactly " + std::to_string(g.branches.size()) + " conditions");
      for (std::size_t i = 0; i < g.branches.size(); ++i) g.branches[i].condition = (*v.conditions)[i];
    }
    g.kind = v.new_kind;
  }

  void operator()(const Rename& v) {
    Node& n = node_at(m_, find_by_label(m_, v.label));
    if (n.is<Task>()) n.as<Task>().label = v.new_label;
    else n.as<Subprocess>().label = v.new_label;
  }

 private:
  template <class F>
  void wrap(const std::string& label, F&& make) {
    FragmentPath p = find_by_label(m_, label);
    Node& slot = node_at(m_, p);
    Node inner = std::move(slot);
    slot = make(std::move(inner));
  }

  // Gateway path when `labels` are exactly the single-task branches of one gateway.
  std::optional<FragmentPath> all_branches_of_one_gateway(const std::vector<std::string>& labels) {
    std::optional<FragmentPath> gateway;
    std::set<std::size_t> branches;
    for (const auto& l : labels) {
      FragmentPath p = find_by_label(m_, l);
      if (p.indices.size() < 3 || index_of(p) != 0) return std::nullopt;
      FragmentPath g{std::vector<std::size_t>(p.indices.begin(), p.indices.end() - 2)};
      const Node& gn = node_at(m_, g);
      if (!gn.is<Gateway>()) return std::nullopt;
      if (gateway && *gateway != g) return std::nullopt;
      gateway = g;
      const Branch& br = gn.as<Gateway>().branches[p.indices[p.indices.size() - 2]];
      if (br.body.size() != 1 || !br.body.children.front().is<Task>()) return std::nullopt;
      branches.insert(p.indices[p.indices.size() - 2]);
    }
    if (!gateway || branches.size() != labels.size()) return std::nullopt;
    if (branches.size() != node_at(m_, *gateway).as<Gateway>().branches.size()) return std::nullopt;
    return gateway;
  }

  ProcessModel m_;
};

}  // namespace

FragmentPath resolve_gateway(const ProcessModel& model, const GatewayRef& ref) {
  if (const auto* c = std::get_if<ByContainedLabel>(&ref)) {
    auto outer = ancestors(model, find_by_label(model, c->label));
    for (auto it = outer.rbegin(); it != outer.rend(); ++it)
      if (node_at(model, *it).is<Gateway>()) return *it;
    throw Error(Errc::NotFound, "'" + c->label + "' is not inside a gateway");
  }
  const auto& o = std::get<ByOrdinal>(ref);
  int seen = 0;
  std::optional<FragmentPath> found;
  for_each_node(model, [&](const Node& n, const FragmentPath& p) {
    if (!found && n.is<Gateway>() && n.as<Gateway>().kind == o.kind && ++seen == o.index) found = p;
  });
  if (!found)
    throw Error(Errc::NotFound, "there is no " + std::string(o.kind == GatewayKind::Xor ? "exclusive" : "parallel") +
                                    " gateway number " + std::to_string(o.index));
  return *found;
}

ProcessModel apply_pattern(const ProcessModel& model, const StructuredMeaning& m) {
  check_meaning(m);
  if (auto diags = validate(model); !diags.empty())
    throw Error(Errc::InvalidModel, "the input model is malformed: " + diags.front().message);
  Applier applier(model);
  std::visit(applier, m);
  return applier.finish();
}

}  // namespace cpmr
