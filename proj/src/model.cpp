#include "cpmr/model.hpp"

#include <algorithm>
#include <map>

#include "cpmr/error.hpp"

namespace cpmr {

bool operator==(const Sequence& a, const Sequence& b) { return a.children == b.children; }

const std::string* Node::label() const noexcept {
  if (const auto* t = std::get_if<Task>(&value)) return &t->label;
  if (const auto* s = std::get_if<Subprocess>(&value)) return &s->label;
  return nullptr;
}

std::string FragmentPath::str() const {
  std::string out = "[";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(indices[i]);
  }
  out += ']';
  return out;
}

std::string_view to_string(DiagCode code) noexcept {
  switch (code) {
    case DiagCode::DuplicateLabel: return "DuplicateLabel";
    case DiagCode::EmptyLabel: return "EmptyLabel";
    case DiagCode::InvalidText: return "InvalidText";
    case DiagCode::TooFewBranches: return "TooFewBranches";
    case DiagCode::MissingCondition: return "MissingCondition";
    case DiagCode::UnexpectedCondition: return "UnexpectedCondition";
    case DiagCode::EmptyBranch: return "EmptyBranch";
    case DiagCode::EmptyBody: return "EmptyBody";
    case DiagCode::EmptyCondition: return "EmptyCondition";
  }
  return "?";
}

namespace {

FragmentPath extend(const FragmentPath& p, std::size_t i) {
  FragmentPath out = p;
  out.indices.push_back(i);
  return out;
}

// Preorder walk over every node, including subprocess bodies.
template <class F>
void walk(const Sequence& seq, const FragmentPath& prefix, F&& visit) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Node& n = seq.children[i];
    FragmentPath here = extend(prefix, i);
    visit(n, here);
    if (const auto* s = std::get_if<Subprocess>(&n.value)) {
      walk(s->body, here, visit);
    } else if (const auto* l = std::get_if<Loop>(&n.value)) {
      walk(l->body, here, visit);
    } else if (const auto* g = std::get_if<Gateway>(&n.value)) {
      for (std::size_t b = 0; b < g->branches.size(); ++b)
        walk(g->branches[b].body, extend(here, b), visit);
    }
  }
}

bool has_control_chars(std::string_view text) {
  return std::any_of(text.begin(), text.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x20; });
}

void check_text(std::vector<Diagnostic>& out, const FragmentPath& path, std::string_view text,
                DiagCode empty_code, std::string_view what) {
  if (text.empty()) {
    out.push_back({path, empty_code, std::string(what) + " is empty"});
  } else if (has_control_chars(text)) {
    out.push_back({path, DiagCode::InvalidText, std::string(what) + " contains control characters"});
  }
}

template <class ModelT, class SeqT>
SeqT& descend(ModelT& model, const FragmentPath& path, std::size_t count) {
  SeqT* seq = &model.body;
  std::size_t k = 0;
  auto fail = [&] { throw Error(Errc::NotFound, "path " + path.str() + " does not resolve"); };
  while (k < count) {
    std::size_t i = path.indices[k++];
    if (i >= seq->children.size()) fail();
    auto& node = seq->children[i];
    if (auto* s = std::get_if<Subprocess>(&node.value)) {
      seq = &s->body;
    } else if (auto* l = std::get_if<Loop>(&node.value)) {
      seq = &l->body;
    } else if (auto* g = std::get_if<Gateway>(&node.value)) {
      if (k == count) fail();  // gateway without a branch index
      std::size_t b = path.indices[k++];
      if (b >= g->branches.size()) fail();
      seq = &g->branches[b].body;
    } else {
      fail();
    }
  }
  return *seq;
}

template <class ModelT, class SeqT>
SeqT& parent_of(ModelT& model, const FragmentPath& path) {
  if (path.empty()) throw Error(Errc::NotFound, "empty path has no parent");
  return descend<ModelT, SeqT>(model, path, path.indices.size() - 1);
}

}  // namespace

std::vector<Diagnostic> validate(const ProcessModel& model) {
  std::vector<Diagnostic> out;
  std::map<std::string, std::vector<FragmentPath>> seen;

  walk(model.body, FragmentPath{}, [&](const Node& n, const FragmentPath& path) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Task>) {
            check_text(out, path, v.label, DiagCode::EmptyLabel, "task label");
            seen[v.label].push_back(path);
          } else if constexpr (std::is_same_v<T, Subprocess>) {
            check_text(out, path, v.label, DiagCode::EmptyLabel, "subprocess label");
            seen[v.label].push_back(path);
            if (v.body.empty())
              out.push_back({path, DiagCode::EmptyBody, "subprocess '" + v.label + "' has an empty body"});
          } else if constexpr (std::is_same_v<T, Loop>) {
            check_text(out, path, v.condition, DiagCode::EmptyCondition, "loop condition");
            if (v.body.empty()) out.push_back({path, DiagCode::EmptyBody, "loop has an empty body"});
          } else if constexpr (std::is_same_v<T, Gateway>) {
            if (v.branches.size() < 2)
              out.push_back({path, DiagCode::TooFewBranches,
                             "gateway has " + std::to_string(v.branches.size()) + " branch(es)"});
            for (std::size_t b = 0; b < v.branches.size(); ++b) {
              const Branch& br = v.branches[b];
              FragmentPath bp = extend(path, b);
              if (v.kind == GatewayKind::Xor) {
                if (!br.condition)
                  out.push_back({bp, DiagCode::MissingCondition, "xor branch without condition"});
                else
                  check_text(out, bp, *br.condition, DiagCode::MissingCondition, "xor branch condition");
              } else {
                if (br.condition)
                  out.push_back({bp, DiagCode::UnexpectedCondition, "and branch with condition"});
                if (br.body.empty())
                  out.push_back({bp, DiagCode::EmptyBranch, "and branch is empty"});
              }
            }
          }
        },
        n.value);
  });

  for (const auto& [label, paths] : seen) {
    if (paths.size() < 2 || label.empty()) continue;
    for (const auto& p : paths)
      out.push_back({p, DiagCode::DuplicateLabel, "label '" + label + "' is used more than once"});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.path < b.path; });
  return out;
}

FragmentPath find_by_label(const ProcessModel& model, std::string_view label) {
  std::optional<FragmentPath> found;
  walk(model.body, FragmentPath{}, [&](const Node& n, const FragmentPath& path) {
    const std::string* l = n.label();
    if (!found && l && *l == label) found = path;
  });
  if (!found) throw Error(Errc::NotFound, "no task or subprocess labelled '" + std::string(label) + "'");
  return *found;
}

std::set<std::string> all_labels(const ProcessModel& model) {
  std::set<std::string> out;
  walk(model.body, FragmentPath{}, [&](const Node& n, const FragmentPath&) {
    if (const std::string* l = n.label()) out.insert(*l);
  });
  return out;
}

void for_each_node(const ProcessModel& model,
                   const std::function<void(const Node&, const FragmentPath&)>& visit) {
  walk(model.body, FragmentPath{}, visit);
}

std::vector<FragmentPath> ancestors(const ProcessModel& model, const FragmentPath& path) {
  std::vector<FragmentPath> out;
  const Sequence* seq = &model.body;
  FragmentPath here;
  std::size_t k = 0;
  while (k + 1 < path.indices.size()) {
    std::size_t i = path.indices[k++];
    if (i >= seq->size()) throw Error(Errc::NotFound, "path " + path.str() + " does not resolve");
    here.indices.push_back(i);
    const Node& n = seq->children[i];
    out.push_back(here);
    if (const auto* s = std::get_if<Subprocess>(&n.value)) {
      seq = &s->body;
    } else if (const auto* l = std::get_if<Loop>(&n.value)) {
      seq = &l->body;
    } else if (const auto* g = std::get_if<Gateway>(&n.value)) {
      std::size_t b = path.indices[k++];
      if (b >= g->branches.size()) throw Error(Errc::NotFound, "path " + path.str() + " does not resolve");
      here.indices.push_back(b);
      seq = &g->branches[b].body;
    } else {
      throw Error(Errc::NotFound, "path " + path.str() + " descends into a task");
    }
  }
  return out;
}

const Sequence& parent_sequence(const ProcessModel& model, const FragmentPath& path) {
  return parent_of<const ProcessModel, const Sequence>(model, path);
}

Sequence& parent_sequence(ProcessModel& model, const FragmentPath& path) {
  return parent_of<ProcessModel, Sequence>(model, path);
}

const Node& node_at(const ProcessModel& model, const FragmentPath& path) {
  const Sequence& seq = parent_sequence(model, path);
  std::size_t i = path.indices.back();
  if (i >= seq.size()) throw Error(Errc::NotFound, "path " + path.str() + " does not resolve");
  return seq.children[i];
}

Node& node_at(ProcessModel& model, const FragmentPath& path) {
  Sequence& seq = parent_sequence(model, path);
  std::size_t i = path.indices.back();
  if (i >= seq.size()) throw Error(Errc::NotFound, "path " + path.str() + " does not resolve");
  return seq.children[i];
}

Node task(std::string label) { return Task{std::move(label)}; }

Node subprocess(std::string label, std::vector<Node> children) {
  return Subprocess{std::move(label), Sequence{std::move(children)}};
}

Branch branch(std::optional<std::string> condition, std::vector<Node> children) {
  return Branch{std::move(condition), Sequence{std::move(children)}};
}

Node xor_block(std::vector<Branch> branches) { return Gateway{GatewayKind::Xor, std::move(branches)}; }

Node and_block(std::vector<Branch> branches) { return Gateway{GatewayKind::And, std::move(branches)}; }

Node loop_pre(std::string condition, std::vector<Node> children) {
  return Loop{LoopKind::Pre, std::move(condition), Sequence{std::move(children)}};
}

Node loop_post(std::string condition, std::vector<Node> children) {
  return Loop{LoopKind::Post, std::move(condition), Sequence{std::move(children)}};
}

ProcessModel process(std::string name, std::vector<Node> children) {
  return ProcessModel{std::move(name), Sequence{std::move(children)}};
}

}  // namespace cpmr
