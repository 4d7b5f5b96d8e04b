#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cpmr {

// Block-structured process model. Sequences are not fragments of their own:
// every container holds a Sequence, so a Sequence can never directly nest
// another one.

struct Node;

struct Sequence {
  std::vector<Node> children;

  bool empty() const noexcept { return children.empty(); }
  std::size_t size() const noexcept { return children.size(); }

  friend bool operator==(const Sequence&, const Sequence&);
};

struct Task {
  std::string label;
  friend bool operator==(const Task&, const Task&) = default;
};

struct Subprocess {
  std::string label;
  Sequence body;
  friend bool operator==(const Subprocess&, const Subprocess&) = default;
};

enum class GatewayKind { Xor, And };

struct Branch {
  std::optional<std::string> condition;  // present iff the gateway is XOR
  Sequence body;
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Gateway {
  GatewayKind kind = GatewayKind::Xor;
  std::vector<Branch> branches;
  friend bool operator==(const Gateway&, const Gateway&) = default;
};

enum class LoopKind { Pre, Post };

struct Loop {
  LoopKind kind = LoopKind::Pre;
  std::string condition;
  Sequence body;
  friend bool operator==(const Loop&, const Loop&) = default;
};

struct Node {
  std::variant<Task, Subprocess, Gateway, Loop> value;

  Node(Task t) : value(std::move(t)) {}
  Node(Subprocess s) : value(std::move(s)) {}
  Node(Gateway g) : value(std::move(g)) {}
  Node(Loop l) : value(std::move(l)) {}

  template <class T>
  bool is() const noexcept { return std::holds_alternative<T>(value); }
  template <class T>
  const T& as() const { return std::get<T>(value); }
  template <class T>
  T& as() { return std::get<T>(value); }

  /// Label of a task or subprocess; nullptr for gateways and loops.
  const std::string* label() const noexcept;

  friend bool operator==(const Node&, const Node&) = default;
};

struct ProcessModel {
  std::string name;
  Sequence body;
  friend bool operator==(const ProcessModel&, const ProcessModel&) = default;
};

/// Child positions from the process body down to a fragment. A gateway
/// contributes two steps (branch index, then child index within the branch);
/// subprocesses and loops contribute one (child index within the body).
struct FragmentPath {
  std::vector<std::size_t> indices;

  bool empty() const noexcept { return indices.empty(); }
  std::string str() const;
  friend bool operator==(const FragmentPath&, const FragmentPath&) = default;
  friend auto operator<=>(const FragmentPath&, const FragmentPath&) = default;
};

enum class DiagCode {
  DuplicateLabel,
  EmptyLabel,
  InvalidText,
  TooFewBranches,
  MissingCondition,
  UnexpectedCondition,
  EmptyBranch,
  EmptyBody,
  EmptyCondition,
};

std::string_view to_string(DiagCode code) noexcept;

struct Diagnostic {
  FragmentPath path;
  DiagCode code;
  std::string message;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Checks every structural invariant. An empty result means the model is
/// well-formed (and therefore sound once exported to a graph).
std::vector<Diagnostic> validate(const ProcessModel& model);

/// Throws Error{NotFound} when no task or subprocess carries the label.
FragmentPath find_by_label(const ProcessModel& model, std::string_view label);

std::set<std::string> all_labels(const ProcessModel& model);

/// Preorder visit of every node, subprocess bodies included.
void for_each_node(const ProcessModel& model,
                   const std::function<void(const Node&, const FragmentPath&)>& visit);

/// Paths of the nodes enclosing `path`, outermost first (the node itself excluded).
std::vector<FragmentPath> ancestors(const ProcessModel& model, const FragmentPath& path);

/// Resolves a path; throws Error{NotFound} when it does not address a node.
const Node& node_at(const ProcessModel& model, const FragmentPath& path);
Node& node_at(ProcessModel& model, const FragmentPath& path);

/// The sequence that directly holds the node at `path` (path must be
/// non-empty). The node's index in it is path.indices.back().
const Sequence& parent_sequence(const ProcessModel& model, const FragmentPath& path);
Sequence& parent_sequence(ProcessModel& model, const FragmentPath& path);

// Builders, mostly for tests and fixtures.
Node task(std::string label);
Node subprocess(std::string label, std::vector<Node> children);
Branch branch(std::optional<std::string> condition, std::vector<Node> children);
Node xor_block(std::vector<Branch> branches);
Node and_block(std::vector<Branch> branches);
Node loop_pre(std::string condition, std::vector<Node> children);
Node loop_post(std::string condition, std::vector<Node> children);
ProcessModel process(std::string name, std::vector<Node> children);

}  // namespace cpmr
