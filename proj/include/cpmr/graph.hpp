#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cpmr/model.hpp"

namespace cpmr {

enum class NodeKind { Start, End, Task, Subprocess, XorSplit, XorJoin, AndSplit, AndJoin };

std::string_view to_string(NodeKind kind) noexcept;
NodeKind node_kind_from_string(std::string_view text);

struct GraphNode {
  std::string id;
  NodeKind kind;
  std::optional<std::string> label;
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::string source;
  std::string target;
  std::optional<std::string> condition;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Flow graph of one process level. Subprocesses appear as single nodes; their
/// bodies are exported separately (see subprocess_bodies).
struct GraphDoc {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode* find(std::string_view id) const;
  friend bool operator==(const GraphDoc&, const GraphDoc&) = default;
};

/// Node ids are "start", "end", and "<kind>#<k>" where k is the 1-based
/// preorder position of the originating fragment within this process level.
/// Loops use xor_join#k / xor_split#k. Nodes and edges come out in preorder.
GraphDoc export_graph(const ProcessModel& model);
GraphDoc export_graph(const Sequence& body);

nlohmann::json to_json(const GraphDoc& doc);
GraphDoc graph_from_json(const nlohmann::json& j);

}  // namespace cpmr
