#include "cpmr/graph.hpp"

#include <stdexcept>

#include "cpmr/error.hpp"

namespace cpmr {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Start: return "start";
    case NodeKind::End: return "end";
    case NodeKind::Task: return "task";
    case NodeKind::Subprocess: return "subprocess";
    case NodeKind::XorSplit: return "xor_split";
    case NodeKind::XorJoin: return "xor_join";
    case NodeKind::AndSplit: return "and_split";
    case NodeKind::AndJoin: return "and_join";
  }
  return "?";
}

NodeKind node_kind_from_string(std::string_view text) {
  for (NodeKind k : {NodeKind::Start, NodeKind::End, NodeKind::Task, NodeKind::Subprocess,
                     NodeKind::XorSplit, NodeKind::XorJoin, NodeKind::AndSplit, NodeKind::AndJoin}) {
    if (to_string(k) == text) return k;
  }
  throw Error(Errc::BadRequest, "unknown node kind '" + std::string(text) + "'");
}

const GraphNode* GraphDoc::find(std::string_view id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

namespace {

// Where control leaves the fragment emitted last: the node, plus the
// condition carried by the outgoing edge (exclusive split or loop exit).
struct Exit {
  std::string node;
  std::optional<std::string> condition;
};

class Exporter {
 public:
  GraphDoc run(const Sequence& body) {
    doc_.nodes.push_back({"start", NodeKind::Start, std::nullopt});
    Exit last = sequence(body, Exit{"start", std::nullopt});
    doc_.nodes.push_back({"end", NodeKind::End, std::nullopt});
    connect(last, "end");
    return std::move(doc_);
  }

 private:
  std::string add(NodeKind kind, std::optional<std::string> label, int k) {
    std::string id = std::string(to_string(kind)) + "#" + std::to_string(k);
    doc_.nodes.push_back({id, kind, std::move(label)});
    return id;
  }

  void connect(const Exit& from, const std::string& to) {
    doc_.edges.push_back({from.node, to, from.condition});
  }

  Exit sequence(const Sequence& seq, Exit entry) {
    for (const Node& n : seq.children) entry = fragment(n, std::move(entry));
    return entry;
  }

  Exit fragment(const Node& n, Exit entry) {
    int k = ++preorder_;
    if (const auto* t = std::get_if<Task>(&n.value)) {
      std::string id = add(NodeKind::Task, t->label, k);
      connect(entry, id);
      return {id, std::nullopt};
    }
    if (const auto* s = std::get_if<Subprocess>(&n.value)) {
      // Collapsed: the body is not part of this level's graph.
      std::string id = add(NodeKind::Subprocess, s->label, k);
      connect(entry, id);
      return {id, std::nullopt};
    }
    if (const auto* g = std::get_if<Gateway>(&n.value)) {
      bool x = g->kind == GatewayKind::Xor;
      std::string split = add(x ? NodeKind::XorSplit : NodeKind::AndSplit, std::nullopt, k);
      connect(entry, split);
      std::vector<Exit> ends;
      for (const Branch& b : g->branches) ends.push_back(sequence(b.body, Exit{split, b.condition}));
      std::string join = add(x ? NodeKind::XorJoin : NodeKind::AndJoin, std::nullopt, k);
      for (const Exit& e : ends) connect(e, join);
      return {join, std::nullopt};
    }
    const auto& l = std::get<Loop>(n.value);
    std::string join = add(NodeKind::XorJoin, std::nullopt, k);
    connect(entry, join);
    std::string negated = "not(" + l.condition + ")";
    if (l.kind == LoopKind::Pre) {
      std::string split = add(NodeKind::XorSplit, std::nullopt, k);
      connect(Exit{join, std::nullopt}, split);
      Exit body_end = sequence(l.body, Exit{split, l.condition});
      connect(body_end, join);
      return {split, negated};
    }
    Exit body_end = sequence(l.body, Exit{join, std::nullopt});
    std::string split = add(NodeKind::XorSplit, std::nullopt, k);
    connect(body_end, split);
    connect(Exit{split, l.condition}, join);
    return {split, negated};
  }

  GraphDoc doc_;
  int preorder_ = 0;
};

nlohmann::json opt(const std::optional<std::string>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

GraphDoc export_graph(const Sequence& body) { return Exporter{}.run(body); }

GraphDoc export_graph(const ProcessModel& model) { return export_graph(model.body); }

nlohmann::json to_json(const GraphDoc& doc) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : doc.nodes)
    nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"label", opt(n.label)}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : doc.edges)
    edges.push_back({{"source", e.source}, {"target", e.target}, {"condition", opt(e.condition)}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

GraphDoc graph_from_json(const nlohmann::json& j) {
  GraphDoc doc;
  try {
    for (const auto& n : j.at("nodes"))
      doc.nodes.push_back({n.at("id").get<std::string>(),
                           node_kind_from_string(n.at("kind").get<std::string>()), opt_string(n, "label")});
    for (const auto& e : j.at("edges"))
      doc.edges.push_back({e.at("source").get<std::string>(), e.at("target").get<std::string>(),
                           opt_string(e, "condition")});
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::BadRequest, std::string("malformed graph document: ") + ex.what());
  }
  return doc;
}

}  // namespace cpmr
