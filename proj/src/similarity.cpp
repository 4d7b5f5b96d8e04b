#include "cpmr/similarity.hpp"

#include <algorithm>
#include <cstdint>
#include <utility>

#include "cpmr/dsl.hpp"
#include "cpmr/graph.hpp"

namespace cpmr {

namespace {

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + len > s.size()) len = 1;
    char32_t cp = len == 1 ? c : c & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

using Bigram = std::pair<char32_t, char32_t>;

std::vector<Bigram> bigrams(std::string_view s) {
  auto cps = code_points(s);
  std::vector<Bigram> out;
  for (std::size_t i = 1; i < cps.size(); ++i) out.emplace_back(cps[i - 1], cps[i]);
  std::sort(out.begin(), out.end());
  return out;
}

std::string node_string(const GraphNode& n) {
  return std::string(to_string(n.kind)) + ":" + (n.label ? *n.label : n.id);
}

void collect(const Sequence& body, const std::string& prefix, std::vector<std::string>& out) {
  GraphDoc doc = export_graph(body);
  for (const auto& n : doc.nodes) out.push_back(prefix + node_string(n));
  for (const auto& e : doc.edges) {
    std::string s = prefix + node_string(*doc.find(e.source)) + " -> " + node_string(*doc.find(e.target));
    if (e.condition) s += " [" + *e.condition + "]";
    out.push_back(std::move(s));
  }
  // Subprocess bodies of this level, in preorder.
  auto visit = [&](const Sequence& seq, auto& self) -> void {
    for (const Node& n : seq.children) {
      if (const auto* s = std::get_if<Subprocess>(&n.value)) {
        collect(s->body, prefix + s->label + "/", out);
      } else if (const auto* l = std::get_if<Loop>(&n.value)) {
        self(l->body, self);
      } else if (const auto* g = std::get_if<Gateway>(&n.value)) {
        for (const auto& b : g->branches) self(b.body, self);
      }
    }
  };
  visit(body, visit);
}

double directional(const std::vector<std::string>& from, const std::vector<std::string>& to) {
  double weighted = 0.0, total = 0.0;
  for (const auto& e : from) {
    double best = -1.0;
    const std::string* match = nullptr;
    for (const auto& f : to) {
      double d = dice(e, f);
      if (d > best) {
        best = d;
        match = &f;
      }
    }
    if (!match) continue;
    double la = static_cast<double>(code_points(e).size());
    double lb = static_cast<double>(code_points(*match).size());
    double w = la + lb > 0 ? 2.0 * la * lb / (la + lb) : 0.0;
    weighted += w * best;
    total += w;
  }
  return total > 0 ? weighted / total : (from.empty() && to.empty() ? 1.0 : 0.0);
}

}  // namespace

double dice(std::string_view a, std::string_view b) {
  auto ba = bigrams(a);
  auto bb = bigrams(b);
  if (ba.empty() && bb.empty()) return a == b ? 1.0 : 0.0;
  if (ba.empty() || bb.empty()) return 0.0;
  std::size_t shared = 0;
  for (std::size_t i = 0, j = 0; i < ba.size() && j < bb.size();) {
    if (ba[i] < bb[j]) ++i;
    else if (bb[j] < ba[i]) ++j;
    else { ++shared; ++i; ++j; }
  }
  return 2.0 * static_cast<double>(shared) / static_cast<double>(ba.size() + bb.size());
}

std::vector<std::string> element_strings(const ProcessModel& model) {
  std::vector<std::string> out;
  collect(model.body, "", out);
  return out;
}

double similarity(const ProcessModel& a, const ProcessModel& b) {
  if (serialize_dsl(a) == serialize_dsl(b)) return 1.0;
  auto ea = element_strings(a);
  auto eb = element_strings(b);
  double score = (directional(ea, eb) + directional(eb, ea)) / 2.0;
  return std::clamp(score, 0.0, 1.0);
}

bool models_equal(const ProcessModel& a, const ProcessModel& b) { return similarity(a, b) == 1.0; }

}  // namespace cpmr
