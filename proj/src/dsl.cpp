#include "cpmr/dsl.hpp"

#include <optional>

namespace cpmr {

SyntaxError::SyntaxError(int line, const std::string& message)
    : Error(Errc::SyntaxError, "line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string describe(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += "; ";
    out += std::string(to_string(d.code)) + " at " + d.path.str() + ": " + d.message;
  }
  return out;
}

}  // namespace

InvariantError::InvariantError(std::vector<Diagnostic> diagnostics)
    : Error(Errc::InvariantError, describe(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string InvariantError::code_name() const {
  if (diagnostics_.empty()) return Error::code_name();
  return std::string(to_string(diagnostics_.front().code));
}

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

struct Line {
  int number;
  int depth;
  std::string keyword;
  std::optional<std::string> argument;
};

std::optional<std::string> parse_argument(std::string_view rest, int number) {
  if (rest.empty()) return std::nullopt;
  if (rest.front() != ' ') throw SyntaxError(number, "expected a space after the keyword");
  rest.remove_prefix(1);
  if (rest.empty() || rest.front() != '"') throw SyntaxError(number, "expected a double-quoted string");
  std::string value;
  std::size_t i = 1;
  for (;; ++i) {
    if (i >= rest.size()) throw SyntaxError(number, "unterminated string");
    char c = rest[i];
    if (c == '"') break;
    if (c == '\\') {
      if (++i >= rest.size()) throw SyntaxError(number, "unterminated escape");
      if (rest[i] != '"' && rest[i] != '\\')
        throw SyntaxError(number, std::string("unknown escape \\") + rest[i]);
      c = rest[i];
    }
    value += c;
  }
  if (i + 1 != rest.size()) throw SyntaxError(number, "unexpected text after closing quote");
  return value;
}

std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.find_first_not_of(' ') == std::string_view::npos) {
      if (raw.find('\t') != std::string_view::npos) throw SyntaxError(number, "tab character");
      continue;
    }
    std::size_t indent = raw.find_first_not_of(' ');
    if (raw[indent] == '\t') throw SyntaxError(number, "tabs are not allowed for indentation");
    if (indent % 2 != 0) throw SyntaxError(number, "indentation must be a multiple of two spaces");
    std::string_view body = raw.substr(indent);
    std::size_t kw_end = body.find_first_of(" ");
    std::string keyword(body.substr(0, kw_end));
    std::string_view rest = kw_end == std::string_view::npos ? std::string_view{} : body.substr(kw_end);
    lines.push_back(Line{number, static_cast<int>(indent / 2), keyword, parse_argument(rest, number)});
  }
  return lines;
}

class Parser {
 public:
  explicit Parser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  ProcessModel run() {
    if (lines_.empty()) throw SyntaxError(1, "empty input; expected 'process \"<name>\"'");
    const Line& head = lines_[0];
    if (head.keyword != "process" || head.depth != 0)
      throw SyntaxError(head.number, "expected 'process \"<name>\"' header");
    if (!head.argument) throw SyntaxError(head.number, "process header needs a quoted name");
    pos_ = 1;
    ProcessModel model;
    model.name = *head.argument;
    model.body = sequence(1);
    if (pos_ < lines_.size()) {
      const Line& l = lines_[pos_];
      throw SyntaxError(l.number, l.depth == 0 ? "only one process per file" : "unexpected indentation");
    }
    return model;
  }

 private:
  const Line* peek() const { return pos_ < lines_.size() ? &lines_[pos_] : nullptr; }

  Sequence sequence(int depth) {
    Sequence seq;
    while (const Line* l = peek()) {
      if (l->depth < depth) break;
      if (l->depth > depth)
        throw SyntaxError(l->number, "indentation jumps more than one level");
      if (l->keyword == "branch") {
        // A branch at this depth belongs to an enclosing gateway.
        break;
      }
      seq.children.push_back(node(depth));
    }
    return seq;
  }

  std::string require_argument(const Line& l, std::string_view what) {
    if (!l.argument) throw SyntaxError(l.number, "'" + l.keyword + "' needs a quoted " + std::string(what));
    return *l.argument;
  }

  void forbid_argument(const Line& l) {
    if (l.argument) throw SyntaxError(l.number, "'" + l.keyword + "' takes no argument");
  }

  Node node(int depth) {
    const Line& l = lines_[pos_++];
    if (l.keyword == "task") {
      std::string label = require_argument(l, "label");
      if (const Line* next = peek(); next && next->depth > depth)
        throw SyntaxError(next->number, "a task cannot have children");
      return Task{std::move(label)};
    }
    if (l.keyword == "subprocess") {
      std::string label = require_argument(l, "label");
      return Subprocess{std::move(label), sequence(depth + 1)};
    }
    if (l.keyword == "loop-pre" || l.keyword == "loop-post") {
      std::string cond = require_argument(l, "condition");
      LoopKind kind = l.keyword == "loop-pre" ? LoopKind::Pre : LoopKind::Post;
      return Loop{kind, std::move(cond), sequence(depth + 1)};
    }
    if (l.keyword == "xor" || l.keyword == "and") {
      forbid_argument(l);
      Gateway g;
      g.kind = l.keyword == "xor" ? GatewayKind::Xor : GatewayKind::And;
      while (const Line* next = peek()) {
        if (next->depth <= depth) break;
        if (next->depth > depth + 1) throw SyntaxError(next->number, "indentation jumps more than one level");
        if (next->keyword != "branch") throw SyntaxError(next->number, "expected 'branch' inside a gateway");
        const Line& b = lines_[pos_++];
        Branch br;
        br.condition = b.argument;
        br.body = sequence(depth + 2);
        g.branches.push_back(std::move(br));
      }
      return g;
    }
    if (l.keyword == "branch") throw SyntaxError(l.number, "'branch' outside a gateway");
    if (l.keyword == "process") throw SyntaxError(l.number, "nested 'process' header");
    throw SyntaxError(l.number, "unknown keyword '" + l.keyword + "'");
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

void indent(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 2, ' '); }

void emit(std::string& out, const Sequence& seq, int depth) {
  for (const Node& n : seq.children) {
    indent(out, depth);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Task>) {
            out += "task " + quote(v.label) + "\n";
          } else if constexpr (std::is_same_v<T, Subprocess>) {
            out += "subprocess " + quote(v.label) + "\n";
            emit(out, v.body, depth + 1);
          } else if constexpr (std::is_same_v<T, Loop>) {
            out += (v.kind == LoopKind::Pre ? "loop-pre " : "loop-post ") + quote(v.condition) + "\n";
            emit(out, v.body, depth + 1);
          } else {
            out += v.kind == GatewayKind::Xor ? "xor\n" : "and\n";
            for (const Branch& b : v.branches) {
              indent(out, depth + 1);
              out += "branch";
              if (b.condition) out += " " + quote(*b.condition);
              out += "\n";
              emit(out, b.body, depth + 2);
            }
          }
        },
        n.value);
  }
}

}  // namespace

ProcessModel parse_dsl(std::string_view text) {
  ProcessModel model = Parser(tokenize(text)).run();
  if (auto diags = validate(model); !diags.empty()) throw InvariantError(std::move(diags));
  return model;
}

std::string serialize_dsl(const ProcessModel& model) {
  std::string out = "process " + quote(model.name) + "\n";
  emit(out, model.body, 1);
  return out;
}

std::string_view dsl_rules() {
  return R"(The first line is: process "NAME".
Every following line holds exactly one construct. Children are indented by exactly two spaces more than their parent; indentation never grows by more than one level per line.
Constructs:
- task "LABEL" : an activity. Tasks have no children.
- subprocess "LABEL" : a collapsed subprocess; its children are the tasks and blocks of its body (at least one).
- xor : an exclusive gateway block (split and matching join). Its children are two or more lines of the form branch "CONDITION", each followed by the indented body of that branch. An exclusive branch body may be empty.
- and : a parallel gateway block. Its children are two or more lines of the form branch (no condition), each followed by a non-empty indented body.
- loop-pre "CONDITION" : the indented body repeats while CONDITION holds; the condition is checked before each iteration, so the body may run zero times.
- loop-post "CONDITION" : the indented body runs at least once and repeats while CONDITION holds; the condition is checked after each iteration.
Labels and conditions are written in double quotes; a double quote or backslash inside them is escaped with a backslash.
All task and subprocess labels are unique in the whole model, including subprocess bodies.
Start and end events are implicit: the process starts before the first line of the body and ends after the last.)";
}

}  // namespace cpmr
