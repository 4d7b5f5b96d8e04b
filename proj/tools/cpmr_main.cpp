// cpmr: command-line front end for the redesign workbench.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cpmr/dsl.hpp"
#include "cpmr/evaluation.hpp"
#include "cpmr/graph.hpp"
#include "cpmr/patterns.hpp"
#include "cpmr/pipeline.hpp"
#include "cpmr/service.hpp"
#include "cpmr/similarity.hpp"

using namespace cpmr;
using nlohmann::json;

namespace {

bool g_json = false;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProcessModel load_model(const std::string& path) { return parse_dsl(read_file(path)); }

std::shared_ptr<const Backend> backend_for(const std::string& name) {
  if (name == "mock") return std::make_shared<MockBackend>();
  if (name == "llm" || name.rfind("llm:", 0) == 0) {
    BackendConfig cfg = BackendConfig::llm_from_env();
    if (name.size() > 4) cfg.model = name.substr(4);
    return make_backend(cfg);
  }
  throw Error(Errc::BadRequest, "unknown backend '" + name + "' (use mock, llm or llm:<model>)");
}

std::string score_text(double s) {
  if (s == 1.0) return "1.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", s);
  return buf;
}

void print_error(const Error& e) {
  if (g_json) {
    json j = {{"error", e.code_name()}, {"detail", e.what()}};
    if (const auto* inv = dynamic_cast<const InvariantError*>(&e)) {
      j["diagnostics"] = json::array();
      for (const auto& d : inv->diagnostics())
        j["diagnostics"].push_back({{"path", d.path.str()}, {"code", to_string(d.code)}, {"message", d.message}});
    }
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::cerr << "error: " << e.code_name() << ": " << e.what() << "\n";
  if (const auto* inv = dynamic_cast<const InvariantError*>(&e))
    for (const auto& d : inv->diagnostics())
      std::cerr << "  " << d.path.str() << " " << to_string(d.code) << ": " << d.message << "\n";
}

int cmd_validate(const std::string& file) {
  load_model(file);
  if (g_json)
    std::cout << json{{"valid", true}}.dump(2) << "\n";
  else
    std::cout << file << ": ok\n";
  return 0;
}

int cmd_fmt(const std::string& file, bool in_place) {
  std::string text = serialize_dsl(load_model(file));
  if (in_place) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(Errc::MissingFile, "cannot write " + file);
    out << text;
    return 0;
  }
  if (g_json)
    std::cout << json{{"model", text}}.dump(2) << "\n";
  else
    std::cout << text;
  return 0;
}

int cmd_apply(const std::string& file, const std::string& meaning_arg) {
  std::string src = meaning_arg.rfind('@', 0) == 0 ? read_file(meaning_arg.substr(1)) : meaning_arg;
  auto j = json::parse(src, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InvalidMeaning, "meaning is not valid JSON");
  StructuredMeaning m = meaning_from_json(j);
  ProcessModel out = apply_pattern(load_model(file), m);
  if (g_json)
    std::cout << json{{"model", serialize_dsl(out)}, {"graph", to_json(export_graph(out))}}.dump(2) << "\n";
  else
    std::cout << serialize_dsl(out);
  return 0;
}

struct RedesignArgs {
  std::string file, request, mode = "cpmr", backend = "mock", expected, eao, transcript;
};

int cmd_redesign(const RedesignArgs& a) {
  ProcessModel model = load_model(a.file);
  Wording w(a.request);
  std::ofstream tlog;
  std::unique_ptr<TranscriptSink> sink;
  if (!a.transcript.empty()) {
    tlog.open(a.transcript, std::ios::app);
    if (!tlog) throw Error(Errc::MissingFile, "cannot write " + a.transcript);
    sink = std::make_unique<TranscriptSink>(tlog);
  }
  Pipeline pipeline(backend_for(a.backend), sink.get());
  Expectation exp;
  if (!a.expected.empty()) {
    exp.pattern = parse_pattern_id(a.expected);
    if (!exp.pattern) throw Error(Errc::BadRequest, "unknown pattern id '" + a.expected + "'");
  }
  if (!a.eao.empty()) exp.eao = load_model(a.eao);

  PipelineTrace t = a.mode == "baseline" ? pipeline.run_baseline(model, w, exp.eao) : pipeline.run_cpmr(model, w, exp);
  auto follow_up = follow_up_for(t);
  if (g_json) {
    json j = to_json(t);
    j["model"] = t.aao ? json(serialize_dsl(*t.aao)) : json(nullptr);
    j["follow_up"] = follow_up ? json(*follow_up) : json(nullptr);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "trace: " << step_string(t) << "\n";
    if (t.identified) std::cout << "pattern: " << to_string(*t.identified) << "\n";
    if (t.meaning) std::cout << "meaning: " << meaning_text(*t.meaning) << "\n";
    if (t.apply_error) std::cout << "apply error: " << *t.apply_error << "\n";
    if (follow_up) std::cout << "follow-up: " << *follow_up << "\n";
    if (t.aao) std::cout << serialize_dsl(*t.aao);
  }
  return t.aao ? 0 : 1;
}

int cmd_compare(const std::string& a, const std::string& b) {
  ProcessModel ma = load_model(a), mb = load_model(b);
  double s = similarity(ma, mb);
  bool eq = models_equal(ma, mb);
  if (g_json)
    std::cout << json{{"similarity", s}, {"equal", eq}}.dump(2) << "\n";
  else
    std::cout << score_text(s) << (eq ? " equal" : " not-equal") << "\n";
  return 0;
}

struct EvalArgs {
  std::string dir, mode = "both", out, format = "csv", transcript;
  std::vector<std::string> backends;
  unsigned threads = 0;
};

int cmd_eval(EvalArgs a) {
  auto records = load_survey(a.dir);
  if (a.backends.empty()) a.backends.push_back("mock");
  std::vector<std::shared_ptr<const Backend>> backends;
  for (const auto& name : a.backends) backends.push_back(backend_for(name));
  std::ofstream tlog;
  std::unique_ptr<TranscriptSink> sink;
  if (!a.transcript.empty()) {
    tlog.open(a.transcript, std::ios::app);
    if (!tlog) throw Error(Errc::MissingFile, "cannot write " + a.transcript);
    sink = std::make_unique<TranscriptSink>(tlog);
  }
  RunOptions opts;
  opts.baseline = a.mode != "cpmr";
  opts.cpmr = a.mode != "baseline";
  opts.threads = a.threads;
  opts.sink = sink.get();
  run_evaluation(records, backends, opts);
  AggregateReport rep = aggregate(records);
  std::string out = a.out.empty() ? (std::filesystem::path(a.dir) / "reports").string() : a.out;
  ReportFormat fmt = a.format == "text" ? ReportFormat::Text : ReportFormat::Csv;
  write_reports(rep, out, fmt);
  if (g_json) {
    json files = json::array();
    if (fmt == ReportFormat::Text)
      files.push_back("report.txt");
    else
      for (const auto& [name, _] : render_csv(rep)) files.push_back(name);
    std::cout << json{{"records", records.size()}, {"out", out}, {"files", files}}.dump(2) << "\n";
  } else {
    std::cout << render_text(rep);
    std::cout << "wrote reports for " << records.size() << " record(s) to " << out << "\n";
  }
  return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& persist) {
  ServiceOptions opts;
  if (!persist.empty()) opts.persist_dir = persist;
  RedesignService service(opts);
  std::cerr << "listening on " << host << ":" << port << "\n";
  serve(service, host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational process-model redesign workbench"};
  app.name("cpmr");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", g_json, "Machine-readable JSON output");

  std::string file, file_b, meaning;
  bool in_place = false;
  auto* validate = app.add_subcommand("validate", "Parse and validate a model file");
  validate->add_option("file", file, "Model file")->required();

  auto* fmt = app.add_subcommand("fmt", "Print the canonical form of a model");
  fmt->add_option("file", file, "Model file")->required();
  fmt->add_flag("-w,--write", in_place, "Rewrite the file in place");

  auto* apply = app.add_subcommand("apply-pattern", "Apply a structured change with the deterministic engine");
  apply->add_option("file", file, "Model file")->required();
  apply->add_option("--meaning", meaning, "Structured meaning as JSON, or @file")->required();

  RedesignArgs ra;
  auto* redesign = app.add_subcommand("redesign", "Run a redesign request through a backend");
  redesign->add_option("file", ra.file, "Model file")->required();
  redesign->add_option("--request", ra.request, "Redesign request in natural language")->required();
  redesign->add_option("--mode", ra.mode, "cpmr or baseline")->check(CLI::IsMember({"cpmr", "baseline"}));
  redesign->add_option("--backend", ra.backend, "mock, llm or llm:<model>");
  redesign->add_option("--expected-pattern", ra.expected, "Expected pattern id, for step 1b");
  redesign->add_option("--eao", ra.eao, "Expected output model, for step 3");
  redesign->add_option("--transcript", ra.transcript, "Append backend calls as JSON lines");

  auto* compare = app.add_subcommand("compare", "Similarity and equality of two models");
  compare->add_option("a", file, "First model")->required();
  compare->add_option("b", file_b, "Second model")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a survey directory and write reports");
  eval->add_option("dir", ea.dir, "Directory with records.csv")->required();
  eval->add_option("--backend", ea.backends, "Backend (repeatable): mock, llm, llm:<model>");
  eval->add_option("--mode", ea.mode, "cpmr, baseline or both")->check(CLI::IsMember({"cpmr", "baseline", "both"}));
  eval->add_option("--out", ea.out, "Report directory (default <dir>/reports)");
  eval->add_option("--format", ea.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  eval->add_option("--threads", ea.threads, "Worker threads (default: hardware)");
  eval->add_option("--transcript", ea.transcript, "Append backend calls as JSON lines");

  int port = 8080;
  std::string host = "127.0.0.1", persist;
  auto* srv = app.add_subcommand("serve", "Run the HTTP session service");
  srv->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  srv->add_option("--host", host, "Bind address");
  srv->add_option("--persist", persist, "Directory for session snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(file);
    if (*fmt) return cmd_fmt(file, in_place);
    if (*apply) return cmd_apply(file, meaning);
    if (*redesign) return cmd_redesign(ra);
    if (*compare) return cmd_compare(file, file_b);
    if (*eval) return cmd_eval(ea);
    if (*srv) return cmd_serve(host, port, persist);
  } catch (const Error& e) {
    print_error(e);
    return e.code() == Errc::BadRequest ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
