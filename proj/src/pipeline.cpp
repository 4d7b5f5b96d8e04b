#include "cpmr/pipeline.hpp"

#include <cstdlib>

#include "cpmr/dsl.hpp"
#include "cpmr/similarity.hpp"

namespace cpmr {

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

}  // namespace

Wording::Wording(std::string_view text) : text_(trim(text)) {
  if (text_.empty()) throw Error(Errc::EmptyInput, "wording is empty");
}

std::string meaning_text(const Meaning& m) {
  if (const auto* s = std::get_if<StructuredMeaning>(&m)) return render_meaning_nl(*s);
  return std::get<NlMeaning>(m).text;
}

nlohmann::json to_json(const Meaning& m) {
  if (const auto* s = std::get_if<StructuredMeaning>(&m))
    return {{"type", "structured"}, {"value", to_json(*s)}, {"text", render_meaning_nl(*s)}};
  return {{"type", "natural_language"}, {"text", std::get<NlMeaning>(m).text}};
}

// ---- prompts ---------------------------------------------------------------

namespace prompt_templates {

const std::string_view kIdentifySystem =
    "You are an expert in BPMN (Business Process Model and Notation) modeling. Your task is to "
    "evaluate and interpret user-provided modifications to a BPMN process model.\n\n"
    "Your task is to classify the user input into one of the predefined change patterns for process "
    "model redesign, if a matching pattern exists.\n"
    "Use the following classification of change patterns to interpret user modifications: \n"
    "<List of Existing Change Patterns>.\n\n"
    "If a match is found, return only the pattern ID. Only one pattern can be matched.\n"
    "If no match is found, return NA. No other information is allowed to be returned!!!";

const std::string_view kIdentifyUser = "<Wording provided by a user>.";

const std::string_view kDeriveSystem =
    "You are an expert in BPMN (Business Process Model and Notation) modeling. Your task is to "
    "evaluate and interpret modifications to a BPMN process model. The user will provide an input "
    "modification based on a predefined change pattern.\n"
    "Your responsibilities are:\n\n"
    "(a) Validate whether the user-provided input modification contains enough unambiguous "
    "information to apply the predefined change pattern.\n\n"
    "(b) Interpret the meaning of the modification based on BPMN semantics and the predefined change "
    "pattern.\n\n"
    "(c) Ensure the modification complies with BPMN modeling rules and fits within the structure of "
    "the existing process.\n\n"
    "Return only the clear meaning of the modification in natural language, without any ambiguity or "
    "additional information. If the input does not contain sufficient details to apply the change "
    "pattern, return \"NA\".";

const std::string_view kDeriveUser =
    "Identified changed pattern is <Pattern ID> -  <Pattern Description>. Changes applied to the "
    "model: <Wording provided by a user>.";

const std::string_view kApplySystem =
    "You are an expert in BPMN modelling, specifically in <Output Format> format.\n"
    "Your task is to validate and transform BPMN models based on user-provided modifications, "
    "ensuring compliance with BPMN rules and <Output Format> syntax.\n"
    "You are allowed to adjust only those parts of the process model mentioned in the user-provided "
    "modification. Other parts of the model have to stay unchanged.\n\n"
    "The <Output Format> syntax for BPMN models is described as follows:\n"
    "<Rules for the Process Model in Output Format>.\n\n"
    "Return only <Output Format> as text without any additional information! Give me just the raw "
    "<Output Format> code without markdown formatting.";

const std::string_view kApplyUser =
    "Consider following process model: <Input Process Model>.\n"
    "Apply these changes to the model: <Meaning>.";

}  // namespace prompt_templates

std::string catalog_listing(const PatternCatalog& cat) {
  std::string out;
  for (const auto& e : cat) {
    out += "\n";
    out += to_string(e.id);
    out += ": ";
    out += e.name;
    out += " - ";
    out += e.prompt_description;
  }
  return out;
}

Prompt identify_prompt(const Wording& w, const PatternCatalog& cat) {
  if (cat.empty()) throw Error(Errc::BadRequest, "pattern catalog is empty");
  using namespace prompt_templates;
  return {replace_all(std::string(kIdentifySystem), "<List of Existing Change Patterns>", catalog_listing(cat)),
          replace_all(std::string(kIdentifyUser), "<Wording provided by a user>", w.text())};
}

Prompt derive_prompt(PatternId id, const Wording& w) {
  using namespace prompt_templates;
  const CatalogEntry& e = catalog_entry(id);
  std::string user = replace_all(std::string(kDeriveUser), "<Pattern ID>", to_string(id));
  user = replace_all(std::move(user), "<Pattern Description>", e.name + ": " + e.prompt_description);
  user = replace_all(std::move(user), "<Wording provided by a user>", w.text());
  return {std::string(kDeriveSystem), std::move(user)};
}

Prompt apply_prompt(const ProcessModel& model, std::string_view change) {
  using namespace prompt_templates;
  std::string sys = replace_all(std::string(kApplySystem), "<Rules for the Process Model in Output Format>",
                                std::string(dsl_rules()));
  sys = replace_all(std::move(sys), "<Output Format>", kDslName);
  std::string user = replace_all(std::string(kApplyUser), "<Input Process Model>", "\n" + serialize_dsl(model));
  user = replace_all(std::move(user), "<Meaning>", change);
  return {std::move(sys), std::move(user)};
}

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Identify: return "identify";
    case Stage::Derive: return "derive";
    case Stage::Apply: return "apply";
  }
  return "?";
}

std::string_view to_string(Approach a) noexcept {
  return a == Approach::Cpmr ? "cpmr" : "baseline";
}

// ---- config ----------------------------------------------------------------

void BackendConfig::check() const {
  if (kind != BackendKind::Llm) return;
  if (!endpoint || endpoint->empty()) throw Error(Errc::BadRequest, "llm backend requires an endpoint");
  if (!model || model->empty()) throw Error(Errc::BadRequest, "llm backend requires a model id");
}

BackendConfig BackendConfig::llm_from_env() {
  BackendConfig c;
  c.kind = BackendKind::Llm;
  if (const char* e = std::getenv("CPMR_LLM_ENDPOINT"); e && *e) c.endpoint = e;
  if (const char* m = std::getenv("CPMR_LLM_MODEL"); m && *m) c.model = m;
  if (const char* t = std::getenv("CPMR_LLM_TIMEOUT_SECS"); t && *t) {
    char* end = nullptr;
    long v = std::strtol(t, &end, 10);
    if (end && *end == '\0' && v > 0) c.timeout = std::chrono::seconds(v);
  }
  return c;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
  config.check();
  if (config.kind == BackendKind::Mock) return std::make_shared<MockBackend>();
  return std::make_shared<LlmBackend>(config);
}

void TranscriptSink::write(const std::string& line) {
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
}

// ---- traces ----------------------------------------------------------------

void check_trace_shape(const PipelineTrace& t) {
  auto bad = [](const char* why) { throw Error(Errc::InvalidTrace, why); };
  if (t.approach == Approach::Baseline) {
    if (t.step_1a || t.step_1b || t.step_2 || t.identified || t.meaning)
      bad("baseline traces record only step 3");
    return;
  }
  if (!t.step_1a && (t.step_1b || t.step_2 || t.identified)) bad("steps after 1a present although 1a is false");
  if (t.step_1a && !t.identified) bad("step 1a true without an identified pattern");
  if (t.step_3 && t.step_2 != true) bad("step 3 present although step 2 is not true");
  if (t.aao && t.step_2 != true) bad("AAO present although step 2 is not true");
  if (t.meaning && t.step_2 != true) bad("meaning present although step 2 is not true");
}

std::string step_string(const PipelineTrace& t) {
  auto b = [](std::optional<bool> v) -> std::string {
    if (!v) return "\xC2\xB7";
    return *v ? "T" : "F";
  };
  if (t.approach == Approach::Baseline)
    return "(" + b(std::nullopt) + "," + b(std::nullopt) + "," + b(std::nullopt) + "," + b(t.step_3) + ")";
  return "(" + b(t.step_1a) + "," + b(t.step_1b) + "," + b(t.step_2) + "," + b(t.step_3) + ")";
}

nlohmann::json to_json(const PipelineTrace& t) {
  auto opt = [](std::optional<bool> v) -> nlohmann::json {
    if (!v) return nullptr;
    return *v;
  };
  nlohmann::json j;
  j["approach"] = std::string(to_string(t.approach));
  j["wording"] = t.wording;
  j["step_1a"] = t.approach == Approach::Cpmr ? nlohmann::json(t.step_1a) : nlohmann::json(nullptr);
  j["identified"] = t.identified ? nlohmann::json(std::string(to_string(*t.identified))) : nlohmann::json(nullptr);
  j["step_1b"] = opt(t.step_1b);
  j["step_2"] = opt(t.step_2);
  j["meaning"] = t.meaning ? to_json(*t.meaning) : nlohmann::json(nullptr);
  j["step_3"] = opt(t.step_3);
  j["aao"] = t.aao ? nlohmann::json(serialize_dsl(*t.aao)) : nlohmann::json(nullptr);
  j["apply_error"] = t.apply_error ? nlohmann::json(*t.apply_error) : nlohmann::json(nullptr);
  j["steps"] = step_string(t);
  return j;
}

// ---- pipeline --------------------------------------------------------------

Pipeline::Pipeline(std::shared_ptr<const Backend> backend, TranscriptSink* sink)
    : backend_(std::move(backend)), sink_(sink) {
  if (!backend_) throw Error(Errc::BadRequest, "no backend");
}

std::string Pipeline::call(const BackendRequest& req, std::vector<std::string>* transcripts) const {
  auto t0 = std::chrono::steady_clock::now();
  nlohmann::json line;
  line["stage"] = std::string(to_string(req.stage));
  line["request"] = {{"system", req.prompt.system}, {"user", req.prompt.user}};
  auto log = [&] {
    line["elapsed_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    std::string text = line.dump();
    if (transcripts) transcripts->push_back(text);
    if (sink_) sink_->write(text);
  };
  try {
    std::string response = backend_->complete(req);
    line["response"] = response;
    log();
    return response;
  } catch (const Error& e) {
    line["response"] = nullptr;
    line["error"] = e.code_name() + ": " + e.what();
    log();
    throw;
  }
}

std::optional<PatternId> Pipeline::identify(const Wording& w, const PatternCatalog& cat,
                                            std::vector<std::string>* transcripts) const {
  BackendRequest req;
  req.stage = Stage::Identify;
  req.prompt = identify_prompt(w, cat);
  req.wording = w.text();
  std::string reply(trim(call(req, transcripts)));
  auto id = parse_pattern_id(reply);
  if (!id) return std::nullopt;
  for (const auto& e : cat)
    if (e.id == *id) return id;
  return std::nullopt;
}

std::optional<Meaning> Pipeline::derive(PatternId id, const Wording& w, std::vector<std::string>* transcripts) const {
  BackendRequest req;
  req.stage = Stage::Derive;
  req.prompt = derive_prompt(id, w);
  req.wording = w.text();
  req.pattern = id;
  std::string reply(trim(call(req, transcripts)));
  if (reply.empty() || reply == "NA" || reply == "\"NA\"") return std::nullopt;
  if (reply.front() == '{') {
    try {
      auto j = nlohmann::json::parse(reply);
      StructuredMeaning sm = meaning_from_json(j);
      check_meaning(sm);
      return Meaning{std::move(sm)};
    } catch (const std::exception&) {
      // not a structured meaning; keep the text as it is
    }
  }
  return Meaning{NlMeaning{reply}};
}

ProcessModel Pipeline::parse_output(const std::string& text) const {
  try {
    return parse_dsl(text);
  } catch (const SyntaxError& e) {
    std::string first(text.substr(0, text.find('\n')));
    if (first.size() > 80) first = first.substr(0, 80) + "...";
    throw Error(Errc::UnparseableOutput, std::string(e.what()) + " (output starts with: " + first + ")");
  } catch (const InvariantError& e) {
    throw Error(Errc::InvalidModelOutput, e.code_name() + ": " + e.what());
  }
}

ProcessModel Pipeline::apply_llm(const ProcessModel& model, const Meaning& m,
                                 std::vector<std::string>* transcripts) const {
  BackendRequest req;
  req.stage = Stage::Apply;
  req.prompt = apply_prompt(model, meaning_text(m));
  req.model = &model;
  req.meaning = &m;
  if (const auto* s = std::get_if<StructuredMeaning>(&m)) req.pattern = pattern_of(*s);
  return parse_output(call(req, transcripts));
}

PipelineTrace Pipeline::run_cpmr(const ProcessModel& model, const Wording& w, const Expectation& expected) const {
  PipelineTrace t;
  t.approach = Approach::Cpmr;
  t.wording = w.text();
  try {
    t.identified = identify(w, catalog(), &t.transcripts);
    if (!t.identified) return t;
    t.step_1a = true;
    if (expected.pattern) t.step_1b = *t.identified == *expected.pattern;
    auto m = derive(*t.identified, w, &t.transcripts);
    t.step_2 = m.has_value();
    if (!m) return t;
    t.meaning = std::move(m);
    try {
      t.aao = apply_llm(model, *t.meaning, &t.transcripts);
      if (expected.eao) t.step_3 = models_equal(*t.aao, *expected.eao);
    } catch (const Error& e) {
      if (e.code() == Errc::BackendUnavailable) throw;
      t.apply_error = e.code_name() + ": " + e.what();
      if (expected.eao) t.step_3 = false;
    }
  } catch (const Error& e) {
    if (e.code() == Errc::BackendUnavailable) throw PipelineAborted(e.what(), std::move(t));
    throw;
  }
  return t;
}

PipelineTrace Pipeline::run_baseline(const ProcessModel& model, const Wording& w,
                                     const std::optional<ProcessModel>& eao) const {
  PipelineTrace t;
  t.approach = Approach::Baseline;
  t.wording = w.text();
  BackendRequest req;
  req.stage = Stage::Apply;
  req.prompt = apply_prompt(model, w.text());
  req.wording = w.text();
  req.model = &model;
  try {
    t.aao = parse_output(call(req, &t.transcripts));
    if (eao) t.step_3 = models_equal(*t.aao, *eao);
  } catch (const Error& e) {
    if (e.code() == Errc::BackendUnavailable) throw PipelineAborted(e.what(), std::move(t));
    t.apply_error = e.code_name() + ": " + e.what();
    if (eao) t.step_3 = false;
  }
  return t;
}

}  // namespace cpmr
