#include "cpmr/service.hpp"

#include <ctime>
#include <fstream>
#include <random>

#include <httplib.h>

#include "cpmr/dsl.hpp"
#include "cpmr/graph.hpp"

namespace cpmr {

namespace {

std::string missing_details(PatternId id) {
  switch (id) {
    case PatternId::Cp1: return "Which task should be added, and where: before, after or between which tasks?";
    case PatternId::Cp2: return "Which task should be removed? Please give its label.";
    case PatternId::Cp3: return "Which task should be moved, and to which position?";
    case PatternId::Cp4: return "Which task should be replaced, and by which task or tasks?";
    case PatternId::Cp5: return "Which two tasks should be swapped?";
    case PatternId::Cp6:
      return "Which tasks mark the start and end of the fragment, and what should the new subprocess be called?";
    case PatternId::Cp7: return "Which subprocess should be inlined?";
    case PatternId::Cp8_1:
    case PatternId::Cp8_2: return "Which task should be repeated, and under which loop condition?";
    case PatternId::Cp9: return "Which tasks should run in parallel?";
    case PatternId::Cp10: return "Which task should be made conditional, and under which condition?";
    case PatternId::Cp13:
      return "Which condition should change (which gateway or loop, and its current value), and what is the new "
             "condition?";
    case PatternId::Cp14: return "Which task should be copied, what is the copy called, and where should it go?";
    case PatternId::Cp15: return "Which task should be split, and into which new tasks?";
    case PatternId::Cp16: return "Which tasks should be merged, and what should the merged task be called?";
    case PatternId::Cp17: return "Which gateway is meant, and which of its branches should be removed?";
    case PatternId::Cp18: return "Which gateway is meant, and which of its branches should be kept?";
    case PatternId::Cp19: return "Which gateway should be replaced, and by an exclusive or a parallel gateway?";
    case PatternId::Lp6: return "Which task should be renamed, and what is the new name?";
  }
  return "Which elements of the model does the change refer to?";
}

std::string iso_time(std::chrono::system_clock::time_point tp) {
  std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

const nlohmann::json& require_object(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::BadRequest, "request body must be a JSON object");
  return j;
}

std::string string_field(const nlohmann::json& j, const char* key, std::optional<std::string> fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (fallback) return *fallback;
    throw Error(Errc::BadRequest, std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) throw Error(Errc::BadRequest, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

nlohmann::json trace_summary(const PipelineTrace& t) {
  nlohmann::json j = to_json(t);
  j.erase("aao");
  return j;
}

}  // namespace

std::optional<std::string> follow_up_for(const PipelineTrace& t) {
  if (t.approach == Approach::Cpmr) {
    if (!t.step_1a)
      return "I could not match your request to exactly one kind of change. Could you rephrase it as a single, "
             "specific change and name the tasks involved?";
    if (t.step_2 == false) {
      const auto& e = catalog_entry(*t.identified);
      return "This looks like '" + e.name + "' (" + std::string(to_string(e.id)) +
             "), but some details are missing. " + missing_details(e.id);
    }
  }
  if (t.apply_error)
    return "The change could not be applied, so the model is unchanged (" + *t.apply_error +
           "). Could you check the labels and rephrase the request?";
  if (!t.aao) return "The change could not be applied, so the model is unchanged.";
  return std::nullopt;
}

ServiceResponse error_response(const Error& e) {
  int status = 400;
  switch (e.code()) {
    case Errc::UnknownSession: status = 404; break;
    case Errc::NothingToUndo: status = 409; break;
    case Errc::BackendUnavailable: status = 502; break;
    default: break;
  }
  return {status, {{"error", e.code_name()}, {"detail", e.what()}}};
}

RedesignService::RedesignService(ServiceOptions options) : options_(std::move(options)) {
  backends_["mock"] = std::make_shared<MockBackend>();
  if (options_.persist_dir) std::filesystem::create_directories(*options_.persist_dir);
}

void RedesignService::register_backend(const std::string& name, std::shared_ptr<const Backend> backend) {
  std::lock_guard lock(backends_mu_);
  backends_[name] = std::move(backend);
}

std::shared_ptr<const Backend> RedesignService::backend(const std::string& name) {
  std::lock_guard lock(backends_mu_);
  if (auto it = backends_.find(name); it != backends_.end()) return it->second;
  if (name == "llm" || name.rfind("llm:", 0) == 0) {
    BackendConfig cfg = options_.llm ? *options_.llm : BackendConfig::llm_from_env();
    cfg.kind = BackendKind::Llm;
    if (name.size() > 4) cfg.model = name.substr(4);
    if (!cfg.endpoint || !cfg.model)
      throw Error(Errc::BadRequest, "llm backend is not configured (set CPMR_LLM_ENDPOINT and CPMR_LLM_MODEL)");
    auto b = std::make_shared<LlmBackend>(cfg);
    backends_[name] = b;
    return b;
  }
  throw Error(Errc::BadRequest, "unknown backend '" + name + "'");
}

std::size_t RedesignService::session_count() const {
  std::shared_lock lock(sessions_mu_);
  return sessions_.size();
}

std::shared_ptr<Session> RedesignService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session '" + id + "'");
  return it->second;
}

void RedesignService::persist(const Session& s, std::size_t index) const {
  if (!options_.persist_dir) return;
  auto dir = *options_.persist_dir / s.id;
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (std::to_string(index) + ".cpm"), std::ios::binary);
  out << serialize_dsl(s.history[index].model);
}

void RedesignService::unpersist(const Session& s, std::size_t index) const {
  if (!options_.persist_dir) return;
  std::error_code ec;
  std::filesystem::remove(*options_.persist_dir / s.id / (std::to_string(index) + ".cpm"), ec);
}

nlohmann::json RedesignService::view(const Session& s) const {
  nlohmann::json history = nlohmann::json::array();
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    const auto& snap = s.history[i];
    nlohmann::json h = {{"index", i}, {"timestamp", iso_time(snap.timestamp)}};
    if (snap.trace) {
      h["wording"] = snap.trace->wording;
      h["approach"] = std::string(to_string(snap.trace->approach));
      h["identified"] = snap.trace->identified ? nlohmann::json(std::string(to_string(*snap.trace->identified)))
                                               : nlohmann::json(nullptr);
      h["steps"] = step_string(*snap.trace);
    } else {
      h["wording"] = nullptr;
      h["approach"] = nullptr;
      h["identified"] = nullptr;
      h["steps"] = nullptr;
    }
    history.push_back(h);
  }
  return {{"id", s.id},
          {"model", serialize_dsl(s.current())},
          {"graph", to_json(export_graph(s.current()))},
          {"history", history},
          {"history_length", s.history.size()}};
}

ServiceResponse RedesignService::create_session(const nlohmann::json& request) {
  try {
    ProcessModel model = parse_dsl(string_field(require_object(request), "model"));
    auto s = std::make_shared<Session>();
    s->history.push_back({std::move(model), std::nullopt, std::chrono::system_clock::now()});
    {
      std::unique_lock lock(sessions_mu_);
      do s->id = random_id();
      while (sessions_.count(s->id));
      sessions_[s->id] = s;
    }
    persist(*s, 0);
    return {201, view(*s)};
  } catch (const Error& e) {
    return error_response(e);
  }
}

ServiceResponse RedesignService::get_session(const std::string& id) {
  try {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    return {200, view(*s)};
  } catch (const Error& e) {
    return error_response(e);
  }
}

ServiceResponse RedesignService::post_message(const std::string& id, const nlohmann::json& request) {
  try {
    auto s = find(id);
    const auto& req = require_object(request);
    Wording wording(string_field(req, "text"));
    std::string mode = string_field(req, "mode", "cpmr");
    if (mode != "cpmr" && mode != "baseline") throw Error(Errc::BadRequest, "mode must be cpmr or baseline");
    Pipeline pipeline(backend(string_field(req, "backend", "mock")));

    std::lock_guard lock(s->mu);
    PipelineTrace trace = mode == "cpmr" ? pipeline.run_cpmr(s->current(), wording)
                                         : pipeline.run_baseline(s->current(), wording);
    auto follow_up = follow_up_for(trace);
    bool applied = !follow_up;
    if (applied) {
      s->history.push_back({*trace.aao, trace, std::chrono::system_clock::now()});
      persist(*s, s->history.size() - 1);
    }
    nlohmann::json body = view(*s);
    body["applied"] = applied;
    body["trace"] = trace_summary(trace);
    body["follow_up"] = follow_up ? nlohmann::json(*follow_up) : nlohmann::json(nullptr);
    return {200, body};
  } catch (const Error& e) {
    return error_response(e);
  }
}

ServiceResponse RedesignService::undo(const std::string& id) {
  try {
    auto s = find(id);
    std::lock_guard lock(s->mu);
    if (s->history.size() <= 1) throw Error(Errc::NothingToUndo, "session is at its initial model");
    unpersist(*s, s->history.size() - 1);
    s->history.pop_back();
    return {200, view(*s)};
  } catch (const Error& e) {
    return error_response(e);
  }
}

void mount_routes(httplib::Server& server, RedesignService& service) {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<nlohmann::json> {
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  auto bad_json = [reply](httplib::Response& res) {
    reply(res, error_response(Error(Errc::BadRequest, "request body is not valid JSON")));
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", [&, reply, parse, bad_json](const httplib::Request& req, httplib::Response& res) {
    auto j = parse(req);
    if (!j) return bad_json(res);
    reply(res, service.create_session(*j));
  });
  server.Get(R"(/sessions/([^/]+))", [&, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_session(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/messages)",
              [&, reply, parse, bad_json](const httplib::Request& req, httplib::Response& res) {
                auto j = parse(req);
                if (!j) return bad_json(res);
                reply(res, service.post_message(req.matches[1], *j));
              });
  server.Post(R"(/sessions/([^/]+)/undo)", [&, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.undo(req.matches[1]));
  });
}

void serve(RedesignService& service, const std::string& host, int port) {
  httplib::Server server;
  mount_routes(server, service);
  if (!server.listen(host, port))
    throw Error(Errc::BadRequest, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace cpmr
