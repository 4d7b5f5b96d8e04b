#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpmr/model.hpp"
#include "cpmr/pipeline.hpp"

namespace httplib {
class Server;
}

namespace cpmr {

struct Snapshot {
  ProcessModel model;
  std::optional<PipelineTrace> trace;  // absent for the initial model
  std::chrono::system_clock::time_point timestamp;
};

struct Session {
  std::string id;
  std::vector<Snapshot> history;  // never empty; back() is current
  std::mutex mu;                  // serializes messages within the session

  const ProcessModel& current() const { return history.back().model; }
};

/// Clarification question for a failed message; nullopt when the run succeeded.
std::optional<std::string> follow_up_for(const PipelineTrace& trace);

struct ServiceOptions {
  std::optional<std::filesystem::path> persist_dir;
  /// Used for backend "llm" and "llm:<model>"; defaults to the environment.
  std::optional<BackendConfig> llm;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class RedesignService {
 public:
  explicit RedesignService(ServiceOptions options = {});

  ServiceResponse create_session(const nlohmann::json& request);
  ServiceResponse get_session(const std::string& id);
  ServiceResponse post_message(const std::string& id, const nlohmann::json& request);
  ServiceResponse undo(const std::string& id);

  /// Resolves "mock", "llm" or "llm:<model>". Throws BadRequest.
  std::shared_ptr<const Backend> backend(const std::string& name);
  /// Test hook: registers a backend under a name.
  void register_backend(const std::string& name, std::shared_ptr<const Backend> backend);

  std::size_t session_count() const;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  void persist(const Session& s, std::size_t index) const;
  void unpersist(const Session& s, std::size_t index) const;
  nlohmann::json view(const Session& s) const;

  ServiceOptions options_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex backends_mu_;
  std::map<std::string, std::shared_ptr<const Backend>> backends_;
};

/// Maps an error to its HTTP status and {"error","detail"} body.
ServiceResponse error_response(const Error& e);

/// Installs the JSON routes on an httplib server.
void mount_routes(httplib::Server& server, RedesignService& service);

/// Blocks serving on host:port. Throws BadRequest when the port cannot be bound.
void serve(RedesignService& service, const std::string& host, int port);

}  // namespace cpmr
