#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "cpmr/dsl.hpp"
#include "cpmr/service.hpp"
#include "support.hpp"

using namespace cpmr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kAbd = "process \"Order\"\n  task \"A\"\n  task \"B\"\n  task \"D\"\n";
const std::string kAbcd = "process \"Order\"\n  task \"A\"\n  task \"B\"\n  task \"C\"\n  task \"D\"\n";

std::string create(RedesignService& svc, const std::string& model = kAbd) {
  auto r = svc.create_session({{"model", model}});
  EXPECT_EQ(r.status, 201);
  return r.body.at("id");
}

json message(const std::string& text, const std::string& mode = "cpmr") {
  return {{"text", text}, {"mode", mode}, {"backend", "mock"}};
}

class Unreachable final : public Backend {
 public:
  std::string name() const override { return "down"; }
  std::string complete(const BackendRequest&) const override {
    throw Error(Errc::BackendUnavailable, "connection refused");
  }
};

}  // namespace

TEST(Service, CreateSession) {
  RedesignService svc;
  auto r = svc.create_session({{"model", kAbd}});
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.body["id"].get<std::string>().size(), 16u);
  EXPECT_EQ(r.body["model"], kAbd);
  EXPECT_EQ(r.body["history_length"], 1);
  EXPECT_EQ(r.body["graph"]["nodes"].size(), 5u);
  EXPECT_EQ(svc.session_count(), 1u);
  EXPECT_NE(create(svc), r.body["id"]);
}

TEST(Service, CreateRejectsBadModels) {
  RedesignService svc;
  auto syntax = svc.create_session({{"model", "process \"P\"\n      task \"A\"\n"}});
  EXPECT_EQ(syntax.status, 400);
  EXPECT_EQ(syntax.body["error"], "SyntaxError");
  EXPECT_TRUE(syntax.body["detail"].is_string());

  auto dup = svc.create_session({{"model", "process \"P\"\n  task \"A\"\n  task \"A\"\n"}});
  EXPECT_EQ(dup.status, 400);
  EXPECT_EQ(dup.body["error"], "DuplicateLabel");

  EXPECT_EQ(svc.create_session(json::object()).status, 400);
  EXPECT_EQ(svc.create_session({{"model", 3}}).status, 400);
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST(Service, MessageAppliesChange) {
  RedesignService svc;
  auto id = create(svc);
  auto r = svc.post_message(id, message("Add task C after task B"));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["applied"], true);
  EXPECT_EQ(r.body["follow_up"], nullptr);
  EXPECT_EQ(r.body["model"], kAbcd);
  EXPECT_EQ(r.body["history_length"], 2);
  EXPECT_EQ(r.body["trace"]["steps"], "(T,\xC2\xB7,T,\xC2\xB7)");
  EXPECT_EQ(r.body["trace"]["identified"], "cp1");
  EXPECT_EQ(r.body["history"][1]["wording"], "Add task C after task B");
  EXPECT_EQ(r.body["history"][1]["identified"], "cp1");
}

TEST(Service, FailedMessageAsksAndLeavesStateAlone) {
  RedesignService svc;
  auto id = create(svc);
  auto before = svc.get_session(id).body;

  auto r = svc.post_message(id, message("Removing a task"));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["applied"], false);
  ASSERT_TRUE(r.body["follow_up"].is_string());
  std::string q = r.body["follow_up"];
  EXPECT_NE(q.find("cp2"), std::string::npos);
  EXPECT_NE(q.find("Which task"), std::string::npos);
  EXPECT_EQ(r.body["model"], kAbd);
  EXPECT_EQ(svc.get_session(id).body, before);

  auto unclear = svc.post_message(id, message("I don't know"));
  EXPECT_EQ(unclear.body["applied"], false);
  EXPECT_NE(unclear.body["follow_up"].get<std::string>().find("rephrase"), std::string::npos);

  auto bad_label = svc.post_message(id, message("Delete task Q"));
  EXPECT_EQ(bad_label.body["applied"], false);
  EXPECT_NE(bad_label.body["follow_up"].get<std::string>().find("unchanged"), std::string::npos);
  EXPECT_EQ(svc.get_session(id).body, before);
}

TEST(Service, BaselineMode) {
  RedesignService svc;
  auto id = create(svc);
  auto r = svc.post_message(id, message("Add task C after task B", "baseline"));
  EXPECT_EQ(r.body["applied"], true);
  EXPECT_EQ(r.body["model"], kAbcd);
  EXPECT_EQ(r.body["history"][1]["approach"], "baseline");
  EXPECT_EQ(svc.post_message(id, message("x", "fancy")).status, 400);
}

TEST(Service, Undo) {
  RedesignService svc;
  auto id = create(svc);
  auto fresh = svc.undo(id);
  EXPECT_EQ(fresh.status, 409);
  EXPECT_EQ(fresh.body["error"], "NothingToUndo");

  svc.post_message(id, message("Add task C after task B"));
  auto one = svc.undo(id);
  EXPECT_EQ(one.status, 200);
  EXPECT_EQ(one.body["model"], kAbd);

  svc.post_message(id, message("Add task C after task B"));
  svc.post_message(id, message("Rename task A to task Start"));
  EXPECT_EQ(svc.get_session(id).body["history_length"], 3);
  svc.undo(id);
  EXPECT_EQ(svc.undo(id).body["model"], kAbd);
  EXPECT_EQ(svc.undo(id).status, 409);
}

TEST(Service, UnknownSessionIs404) {
  RedesignService svc;
  for (const auto& r : {svc.get_session("nope"), svc.undo("nope"), svc.post_message("nope", message("x"))}) {
    EXPECT_EQ(r.status, 404);
    EXPECT_EQ(r.body["error"], "UnknownSession");
  }
}

TEST(Service, HistoryAndGraphCounts) {
  RedesignService svc;
  auto id = create(svc, kAbcd);
  const char* steps[] = {"Embed task B in a loop with condition 'more items'", "Execute task C and task D in parallel",
                         "Extract task A through task A into subprocess S"};
  std::size_t n = 0;
  for (const char* w : steps) {
    ASSERT_EQ(svc.post_message(id, message(w)).body["applied"], true) << w;
    auto view = svc.get_session(id).body;
    EXPECT_EQ(view["history_length"], ++n + 1);
    auto m = parse_dsl(view["model"].get<std::string>());
    auto c = testkit::top_counts(m);
    EXPECT_EQ(view["graph"]["nodes"].size(), c.tasks + 2 * c.gateways + 2 * c.loops + 2 + c.subprocesses);
  }
}

TEST(Service, BackendSelection) {
  RedesignService svc;
  EXPECT_EQ(svc.backend("mock")->name(), "mock");
  EXPECT_THROW(svc.backend("gpt"), Error);

  ServiceOptions opts;
  BackendConfig c;
  c.kind = BackendKind::Llm;
  c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  c.model = "default-model";
  opts.llm = c;
  RedesignService with_llm(opts);
  EXPECT_EQ(with_llm.backend("llm")->name(), "default-model");
  EXPECT_EQ(with_llm.backend("llm:other")->name(), "other");
}

TEST(Service, BackendOutageIs502AndChangesNothing) {
  RedesignService svc;
  svc.register_backend("down", std::make_shared<Unreachable>());
  auto id = create(svc);
  auto r = svc.post_message(id, {{"text", "Add task C after task B"}, {"backend", "down"}});
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(r.body["error"], "BackendUnavailable");
  EXPECT_EQ(svc.get_session(id).body["history_length"], 1);
}

TEST(Service, Persistence) {
  std::random_device rd;
  fs::path dir = fs::temp_directory_path() / ("cpmr-persist-" + std::to_string(rd()));
  {
    RedesignService svc(ServiceOptions{dir, std::nullopt});
    auto id = create(svc);
    svc.post_message(id, message("Add task C after task B"));
    std::ifstream f(dir / id / "1.cpm");
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    EXPECT_EQ(text, kAbcd);
    EXPECT_TRUE(fs::exists(dir / id / "0.cpm"));
    svc.undo(id);
    EXPECT_FALSE(fs::exists(dir / id / "1.cpm"));
  }
  fs::remove_all(dir);
}

TEST(Service, ConcurrentMessagesAreSerializedPerSession) {
  RedesignService svc;
  auto id = create(svc, "process \"P\"\n  task \"T0\"\n");
  std::vector<std::jthread> threads;
  for (int i = 1; i <= 8; ++i)
    threads.emplace_back([&svc, &id, i] {
      svc.post_message(id, message("Add task N" + std::to_string(i) + " after task T0"));
    });
  threads.clear();
  auto view = svc.get_session(id).body;
  EXPECT_EQ(view["history_length"], 9);
  auto m = parse_dsl(view["model"].get<std::string>());
  EXPECT_EQ(all_labels(m).size(), 9u);
}

// ---- HTTP --------------------------------------------------------------------------

namespace {

class LiveServer {
 public:
  LiveServer() {
    mount_routes(server_, svc_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  RedesignService svc_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST(ServiceHttp, Contract) {
  LiveServer live;
  auto cli = live.client();

  auto created = cli.Post("/sessions", json{{"model", kAbd}}.dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  std::string id = json::parse(created->body)["id"];

  auto got = cli.Get("/sessions/" + id);
  EXPECT_EQ(got->status, 200);
  EXPECT_EQ(json::parse(got->body)["history_length"], 1);

  auto msg = cli.Post("/sessions/" + id + "/messages", message("Add task C after task B").dump(), "application/json");
  EXPECT_EQ(msg->status, 200);
  auto body = json::parse(msg->body);
  EXPECT_EQ(body["model"], kAbcd);
  EXPECT_TRUE(body["graph"]["edges"].is_array());

  auto undo = cli.Post("/sessions/" + id + "/undo", "", "application/json");
  EXPECT_EQ(undo->status, 200);
  EXPECT_EQ(json::parse(undo->body)["model"], kAbd);
  EXPECT_EQ(cli.Post("/sessions/" + id + "/undo", "", "application/json")->status, 409);

  EXPECT_EQ(cli.Get("/sessions/0000000000000000")->status, 404);
  auto bad = cli.Post("/sessions", "{not json", "application/json");
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["error"], "BadRequest");
  auto syntax = cli.Post("/sessions", json{{"model", "nonsense"}}.dump(), "application/json");
  EXPECT_EQ(syntax->status, 400);
  EXPECT_EQ(json::parse(syntax->body)["error"], "SyntaxError");

  auto pre = cli.Options("/sessions");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  EXPECT_NE(pre->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}
