#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lcval/csv.hpp"
#include "lcval/service.hpp"

using namespace lcval;
using nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("lcval_service_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    scheme_.add(1, {"one", std::nullopt, GeneralClass::kForest});
    std::vector<std::int64_t> ids;
    for (std::int64_t i = 0; i < 8; ++i) {
      ids.push_back(i);
      points_.push_back({i, 15.0 + 20 * i, 15.0, "s", "p"});
    }
    store_ = std::make_unique<ConcurrentAnnotationStore>(AnnotationStore(ids, {"alice", "bob"}),
                                                         dir_ / "log.csv");
    server_ = std::make_unique<AnnotationServer>(
        *store_, points_, std::vector<ProductRef>{{"p", std::cref(grid_), std::cref(scheme_)}});
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_->listen(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_->stop();
    thread_.join();
    std::filesystem::remove_all(dir_);
  }

  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    EXPECT_TRUE(res);
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> annotate(std::int64_t id, const std::string& expert, const std::string& label,
                                int confidence) {
    return post("/api/annotations", json{{"sample_id", id},
                                         {"expert_id", expert},
                                         {"label", label},
                                         {"confidence", confidence}}
                                        .dump());
  }

  std::filesystem::path dir_;
  RasterGrid grid_ = RasterGrid::filled(3, 10, 0, 30, 20, -1, 1);
  ClassScheme scheme_{"s"};
  std::vector<SamplePoint> points_;
  std::unique_ptr<ConcurrentAnnotationStore> store_;
  std::unique_ptr<AnnotationServer> server_;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

}  // namespace

TEST_F(ServiceTest, ListsSamplesByStatus) {
  auto [status, body] = get("/api/samples");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["count"], 8);
  EXPECT_EQ(body["samples"][0]["state"], "pending");
  EXPECT_DOUBLE_EQ(body["samples"][1]["x"].get<double>(), 35.0);
  annotate(2, "alice", "Forest", 1);
  std::tie(status, body) = get("/api/samples?status=partially-annotated");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(body["count"], 1);
  EXPECT_EQ(body["samples"][0]["sample_id"], 2);
  std::tie(status, body) = get("/api/samples?status=bogus");
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body["error"]["code"], "invalid_argument");
}

TEST_F(ServiceTest, PatchRoute) {
  auto [status, body] = get("/api/samples/3/patch");
  EXPECT_EQ(status, 200);
  const auto& w = body["windows"][0];
  EXPECT_EQ(w["product"], "p");
  EXPECT_EQ(w["side"], 3);
  EXPECT_EQ(w["legend"][0]["class"], "Forest");
  std::tie(status, body) = get("/api/samples/99/patch");
  EXPECT_EQ(status, 404);
  EXPECT_EQ(body["error"]["code"], "not_found");
}

TEST_F(ServiceTest, AnnotationReviewConsensusFlow) {
  auto [status, body] = annotate(0, "alice", "Forest", 1);
  EXPECT_EQ(status, 201);
  EXPECT_EQ(body["state"], "partially-annotated");
  std::tie(status, body) = annotate(0, "bob", "Water", 1);
  EXPECT_EQ(body["state"], "needs-review");
  std::tie(status, body) = annotate(1, "alice", "Forest", 1);
  std::tie(status, body) = annotate(1, "bob", "Forest", 1);
  EXPECT_EQ(body["state"], "finalized");

  std::tie(status, body) = get("/api/review");
  EXPECT_EQ(status, 200);
  ASSERT_EQ(body["count"], 1);
  EXPECT_EQ(body["queue"][0]["sample_id"], 0);

  std::tie(status, body) =
      post("/api/consensus", json{{"sample_id", 0}, {"label", "Water"}, {"confidence", 2}}.dump());
  EXPECT_EQ(status, 201);
  EXPECT_EQ(body["state"], "finalized");
  std::tie(status, body) = get("/api/review");
  EXPECT_EQ(body["count"], 0);

  std::tie(status, body) =
      post("/api/consensus", json{{"sample_id", 1}, {"label", "Water"}, {"confidence", 2}}.dump());
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body["error"]["code"], "already_finalized");
  std::tie(status, body) =
      post("/api/consensus", json{{"sample_id", 5}, {"label", "Water"}, {"confidence", 2}}.dump());
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body["error"]["code"], "not_reviewable");
}

TEST_F(ServiceTest, RejectsBadAnnotations) {
  annotate(4, "alice", "Forest", 1);
  auto [status, body] = annotate(4, "alice", "Forest", 1);
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body["error"]["code"], "duplicate");
  std::tie(status, body) = annotate(4, "carol", "Forest", 1);
  EXPECT_EQ(status, 400);
  std::tie(status, body) = annotate(4, "bob", "Tundra", 1);
  EXPECT_EQ(status, 400);
  std::tie(status, body) = annotate(4, "bob", "Forest", 9);
  EXPECT_EQ(status, 400);
  std::tie(status, body) = annotate(40, "bob", "Forest", 1);
  EXPECT_EQ(status, 404);
  std::tie(status, body) = post("/api/annotations", "{not json");
  EXPECT_EQ(status, 400);
  EXPECT_TRUE(body["error"].contains("message"));
  std::tie(status, body) = post("/api/annotations", R"({"sample_id": 4})");
  EXPECT_EQ(status, 400);
}

TEST_F(ServiceTest, ConcurrentClientsPersistEveryRecord) {
  std::vector<std::thread> clients;
  for (const char* expert : {"alice", "bob"}) {
    clients.emplace_back([this, expert] {
      httplib::Client c("127.0.0.1", port_);
      for (std::int64_t id = 0; id < 8; ++id) {
        auto res = c.Post("/api/annotations",
                          json{{"sample_id", id}, {"expert_id", expert}, {"label", "Forest"}, {"confidence", 1}}
                              .dump(),
                          "application/json");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 201);
      }
    });
  }
  for (auto& t : clients) t.join();
  auto [status, body] = get("/api/samples?status=finalized");
  EXPECT_EQ(body["count"], 8);
  const auto log = parse_annotation_log_csv(csv::read_file(dir_ / "log.csv"));
  EXPECT_EQ(log.size(), 16u);
}
