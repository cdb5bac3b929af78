#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "support.hpp"
#include "uishift/grpo.hpp"
#include "uishift/reward.hpp"
#include "uishift/rng.hpp"
#include "uishift/service.hpp"
#include "uishift/transition.hpp"

using namespace uishift;
using json = nlohmann::json;

namespace {

PairIndex index_with_click() {
  return {{"p1", GoldTarget{Click{15, 15}, BBox{10, 10, 20, 20}}}, {"p2", GoldTarget{NavigateBack{}, std::nullopt}}};
}

json post_score(const json& req, const PairIndex& idx = index_with_click()) {
  auto r = handle_score(req.dump(), idx, {});
  EXPECT_EQ(r.status, 200) << r.body;
  return json::parse(r.body);
}

// Live server on an ephemeral port for the lifetime of the fixture.
class LiveServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<RewardServer>(index_with_click(), ServiceConfig{});
    port_ = server_->bind("127.0.0.1:0");
    thread_ = std::thread([this] { server_->run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 100; ++i) {
      if (client_->Get("/healthz")) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  std::unique_ptr<RewardServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST(HandleScore, SingleSampleHasNoAdvantages) {
  auto body = post_score({{"mode", "free"}, {"items", {{{"pair_id", "p1"}, {"samples", {wrap_answer(Click{15, 15}, ReasoningMode::kReasoningFree)}}}}}});
  ASSERT_EQ(body["items"].size(), 1u);
  EXPECT_EQ(body["items"][0]["rewards"][0]["total"], 2);
  EXPECT_FALSE(body["items"][0].contains("advantages"));
  EXPECT_FALSE(body["service_version"].get<std::string>().empty());
}

TEST(HandleScore, EightSamplesMatchLibrary) {
  std::vector<std::string> samples;
  Rng rng(3);
  for (int i = 0; i < 8; ++i) {
    Action a = rng.below(2) ? Action{Click{static_cast<std::int64_t>(rng.below(30)), 15}} : Action{NavigateBack{}};
    samples.push_back(rng.below(4) ? wrap_answer(a, ReasoningMode::kReasoningFree) : "junk");
  }
  auto body = post_score({{"mode", "free"}, {"items", {{{"pair_id", "p1"}, {"samples", samples}}}}});
  auto lib = score_group(samples, index_with_click().at("p1"), ReasoningMode::kReasoningFree);
  auto adv = normalize_advantages(totals(lib), 1e-6);
  const auto& item = body["items"][0];
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(item["rewards"][i]["r_format"], lib[i].r_format);
    EXPECT_EQ(item["rewards"][i]["r_accuracy"], lib[i].r_accuracy);
    EXPECT_EQ(item["advantages"][i].get<double>(), adv[i]);
  }
}

TEST(HandleScore, UnknownPairIsItemError) {
  auto body = post_score({{"mode", "free"},
                          {"items", {{{"pair_id", "nope"}, {"samples", {"x"}}}, {{"pair_id", "p2"}, {"samples", {"x", "y"}}}}}});
  ASSERT_EQ(body["items"].size(), 2u);
  EXPECT_TRUE(body["items"][0].contains("error"));
  EXPECT_TRUE(body["items"][1].contains("rewards"));
}

TEST(HandleScore, InlineGoldAndOptions) {
  json gold = {{"action", {{"action_type", "scroll"}, {"direction", "up"}}}, {"bbox", nullptr}};
  std::string right = R"(<answer>{"action_type":"scroll","direction":"up"}</answer>)";
  auto body = post_score({{"mode", "enabled"}, {"advantages", false}, {"gate_accuracy_on_format", true},
                          {"items", {{{"gold", gold}, {"samples", {right, "<think></think>" + right}}}}}});
  const auto& item = body["items"][0];
  EXPECT_EQ(item["rewards"][0]["total"], 0);  // gated: wrong structure for the mode
  EXPECT_EQ(item["rewards"][1]["total"], 2);
  EXPECT_FALSE(item.contains("advantages"));

  json bad_gold = {{"action", {{"action_type", "click"}, {"x", 1}, {"y", 1}}}};
  body = post_score({{"mode", "free"}, {"items", {{{"gold", bad_gold}, {"samples", {"x"}}}, {{"pair_id", "p1"}, {"samples", json::array()}}}}});
  EXPECT_TRUE(body["items"][0].contains("error"));
  EXPECT_TRUE(body["items"][1].contains("error"));
}

TEST(HandleScore, MalformedRequests) {
  auto idx = index_with_click();
  EXPECT_EQ(handle_score("nope", idx, {}).status, 400);
  EXPECT_EQ(handle_score(R"({"items":[]})", idx, {}).status, 400);
  EXPECT_EQ(handle_score(R"({"mode":"maybe","items":[]})", idx, {}).status, 400);
  EXPECT_EQ(handle_score(R"({"mode":"free"})", idx, {}).status, 400);
  EXPECT_EQ(handle_score(R"({"mode":"free","advantages":"yes","items":[]})", idx, {}).status, 400);
}

TEST(HandleScore, DigestIgnoresKeyOrderAndWhitespace) {
  auto a = handle_score(R"({"mode":"free","items":[]})", {}, {});
  auto b = handle_score("{ \"items\": [], \"mode\": \"free\" }", {}, {});
  EXPECT_EQ(json::parse(a.body)["request_digest"], json::parse(b.body)["request_digest"]);
  EXPECT_EQ(a.body, b.body);
  auto c = handle_score(R"({"mode":"enabled","items":[]})", {}, {});
  EXPECT_NE(json::parse(a.body)["request_digest"], json::parse(c.body)["request_digest"]);
}

TEST(HandleAdvantages, MatchesLibrary) {
  auto r = handle_advantages(R"({"groups":[[2,0],[1,1,1],[3],"x"]})", {});
  ASSERT_EQ(r.status, 200);
  auto j = json::parse(r.body);
  EXPECT_EQ(j["groups"][0]["advantages"], json({1.0, -1.0}));
  EXPECT_EQ(j["groups"][1]["advantages"], json({0.0, 0.0, 0.0}));
  EXPECT_TRUE(j["groups"][2].contains("error"));
  EXPECT_TRUE(j["groups"][3].contains("error"));
  EXPECT_EQ(handle_advantages(R"({"groups":[[1,2]],"std_floor":-1})", {}).status, 400);
}

TEST(Health, ReportsPairs) {
  auto j = json::parse(handle_health(index_with_click()).body);
  EXPECT_EQ(j["pairs_loaded"], 2);
  EXPECT_EQ(j["ready"], true);
}

TEST(PairIndex, LoadsAndRejectsDuplicates) {
  support::TempDir dir;
  std::vector<Episode> eps{support::tiny_episode("a"), support::tiny_episode("b")};
  auto pairs = build_pairs(eps, 1, 2, 0).pairs;
  write_pairs(dir / "p.jsonl", pairs);
  auto idx = load_pair_index(dir / "p.jsonl");
  EXPECT_EQ(idx.size(), 2u);
  for (const auto& p : pairs) EXPECT_EQ(idx.at(p.pair_id), p.gold);
  pairs.push_back(pairs[0]);
  write_pairs(dir / "dup.jsonl", pairs);
  EXPECT_THROW(load_pair_index(dir / "dup.jsonl"), InvalidArgumentError);
}

TEST(Bind, BadAddresses) {
  RewardServer s({}, {});
  EXPECT_THROW(s.bind("localhost"), Error);
  EXPECT_THROW(s.bind("127.0.0.1:99999"), Error);
  EXPECT_THROW(s.bind("127.0.0.1:abc"), Error);
}

TEST_F(LiveServer, EndpointsMatchHandlers) {
  auto h = client_->Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  EXPECT_EQ(json::parse(h->body)["pairs_loaded"], 2);

  std::string req = json({{"mode", "free"}, {"items", {{{"pair_id", "p1"}, {"samples", {"a", "b", wrap_answer(Click{12, 12}, ReasoningMode::kReasoningFree)}}}}}}).dump();
  auto r = client_->Post("/v1/score", req, "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, handle_score(req, index_with_click(), {}).body);

  auto adv = client_->Post("/v1/advantages", R"({"groups":[[0,1,2]]})", "application/json");
  ASSERT_TRUE(adv);
  EXPECT_EQ(adv->body, handle_advantages(R"({"groups":[[0,1,2]]})", {}).body);

  auto bad = client_->Post("/v1/score", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
}

TEST_F(LiveServer, ConcurrentClientsSeeSameAnswers) {
  std::string req = json({{"mode", "free"}, {"items", {{{"pair_id", "p1"}, {"samples", {"a", wrap_answer(Click{12, 12}, ReasoningMode::kReasoningFree)}}}}}}).dump();
  const auto expected = handle_score(req, index_with_click(), {}).body;
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      httplib::Client c("127.0.0.1", port_);
      for (int i = 0; i < 25; ++i) {
        auto r = c.Post("/v1/score", req, "application/json");
        if (!r || r->body != expected) ++mismatches;
        c.Post("/v1/advantages", R"({"groups":[[5,1]]})", "application/json");
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}
