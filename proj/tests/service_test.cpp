#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "constraintsmith/service.hpp"
#include "support/oracles.hpp"

namespace constraintsmith {
namespace {

const char* kSentimentSpec = R"({"primitives": [
  {"type": "exact_text", "text": "Sentiment : "},
  {"type": "multiple_choice", "choices": ["positive", "negative", "neutral"]}]})";

const char* kProfileSpec = R"({"primitives": [{"type": "json_object", "fields": [
  {"key": "name", "type": "string"}, {"key": "age", "type": "number"},
  {"key": "children", "type": "array_of_string"}, {"key": "playable", "type": "boolean"}]}]})";

fs::path fresh_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() /
             ("csmith-" + tag + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::remove_all(dir);
  return dir;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fresh_dir("svc");
    ServiceConfig c;
    c.store_dir = dir_.string();
    service_ = std::make_unique<Service>(c);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::pair<int, json> call(const std::string& method, const std::string& path,
                            const std::string& body = "") {
    auto r = service_->handle(method, path, body);
    return {r.status, r.body.empty() ? json() : json::parse(r.body)};
  }

  fs::path dir_;
  std::unique_ptr<Service> service_;
};

TEST_F(ServiceTest, CompileSentiment) {
  auto [status, j] = call("POST", "/v1/compile", std::string(R"({"constraints": )") + kSentimentSpec + "}");
  ASSERT_EQ(status, 200) << j;
  EXPECT_EQ(j["pattern"], "Sentiment : (?:positive|negative|neutral)");
  EXPECT_FALSE(j["token_index_cached"].get<bool>());
  EXPECT_GT(j["state_count"].get<int>(), 0);
  auto [status2, j2] = call("POST", "/v1/compile", R"J({"pattern": "Sentiment : (?:positive|negative|neutral)"})J");
  EXPECT_EQ(status2, 200);
  EXPECT_TRUE(j2["token_index_cached"].get<bool>());
}

TEST_F(ServiceTest, CompileErrors) {
  auto [s1, j1] = call("POST", "/v1/compile", R"J({"pattern": "(a)\\1"})J");
  EXPECT_EQ(s1, 400);
  EXPECT_EQ(j1["error"]["kind"], "UnsupportedFeature");
  EXPECT_EQ(j1["error"]["feature"], "backreference");
  EXPECT_EQ(j1["error"]["offset"], 3);

  auto [s2, j2] = call("POST", "/v1/compile", R"({"constraints": [], "pattern": "a"})");
  EXPECT_EQ(s2, 400);
  auto [s3, j3] = call("POST", "/v1/compile", R"({})");
  EXPECT_EQ(s3, 400);

  auto [s4, j4] = call("POST", "/v1/compile", R"({"constraints": [{"type": "some_text"}, {"type": "some_text"}]})");
  EXPECT_EQ(s4, 400);
  EXPECT_EQ(j4["error"]["kind"], "InvalidSpec");
  EXPECT_EQ(j4["error"]["violations"][0]["path"], "/primitives/1");

  auto [s5, j5] = call("POST", "/v1/compile", R"({"pattern": "[ab]*a[ab]{20}"})");
  EXPECT_EQ(s5, 422);
  EXPECT_EQ(j5["error"]["kind"], "ComplexityLimit");

  auto [s6, j6] = call("POST", "/v1/compile", "{not json");
  EXPECT_EQ(s6, 400);
  auto [s7, j7] = call("POST", "/v1/compile", R"({"stored_name": "x"})");
  EXPECT_EQ(s7, 400);
  auto [s8, j8] = call("POST", "/v1/compile", R"({"pattern": "a{"})");
  EXPECT_EQ(s8, 400);
  EXPECT_EQ(j8["error"]["kind"], "SyntaxError");
}

TEST_F(ServiceTest, GenerateProfile) {
  auto [status, j] = call("POST", "/v1/generate",
                          std::string(R"({"prompt": "Describe a game character.", "params": {"seed": 3, "max_tokens": 4096}, "constraints": )") +
                              kProfileSpec + "}");
  ASSERT_EQ(status, 200) << j;
  const auto text = j["text"].get<std::string>();
  const auto spec = parse_spec(kProfileSpec);
  EXPECT_TRUE(testing::json_matches_schema(text, std::get<JsonObject>(spec.primitives[0]))) << text;
  EXPECT_TRUE(j["finish"] == "eos" || j["finish"] == "forced_eos");
}

TEST_F(ServiceTest, GenerateWithTinyBudgetFails) {
  auto [status, j] = call("POST", "/v1/generate",
                          std::string(R"({"prompt": "p", "params": {"max_tokens": 1}, "constraints": )") +
                              kProfileSpec + "}");
  EXPECT_EQ(status, 422);
  EXPECT_EQ(j["error"]["kind"], "CompletionFailure");
  EXPECT_EQ(j["finish"], "max_tokens_with_completion_failure");
}

TEST_F(ServiceTest, GenerateFromStoredName) {
  auto [s0, j0] = call("POST", "/v1/generate", R"({"prompt": "p", "stored_name": "sentiment"})");
  EXPECT_EQ(s0, 404);
  EXPECT_EQ(call("PUT", "/v1/constraints/sentiment", kSentimentSpec).first, 201);
  auto [status, j] = call("POST", "/v1/generate", R"({"prompt": "A review: loved it.", "stored_name": "sentiment"})");
  ASSERT_EQ(status, 200) << j;
  EXPECT_TRUE(j["text"].get<std::string>().starts_with("Sentiment : "));
}

TEST_F(ServiceTest, GenerateRejectsBadParams) {
  EXPECT_EQ(call("POST", "/v1/generate", R"({"prompt": "p", "pattern": "a", "params": {"mode": "beam"}})").first, 400);
  EXPECT_EQ(call("POST", "/v1/generate", R"({"prompt": "p", "pattern": "a", "params": {"max_tokens": 0}})").first, 400);
  EXPECT_EQ(call("POST", "/v1/generate", R"({"prompt": "p", "pattern": "a", "params": {"temp": 1}})").first, 400);
  EXPECT_EQ(call("POST", "/v1/generate", R"({"pattern": "a"})").first, 400);
}

TEST_F(ServiceTest, Validate) {
  const std::string p = R"J("pattern": "Sentiment : (?:positive|negative|neutral)")J";
  auto [s1, j1] = call("POST", "/v1/validate", R"({"text": "Sentiment : neutral", )" + p + "}");
  EXPECT_EQ(s1, 200);
  EXPECT_TRUE(j1["valid"].get<bool>());
  EXPECT_FALSE(j1.contains("first_reject_offset"));
  auto [s2, j2] = call("POST", "/v1/validate", R"({"text": "Sentiment : maybe", )" + p + "}");
  EXPECT_FALSE(j2["valid"].get<bool>());
  EXPECT_EQ(j2["first_reject_offset"], 12);
  auto [s3, j3] = call("POST", "/v1/validate", R"({"text": "", "pattern": "a?"})");
  EXPECT_TRUE(j3["valid"].get<bool>());
  EXPECT_EQ(call("POST", "/v1/validate", R"J({"text": "", "pattern": "(?=a)"})J").first, 400);
}

TEST_F(ServiceTest, StoreRoundTripAndCrud) {
  auto [s1, j1] = call("PUT", "/v1/constraints/sentiment", kSentimentSpec);
  EXPECT_EQ(s1, 201);
  const auto put_body = service_->handle("PUT", "/v1/constraints/sentiment", kSentimentSpec);
  EXPECT_EQ(put_body.status, 200);
  const auto got = service_->handle("GET", "/v1/constraints/sentiment", "");
  EXPECT_EQ(got.status, 200);
  EXPECT_EQ(got.body, serialize_spec(parse_spec(kSentimentSpec)));
  EXPECT_EQ(got.body, put_body.body);
  EXPECT_EQ(got.body, detail::read_file(dir_ / "sentiment.json"));
  EXPECT_TRUE(fs::exists(dir_ / "sentiment.meta"));

  EXPECT_EQ(call("PUT", "/v1/constraints/Sentiment", kSentimentSpec).first, 409);
  EXPECT_EQ(call("PUT", "/v1/constraints/bad.name", kSentimentSpec).first, 400);
  EXPECT_EQ(call("PUT", "/v1/constraints/x", R"({"primitives": []})").first, 400);
  EXPECT_EQ(call("PUT", "/v1/constraints/x", R"({"name": "y", "primitives": [{"type": "some_text"}]})").first, 400);

  EXPECT_EQ(call("DELETE", "/v1/constraints/sentiment").first, 204);
  EXPECT_EQ(call("GET", "/v1/constraints/sentiment").first, 404);
  EXPECT_EQ(call("DELETE", "/v1/constraints/sentiment").first, 404);
}

TEST_F(ServiceTest, StoreManualPattern) {
  auto [s, j] = call("PUT", "/v1/constraints/bullets", R"J({"pattern": "(?:\\* [^\\n]+\\n){1,3}"})J");
  ASSERT_EQ(s, 201) << j;
  EXPECT_EQ(j["pattern"], "(?:\\* [^\\n]+\\n){1,3}");
  auto [s2, j2] = call("POST", "/v1/validate", R"({"text": "* one\n* two\n", "stored_name": "bullets"})");
  EXPECT_TRUE(j2["valid"].get<bool>());
}

TEST_F(ServiceTest, ListIsLexicographic) {
  for (const char* n : {"zeta", "alpha", "Mid"}) {
    ASSERT_EQ(call("PUT", std::string("/v1/constraints/") + n, kSentimentSpec).first, 201);
  }
  auto [status, j] = call("GET", "/v1/constraints");
  ASSERT_EQ(status, 200);
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["name"], "Mid");
  EXPECT_EQ(j[1]["name"], "alpha");
  EXPECT_EQ(j[2]["name"], "zeta");
  EXPECT_EQ(j[0]["pattern_hash"], hex64(pattern_hash("Sentiment : (?:positive|negative|neutral)")));
}

TEST_F(ServiceTest, RestartDoesNotChangeResponses) {
  const std::string req =
      std::string(R"({"prompt": "p", "params": {"seed": 11}, "constraints": )") + kSentimentSpec + "}";
  const auto before = service_->handle("POST", "/v1/generate", req).body;
  ServiceConfig c;
  c.store_dir = dir_.string();
  Service again(c);
  EXPECT_EQ(again.handle("POST", "/v1/generate", req).body, before);
}

TEST_F(ServiceTest, UnknownRoute) { EXPECT_EQ(call("GET", "/v2/x").first, 404); }

TEST(IndexCache, EvictsLeastRecentlyUsed) {
  IndexCache cache(2);
  auto art = std::make_shared<const CompiledArtifact>();
  cache.insert("a", art);
  cache.insert("b", art);
  EXPECT_TRUE(cache.find("a"));
  cache.insert("c", art);
  EXPECT_TRUE(cache.find("a"));
  EXPECT_FALSE(cache.find("b"));
  EXPECT_EQ(cache.size(), 2u);
}

TEST(ServiceConfig, EnvironmentOverridesFile) {
  const auto dir = fresh_dir("cfg");
  fs::create_directories(dir);
  const auto path = (dir / "config.json").string();
  {
    std::ofstream out(path);
    out << R"({"listen": "0.0.0.0:9000", "store": "from-file", "decode": {"seed": 5},
               "scorer": {"kind": "remote", "url": "http://localhost:1"}})";
  }
  ::setenv("CSMITH_LISTEN", "127.0.0.1:7001", 1);
  ::setenv("CSMITH_STORE", "from-env", 1);
  auto c = load_service_config(path);
  ::unsetenv("CSMITH_LISTEN");
  ::unsetenv("CSMITH_STORE");
  EXPECT_EQ(c.host, "127.0.0.1");
  EXPECT_EQ(c.port, 7001);
  EXPECT_EQ(c.store_dir, "from-env");
  EXPECT_EQ(c.decode.seed, 5u);
  EXPECT_EQ(c.scorer.kind, ScorerKind::Remote);
  EXPECT_EQ(c.scorer.remote.base_url, "http://localhost:1");
  auto d = load_service_config(path);
  EXPECT_EQ(d.port, 9000);
  EXPECT_EQ(d.store_dir, "from-file");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Remote scorer against an in-process endpoint

class MockEndpoint {
 public:
  using Handler = std::function<std::string(const json&)>;
  explicit MockEndpoint(Handler h) : handler_(std::move(h)) {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(handler_(json::parse(req.body)), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }
  RemoteScorerConfig config() const { return {"http://127.0.0.1:" + std::to_string(port_)}; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(RemoteScorer, RejectsAllZeroWeights) {
  MockEndpoint ep([](const json& req) {
    return json{{"weights", std::vector<double>(req["candidate_ids"].size(), 0.0)}}.dump();
  });
  const auto ix = build_index(build_dfa(regex::parse_regex("ab")), bundled_test_vocabulary());
  try {
    generate("p", ix, remote_scorer(ep.config()));
    FAIL();
  } catch (const ScorerError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate"), std::string::npos);
    EXPECT_EQ(e.step(), 0u);
  }
}

TEST(RemoteScorer, RejectsUnsolicitedToken) {
  MockEndpoint ep([](const json&) { return R"({"weights": {"999999": 1.0}})"; });
  const auto ix = build_index(build_dfa(regex::parse_regex("ab")), bundled_test_vocabulary());
  try {
    generate("p", ix, remote_scorer(ep.config()));
    FAIL();
  } catch (const ScorerError& e) {
    EXPECT_NE(std::string(e.what()).find("unsolicited token"), std::string::npos);
  }
}

TEST(RemoteScorer, TransportFailureIsScorerError) {
  RemoteScorer dead({"http://127.0.0.1:1", "/score", 500});
  const auto ix = build_index(build_dfa(regex::parse_regex("ab")), bundled_test_vocabulary());
  EXPECT_THROW(generate("p", ix, dead), ScorerError);
}

TEST(RemoteScorer, ParseWeights) {
  const std::vector<TokenId> cands{3, 7};
  const std::vector<TokenId> prefix;
  const ScoreRequest req{"", prefix, cands, 9, 4};
  EXPECT_EQ(RemoteScorer::parse_weights(req, R"({"weights": [1, 3]})"), (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(RemoteScorer::parse_weights(req, R"({"weights": {"7": 2}})"), (std::vector<double>{0.0, 1.0}));
  EXPECT_THROW(RemoteScorer::parse_weights(req, R"({"weights": [1]})"), ScorerError);
  EXPECT_THROW(RemoteScorer::parse_weights(req, R"({"weights": [1, -1]})"), ScorerError);
  EXPECT_THROW(RemoteScorer::parse_weights(req, R"({"w": []})"), ScorerError);
  EXPECT_THROW(RemoteScorer::parse_weights(req, "nope"), ScorerError);
}

TEST(RemoteScorer, ScriptedEndpointMatchesLocalEcho) {
  const auto v = bundled_test_vocabulary();
  const auto script = v.encode("Sentiment : neutral");
  MockEndpoint ep([&](const json& req) {
    const auto prefix = req["prefix_ids"].get<std::vector<TokenId>>();
    const auto cands = req["candidate_ids"].get<std::vector<TokenId>>();
    const TokenId wanted = prefix.size() < script.size() ? script[prefix.size()] : v.eos_id();
    std::vector<double> w(cands.size(), 0.0);
    bool hit = false;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i] == wanted) {
        w[i] = 1.0;
        hit = true;
      }
    }
    if (!hit) std::fill(w.begin(), w.end(), 1.0);
    return json{{"weights", w}}.dump();
  });
  const auto compiled = compile_spec(parse_spec(kSentimentSpec));
  const auto ix = build_index(build_dfa(compiled.ast), v);
  const DecodeParams p{DecodeMode::Sample, 42};
  const auto remote = generate("Review: fine.", ix, remote_scorer(ep.config()), p);
  const auto local = generate("Review: fine.", ix, echo_scorer(script), p);
  EXPECT_EQ(remote.text, local.text);
  EXPECT_EQ(remote.token_ids, local.token_ids);
  EXPECT_EQ(remote.text, "Sentiment : neutral");
}

TEST(HttpServer, CorsAndRoutesOverSockets) {
  const auto dir = fresh_dir("http");
  ServiceConfig c;
  c.store_dir = dir.string();
  Service service(c);
  httplib::Server server;
  service.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/v1/compile", R"({"pattern": "a|b"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  auto pre = client.Options("/v1/compile");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  auto put = client.Put("/v1/constraints/s", kSentimentSpec, "application/json");
  ASSERT_TRUE(put);
  EXPECT_EQ(put->status, 201);
  auto get = client.Get("/v1/constraints/s");
  ASSERT_TRUE(get);
  EXPECT_EQ(get->body, put->body);
  server.stop();
  t.join();
  fs::remove_all(dir);
}

}  // namespace
}  // namespace constraintsmith
