#include "httplib.h"

#include <atomic>
#include <thread>

#include "doctest.h"
#include "json.hpp"

#include "anonrisk/llm.hpp"
#include "anonrisk/util.hpp"
#include "support/tempdir.hpp"

using namespace anonrisk;
using nlohmann::json;

namespace {

llm::ChatRequest demo_request(const std::string& user_text = "Identify the person.") {
  llm::ChatRequest request;
  request.model = "gpt-4";
  request.temperature = 0.0;
  request.messages = {{llm::Role::system, "You answer tersely."},
                      {llm::Role::user, user_text}};
  return request;
}

}  // namespace

TEST_CASE("role and mode names round trip") {
  for (auto role : {llm::Role::system, llm::Role::user, llm::Role::assistant}) {
    CHECK(llm::role_from_name(llm::role_name(role)) == role);
  }
  CHECK_THROWS_AS(llm::role_from_name("operator"), llm::LlmError);

  for (auto mode : {llm::Mode::live, llm::Mode::replay, llm::Mode::mock}) {
    CHECK(llm::mode_from_name(llm::mode_name(mode)) == mode);
  }
  CHECK_THROWS_AS(llm::mode_from_name("offline"), llm::LlmError);
}

TEST_CASE("make_request stamps the configured model identity") {
  llm::RequestSettings settings;
  settings.model = "gpt-4-0613";
  settings.temperature = 0.5;
  settings.max_tokens = 128;
  auto request = llm::make_request(settings, {{llm::Role::user, "hi"}});
  CHECK(request.model == "gpt-4-0613");
  CHECK(request.temperature == 0.5);
  CHECK(request.max_tokens == 128);
  REQUIRE(request.messages.size() == 1);
  CHECK(request.messages[0].content == "hi");
}

TEST_CASE("request digests identify the full request") {
  auto request = demo_request();
  const std::string canonical = llm::canonical_form(request);

  // a parseable canonical form with every identifying field present
  auto doc = json::parse(canonical);
  CHECK(doc.at("model") == "gpt-4");
  CHECK(doc.at("temperature") == 0.0);
  CHECK(doc.at("max_tokens").is_null());
  REQUIRE(doc.at("messages").size() == 2);
  CHECK(doc.at("messages")[0].at("role") == "system");
  CHECK(doc.at("messages")[1].at("content") == "Identify the person.");

  const std::string digest = llm::request_digest(request);
  CHECK(digest.size() == 64);
  CHECK(digest == util::sha256_hex(canonical));

  SUBCASE("equal requests digest equally, different ones do not") {
    CHECK(llm::request_digest(demo_request()) == digest);
    CHECK(llm::request_digest(demo_request("Other text.")) != digest);

    auto swapped = demo_request();
    std::swap(swapped.messages[0], swapped.messages[1]);
    CHECK(llm::request_digest(swapped) != digest);  // message order matters

    auto capped = demo_request();
    capped.max_tokens = 16;
    CHECK(llm::request_digest(capped) != digest);
  }
}

TEST_CASE("transcript cache stores one schema-complete file per digest") {
  testsupport::TempDir tmp;
  llm::TranscriptCache cache(tmp / "transcripts");

  auto request = demo_request();
  const std::string digest = llm::request_digest(request);
  CHECK_FALSE(cache.has(digest));
  CHECK_FALSE(cache.get(digest).has_value());

  cache.put(digest, request, {"Emma Watson", false});
  CHECK(cache.has(digest));
  CHECK(cache.path_for(digest) == (tmp / "transcripts") / (digest + ".json"));

  auto back = cache.get(digest);
  REQUIRE(back.has_value());
  CHECK(back->content == "Emma Watson");
  CHECK(back->from_cache);

  auto doc = json::parse(util::read_text_file(cache.path_for(digest)));
  CHECK(doc.at("request_digest") == digest);
  CHECK(doc.at("model") == "gpt-4");
  CHECK(doc.at("request").at("messages").size() == 2);
  CHECK(doc.at("response").at("content") == "Emma Watson");
  CHECK(doc.contains("timestamp"));

  SUBCASE("corrupt transcripts raise instead of answering") {
    util::write_text_file_atomic(cache.path_for(digest), "{not json");
    CHECK_THROWS_AS(cache.get(digest), llm::LlmError);
  }
}

TEST_CASE("mock oracle lookup order: hint, hint suffix, digest, default") {
  llm::MockOracle oracle = llm::MockOracle::from_json_text(R"({
    "default": "no idea",
    "answers": {
      "intrude1/watson-001": "full hint wins",
      "watson-002": "suffix match",
      "slotfill": "purpose-level answer"
    }
  })");
  auto request = demo_request();

  CHECK(oracle.complete(request, "intrude1/watson-001").content == "full hint wins");
  CHECK(oracle.complete(request, "intrude1/watson-002").content == "suffix match");
  CHECK(oracle.complete(request, "slotfill").content == "purpose-level answer");
  CHECK(oracle.complete(request, "intrude1/unknown-doc").content == "no idea");

  SUBCASE("digest keys answer specific requests") {
    oracle.set_answer(llm::request_digest(request), "digest match");
    CHECK(oracle.complete(request, "never/recorded").content == "digest match");
  }

  SUBCASE("default default is UNKNOWN") {
    llm::MockOracle bare;
    CHECK(bare.complete(request, "anything").content == "UNKNOWN");
  }

  SUBCASE("malformed tables are rejected") {
    CHECK_THROWS_AS(llm::MockOracle::from_json_text("]["), llm::LlmError);
  }
}

TEST_CASE("caching completer records exchanges and replays them verbatim") {
  testsupport::TempDir tmp;
  auto request = demo_request();
  const std::string digest = llm::request_digest(request);

  {
    auto oracle = std::make_unique<llm::MockOracle>();
    oracle->set_default("recorded answer");
    llm::CachingCompleter completer(llm::TranscriptCache(tmp / "cache"), std::move(oracle));
    auto first = completer.complete(request, "intrude1/doc-1");
    CHECK(first.content == "recorded answer");
    CHECK_FALSE(first.from_cache);
    auto second = completer.complete(request, "intrude1/doc-1");
    CHECK(second.content == "recorded answer");
    CHECK(second.from_cache);
  }

  SUBCASE("replay serves the transcript without an inner completer") {
    llm::CachingCompleter replay(llm::TranscriptCache(tmp / "cache"), nullptr);
    auto got = replay.complete(request, "intrude1/doc-1");
    CHECK(got.content == "recorded answer");
    CHECK(got.from_cache);
  }

  SUBCASE("the cache wins even when an inner completer disagrees") {
    auto oracle = std::make_unique<llm::MockOracle>();
    oracle->set_default("fresh answer");
    llm::CachingCompleter completer(llm::TranscriptCache(tmp / "cache"), std::move(oracle));
    CHECK(completer.complete(request, "intrude1/doc-1").content == "recorded answer");
  }

  SUBCASE("uncached replay requests raise CacheMiss with context") {
    llm::CachingCompleter replay(llm::TranscriptCache(tmp / "cache"), nullptr);
    auto unseen = demo_request("Never asked before.");
    try {
      replay.complete(unseen, "intrude2/doc-9");
      FAIL("expected CacheMiss");
    } catch (const llm::CacheMiss& miss) {
      CHECK(miss.digest == llm::request_digest(unseen));
      CHECK(miss.key_hint == "intrude2/doc-9");
    }
  }
}

TEST_CASE("make_completer validates per-mode requirements") {
  testsupport::TempDir tmp;

  llm::LlmConfig live;
  live.mode = llm::Mode::live;
  CHECK_THROWS_AS(llm::make_completer(live), llm::LlmError);

  llm::LlmConfig replay;
  replay.mode = llm::Mode::replay;
  CHECK_THROWS_AS(llm::make_completer(replay), llm::LlmError);

  llm::LlmConfig mock;
  mock.mode = llm::Mode::mock;
  CHECK_THROWS_AS(llm::make_completer(mock), llm::LlmError);

  util::write_text_file_atomic(tmp / "table.json", R"({"default": "scripted"})");
  mock.mock_table = tmp / "table.json";
  auto completer = llm::make_completer(mock);
  CHECK(completer->complete(demo_request(), "x").content == "scripted");

  // seeding requires somewhere to write transcripts
  CHECK_THROWS_AS(llm::make_completer(mock, /*seed_cache=*/true), llm::LlmError);
  mock.cache_dir = tmp / "cache";
  auto seeding = llm::make_completer(mock, /*seed_cache=*/true);
  CHECK(seeding->complete(demo_request(), "x").content == "scripted");

  replay.cache_dir = tmp / "cache";
  auto replayer = llm::make_completer(replay);
  CHECK(replayer->complete(demo_request(), "x").content == "scripted");
}

TEST_CASE("http completer speaks the chat endpoint protocol") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::atomic<int> failures_to_serve{0};
  std::atomic<int> status_override{0};
  std::string seen_auth;
  std::string seen_model;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    seen_auth = req.get_header_value("Authorization");
    if (status_override != 0) {
      res.status = status_override;
      res.set_content("scripted failure", "text/plain");
      return;
    }
    if (failures_to_serve.fetch_sub(1) > 0) {
      res.status = 503;
      res.set_content("overloaded", "text/plain");
      return;
    }
    auto body = json::parse(req.body);
    seen_model = body.at("model").get<std::string>();
    json reply;
    reply["choices"] = json::array();
    reply["choices"].push_back(
        {{"message", {{"role", "assistant"}, {"content", "It is Adele."}}}});
    res.set_content(reply.dump(), "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  llm::HttpOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port);
  opts.api_key = "sk-test";
  opts.retry.max_attempts = 3;
  opts.retry.initial_backoff_ms = 1;

  {
    llm::HttpCompleter completer(opts);
    auto response = completer.complete(demo_request(), "ignored");
    CHECK(response.content == "It is Adele.");
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_model == "gpt-4");
    CHECK(hits == 1);
  }

  SUBCASE("5xx responses are retried until the server recovers") {
    hits = 0;
    failures_to_serve = 2;
    llm::HttpCompleter completer(opts);
    auto response = completer.complete(demo_request(), "ignored");
    CHECK(response.content == "It is Adele.");
    CHECK(hits == 3);
  }

  SUBCASE("persistent 5xx exhausts the retry budget") {
    hits = 0;
    failures_to_serve = 100;
    llm::HttpCompleter completer(opts);
    CHECK_THROWS_AS(completer.complete(demo_request(), "ignored"), llm::LlmError);
    CHECK(hits == 3);
  }

  SUBCASE("other error statuses fail immediately, without retries") {
    hits = 0;
    status_override = 400;
    llm::HttpCompleter completer(opts);
    CHECK_THROWS_AS(completer.complete(demo_request(), "ignored"), llm::LlmError);
    CHECK(hits == 1);
  }

  server.stop();
  runner.join();
}

TEST_CASE("http completer refuses a missing base_url") {
  CHECK_THROWS_AS(llm::HttpCompleter(llm::HttpOptions{}), llm::LlmError);
}
