#include <doctest.h>

#include <random>

#include "chartloom/gateway/gateway.hpp"
#include "chartloom/gateway/prompts.hpp"
#include "chartloom/util/strings.hpp"
#include "support.hpp"

using namespace chartloom;
using namespace chartloom::gateway;
using testsupport::mock_gateway;
using testsupport::mock_of;
using testsupport::TempDir;

namespace {

CompletionRequest text_request(const std::string& template_id, std::vector<std::string> stops = {},
                               ModelRole role = ModelRole::writer_text) {
  CompletionRequest req;
  req.model_role = role;
  req.template_id = template_id;
  req.stop_sequences = std::move(stops);
  req.messages.push_back(Message::text(MessageRole::user, "hi"));
  return req;
}

Image tiny_image(std::uint8_t seed = 1) { return Image::png({0x89, 'P', 'N', 'G', seed}); }

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("stop sequence truncates the reply") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("report", "hello <EOS> tail");
    auto gw = mock_gateway(std::move(backend));
    auto r = gw->complete(text_request("report", {"<EOS>"}));
    CHECK(r.text == "hello ");
    CHECK(r.finish == FinishReason::stop("<EOS>"));
    CHECK(gw->ledger().api_calls() == 1);
  }

  TEST_CASE("no match keeps the backend finish reason") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("report", "plain");
    backend->push("report", MockBackend::Reply{"cut", std::nullopt, true});
    auto gw = mock_gateway(std::move(backend));
    CHECK(gw->complete(text_request("report", {"<EOS>"})).finish == FinishReason::natural());
    CHECK(gw->complete(text_request("report", {"<EOS>"})).finish == FinishReason::length());
  }

  TEST_CASE("empty queue is a mock exhausted error") {
    auto gw = mock_gateway(std::make_unique<MockBackend>());
    try {
      gw->complete(text_request("report"));
      FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
      CHECK(e.kind() == GatewayError::Kind::exhausted);
      CHECK(std::string(e.what()).find("mock exhausted") != std::string::npos);
    }
    CHECK(gw->ledger().api_calls() == 1);  // exhausted is not retried
  }

  TEST_CASE("three calls, three ledger records") {
    auto backend = std::make_unique<MockBackend>();
    for (int i = 0; i < 3; ++i) backend->push("*", "r" + std::to_string(i));
    auto gw = mock_gateway(std::move(backend));
    double last_latency = 0;
    for (int i = 0; i < 3; ++i) {
      CHECK(gw->complete(text_request("outline")).text == "r" + std::to_string(i));
      CHECK(gw->ledger().total_latency_ms() >= last_latency);
      last_latency = gw->ledger().total_latency_ms();
    }
    CHECK(gw->ledger().api_calls() == 3);
    CHECK(gw->ledger().snapshot().size() == 3);
  }

  TEST_CASE("routing: exact id, then prefix, then wildcard") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("judge.read", "exact");
    backend->push("judge", "prefix");
    backend->push("*", "any");
    auto gw = mock_gateway(std::move(backend));
    auto req = [](const std::string& id) { return text_request(id, {}, ModelRole::analysis_text); };
    CHECK(gw->complete(req("judge.read")).text == "exact");
    CHECK(gw->complete(req("judge.read")).text == "prefix");
    CHECK(gw->complete(req("overview")).text == "any");
    CHECK_THROWS_AS(gw->complete(req("judge.read")), GatewayError);
    auto seen = mock_of(*gw).received();
    REQUIRE(seen.size() == 4);
    CHECK(seen[2].template_id == "overview");
  }

  TEST_CASE("script json with errors and length finishes") {
    auto backend = MockBackend::from_json(nlohmann::json::parse(R"({"replies": {
      "caption": ["one", {"text": "two", "finish": "length"}, {"error": "request"}]}})"));
    auto gw = mock_gateway(std::move(backend));
    auto req = text_request("caption", {}, ModelRole::vision);
    CHECK(gw->complete(req).text == "one");
    CHECK(gw->complete(req).finish == FinishReason::length());
    CHECK_THROWS_AS(gw->complete(req), GatewayError);
    CHECK_THROWS_AS(MockBackend::from_json(nlohmann::json::parse(R"({"x": 1})")), ParseError);
    CHECK_THROWS_AS(MockBackend::from_json(nlohmann::json::parse(R"({"replies": {"a": [{"error": "boom"}]}})")),
                    ParseError);
  }

  TEST_CASE("transient failures are retried with doubling backoff") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("report", MockBackend::Reply{"", GatewayError::Kind::transport, false});
    backend->push("report", MockBackend::Reply{"", GatewayError::Kind::rate_limit, false});
    backend->push("report", "finally");
    auto gw = mock_gateway(std::move(backend));
    std::vector<long> waits;
    gw->set_sleeper([&](std::chrono::milliseconds d) { waits.push_back(d.count()); });
    CHECK(gw->complete(text_request("report")).text == "finally");
    CHECK(waits == std::vector<long>{1000, 2000});
    auto calls = gw->ledger().snapshot();
    REQUIRE(calls.size() == 3);
    CHECK_FALSE(calls[0].ok);
    CHECK_FALSE(calls[1].ok);
    CHECK(calls[2].ok);
  }

  TEST_CASE("retries stop after three attempts") {
    auto backend = std::make_unique<MockBackend>();
    for (int i = 0; i < 4; ++i) backend->push("report", MockBackend::Reply{"", GatewayError::Kind::transport, false});
    auto gw = mock_gateway(std::move(backend));
    try {
      gw->complete(text_request("report"));
      FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
      CHECK(e.kind() == GatewayError::Kind::transport);
    }
    CHECK(gw->ledger().api_calls() == 3);
    CHECK(mock_of(*gw).remaining("report") == 1);
  }

  TEST_CASE("request errors are not retried") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("report", MockBackend::Reply{"", GatewayError::Kind::request, false});
    backend->push("report", "unused");
    auto gw = mock_gateway(std::move(backend));
    CHECK_THROWS_AS(gw->complete(text_request("report")), GatewayError);
    CHECK(gw->ledger().api_calls() == 1);
  }

  TEST_CASE("images and roles") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("caption", "A caption.");
    backend->push("chart.select", "1");
    auto gw = mock_gateway(std::move(backend));

    CompletionRequest caption = text_request("caption", {}, ModelRole::vision);
    caption.messages[0].parts.emplace_back(tiny_image());
    CHECK(gw->complete_multimodal(caption).text == "A caption.");

    CompletionRequest select = text_request("chart.select", {}, ModelRole::vision);
    select.messages[0].parts.emplace_back(tiny_image(1));
    select.messages[0].parts.emplace_back(tiny_image(2));
    CHECK(gw->complete_multimodal(select).text == "1");
    CHECK(gw->ledger().api_calls() == 2);

    CompletionRequest wrong = caption;
    wrong.model_role = ModelRole::writer_text;
    CHECK_THROWS_AS(gw->complete(wrong), PreconditionError);
    CHECK_THROWS_AS(gw->complete_multimodal(wrong), PreconditionError);

    CompletionRequest empty_image = caption;
    empty_image.messages[0].parts.emplace_back(Image{});
    CHECK_THROWS_AS(gw->complete(empty_image), PreconditionError);
    CHECK(gw->ledger().api_calls() == 2);
  }

  TEST_CASE("request validation") {
    auto gw = mock_gateway(std::make_unique<MockBackend>(), false, false);
    auto req = text_request("report", {"a", "b", "c", "d", "e"});
    CHECK_THROWS_AS(gw->complete(req), PreconditionError);
    req = text_request("report");
    req.temperature = -1;
    CHECK_THROWS_AS(gw->complete(req), PreconditionError);
    req = text_request("report");
    req.messages.clear();
    CHECK_THROWS_AS(gw->complete(req), PreconditionError);
    try {
      gw->complete(text_request("caption", {}, ModelRole::vision));
      FAIL("expected unavailable");
    } catch (const GatewayError& e) {
      CHECK(e.kind() == GatewayError::Kind::unavailable);
    }
    CHECK_FALSE(gw->available(ModelRole::vision));
    CHECK(gw->available(ModelRole::writer_text));
  }

  TEST_CASE("role temperature overrides the request") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("*", "x");
    auto gw = mock_gateway(std::move(backend));
    gw->configure(ModelRole::analysis_text, {{}, false, true, 0.7});
    auto req = text_request("overview", {}, ModelRole::analysis_text);
    gw->complete(req);
    CHECK(mock_of(*gw).received().at(0).temperature == doctest::Approx(0.7));
    CHECK(req.temperature == 0.0);
  }

  TEST_CASE("identical script and requests give identical results") {
    auto run = [] {
      auto backend = std::make_unique<MockBackend>();
      backend->push("report", "a <visualization>q</visualization> b");
      backend->push("report", "c <EOS> d");
      auto gw = mock_gateway(std::move(backend));
      std::vector<std::string> out;
      for (int i = 0; i < 2; ++i) {
        auto r = gw->complete(text_request("report", {"</visualization>", "<EOS>"}));
        out.push_back(r.text + "|" + to_string(r.finish));
      }
      out.push_back(gw->ledger().snapshot()[0].request_hash);
      return out;
    };
    CHECK(run() == run());
  }

  TEST_CASE("transcript has one JSON object per call") {
    auto backend = std::make_unique<MockBackend>();
    backend->push("*", "a");
    backend->push("*", "b");
    auto gw = mock_gateway(std::move(backend));
    gw->complete(text_request("outline"));
    gw->complete(text_request("report"));
    TempDir tmp;
    gw->ledger().write_transcript(tmp / "transcript.jsonl");
    auto lines = util::split_lines(util::read_file(tmp / "transcript.jsonl"));
    REQUIRE(lines.size() == 2);
    auto j = nlohmann::json::parse(lines[1]);
    CHECK(j.at("template_id") == "report");
    CHECK(j.at("response_text") == "b");
    CHECK(j.contains("request_hash"));
    CHECK(j.contains("latency_ms"));
    CHECK(gw->ledger().count("report") == 1);
  }
}

TEST_SUITE("gateway") {
  TEST_CASE("truncation yields the longest prefix without the stop") {
    std::mt19937_64 rng(5);
    const std::string alphabet = "ab<>/E";
    auto random_string = [&](int max_len) {
      std::string s(std::uniform_int_distribution<int>(0, max_len)(rng), ' ');
      for (auto& c : s) c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
      return s;
    };
    for (int i = 0; i < 2000; ++i) {
      const auto s = random_string(40);
      auto q = random_string(3);
      if (q.empty()) q = "a";
      auto cut = truncate_at_stop(s, {q});
      const auto pos = s.find(q);
      if (pos == std::string::npos) {
        CHECK(cut.text == s);
        CHECK_FALSE(cut.matched);
      } else {
        CHECK(cut.text == s.substr(0, pos));
        CHECK(cut.matched == q);
        // Longest prefix free of q: one more character would contain it.
        CHECK((s.substr(0, pos + q.size()).find(q) != std::string::npos));
      }
      CHECK(cut.text.find(q) == std::string::npos);
    }
  }

  TEST_CASE("earliest stop wins, ties prefer the longer one") {
    auto cut = truncate_at_stop("x <EOS> y </visualization>", {"</visualization>", "<EOS>"});
    CHECK(cut.text == "x ");
    CHECK(cut.matched == "<EOS>");
    cut = truncate_at_stop("ab<E>c", {"<E", "<E>"});
    CHECK(cut.matched == "<E>");
  }

  TEST_CASE("outline prompt fills both intent slots") {
    const auto out = render_prompt("outline", {{"user_intent", "X-INTENT"}, {"summaries", "S"}});
    std::size_t n = 0;
    for (auto p = out.find("X-INTENT"); p != std::string::npos; p = out.find("X-INTENT", p + 1)) ++n;
    CHECK(n == 2);
    CHECK(out.find("a start, a middle, and an end") != std::string::npos);
  }

  TEST_CASE("missing slot names the slot") {
    try {
      render_prompt("outline", {{"user_intent", "X"}});
      FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
      CHECK(std::string(e.what()).find("summaries") != std::string::npos);
    }
    CHECK_THROWS_AS(render_prompt("no.such.template", {}), PreconditionError);
  }

  TEST_CASE("planning prompt carries the yaml format block") {
    const auto out = render_prompt(
        "planning", {{"summaries", "S"}, {"tables", "T"}, {"request", "R"}, {"chart_style", "plain"}});
    CHECK(out.find("must strictly follow the following yaml format") != std::string::npos);
    CHECK(out.find("chart_type") != std::string::npos);
  }

  TEST_CASE("slot values are inserted verbatim") {
    CHECK(render_body("a {x} b", {{"x", "{y}"}, {"y", "no"}}) == "a {y} b");
    CHECK(template_slots("{a} {b} {a}") == std::vector<std::string>{"a", "b"});
    for (const auto& id : template_ids()) {
      SlotValues values;
      for (const auto& slot : template_slots(prompt_template(id).body)) values[slot] = "v";
      CHECK_NOTHROW(render_prompt(id, values));
    }
  }
}
