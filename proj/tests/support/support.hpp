#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartloom/gateway/gateway.hpp"
#include "chartloom/viz/renderer.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using chartloom::gateway::Gateway;
using chartloom::gateway::MockBackend;
using chartloom::gateway::ModelRole;

inline fs::path fixture(const std::string& rel) { return fs::path(CHARTLOOM_FIXTURE_DIR) / rel; }

class TempDir {
public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "chartloom-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
  fs::path path_;
};

// Gateway over a mock backend with every role enabled and no real sleeping.
inline std::unique_ptr<Gateway> mock_gateway(std::unique_ptr<MockBackend> backend, bool writer_multimodal = false,
                                             bool vision = true) {
  auto gw = std::make_unique<Gateway>(std::move(backend));
  gw->configure(ModelRole::writer_text, {{}, writer_multimodal, true, {}});
  gw->configure(ModelRole::analysis_text, {{}, false, true, {}});
  if (vision) gw->configure(ModelRole::vision, {{}, true, true, {}});
  gw->set_sleeper([](std::chrono::milliseconds) {});
  return gw;
}

inline MockBackend& mock_of(Gateway& gw) { return dynamic_cast<MockBackend&>(gw.backend()); }

inline std::string code_reply(const std::string& tag) {
  return "```python\nimport matplotlib.pyplot as plt\n# " + tag + "\nplt.savefig(OUTPUT_PATH)\n```";
}

inline std::string spec_yaml(int k) {
  return "chart_type: bar_chart\ntitle: \"Chart " + std::to_string(k) +
         "\"\ndata:\n  - region: North\n    revenue: 354.0\n  - region: South\n    revenue: 253.0\n"
         "labels:\n  x_axis_label: Region\n  y_axis_label: Revenue\n";
}

inline std::string planning_reply(int k) {
  return "Compare regions.\n<visualization>\n" + spec_yaml(k) + "</visualization>";
}

inline const std::string kOverviewReply =
    "## Overview\nTwo tables.\n\n## Probe Findings\n1. a\n2. b\n3. c\n4. d\n5. e\n";
inline const std::string kOutlineReply = "```markdown\n# Report\n\n## Start\n- a\n\n## End\n- b\n```";

// A randomized writer run for the mock pipeline, with what it must produce.
struct Scenario {
  nlohmann::json script = {{"replies", nlohmann::json::object()}};
  std::vector<chartloom::viz::MockRenderer::Scripted> renders;
  int max_steps = 24;
  std::size_t expected_calls = 0;
  std::size_t expected_steps = 0;
  std::size_t expected_texts = 0;
  std::size_t expected_figures = 0;
  std::size_t expected_failures = 0;
  std::string expected_termination;
  std::vector<std::string> requests;       // in the order they are fulfilled
  std::vector<bool> request_ok;
  std::string description;
};

// Per chart with n_retry=3, n_refine=2 and three distinct successful renders:
// plan + codegen + 2 critiques + 2 refines + select + caption.
inline constexpr std::size_t kCallsPerChart = 8;
// Per chart whose three Stage-1 renders all fail: plan + 3 codegens.
inline constexpr std::size_t kCallsPerFailedChart = 4;

inline Scenario random_scenario(std::mt19937_64& rng) {
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Scenario s;
  auto& replies = s.script["replies"];
  auto push = [&](const std::string& channel, nlohmann::json reply) { replies[channel].push_back(std::move(reply)); };

  push("overview", kOverviewReply);
  push("outline", kOutlineReply);

  // Writer replies in order, each tagged with what the loop does with it.
  enum class Kind { stray, request, finish, retry };
  struct Step {
    Kind kind;
    std::string termination;  // for finish
    int request = -1;
  };
  std::vector<Step> steps;

  const int n = uniform(0, 8);
  std::vector<bool> ok(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::string q = "request " + std::to_string(i) + " about revenue";
    if (uniform(0, 5) == 0) {
      push("report", "Stray close </visualization> the rest of this reply is cut by the stop.");
      steps.push_back({Kind::stray, {}, -1});
    }
    push("report", "Paragraph " + std::to_string(i) + " with words.\n\n<visualization>\n" + q +
                       "\n</visualization>\nignored after stop");
    steps.push_back({Kind::request, {}, i});
    ok[static_cast<std::size_t>(i)] = uniform(0, 3) != 0;
    push("planning", planning_reply(i));
    if (ok[static_cast<std::size_t>(i)]) {
      push("chart.codegen", code_reply("chart " + std::to_string(i) + " v0"));
      push("chart.critique", "Improve labels.");
      push("chart.critique", "Improve colors.");
      push("chart.refine", code_reply("chart " + std::to_string(i) + " v1"));
      push("chart.refine", code_reply("chart " + std::to_string(i) + " v2"));
      push("chart.select", std::to_string(uniform(0, 2)));
      push("caption", "Caption " + std::to_string(i) + ".");
      for (int r = 0; r < 3; ++r) s.renders.push_back({true, {}});
    } else {
      for (int r = 0; r < 3; ++r) {
        push("chart.codegen", code_reply("broken " + std::to_string(i) + "." + std::to_string(r)));
        s.renders.push_back({false, "Traceback: NameError " + std::to_string(r)});
      }
    }
  }

  switch (uniform(0, 4)) {
    case 0:
      push("report", "Closing words.\n<EOS>\nnothing after this");
      steps.push_back({Kind::finish, "eos"});
      break;
    case 1:
      // Early <EOS> wins over a later request in the same reply.
      push("report", "Done early. <EOS> <visualization>never asked</visualization>");
      steps.push_back({Kind::finish, "eos"});
      break;
    case 2:
      push("report", "Closing words without a terminal token.");
      steps.push_back({Kind::finish, "natural_end"});
      break;
    case 3:
      push("report", nlohmann::json{{"text", "Cut off by the length li"}, {"finish", "length"}});
      steps.push_back({Kind::finish, "length_limit"});
      break;
    default:
      push("report", "Almost done <visualization>half a requ");
      steps.push_back({Kind::retry});
      if (uniform(0, 1) == 0) {
        push("report", "Again <visualization>half");
        steps.push_back({Kind::finish, "truncated_request"});
      } else {
        push("report", "Finished properly. <EOS>");
        steps.push_back({Kind::finish, "eos"});
      }
      break;
  }

  const bool capped = uniform(0, 4) == 0;
  s.max_steps = capped ? uniform(1, static_cast<int>(steps.size())) : 24;

  // Walk the loop the way the writer must.
  s.expected_calls = 2;
  for (const auto& step : steps) {
    if (static_cast<int>(s.expected_steps) >= s.max_steps) {
      s.expected_termination = "max_steps";
      break;
    }
    ++s.expected_steps;
    ++s.expected_calls;
    if (step.kind == Kind::retry) continue;
    ++s.expected_texts;
    if (step.kind == Kind::finish) {
      s.expected_termination = step.termination;
      break;
    }
    if (step.kind == Kind::request) {
      const bool good = ok[static_cast<std::size_t>(step.request)];
      s.requests.push_back("request " + std::to_string(step.request) + " about revenue");
      s.request_ok.push_back(good);
      s.expected_calls += good ? kCallsPerChart : kCallsPerFailedChart;
      (good ? s.expected_figures : s.expected_failures) += 1;
    }
  }
  s.description = "n=" + std::to_string(n) + " steps=" + std::to_string(steps.size()) +
                  " max_steps=" + std::to_string(s.max_steps) + " end=" + s.expected_termination;
  return s;
}

}  // namespace testsupport
