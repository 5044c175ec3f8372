#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartloom/error.hpp"
#include "chartloom/gateway/types.hpp"

namespace chartloom::viz {

// Result of executing one plotting program. Ordinary code failures are data,
// not exceptions.
struct RenderOutcome {
  bool success = false;
  gateway::Bytes image;     // non-empty iff success
  std::string diagnostics;  // non-empty iff !success

  static RenderOutcome ok(gateway::Bytes image) { return {true, std::move(image), {}}; }
  static RenderOutcome failed(std::string diagnostics) {
    if (diagnostics.empty()) diagnostics = "render failed";
    return {false, {}, std::move(diagnostics)};
  }
};

// The renderer itself broke (worker died, protocol violation), as opposed
// to the code failing.
class RendererError : public Error {
public:
  using Error::Error;
};

class Renderer {
public:
  virtual ~Renderer() = default;
  // Must tolerate concurrent calls.
  virtual RenderOutcome render(const std::string& code, const std::filesystem::path& workdir,
                               std::chrono::seconds timeout) = 0;
};

// Scripted outcomes, consumed in call order; once the script is used up
// every call succeeds. Successful renders produce a 1x1 PNG whose bytes
// depend on the code, so distinct programs yield distinct images.
//
// Script format: {"outcomes": [{"success": false, "diagnostics": "..."}, {"success": true}, ...]}
class MockRenderer final : public Renderer {
public:
  struct Scripted {
    bool success = true;
    std::string diagnostics;
  };

  MockRenderer() = default;
  explicit MockRenderer(std::vector<Scripted> script);
  static std::unique_ptr<MockRenderer> from_json(const nlohmann::json& script);

  void push(Scripted outcome);
  void push_failure(std::string diagnostics) { push({false, std::move(diagnostics)}); }
  void push_success() { push({true, {}}); }

  RenderOutcome render(const std::string& code, const std::filesystem::path& workdir,
                       std::chrono::seconds timeout) override;

  std::size_t calls() const;
  std::vector<std::string> rendered_code() const;

private:
  mutable std::mutex mutex_;
  std::deque<Scripted> script_;
  std::size_t calls_ = 0;
  std::vector<std::string> rendered_code_;
};

// Client for the render worker's line-delimited JSON protocol. Each render
// call launches its own worker process, sends one job line, reads one reply
// line, and closes the pipe.
//   job:   {"code": s, "workdir": s, "output_path": s, "timeout_s": n}
//   reply: {"status": "ok"|"error"|"timeout", "image_path": s|null, "stderr": s}
class SandboxRenderer final : public Renderer {
public:
  // `command` is the worker executable, optionally followed by
  // whitespace-separated arguments.
  explicit SandboxRenderer(std::string command, std::chrono::seconds grace = std::chrono::seconds(2));

  RenderOutcome render(const std::string& code, const std::filesystem::path& workdir,
                       std::chrono::seconds timeout) override;

  static nlohmann::ordered_json job_json(const std::string& code, const std::filesystem::path& workdir,
                                 const std::filesystem::path& output_path, std::chrono::seconds timeout);
  // Maps one reply line onto an outcome (reading the image on ok).
  static RenderOutcome interpret_reply(const std::string& line);

private:
  std::vector<std::string> argv_;
  std::chrono::seconds grace_;
};

inline constexpr std::chrono::seconds kMaxRenderTimeout{300};

}  // namespace chartloom::viz
