#include "chartloom/gateway/backend.hpp"
#include "chartloom/viz/png.hpp"
#include "chartloom/viz/renderer.hpp"

namespace chartloom::viz {

MockRenderer::MockRenderer(std::vector<Scripted> script) : script_(script.begin(), script.end()) {}

std::unique_ptr<MockRenderer> MockRenderer::from_json(const nlohmann::json& script) {
  auto mock = std::make_unique<MockRenderer>();
  if (!script.contains("outcomes")) return mock;
  const auto& outcomes = script.at("outcomes");
  if (!outcomes.is_array()) throw ParseError("mock renderer \"outcomes\" must be an array");
  for (const auto& o : outcomes) {
    mock->push({o.value("success", true), o.value("diagnostics", std::string{})});
  }
  return mock;
}

void MockRenderer::push(Scripted outcome) {
  std::lock_guard lock(mutex_);
  script_.push_back(std::move(outcome));
}

RenderOutcome MockRenderer::render(const std::string& code, const std::filesystem::path&, std::chrono::seconds) {
  Scripted next;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    rendered_code_.push_back(code);
    if (!script_.empty()) {
      next = std::move(script_.front());
      script_.pop_front();
    }
  }
  if (!next.success) return RenderOutcome::failed(next.diagnostics);

  const auto digest = gateway::sha256_hex(code);
  auto byte = [&](std::size_t i) { return static_cast<std::uint8_t>(std::stoi(digest.substr(i * 2, 2), nullptr, 16)); };
  return RenderOutcome::ok(placeholder_png({byte(0), byte(1), byte(2)}, digest));
}

std::size_t MockRenderer::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::vector<std::string> MockRenderer::rendered_code() const {
  std::lock_guard lock(mutex_);
  return rendered_code_;
}

}  // namespace chartloom::viz
