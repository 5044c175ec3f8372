#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "chartloom/gateway/types.hpp"

namespace chartloom::viz {

// Minimal valid PNG: one RGB pixel plus a tEXt chunk (keyword "Source").
gateway::Bytes placeholder_png(std::array<std::uint8_t, 3> rgb, std::string_view source_text);

bool looks_like_png(const gateway::Bytes& bytes);

}  // namespace chartloom::viz
