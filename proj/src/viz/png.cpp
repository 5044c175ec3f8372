#include "chartloom/viz/png.hpp"

#include <algorithm>

#include <zlib.h>

#include "chartloom/error.hpp"

namespace chartloom::viz {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(gateway::Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(gateway::Bytes& out, const char (&type)[5], const gateway::Bytes& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const auto type_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  auto crc = crc32(0L, out.data() + type_start, static_cast<uInt>(4 + data.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

gateway::Bytes placeholder_png(std::array<std::uint8_t, 3> rgb, std::string_view source_text) {
  gateway::Bytes out(std::begin(kSignature), std::end(kSignature));

  gateway::Bytes ihdr;
  put_u32(ihdr, 1);  // width
  put_u32(ihdr, 1);  // height
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth 8, RGB, deflate, adaptive filter, no interlace
  put_chunk(out, "IHDR", ihdr);

  gateway::Bytes text{'S', 'o', 'u', 'r', 'c', 'e', 0};
  text.insert(text.end(), source_text.begin(), source_text.end());
  put_chunk(out, "tEXt", text);

  const std::uint8_t raw[4] = {0, rgb[0], rgb[1], rgb[2]};  // filter type 0 + pixel
  uLongf len = compressBound(sizeof raw);
  gateway::Bytes idat(len);
  if (compress2(idat.data(), &len, raw, sizeof raw, Z_BEST_COMPRESSION) != Z_OK) {
    throw Error("zlib compression failed");
  }
  idat.resize(len);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", {});
  return out;
}

bool looks_like_png(const gateway::Bytes& bytes) {
  return bytes.size() > 8 && std::equal(std::begin(kSignature), std::end(kSignature), bytes.begin());
}

}  // namespace chartloom::viz
