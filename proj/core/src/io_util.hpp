#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "sdlf/errors.hpp"

// Little-endian binary IO helpers shared by the SDLK / SDLC readers.

namespace sdlf::io::detail {

inline void put_u8(std::ostream &os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

inline void put_u16(std::ostream &os, std::uint16_t v) {
  for (int i = 0; i < 2; ++i)
    os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u32(std::ostream &os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::ostream &os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

inline void put_f64(std::ostream &os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u32(os, static_cast<std::uint32_t>(bits & 0xffffffffu));
  put_u32(os, static_cast<std::uint32_t>(bits >> 32));
}

inline std::uint8_t get_u8(std::istream &is) {
  const int c = is.get();
  if (c == EOF)
    throw IoError("unexpected end of file");
  return static_cast<std::uint8_t>(c);
}

inline std::uint16_t get_u16(std::istream &is) {
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i)
    v = static_cast<std::uint16_t>(v | (static_cast<std::uint16_t>(get_u8(is)) << (8 * i)));
  return v;
}

inline std::uint32_t get_u32(std::istream &is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(get_u8(is)) << (8 * i);
  return v;
}

inline float get_f32(std::istream &is) {
  const std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline double get_f64(std::istream &is) {
  const std::uint64_t lo = get_u32(is);
  const std::uint64_t hi = get_u32(is);
  const std::uint64_t bits = lo | (hi << 32);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void expect_magic(std::istream &is, const char *magic, const std::string &what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw IoError(what + ": bad magic, expected '" + magic + "'");
}

} // namespace sdlf::io::detail
