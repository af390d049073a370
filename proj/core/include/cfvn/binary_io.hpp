#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "cfvn/error.hpp"

// Little-endian fixed-width serialization shared by all file formats.
namespace cfvn::bin {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; add byte swapping for this target");

template <typename T>
  requires std::is_arithmetic_v<T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
  requires std::is_arithmetic_v<T>
void put_span(std::ostream& os, std::span<const T> values) {
  os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

inline void put_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

template <typename T>
  requires std::is_arithmetic_v<T>
T get(std::istream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("unexpected end of file");
  return value;
}

template <typename T>
  requires std::is_arithmetic_v<T>
void get_span(std::istream& is, std::span<T> out) {
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()))) {
    throw IoError("unexpected end of file");
  }
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic) {
    throw IoError("bad magic, expected '" + std::string(magic) + "'");
  }
}

}  // namespace cfvn::bin
