#ifndef SVPF_TOOLS_OUTPUT_HPP
#define SVPF_TOOLS_OUTPUT_HPP

#include <cstdio>
#include <filesystem>
#include <string>
#include <system_error>

#include "svpf/error.hpp"

namespace svpf::cli {

inline void prepare_out(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
  }
}

inline std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, i, ext);
  return buf;
}

}  // namespace svpf::cli

#endif  // SVPF_TOOLS_OUTPUT_HPP
