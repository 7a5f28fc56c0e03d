#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace condlabel {

inline constexpr const char* kToolVersion = "0.1.0";

/// Record of one CLI run: resolved settings and digests of every input, so
/// that equal manifests imply equal outputs.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;   // role -> sha256 hex of file contents
  std::map<std::string, std::string> outputs;  // role -> path
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
};

std::string sha256_file(const std::filesystem::path& path);

/// Pretty-printed JSON with sorted keys.
std::string format_manifest(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace condlabel
