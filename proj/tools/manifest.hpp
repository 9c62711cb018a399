#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace qwalk::cli {

struct Artifact {
  std::string path;
  std::string sha256;
};

// Everything needed to re-execute a run: argv holds the fully resolved arguments
// (absolute paths, generated seeds filled in), without the program name.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;
  double duration_seconds = 0.0;
};

std::string sha256_file(const std::filesystem::path& path);
Artifact artifact(const std::filesystem::path& path);

void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

// "<out>.manifest.json"
std::filesystem::path manifest_path(const std::filesystem::path& primary_output);

}  // namespace qwalk::cli
