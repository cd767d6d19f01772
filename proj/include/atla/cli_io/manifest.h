#ifndef ATLA_CLI_IO_MANIFEST_H_
#define ATLA_CLI_IO_MANIFEST_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace atla::cli_io {

// Lower-case hex SHA-256.
std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::string& path);

// Writes to a temporary sibling and renames it over `path`, creating parent
// directories as needed.
void WriteFileAtomic(const std::string& path, std::string_view content);
std::string ReadFile(const std::string& path);

// ISO 8601 UTC with seconds, e.g. 2024-01-31T12:00:00Z.
std::string UtcTimestamp();

// Build identifier compiled into the binary.
std::string VersionTag();

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::vector<std::string> command_line;
  std::string command;
  nlohmann::json config;  // every resolved setting of the run
  std::uint64_t seed = 0;
  int threads = 1;
  std::string version;
  std::string started;
  std::string finished;
  std::vector<OutputFile> outputs;
};

nlohmann::json ToJson(const RunManifest& manifest);
RunManifest ManifestFromJson(const nlohmann::json& doc);

inline constexpr const char* kManifestName = "manifest.json";

// Single writer for one run's output directory. Every file goes through
// Write() so the manifest can list its digest.
class OutputDir {
 public:
  explicit OutputDir(std::string root);

  const std::string& root() const { return root_; }
  std::string PathOf(const std::string& relative) const;
  void Write(const std::string& relative, std::string_view content);
  void WriteJson(const std::string& relative, const nlohmann::json& doc);
  const std::vector<OutputFile>& outputs() const { return outputs_; }

  // Fills in outputs and the end time, then writes manifest.json.
  void Finish(RunManifest manifest);

 private:
  std::string root_;
  std::vector<OutputFile> outputs_;
};

// Recomputes the digest of every output listed in `manifest` under `root`;
// returns the relative paths that are missing or differ.
std::vector<std::string> VerifyOutputs(const RunManifest& manifest, const std::string& root);

}  // namespace atla::cli_io

#endif  // ATLA_CLI_IO_MANIFEST_H_
