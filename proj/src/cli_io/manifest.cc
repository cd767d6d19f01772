#include "atla/cli_io/manifest.h"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "atla/common/error.h"

#ifndef ATLA_VERSION
#define ATLA_VERSION "unknown"
#endif

namespace atla::cli_io {

namespace fs = std::filesystem;

std::string Sha256Hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int size = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &size, EVP_sha256(), nullptr) !=
      1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < size; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string Sha256File(const std::string& path) { return Sha256Hex(ReadFile(path)); }

void WriteFileAtomic(const std::string& path, std::string_view content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + temp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to '" + temp.string() + "' failed");
  }
  fs::rename(temp, target);
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char text[32];
  std::strftime(text, sizeof(text), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return text;
}

std::string VersionTag() { return ATLA_VERSION; }

nlohmann::json ToJson(const RunManifest& m) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& o : m.outputs) {
    outputs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  }
  return {{"format", "atla-manifest"},
          {"command_line", m.command_line},
          {"command", m.command},
          {"config", m.config},
          {"seed", m.seed},
          {"threads", m.threads},
          {"version", m.version},
          {"started", m.started},
          {"finished", m.finished},
          {"outputs", outputs}};
}

RunManifest ManifestFromJson(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "atla-manifest") throw ValidationError("not a run manifest");
    RunManifest m;
    m.command_line = doc.at("command_line").get<std::vector<std::string>>();
    m.command = doc.at("command").get<std::string>();
    m.config = doc.at("config");
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.threads = doc.at("threads").get<int>();
    m.version = doc.at("version").get<std::string>();
    m.started = doc.at("started").get<std::string>();
    m.finished = doc.at("finished").get<std::string>();
    for (const auto& o : doc.at("outputs")) {
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(),
                           o.at("bytes").get<std::uint64_t>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

OutputDir::OutputDir(std::string root) : root_(std::move(root)) {
  if (root_.empty()) throw ValidationError("output directory must not be empty");
  fs::create_directories(root_);
}

std::string OutputDir::PathOf(const std::string& relative) const {
  return (fs::path(root_) / relative).string();
}

void OutputDir::Write(const std::string& relative, std::string_view content) {
  WriteFileAtomic(PathOf(relative), content);
  for (auto& o : outputs_) {
    if (o.path == relative) {
      o = {relative, Sha256Hex(content), content.size()};
      return;
    }
  }
  outputs_.push_back({relative, Sha256Hex(content), content.size()});
}

void OutputDir::WriteJson(const std::string& relative, const nlohmann::json& doc) {
  Write(relative, doc.dump(2) + "\n");
}

void OutputDir::Finish(RunManifest manifest) {
  manifest.outputs = outputs_;
  manifest.finished = UtcTimestamp();
  WriteFileAtomic(PathOf(kManifestName), ToJson(manifest).dump(2) + "\n");
}

std::vector<std::string> VerifyOutputs(const RunManifest& manifest, const std::string& root) {
  std::vector<std::string> bad;
  for (const auto& o : manifest.outputs) {
    const fs::path path = fs::path(root) / o.path;
    if (!fs::exists(path) || Sha256File(path.string()) != o.sha256) bad.push_back(o.path);
  }
  return bad;
}

}  // namespace atla::cli_io
