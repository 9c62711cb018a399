#include "manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

#include "qwalk/error.hpp"

namespace qwalk::cli {

namespace {
constexpr std::string_view kFormat = "qwalk-manifest";
constexpr int kVersion = 1;
}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 initialization failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);

  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof b, "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

Artifact artifact(const std::filesystem::path& path) { return {path.string(), sha256_file(path)}; }

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["command"] = m.command;
  j["argv"] = m.argv;
  auto& seeds = j["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : m.seeds) seeds[name] = value;
  for (const auto* list : {&m.inputs, &m.outputs}) {
    auto& arr = j[list == &m.inputs ? "inputs" : "outputs"] = nlohmann::ordered_json::array();
    for (const auto& a : *list) arr.push_back({{"path", a.path}, {"sha256", a.sha256}});
  }
  j["duration_seconds"] = m.duration_seconds;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const auto j = nlohmann::json::parse(ss.str());
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion)
      throw ValidationError(path.string() + " is not a qwalk run manifest");
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    for (const auto& [name, value] : j.at("seeds").items()) m.seeds.emplace_back(name, value.get<std::uint64_t>());
    for (const auto& a : j.at("inputs")) m.inputs.push_back({a.at("path"), a.at("sha256")});
    for (const auto& a : j.at("outputs")) m.outputs.push_back({a.at("path"), a.at("sha256")});
    m.duration_seconds = j.at("duration_seconds").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::filesystem::path manifest_path(const std::filesystem::path& primary_output) {
  return std::filesystem::path(primary_output.string() + ".manifest.json");
}

}  // namespace qwalk::cli
