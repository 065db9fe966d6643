#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

#include "cvqkd/app.hpp"

namespace cvqkd::app {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest init failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::filesystem::path write_manifest(const std::string& command, const RunConfig& config,
                                     const std::vector<std::filesystem::path>& artifacts) {
  nlohmann::ordered_json doc;
  doc["tool"] = "cvqkd";
  doc["command"] = command;
  doc["seed"] = config.seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  // The output location does not affect any artifact.
  for (const auto& [key, value] : config.entries) {
    if (key != "output.dir") cfg[key] = value;
  }
  doc["config"] = cfg;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& path : artifacts) {
    files.push_back({{"path", path.filename().string()}, {"sha256", sha256_file(path)}});
  }
  doc["artifacts"] = files;

  const auto manifest = config.out_dir / "manifest.json";
  std::ofstream out(manifest);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + manifest.string());
  return manifest;
}

}  // namespace cvqkd::app
