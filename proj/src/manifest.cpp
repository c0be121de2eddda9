#include "rml/manifest.hpp"

#include <filesystem>

#include <json.hpp>

#include "rml/sha256.hpp"

namespace rml::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

void RunManifest::add_artifact(const std::string& out_dir,
                               const std::string& rel_path) {
  const fs::path full = fs::path(out_dir) / rel_path;
  Artifact a;
  a.path = rel_path;
  a.bytes = fs::file_size(full);
  a.sha256 = Sha256::of_file(full.string());
  artifacts.push_back(std::move(a));
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["format"] = "rml-manifest";
  j["format_version"] = 1;
  j["version"] = version;
  j["config_hash"] = config_hash;
  ordered_json st = ordered_json::array();
  for (const auto& s : stages)
    st.push_back({{"name", s.name}, {"seconds", s.seconds}});
  j["stages"] = st;
  ordered_json ar = ordered_json::array();
  for (const auto& a : artifacts)
    ar.push_back(
        {{"path", a.path}, {"bytes", a.bytes}, {"sha256", a.sha256}});
  j["artifacts"] = ar;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  RunManifest m;
  m.version = j.at("version");
  m.config_hash = j.at("config_hash");
  for (const auto& s : j.at("stages"))
    m.stages.push_back({s.at("name"), s.at("seconds")});
  for (const auto& a : j.at("artifacts"))
    m.artifacts.push_back({a.at("path"), a.at("bytes"), a.at("sha256")});
  return m;
}

bool RunManifest::verify(const std::string& out_dir,
                         std::string* first_error) const {
  for (const auto& a : artifacts) {
    const fs::path full = fs::path(out_dir) / a.path;
    if (!fs::exists(full)) {
      if (first_error) *first_error = "missing artifact: " + a.path;
      return false;
    }
    if (Sha256::of_file(full.string()) != a.sha256) {
      if (first_error) *first_error = "hash mismatch: " + a.path;
      return false;
    }
  }
  return true;
}

}  // namespace rml::cli
