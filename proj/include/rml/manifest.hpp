#pragma once

#include <string>
#include <vector>

namespace rml::cli {

// Run provenance: config hash, per-stage timings, and a content hash for
// every artifact produced. Written at the end of run-all.
struct RunManifest {
  std::string config_hash;
  struct Stage {
    std::string name;
    double seconds = 0.0;
  };
  std::vector<Stage> stages;
  struct Artifact {
    std::string path;  // relative to the output directory
    uint64_t bytes = 0;
    std::string sha256;
  };
  std::vector<Artifact> artifacts;
  std::string version = "1.0.0";

  void add_artifact(const std::string& out_dir, const std::string& rel_path);
  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
  // Verifies every artifact exists and matches its recorded hash.
  bool verify(const std::string& out_dir, std::string* first_error) const;
};

}  // namespace rml::cli
