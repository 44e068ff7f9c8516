#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exom/common.hpp"

namespace exom {

inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility record for a CLI run: the full configuration snapshot, the
// seeds, and the content hashes of every artifact the run produced. Artifacts
// embed the manifest hash; `verify` recomputes both sides.
struct ExperimentManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::uint64_t> seeds;
  std::string scm_name;
  std::string zoo_hash;
  std::string tool_version = kToolVersion;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, content hash

  // Hash over the run identity (not the outputs): embedded into artifacts
  // before their own hashes are recorded.
  std::string manifest_hash() const {
    nlohmann::json identity{{"command", command},
                            {"config", config},
                            {"seeds", seeds},
                            {"scm", scm_name},
                            {"zoo_hash", zoo_hash},
                            {"tool_version", tool_version}};
    return hex64(fnv1a(identity.dump()));
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"command", command},
                     {"config", config},
                     {"seeds", seeds},
                     {"scm", scm_name},
                     {"zoo_hash", zoo_hash},
                     {"tool_version", tool_version},
                     {"manifest_hash", manifest_hash()}};
    auto& outs = j["outputs"] = nlohmann::json::array();
    for (const auto& [path, hash] : outputs) {
      outs.push_back({{"path", path}, {"hash", hash}});
    }
    return j;
  }

  static ExperimentManifest from_json(const nlohmann::json& j) {
    ExperimentManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.scm_name = j.at("scm").get<std::string>();
    m.zoo_hash = j.at("zoo_hash").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    for (const auto& o : j.at("outputs")) {
      m.outputs.emplace_back(o.at("path").get<std::string>(), o.at("hash").get<std::string>());
    }
    return m;
  }
};

inline std::string hash_file_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return hex64(fnv1a(os.str()));
}

inline void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

// Records an artifact: the manifest hash must already be embedded in `text`.
inline void emit_artifact(ExperimentManifest& manifest, const std::string& path,
                          const std::string& text) {
  write_text_file(path, text);
  manifest.outputs.emplace_back(path, hex64(fnv1a(text)));
}

struct VerifyIssue {
  std::string path;
  std::string problem;
};

inline std::vector<VerifyIssue> verify_manifest(const ExperimentManifest& manifest) {
  std::vector<VerifyIssue> issues;
  const std::string expected = manifest.manifest_hash();
  for (const auto& [path, hash] : manifest.outputs) {
    if (!std::filesystem::exists(path)) {
      issues.push_back({path, "missing"});
      continue;
    }
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    const std::string text = os.str();
    if (hex64(fnv1a(text)) != hash) {
      issues.push_back({path, "content hash mismatch"});
      continue;
    }
    if (text.find(expected) == std::string::npos) {
      issues.push_back({path, "embedded manifest hash missing"});
    }
  }
  return issues;
}

}  // namespace exom
