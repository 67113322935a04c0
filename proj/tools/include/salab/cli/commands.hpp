#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace salab::cli {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = 1;
  bool dry_run = false;
};

struct RunManifest {
  std::string command;
  std::string version;
  std::string config_text;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, double>> durations;  // seconds
  std::vector<std::string> notes;
};

std::string tool_version();

/// Writes manifest.json into m.out_dir and adds it to the file list.
void write_manifest(RunManifest& m);

RunManifest cmd_simulate(const RunOptions& opt);
RunManifest cmd_predict(const RunOptions& opt);
RunManifest cmd_find_scaling(const RunOptions& opt);
RunManifest cmd_test(const RunOptions& opt);
RunManifest cmd_em_compare(const RunOptions& opt);
RunManifest cmd_figure(const std::string& name, const RunOptions& opt);
RunManifest cmd_pipeline(const RunOptions& opt);

}  // namespace salab::cli
