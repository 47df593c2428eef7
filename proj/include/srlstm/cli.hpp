#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "srlstm/config.hpp"
#include "srlstm/evaluation.hpp"

namespace srlstm::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_input = 2,
  exit_numeric = 3,
  exit_shape = 4,
  exit_gradcheck = 5,
};

class MissingFile : public std::runtime_error {
public:
  explicit MissingFile(const std::filesystem::path& path)
      : std::runtime_error("missing file: " + path.string()), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

class ShapeMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Config key, then SRLSTM_DATA_ROOT, then "data".
std::filesystem::path dataset_root(const RunConfig& config);
std::filesystem::path scene_file(const RunConfig& config, const std::string& scene);

/// Hash of the raw file bytes and every setting that shapes the windows.
std::uint64_t cache_hash(const std::string& raw_bytes, const std::string& scene, const PreprocessConfig& pre);

struct PreparedScene {
  std::string scene;
  std::filesystem::path cache_file;
  bool cache_hit = false;
  std::vector<PedestrianWindow> windows;
};

/// Parses, resamples and windows each scene, reusing <out>/cache when the
/// hash matches. Throws MissingFile for absent inputs.
std::vector<PreparedScene> prepare_scenes(const RunConfig& config, const std::vector<std::string>& scenes);
SceneWindows as_scene_windows(std::vector<PreparedScene> prepared);

std::string checkpoint_metadata(const RunConfig& config);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srlstm::cli
