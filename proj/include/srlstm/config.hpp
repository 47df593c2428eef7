#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "srlstm/data.hpp"
#include "srlstm/model.hpp"
#include "srlstm/training.hpp"

namespace srlstm {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs. Built from flat `key = value` text; see
/// config_keys() for the accepted keys.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  PreprocessConfig preprocess;
  std::vector<std::string> scenes = {"eth", "hotel", "zara01", "zara02", "univ"};
  /// Scenes held out for testing; empty means every scene in turn.
  std::vector<std::string> test_scenes;
  std::string dataset_root;
  std::string out_dir = "runs";
  /// Ablation presets. variant -1 means none, 0 is V-LSTM; preproc 0 means none.
  int variant = -1;
  int preproc = 0;
  std::size_t jobs = 1;
};

using KeyValues = std::map<std::string, std::string>;

const std::vector<std::string>& config_keys();
bool is_model_key(const std::string& key);

/// Parses `key = value` lines; '#' starts a comment. Unknown keys throw.
KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values(const std::string& path);

/// Defaults, then the preproc preset, then the variant preset, then every
/// other key in `values`.
RunConfig resolve_config(const KeyValues& values);

/// Every key with its resolved value. Feeding it back to resolve_config
/// yields the same configuration.
KeyValues to_key_values(const RunConfig& config);
void write_key_values(std::ostream& out, const KeyValues& values);

/// Applies an ablation row (0 = V-LSTM, 1..9 = refinement variants).
void apply_variant(RunConfig& config, int variant);
/// Applies a pre-processing row (1..4).
void apply_preproc(RunConfig& config, int preproc);

std::string fingerprint(const RunConfig& config);

/// Model-shape keys only, stored in checkpoints.
KeyValues model_key_values(const ModelConfig& model);
ModelConfig model_from_key_values(const KeyValues& values);

}  // namespace srlstm
