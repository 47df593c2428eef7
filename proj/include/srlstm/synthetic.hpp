#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srlstm/data.hpp"

namespace srlstm {

/// Social-force crowd simulation that writes ETH/UCY-style scenes. Used when
/// the recorded datasets are not available locally.
struct SynthConfig {
  std::string name = "zara01";
  std::uint64_t seed = 1;
  double duration_s = 240.0;
  /// Video frame period; frames are emitted every `frame_step` frames.
  double seconds_per_frame = 0.04;
  std::int64_t frame_step = 2;
  double width = 16.0;
  double height = 8.0;
  /// Mean arrivals per second across both walking directions.
  double arrival_rate = 0.35;
  double group_probability = 0.35;
  double standing_probability = 0.1;
  double speed_mean = 1.25;
  double speed_sd = 0.2;
  /// Repulsion amplitude (m/s²) and range (m).
  double repulsion = 3.0;
  double repulsion_range = 0.45;
  double personal_radius = 0.35;
  double relaxation_s = 0.5;
  double position_noise = 0.01;
};

/// Presets named like the five benchmark scenes. The frame-rate corrected
/// scene ("eth") runs its clock at 0.4 s per 6 frames.
SynthConfig synth_preset(const std::string& scene, std::uint64_t seed = 1);
std::vector<std::string> benchmark_scenes();

Scene simulate_scene(const SynthConfig& config);

/// Writes <dir>/<scene>.txt for every benchmark scene.
void write_synthetic_benchmark(const std::filesystem::path& dir, std::uint64_t seed = 1);

}  // namespace srlstm
